"""Bivariate Brownian curves observed with noise or on a random subset of points.

Curves are smoothed back onto the full grid before testing.  The sizes
below are under the null hypothesis, so they should be close to 5%.

``python demos/sparse_and_noisy.py [reps]`` (default 100).
"""

import sys

import numpy as np

from glhtmfd.funcdata import Grid, reconstruct
from glhtmfd.harness import Experiment, simulate_table
from glhtmfd.simgen import SIM2_N1, Sim2Config, sim2_observations

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 100

# %% One sparse draw, reconstructed by hand.
cfg = Sim2Config(sizes=SIM2_N1, M=50, scenario="S2", a=0.3, seed=4)
obs = sim2_observations(cfg)
sample = reconstruct(obs, Grid(0.0, 1.0, 50), "smoothing-spline")
print(len(obs), "raw points ->", sample.sizes, "curves of", sample.p, "components")
print("largest reconstructed value", float(np.max(np.abs(sample.groups[0].values))))

# %% Sizes over noise levels and over kept fractions.
noisy = Experiment(Sim2Config(sizes=SIM2_N1, M=50), "G1", ("new",), reps=reps, seed=8)
print(simulate_table(noisy, {"sigma": [0.1, 0.5, 0.9]}).render())
sparse = Experiment(Sim2Config(sizes=SIM2_N1, M=50, scenario="S2"), "G1", ("new",), reps=reps, seed=8)
print(simulate_table(sparse, {"a": [0.3, 0.5, 0.7]}).render())
