"""Empirical size and power on the first simulation design.

``python demos/size_and_power.py [reps]`` (default 200 replications per
cell).  Sizes should hover around 5%; power grows with the shift size.
"""

import sys

from glhtmfd.harness import Experiment, simulate_table
from glhtmfd.simgen import N1, N3, Sim1Config

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 200

# %% Size: no shift, three correlation levels, two sample-size settings.
base = Experiment(Sim1Config(M=50), "G1", ("new", "new-unadjusted"), reps=reps, seed=11)
sizes = simulate_table(base, {"sizes": [N1, N3], "rho": [0.1, 0.5, 0.9]})
print(sizes.render())

# %% Power: shift the second and third group means.
power = simulate_table(base, {"sizes": [N1], "rho": [0.1], "delta": [0.0, 0.01, 0.02, 0.03]})
print(power.render())
