"""Resampling versus the moment-matched approximation on one contrast.

Both tests see the same simulated data in every replication.  With weakly
correlated curves (large rho) the bootstrap tends to reject less often.

``python demos/bootstrap_comparison.py [reps]`` (default 100).
"""

import sys

from glhtmfd.harness import Experiment, simulate_table
from glhtmfd.simgen import N1, Sim1Config

reps = int(sys.argv[1]) if len(sys.argv) > 1 else 100

exp = Experiment(Sim1Config(sizes=N1, M=50), "G5", ("bootstrap", "new"), reps=reps, seed=5, B=300)
print(simulate_table(exp, {"rho": [0.1, 0.9]}).render())
