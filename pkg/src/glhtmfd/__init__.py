"""Global linear hypothesis tests for multivariate functional data."""

from .bootstrap import BootstrapReport, bootstrap_test
from .exceptions import (
    DataError,
    DegenerateCumulantError,
    GLHTError,
    HypothesisError,
    SampleSizeError,
    SchemaError,
    SingularityError,
)
from .funcdata import Grid, MFDSample, RawObservation, SampleSet, ingest_long_csv, reconstruct
from .glht import (
    AsymptoticPowerInput,
    Hypothesis,
    TestReport,
    asymptotic_power,
    make_hypothesis,
    run_test,
    statistic,
)
from .harness import Experiment, ResultTable, are_of, contrast_matrix, run_experiment

__version__ = "0.1.0"
