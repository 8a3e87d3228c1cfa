"""Option pricing benchmarks (Black-Scholes, Heston) against learned regressors."""
from .exceptions import (
    ConfigError,
    DataError,
    InvalidArgumentError,
    NumericalError,
    OptlabError,
    ParseError,
    SchemaError,
    TrainingError,
    TuningError,
    UndefinedMetricError,
)
from .pricing import (
    PAPER_HESTON,
    HestonParams,
    PricingInputs,
    QuadratureConfig,
    bs_call,
    bs_put,
    heston_call,
    heston_put,
)
from .dataset import DataMatrix, FeatureSpec, Standardizer, engineer_features, train_test_split

__version__ = "0.1.0"
