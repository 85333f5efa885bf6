"""Reserve-price learning for second-price auctions with reserve.

The package learns a revenue-maximizing reserve-price rule from logged
(feature, bid-pair) data: a continuous ramp surrogate for the discontinuous
auction loss, an O(m log m) exact minimizer for sums of its one-dimensional
sections, a difference-of-convex trainer with an exact homogeneity-based
line search, the three standard baselines, and an experiment harness with
plot emission.
"""

from .baselines import (
    CvxConfig,
    LinearModel,
    RidgeConfig,
    anchor_revenues,
    cvx_surrogate_fit,
    no_feature_fit,
    ridge_fit,
)
from .data import AuctionDataset, AuctionRecord, GenSpec, generate, load_csv, split
from .dc import DCConfig, TrainTrace, line_search, predict_reserve, train
from .errors import ConfigError, DataError, ReserveOptError, TrainingError
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    emit_plot_data,
    evaluate_revenue,
    normalize,
    run_experiment,
    tune,
)
from .losses import (
    BidPair,
    convex_surrogate_loss,
    loss,
    revenue,
    surrogate_loss,
    upper_surrogate_loss,
)
from .vsum import VFunction, empirical_reserve, minimize_sum, minimize_sum_bruteforce

__version__ = "0.1.0"
