"""Sample-based estimation of the number of distinct values (NDV) in a column.

The learned estimator is a small log-domain network trained only on synthetic
sample profiles; classical closed-form estimators are provided for comparison.
"""

from .baselines import EstimatorId, chao, chao_lee, estimate_baseline, gee, shlosser
from .bounds import BoundParams, global_lower_bound, hard_instance_pair, instance_lower_bound
from .datagen import GeneratorConfig, TrainingPoint, generate_dataset, generate_training_point, sample_profile
from .features import FeatureConfig, featurize
from .model import Mlp, TrainConfig, estimate, load_model, save_model, train
from .profile import Profile, ndv, profile_from_values, ratio_error, size

__all__ = [
    "BoundParams",
    "EstimatorId",
    "FeatureConfig",
    "GeneratorConfig",
    "Mlp",
    "Profile",
    "TrainConfig",
    "TrainingPoint",
    "chao",
    "chao_lee",
    "estimate",
    "estimate_baseline",
    "featurize",
    "gee",
    "generate_dataset",
    "generate_training_point",
    "global_lower_bound",
    "hard_instance_pair",
    "instance_lower_bound",
    "load_model",
    "ndv",
    "profile_from_values",
    "ratio_error",
    "sample_profile",
    "save_model",
    "shlosser",
    "size",
    "train",
]

__version__ = "0.1.0"
