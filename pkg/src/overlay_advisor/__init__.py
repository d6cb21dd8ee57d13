"""Predict FPGA overlay resource usage with random forests and gate the
predictions against device capacity before any hardware compilation."""

from .advisor import ModelBundle, Recommendation, recommend, sweep_candidates, train_bundle
from .automata import Automaton, FeatureVector, extract_features, parse_automaton
from .capacity import DeviceProfile, Verdict, builtin_profile, gate
from .dataset import Metrics, Record, compute_metrics, load_records, split_train_test
from .forest import ForestConfig, RandomForest, RegressionTree, best_split, train_forest, train_tree
from .overlay import (
    CostCoefficients,
    MappingVerdict,
    OverlayConfig,
    ResourceEstimate,
    calibrate_coefficients,
    estimate_resources,
    generate_synthetic_dataset,
    map_automaton,
)

__version__ = "0.1.0"

__all__ = [
    "Automaton", "CostCoefficients", "DeviceProfile", "FeatureVector", "ForestConfig",
    "MappingVerdict", "Metrics", "ModelBundle", "OverlayConfig", "RandomForest",
    "Recommendation", "Record", "RegressionTree", "ResourceEstimate", "Verdict",
    "best_split", "builtin_profile", "calibrate_coefficients", "compute_metrics",
    "estimate_resources", "extract_features", "gate", "generate_synthetic_dataset",
    "load_records", "map_automaton", "parse_automaton", "recommend", "split_train_test",
    "sweep_candidates", "train_bundle", "train_forest", "train_tree",
]
