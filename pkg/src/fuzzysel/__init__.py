"""Fuzzy rule-based classification with trainable feature modulators.

Global, class-specific and rule-specific feature selection, with optional
class-specific redundancy control.
"""

from .dataset import Dataset, generate_synthetic1, generate_synthetic2, generate_synthetic3, load_csv, save_csv
from .experiments import PRESETS, ExperimentPreset, run_experiment
from .loss import LossBreakdown, classification_error, redundancy_regularizer, selection_regularizer, total_loss
from .modulators import Granularity, ModulatorBank, init_bank, modulator_row, modulator_value, selection_mask
from .report import SelectionReport, accuracy, build_selection_report, render_rules
from .rulebase import FuzzySet, Rule, RuleBase, build_rulebase, classify, firing_strength, kmeans, membership, predict_label
from .stats import CorrelationSet, correlation_set, pearson
from .trainer import TrainConfig, TrainedModel, analytic_gradient, finite_difference_gradient, train

__version__ = "0.1.0"
