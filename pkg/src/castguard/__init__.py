"""Uncertainty-aware casting-defect classification on CNN feature matrices.

Pipeline pieces: the FMX feature-matrix format and dataset handling
(dataio), eight from-scratch classifiers behind one contract
(classifiers), an MLP with backprop (mlp), deep-ensemble uncertainty
quantification (uq), evaluation metrics (metrics), PCA projection (pca),
and the experiment CLI (cli).
"""

from .dataio import (
    FeatureDataset,
    SplitSpec,
    SynthSpec,
    gen_synth,
    inspect_fmx,
    read_csv,
    read_fmx,
    split_dataset,
    write_fmx,
)
from .errors import CastguardError, DataFormatError, TrainingError, ValidationError
from .metrics import BinaryConfusion, RunDistribution, aggregate_runs, auc, binary_metrics
from .mlp import (
    MlpArchitecture,
    MlpModel,
    TrainConfig,
    mlp_forward,
    mlp_gradient,
    mlp_init,
    mlp_train,
)
from .pca import PcaModel, pca_fit, pca_transform
from .uq import (
    EnsembleConfig,
    EnsembleModel,
    UqAssessment,
    UqConfusion,
    assess,
    ensemble_mean,
    ensemble_train,
    entropy_histogram,
    predictive_entropy,
    threshold_sweep,
    uncertainty_accuracy,
    uq_confusion,
)

__version__ = "0.1.0"
