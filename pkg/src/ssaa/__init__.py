"""Sparse noise-driven adversarial attacks with a self-contained victim model.

The package bundles folded-Gaussian and uniform-noise L0 attack engines
(increasing/decreasing FGA, the two-sided voting attack VFGA, and the UA
baseline), a trainable reference MLP with analytic input gradients, campaign
metrics (SR / mean / median L0 / model propagations), and a reproducible
benchmark harness with a CLI.
"""

__version__ = "0.1.0"

from .attack import (
    AttackConfig,
    AttackConfigError,
    AttackResult,
    GammaExhaustedError,
    IterationRecord,
    make_candidates,
    pick_best,
    run_attack,
    run_fga,
    run_vfga,
    select_fga_dec,
    select_fga_inc,
)
from .campaign import (
    CampaignConfig,
    Report,
    curve_rows,
    run_campaign,
    write_curves_csv,
    write_samples_csv,
)
from .data import LabeledDataset, gen_synthetic, load_dataset, load_idx
from .metrics import (
    CampaignSummary,
    SampleRecord,
    l0_components,
    l0_pixels,
    lower_median,
    summarize,
)
from .model import (
    Classifier,
    CountingModel,
    FormatError,
    ReferenceMLP,
    TrainConfig,
    TrainingDivergedError,
    load_weights,
    save_weights,
    train_reference,
)
from .noise import (
    NoiseSpec,
    ProbeDomainError,
    ProbeRow,
    RngStream,
    expansion_probe,
    sample_folded_gaussian,
    sample_neg_folded_gaussian,
    sample_uniform,
)

__all__ = [
    "__version__",
    "AttackConfig",
    "AttackConfigError",
    "AttackResult",
    "CampaignConfig",
    "CampaignSummary",
    "Classifier",
    "CountingModel",
    "FormatError",
    "GammaExhaustedError",
    "IterationRecord",
    "LabeledDataset",
    "NoiseSpec",
    "ProbeDomainError",
    "ProbeRow",
    "ReferenceMLP",
    "Report",
    "RngStream",
    "SampleRecord",
    "TrainConfig",
    "TrainingDivergedError",
    "curve_rows",
    "expansion_probe",
    "gen_synthetic",
    "l0_components",
    "l0_pixels",
    "load_dataset",
    "load_idx",
    "load_weights",
    "lower_median",
    "make_candidates",
    "pick_best",
    "run_attack",
    "run_campaign",
    "run_fga",
    "run_vfga",
    "sample_folded_gaussian",
    "sample_neg_folded_gaussian",
    "sample_uniform",
    "save_weights",
    "select_fga_dec",
    "select_fga_inc",
    "summarize",
    "train_reference",
    "write_curves_csv",
    "write_samples_csv",
]
