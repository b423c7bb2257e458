"""Noise-space diagnostics for generative-model initial latents.

The package measures how a transformed initialization relates to the
Gaussian draw it came from: global geometry and cross-seed directional
structure of the displacement, spatial/temporal high-frequency power
ratios, and prompt-level paired significance tests (percentile bootstrap
plus sign-flip permutation).  A synthetic dataset generator with
analytically known structure backs the test suite and the `noisediag all`
pipeline.
"""

__version__ = "0.1.0"

from .dataio import (
    DatasetManifest,
    ManifestEntry,
    PromptGroup,
    SampleRecord,
    ScoreRow,
    ScoreTable,
    group_by_prompt,
    load_manifest,
    load_scores,
    load_tensor,
    save_tensor,
    write_scores,
)
from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    ManifestError,
    NoiseDiagError,
    RegimeSpecError,
    ScoreParseError,
    ScoreTableError,
    TensorDataError,
    TensorFormatError,
    TensorShapeError,
)
from .geometry import (
    GeometryRecordMetrics,
    PromptDirectionMetrics,
    aggregate_geometry,
    cv_dnorm,
    dir_stab,
    displacement,
    evr1,
    geometry_metrics,
    prompt_direction_metrics,
)
from .paired import (
    BootstrapCI,
    PairedSample,
    PairedTestResult,
    SignFlipResult,
    bootstrap_ci,
    paired_report,
    seed_average,
    sign_flip_test,
)
from .spectral import (
    SpectralMetrics,
    sp_hf,
    spectral_metrics,
    spectral_report,
    t_diff_rel,
    t_diff_rms,
    t_hf,
)
from .synth import RegimeSpec, ShapingOp, generate_dataset, make_paired_scores

__all__ = [
    "__version__",
    "BootstrapCI",
    "DatasetManifest",
    "DegenerateInputError",
    "GeometryRecordMetrics",
    "InsufficientDataError",
    "ManifestEntry",
    "ManifestError",
    "NoiseDiagError",
    "PairedSample",
    "PairedTestResult",
    "PromptDirectionMetrics",
    "PromptGroup",
    "RegimeSpec",
    "RegimeSpecError",
    "SampleRecord",
    "ScoreParseError",
    "ScoreRow",
    "ScoreTable",
    "ScoreTableError",
    "ShapingOp",
    "SignFlipResult",
    "SpectralMetrics",
    "TensorDataError",
    "TensorFormatError",
    "TensorShapeError",
    "aggregate_geometry",
    "bootstrap_ci",
    "cv_dnorm",
    "dir_stab",
    "displacement",
    "evr1",
    "generate_dataset",
    "geometry_metrics",
    "group_by_prompt",
    "load_manifest",
    "load_scores",
    "load_tensor",
    "make_paired_scores",
    "paired_report",
    "prompt_direction_metrics",
    "save_tensor",
    "seed_average",
    "sign_flip_test",
    "sp_hf",
    "spectral_metrics",
    "spectral_report",
    "t_diff_rel",
    "t_diff_rms",
    "t_hf",
    "write_scores",
]
