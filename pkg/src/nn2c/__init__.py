"""nn2c: compile small feed-forward networks to static, analyzable C."""

from .analyzer import (
    CostReport,
    CostWeights,
    LintReport,
    compare_costs,
    cost_model,
    lint,
)
from .codegen import CodegenConfig, EmittedUnit, emit_test_harness, generate
from .errors import (
    ChecksumMismatch,
    CodegenError,
    ManifestSyntax,
    ModeMismatch,
    NetworkValidationError,
    Nn2cError,
    NonIntegralPoolOutput,
    ShapeMismatch,
    UnsupportedActivation,
    UnsupportedLayer,
    UnsupportedVersion,
    WeightsLengthMismatch,
)
from .ingest import load_model, save_model
from .interpreter import Executor, run, run_batch
from .ir import (
    NetworkIR,
    TensorShape,
    count_connections,
    infer_shapes,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "ChecksumMismatch",
    "CodegenConfig",
    "CodegenError",
    "CostReport",
    "CostWeights",
    "EmittedUnit",
    "Executor",
    "LintReport",
    "ManifestSyntax",
    "ModeMismatch",
    "NetworkIR",
    "NetworkValidationError",
    "Nn2cError",
    "NonIntegralPoolOutput",
    "ShapeMismatch",
    "TensorShape",
    "UnsupportedActivation",
    "UnsupportedLayer",
    "UnsupportedVersion",
    "WeightsLengthMismatch",
    "compare_costs",
    "cost_model",
    "count_connections",
    "emit_test_harness",
    "generate",
    "infer_shapes",
    "lint",
    "load_model",
    "run",
    "run_batch",
    "save_model",
    "validate",
    "__version__",
]
