"""convexflow: pseudospectral integrator and verification harness for
nonlocal power-of-curvature flows of convex closed plane curves."""

from .spectral import AngularGrid, PeriodicField, deriv, first_harmonics, integrate
from .geometry import (
    ClosureError,
    ConvexityError,
    CurvatureProfile,
    GeometrySnapshot,
    SupportRepresentation,
    area,
    bonnesen_sigma,
    closure_defect,
    inradius_outradius,
    length,
    measure,
    reconstruct_points,
    support_about_centroid,
)
from .laws import (
    BlowUpError,
    FlowKind,
    FlowLaw,
    LambdaValue,
    LawError,
    curvature_rhs,
    lambda_value,
    normal_speed,
)
from .generators import (
    Circle,
    CurveSpec,
    Ellipse,
    ExplicitSupport,
    PerturbedCircle,
    generate,
    random_convex,
)
from .diagnostics import (
    AUDIT_NAMES,
    DiagnosticsCollector,
    DiagnosticsSeries,
    EntropyValue,
    Margin,
    SampleRecord,
    TsoContext,
    audit_series,
    entropy,
    fit_decay_rate,
    gradient_functional,
    inequality_audit,
    lower_bound_functional,
    rate_formulas,
    to_csv,
    tso_quantity,
)
from .scenario import (
    Scenario,
    ScenarioError,
    Snapshot,
    emit,
    parse_curve,
    parse_scenario,
    render_snapshot,
    scenario_to_document,
    snapshot_of,
)
from .stepping import (
    ConfigurationError,
    RunResult,
    RunStatus,
    StepControl,
    active_backend,
    run,
    stable_dt,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "AngularGrid",
    "PeriodicField",
    "deriv",
    "integrate",
    "first_harmonics",
    "CurvatureProfile",
    "SupportRepresentation",
    "GeometrySnapshot",
    "ConvexityError",
    "ClosureError",
    "length",
    "area",
    "closure_defect",
    "reconstruct_points",
    "support_about_centroid",
    "inradius_outradius",
    "bonnesen_sigma",
    "measure",
    "FlowKind",
    "FlowLaw",
    "LambdaValue",
    "LawError",
    "BlowUpError",
    "lambda_value",
    "curvature_rhs",
    "normal_speed",
    "Circle",
    "Ellipse",
    "PerturbedCircle",
    "ExplicitSupport",
    "CurveSpec",
    "generate",
    "random_convex",
    "AUDIT_NAMES",
    "DiagnosticsCollector",
    "DiagnosticsSeries",
    "EntropyValue",
    "Margin",
    "SampleRecord",
    "TsoContext",
    "audit_series",
    "entropy",
    "fit_decay_rate",
    "gradient_functional",
    "inequality_audit",
    "lower_bound_functional",
    "rate_formulas",
    "to_csv",
    "tso_quantity",
    "ConfigurationError",
    "RunResult",
    "RunStatus",
    "StepControl",
    "active_backend",
    "run",
    "Scenario",
    "ScenarioError",
    "Snapshot",
    "emit",
    "parse_curve",
    "parse_scenario",
    "render_snapshot",
    "scenario_to_document",
    "snapshot_of",
    "stable_dt",
    "step",
    "__version__",
]
