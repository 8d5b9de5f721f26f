"""Volumes of perspective and naive relaxations for convex functions of a linear form."""
from .envelope import (
    ConstantBound,
    PiecewiseLinearEnvelope,
    concave_envelope,
    constant_bound,
    evaluate_envelope,
    integrate_envelope,
    integrate_envelope_by_cells,
)
from .errors import (
    CombinatorialBlowupError,
    ConsistencyError,
    DomainError,
    GenericityError,
    RangeError,
    SupermodularityError,
)
from .functions import (
    ExpLinearForm,
    PowerLinearForm,
    SuperPolyForm,
    check_genericity,
    evaluate,
    function_from_dict,
    homogeneity_degree,
    is_supermodular_on_vertices,
)
from .geometry import (
    BoxDomain,
    SimplexDomain,
    ZonotopeDomain,
    domain_from_dict,
    kuhn_triangulate,
    zonotope_jacobian,
)
from .integration import (
    IntegralResult,
    Method,
    integrate,
    integrate_exp_zonotope,
    integrate_power_multinomial,
    integrate_power_triangulation,
    monte_carlo_integrate,
    power_lower_bound,
    quadrature_integrate,
    z_integral,
    z_integral_exp,
    z_integral_homogeneous,
)
from .relaxation import (
    MuKind,
    RelaxationReport,
    check_sufficient_condition,
    cutoff_ratio,
    cx_rat_lower_bound,
    delta,
    delta_exp_box,
    delta_homogeneous,
    exprat_limit,
    ratio_sweep,
    relaxation_report,
    vol_naive,
    vol_perspective,
)

__version__ = "0.1.0"

__all__ = [
    "BoxDomain",
    "CombinatorialBlowupError",
    "ConsistencyError",
    "ConstantBound",
    "DomainError",
    "ExpLinearForm",
    "GenericityError",
    "IntegralResult",
    "Method",
    "MuKind",
    "PiecewiseLinearEnvelope",
    "PowerLinearForm",
    "RangeError",
    "RelaxationReport",
    "SimplexDomain",
    "SuperPolyForm",
    "SupermodularityError",
    "ZonotopeDomain",
    "check_genericity",
    "check_sufficient_condition",
    "concave_envelope",
    "constant_bound",
    "cutoff_ratio",
    "cx_rat_lower_bound",
    "delta",
    "delta_exp_box",
    "delta_homogeneous",
    "domain_from_dict",
    "evaluate",
    "evaluate_envelope",
    "exprat_limit",
    "function_from_dict",
    "homogeneity_degree",
    "integrate",
    "integrate_envelope",
    "integrate_envelope_by_cells",
    "integrate_exp_zonotope",
    "integrate_power_multinomial",
    "integrate_power_triangulation",
    "is_supermodular_on_vertices",
    "kuhn_triangulate",
    "monte_carlo_integrate",
    "power_lower_bound",
    "quadrature_integrate",
    "ratio_sweep",
    "relaxation_report",
    "vol_naive",
    "vol_perspective",
    "z_integral",
    "z_integral_exp",
    "z_integral_homogeneous",
    "zonotope_jacobian",
]
