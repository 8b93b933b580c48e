"""Fractional Hamilton and Lagrange mechanics: symbolic derivation, Helmholtz
classification and fractional-order simulation."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .specialfn import gamma, gen_binomial, mittag_leffler, rgamma
from .expr import (
    BranchRule,
    DerivKind,
    PowerExpr,
    compile_expr,
    evaluate,
    expr_equal,
    frac_partial,
    parse_expr,
    partial,
)
from .forms import (
    Chart,
    FracForm,
    build_beta_form,
    build_extended_pc,
    build_poincare_cartan,
    build_theta,
    contract,
    exactness_check,
    frac_exterior_derivative,
    is_closed,
    wedge,
)
from .helmholtz import (
    HelmholtzReport,
    check_first_order,
    check_first_order_linear,
    check_phase_space,
    check_phase_space_frac,
    check_second_order,
)
from .eqgen import (
    EquationsOfMotion,
    SystemDef,
    derive,
    euler_lagrange,
    frac_euler_lagrange,
    frac_hamilton_eqs,
    frac_hamilton_eqs_beta,
    hamilton_eqs,
    nonhamiltonian_eqs,
)
from .numfrac import Grid, Trajectory, caputo_num, gl_weights, simulate, solve_frac_ivp
