"""Heights, principal angles and approximation exponents of rational subspaces."""

import sys as _sys

__version__ = "0.1.0"

# exact integers travel as decimal strings (heights, Z-bases of deep family
# members easily exceed 10^4 digits); the interpreter's conversion guard
# would break the wire format
if hasattr(_sys, "set_int_max_str_digits"):
    _sys.set_int_max_str_digits(2_000_000_000)

from .angles import (  # noqa: F401
    AngleSpectrum,
    PrecisionContext,
    PrecisionError,
    SubspaceRealization,
    line_angle_exact,
    omega_pair,
    phi,
    principal_sines,
    psi,
)
from .constructions import (  # noqa: F401
    build_first_angle,
    build_last_angle,
    build_line,
    build_sum,
    gamma_to_beta,
    predicted_last_exponent,
    predicted_line_exponent,
    predicted_sum_exponent,
)
from .estimation import (  # noqa: F401
    enumerate_lines,
    enumerate_subspaces,
    exponent_estimate,
    line_records_2d,
    minkowski_check,
    records,
)
from .lattice import (  # noqa: F401
    PlueckerVector,
    RationalSubspace,
    block_direct_sum,
    contains,
    coordinate_projection_heights,
    laplace_identity_check,
    orthogonal_complement,
    pluecker,
    primitive_part,
    saturate,
    subspace_from_json,
    subspace_to_json,
)
from .series import AlphaSequence, BetaSchedule, choose_u, sigma_trunc, tail_bound  # noqa: F401
