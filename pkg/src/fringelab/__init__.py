"""Random fringe trees: samplers, exact and asymptotic constants, Monte Carlo checks."""
from .tree import (
    LEAF, NAMED, FringeCensus, NotFullError, ShapeError, Tree, census, cladogram_code, compress,
    decode, delete_leaves, encode, extend, format_shape, full_shapes, binary_shapes, metrics,
    mirror, node, parse_shape, phi_count, quenched_fringe_prob, quenched_qsin,
)
from .samplers import ModelSpec, RandomSource, replicate_source, sample
from .exact import (
    ExactExpValue, ExpPoly, beta_hat, bst_shape_distribution, bst_shape_prob, cb_limit,
    cb_shape_prob, ebst_beta, g_poly, kernel_integral, pi_t, uniform_limit, uniform_variance,
)
from .asymptotics import (
    MellinKernel, PeriodicConstant, SourceParams, complex_gamma, detect_period, limit_fringe,
    limit_qsin, mellin_V, patricia_mean_const, patricia_var_const, psi,
)

__version__ = "0.1.0"
