"""Random streams, special functions, elementary samplers and quadrature."""
from .quadrature import QuadratureError, QuadratureResult, adaptive_quadrature
from .rng import DATA_STREAM_ID, RngStream, chain_stream_id
from .sampling import sample_half_cauchy, sample_trunc_exp, trunc_exp_from_uniform
from .special import log_bessel_i, log_reg_lower_inc_gamma, reg_lower_inc_gamma

__all__ = [
    "QuadratureError",
    "QuadratureResult",
    "adaptive_quadrature",
    "DATA_STREAM_ID",
    "RngStream",
    "chain_stream_id",
    "sample_half_cauchy",
    "sample_trunc_exp",
    "trunc_exp_from_uniform",
    "log_bessel_i",
    "log_reg_lower_inc_gamma",
    "reg_lower_inc_gamma",
]
