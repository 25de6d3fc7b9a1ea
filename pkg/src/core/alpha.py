"""
Exploration schedule and the matching regret bound
"""

import math

from .exceptions import InvalidArgumentError
from .models import AlphaParams


def alpha_schedule(params: AlphaParams, t: int) -> float:
    """
    Exploration coefficient for round t

    sqrt(d ln(1 + phi t / (d lambda)) + 2 ln(t K)) + sqrt(lambda beta)

    Args:
        params: Schedule constants
        t: Round index, starting at 1

    Returns:
        alpha_t, non-decreasing in t
    """
    if t < 1:
        raise InvalidArgumentError(f"round index must be >= 1, got {t}")
    d, lam = params.d, params.lam
    inner = d * math.log1p(params.phi_w_prime * t / (d * lam)) + 2.0 * math.log(t * params.K)
    return math.sqrt(inner) + math.sqrt(lam * params.beta)


def regret_bound(params: AlphaParams, T: int, include_constant: bool = True) -> float:
    """
    Upper bound on cumulative regret after T rounds

    2 alpha_T sqrt(2 T K d ln(1 + phi T / (lambda d))), plus 1 for the
    failure event of probability 1/(TK) unless ``include_constant`` is False.
    """
    if T < 1:
        raise InvalidArgumentError(f"horizon must be >= 1, got {T}")
    d, lam, K = params.d, params.lam, params.K
    log_term = math.log1p(params.phi_w_prime * T / (lam * d))
    bound = 2.0 * alpha_schedule(params, T) * math.sqrt(2.0 * T * K * d * log_term)
    return bound + 1.0 if include_constant else bound
