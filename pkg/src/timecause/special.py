"""Special functions backing the paired t-test p-values.

Only what the test needs: the regularized incomplete beta function
(continued-fraction evaluation) and the two-sided Student-t tail
probability built on top of it. Log-gamma comes from ``math.lgamma``.
"""

import math

from .errors import ConvergenceError, DomainError

_MAX_ITER = 300
_REL_TOL = 1e-14
_TINY = 1e-300


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta, via modified Lentz.

    Converges quickly only for x < (a+1)/(a+b+2); callers apply the
    symmetry relation to stay in that regime.
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        # even step
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        # odd step
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _REL_TOL:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge for "
        f"a={a}, b={b}, x={x} within {_MAX_ITER} iterations"
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b).

    Parameters
    ----------
    a, b : float
        Shape parameters, both > 0.
    x : float
        Evaluation point in [0, 1].

    Returns
    -------
    float
        I_x(a, b), accurate to roughly 1e-12 absolute error.
    """
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"shape parameters must be positive, got a={a}, b={b}")
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got x={x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        + math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
    )
    front = math.exp(log_front)
    # Use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) to keep the continued
    # fraction in its fast-converging regime.
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, dof: int) -> float:
    """Two-sided p-value of a Student-t statistic.

    Uses p = I_{v/(v+t^2)}(v/2, 1/2) with v degrees of freedom, so
    p(0) = 1 and p decreases monotonically in |t|.
    """
    if dof < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {dof}")
    if not math.isfinite(t):
        raise DomainError(f"t statistic must be finite, got {t}")
    if t == 0.0:
        return 1.0
    v = float(dof)
    x = v / (v + t * t)
    p = regularized_incomplete_beta(v / 2.0, 0.5, x)
    # Clamp tiny negative round-off from the continued fraction.
    return min(1.0, max(0.0, p))
