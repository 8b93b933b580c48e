"""Scalar special functions: gamma, the generalized binomial coefficient and
a series evaluator for the one-parameter Mittag-Leffler function."""

import math

from .errors import ConvergenceError, PoleError

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _is_nonpositive_integer(x):
    return x <= 0 and x == math.floor(x)


def _sinpi(x):
    # reduce into [-1, 1] first so large arguments keep full precision
    r = x - 2.0 * round(x / 2.0)
    if r == 0.0 or abs(r) == 1.0:
        return 0.0
    if r > 0.5:
        r = 1.0 - r
    elif r < -0.5:
        r = -1.0 - r
    return math.sin(math.pi * r)


def _lanczos(x):
    # valid for x >= 0.5
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    # split the power so t**(x+0.5) cannot overflow before exp(-t) is applied
    half = t ** ((x + 0.5) / 2.0)
    return _SQRT_2PI * half * math.exp(-t) * half * acc


def gamma(x):
    """Gamma function for real ``x``.

    Uses the Lanczos approximation, with the reflection formula below 1/2.

    Raises
    ------
    PoleError
        ``x`` is zero or a negative integer.
    OverflowError
        The result is not representable as a double.
    """
    x = float(x)
    if math.isnan(x):
        return math.nan
    if _is_nonpositive_integer(x):
        raise PoleError(f"gamma has a pole at {x!r}")
    if x == math.floor(x) and x <= 23:
        return float(math.factorial(int(x) - 1))
    if x < 0.5:
        s = _sinpi(x)
        g = gamma(1.0 - x)
        if math.isinf(g):
            return 0.0
        return math.pi / (s * g)
    if x > 171.62:
        raise OverflowError(f"gamma({x!r}) exceeds the double range")
    value = _lanczos(x)
    if math.isinf(value):
        raise OverflowError(f"gamma({x!r}) exceeds the double range")
    return value


def rgamma(x):
    """Reciprocal gamma, 0 at the poles."""
    if _is_nonpositive_integer(float(x)):
        return 0.0
    return 1.0 / gamma(x)


def gen_binomial(alpha, k):
    """Generalized binomial coefficient ``(alpha choose k)``.

    Evaluated as ``(-1)**(k-1) * alpha * G(k-alpha) / (G(1-alpha) * G(k+1))``.
    Integer ``alpha`` makes that expression singular, so the classical
    coefficient (zero for ``k > alpha``) is returned instead.
    """
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    k = int(k)
    alpha = float(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if alpha == math.floor(alpha):
        n = int(alpha)
        return float(math.comb(n, k)) if k <= n else 0.0
    if k == 0:
        return 1.0
    if k + 1 > 170:
        # the gamma ratios overflow individually; the product form is the same number
        value = 1.0
        for j in range(k):
            value *= (alpha - j) / (j + 1)
        return value
    sign = -1.0 if (k - 1) % 2 else 1.0
    return sign * alpha * gamma(k - alpha) / (gamma(1.0 - alpha) * gamma(k + 1.0))


def _ml_term(alpha, z, k):
    # z**k / G(alpha*k + 1), via logs once the gamma would overflow
    arg = alpha * k + 1.0
    if arg < 170.0:
        return z ** k / gamma(arg)
    if z == 0.0:
        return 0.0
    sign = -1.0 if (z < 0 and k % 2) else 1.0
    return sign * math.exp(k * math.log(abs(z)) - math.lgamma(arg))


def mittag_leffler(alpha, z, tol=1e-14, max_terms=10_000):
    """One-parameter Mittag-Leffler function ``E_alpha(z)`` by direct series.

    The sum stops once three consecutive terms are each smaller than
    ``tol * |partial sum|``. Intended for ``|z| <= 5``.
    """
    alpha = float(alpha)
    z = float(z)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if abs(z) > 5.0:
        raise ValueError("mittag_leffler is restricted to |z| <= 5")
    total = 0.0
    comp = 0.0
    small = 0
    for k in range(max_terms):
        term = _ml_term(alpha, z, k)
        # Kahan summation
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if abs(term) < tol * abs(total):
            small += 1
            if small == 3:
                return total
        else:
            small = 0
    raise ConvergenceError(
        f"Mittag-Leffler series for alpha={alpha}, z={z} did not converge in {max_terms} terms"
    )
