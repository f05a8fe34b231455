"""Exponentially scaled exponential integral.

The rate formulas only ever need the product ``exp(x) * E1(x)`` with
``E1(x) = int_x^inf exp(-t)/t dt``, so that product is the primitive here.
Evaluating it directly avoids the overflow of ``exp(x)`` and the underflow of
``E1(x)`` that occur separately for large ``x`` (far users, low SNR).
"""

import numpy as np

EULER_GAMMA = 0.57721566490153286061

# Below this the power series is used, above it the continued fraction.
_SERIES_CUTOFF = 1.0
_MAX_TERMS = 500
_EPS = 1e-16
_TINY = 1e-300


def _series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    total = 0.0
    term = 1.0
    for k in range(1, _MAX_TERMS):
        term *= -x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < _EPS * abs(total):
            break
    return np.exp(x) * (-EULER_GAMMA - np.log(x) - total)


def _continued_fraction(x: float) -> float:
    # Modified Lentz on exp(x) E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
    b = x + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_TERMS):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"continued fraction for exp(x)E1(x) did not converge at x={x}")


def _scalar(x: float) -> float:
    if not x > 0.0 or not np.isfinite(x):
        raise ValueError(f"exp_e1_scaled requires a finite x > 0, got {x!r}")
    if x <= _SERIES_CUTOFF:
        return float(_series(x))
    return float(_continued_fraction(x))


def exp_e1_scaled(x):
    """Return ``exp(x) * E1(x)`` for ``x > 0``.

    Parameters
    ----------
    x : float or array_like
        Strictly positive argument(s).

    Returns
    -------
    float or numpy.ndarray
        Same shape as `x`. Satisfies ``1/(x+1) < f(x) < 1/x``.

    Raises
    ------
    ValueError
        If any element is not strictly positive and finite.
    """
    if np.ndim(x) == 0:
        return _scalar(float(x))
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    for idx, value in np.ndenumerate(arr):
        out[idx] = _scalar(float(value))
    return out
