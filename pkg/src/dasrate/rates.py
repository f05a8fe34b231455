"""Closed-form ergodic rates over Rayleigh fading.

For a user served by ports with gains ``S_k`` (k in G) and interfered by
ports with gains ``S_u`` (u in G^RC), the received signal power and the
interference-plus-noise power are hypoexponential. With the partial
fraction weights

    A_k = prod_{l != k} S_k / (S_k - S_l)      (over G)
    B_u = prod_{v != u} S_u / (S_u - S_v)      (over G^RC)

and ``g(S) = exp(s2/(S P)) E1(s2/(S P))`` the ergodic rate in bits/s/Hz is

    sum_k sum_u A_k B_u S_k/(S_k - S_u) (g(S_k) - g(S_u)) / ln 2

or ``sum_k A_k g(S_k) / ln 2`` when nothing interferes.

The weights are singular for coincident gains. Ties are spread apart
multiplicatively before evaluation, and instances whose weights still
exceed ``EvalPolicy.conditioning_threshold`` are evaluated by a
well-conditioned Laplace-domain integral instead.
"""

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from .geometry import LinkBudget
from .modes import ModeGroups, TransmissionMode, derive_groups
from .special import exp_e1_scaled

LN2 = math.log(2.0)

CLOSED_FORM = "closed_form"
QUADRATURE = "quadrature"
MONTE_CARLO_FALLBACK = "monte_carlo_fallback"
_METHOD_RANK = {CLOSED_FORM: 0, QUADRATURE: 1, MONTE_CARLO_FALLBACK: 2}


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""


@dataclass(frozen=True)
class EvalPolicy:
    """Numerical knobs for closed-form evaluation.

    Attributes
    ----------
    tie_epsilon : float
        Relative spread applied to coincident gains.
    conditioning_threshold : float
        Largest partial-fraction weight magnitude accepted before falling
        back to quadrature.
    quadrature_rel_tol : float
        Relative tolerance for every adaptive quadrature.
    perturb_ties : bool
        Disable only to exercise the conditioning fallback.
    fallback_samples : int
        Fading realizations used if the quadrature fallback also fails.
    """

    tie_epsilon: float = 1e-9
    conditioning_threshold: float = 1e6
    quadrature_rel_tol: float = 1e-9
    perturb_ties: bool = True
    fallback_samples: int = 200_000

    def __post_init__(self):
        if not 0 < self.tie_epsilon < 1e-3:
            raise ValueError("tie_epsilon must lie in (0, 1e-3)")
        if not self.conditioning_threshold > 0:
            raise ValueError("conditioning_threshold must be positive")
        if not self.quadrature_rel_tol > 0:
            raise ValueError("quadrature_rel_tol must be positive")


DEFAULT_POLICY = EvalPolicy()


@dataclass(frozen=True)
class UserRateBreakdown:
    """Per-user ergodic rates of one mode and their sum (bits/s/Hz)."""

    per_user_rates: np.ndarray
    sum_rate: float
    method: str


def _as_gains(gains, name) -> np.ndarray:
    g = np.atleast_1d(np.asarray(gains, dtype=float))
    if g.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if np.any(~np.isfinite(g)) or np.any(g <= 0):
        raise ValueError(f"{name} must be finite and strictly positive")
    return g


def separate_ties(values, tie_epsilon: float = DEFAULT_POLICY.tie_epsilon) -> np.ndarray:
    """Spread coincident values apart.

    Values within a relative distance `tie_epsilon` of an earlier (sorted)
    value form a cluster; the k-th extra member of a cluster is multiplied
    by ``1 + k * tie_epsilon``. Order of the input is preserved.
    """
    v = np.asarray(values, dtype=float).copy()
    if v.size < 2:
        return v
    order = np.argsort(v, kind="stable")
    anchor = v[order[0]]
    k = 0
    for idx in order[1:]:
        if abs(v[idx] - anchor) <= tie_epsilon * abs(anchor):
            k += 1
            v[idx] = anchor * (1.0 + k * tie_epsilon)
        else:
            anchor = v[idx]
            k = 0
    return v


def partial_fraction_weights(gains) -> np.ndarray:
    """``A_k = prod_{l != k} S_k / (S_k - S_l)`` for each gain."""
    s = np.asarray(gains, dtype=float)
    out = np.ones_like(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(s.size):
            for l in range(s.size):
                if l != k:
                    out[k] *= s[k] / (s[k] - s[l])
    return out


def _prepare(serving, interfering, policy):
    s = _as_gains(serving, "serving_gains") if len(serving) else np.zeros(0)
    i = _as_gains(interfering, "interfering_gains") if len(interfering) else np.zeros(0)
    if policy.perturb_ties and s.size + i.size > 1:
        both = separate_ties(np.concatenate([s, i]), policy.tie_epsilon)
        s, i = both[: s.size], both[s.size:]
    return s, i


def user_gains(groups: ModeGroups, user: int, gains_row) -> Tuple[np.ndarray, np.ndarray]:
    """Serving and interfering gains of `user` (1-based) from its pathloss row."""
    row = np.asarray(gains_row, dtype=float)
    serving = row[[p - 1 for p in sorted(groups.serving(user))]]
    interfering = row[[p - 1 for p in sorted(groups.interference(user))]]
    return serving, interfering


# ---------------------------------------------------------------- densities

def signal_pdf(rho, serving_gains, power: float, policy: EvalPolicy = DEFAULT_POLICY):
    """Density of the received signal power ``sum_k S_k P |h_k|^2``."""
    if len(serving_gains) == 0:
        raise ValueError("signal_pdf needs at least one serving gain")
    s, _ = _prepare(serving_gains, [], policy)
    means = s * power
    w = partial_fraction_weights(s)
    r = np.asarray(rho, dtype=float)
    out = np.zeros(np.shape(r))
    pos = r >= 0
    rr = r[pos] if np.ndim(r) else r
    val = np.sum(w[:, None] / means[:, None] * np.exp(-np.atleast_1d(rr)[None, :] / means[:, None]), axis=0)
    if np.ndim(r) == 0:
        return float(val[0]) if pos else 0.0
    out[pos] = val
    return out


def interference_pdf(theta, interfering_gains, power: float, noise: float,
                     policy: EvalPolicy = DEFAULT_POLICY):
    """Density of interference-plus-noise power ``s2 + sum_u S_u P |h_u|^2``.

    Supported on ``theta > noise``; returns 0 below it.
    """
    if len(interfering_gains) == 0:
        raise ValueError("interference_pdf needs at least one interfering gain")
    t = np.asarray(theta, dtype=float)
    return signal_pdf(t - noise, interfering_gains, power, policy) * (t >= noise)


def sinr_pdf(rho, serving_gains, interfering_gains, budget: LinkBudget,
             policy: EvalPolicy = DEFAULT_POLICY):
    """Closed-form density of one user's SINR.

    Requires at least one serving and one interfering port; the
    interference-free case has no ratio form and is handled separately by
    the rate functions.
    """
    if len(serving_gains) == 0 or len(interfering_gains) == 0:
        raise ValueError("sinr_pdf needs non-empty serving and interfering sets")
    s, i = _prepare(serving_gains, interfering_gains, policy)
    P, n2 = budget.power, budget.noise_variance
    a = partial_fraction_weights(s)
    b = partial_fraction_weights(i)
    r = np.atleast_1d(np.asarray(rho, dtype=float))
    total = np.zeros_like(r)
    for sk, ak in zip(s, a):
        decay = np.exp(-n2 * r / (sk * P))
        for su, bu in zip(i, b):
            lin = su * r + sk
            total += ak * bu * (n2 * lin + sk * su * P) / lin**2 * decay
    total = np.where(r >= 0, total / P, 0.0)
    return float(total[0]) if np.ndim(rho) == 0 else total


# ---------------------------------------------------------------- rates

def _closed_terms(s, i, budget):
    """Closed-form rate (nats) and the largest weight magnitude involved."""
    P, n2 = budget.power, budget.noise_variance
    a = partial_fraction_weights(s)
    gs = exp_e1_scaled(n2 / (s * P))
    if i.size == 0:
        return float(np.sum(a * gs)), float(np.max(np.abs(a)))
    b = partial_fraction_weights(i)
    gi = exp_e1_scaled(n2 / (i * P))
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = s[:, None] / (s[:, None] - i[None, :])
        coef = a[:, None] * b[None, :] * cross
    total = float(np.sum(coef * (gs[:, None] - gi[None, :])))
    return total, float(np.max(np.abs(coef)))


def _rate_laplace(serving, interfering, budget, rel_tol) -> float:
    """Rate (bits) from ``int_0^inf exp(-s s2) L_I(s) (1 - L_S(s)) / s ds``.

    ``L`` are the Laplace transforms ``prod 1/(1 + s S P)``; nothing here
    divides by gain differences, so ties are harmless.
    """
    P, n2 = budget.power, budget.noise_variance
    a = np.asarray(serving) * P
    b = np.asarray(interfering) * P
    scale = 1.0 / (n2 + float(np.sum(a)) + float(np.sum(b)))

    def integrand(t):
        if t <= 0.0:
            return float(np.sum(a)) * scale
        if t >= 1.0:
            return 0.0
        x = scale * t / (1.0 - t)
        jac = scale / (1.0 - t) ** 2
        li = np.prod(1.0 / (1.0 + x * b)) if b.size else 1.0
        # (1 - ls)/x without cancellation for small x
        one_minus = -np.expm1(-np.sum(np.log1p(x * a)))
        return math.exp(-x * n2) * li * one_minus / x * jac

    val = _quad01(integrand, rel_tol)
    return val / LN2


def _quad01(func, rel_tol, points=None) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, 0.0, 1.0, epsabs=0.0, epsrel=rel_tol,
                                      limit=500, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(str(exc)) from exc
    if not np.isfinite(val) or err > max(rel_tol * abs(val), 1e-300) * 10:
        raise QuadratureError(f"quadrature error estimate {err:g} for value {val:g}")
    return val


def _rate_monte_carlo(serving, interfering, budget, samples, seed=0) -> float:
    rng = np.random.Generator(np.random.Philox(seed))
    P, n2 = budget.power, budget.noise_variance
    sig = rng.exponential(size=(samples, len(serving))) @ (np.asarray(serving) * P)
    intf = (rng.exponential(size=(samples, len(interfering))) @ (np.asarray(interfering) * P)
            if len(interfering) else 0.0)
    return float(np.mean(np.log2(1.0 + sig / (n2 + intf))))


def _user_rate(serving, interfering, budget, policy) -> Tuple[float, str]:
    if len(serving) == 0:
        return 0.0, CLOSED_FORM
    s, i = _prepare(serving, interfering, policy)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        nats, worst = _closed_terms(s, i, budget)
    if np.isfinite(nats) and np.isfinite(worst) and worst <= policy.conditioning_threshold:
        return max(nats / LN2, 0.0), CLOSED_FORM
    s0 = _as_gains(serving, "serving_gains")
    i0 = _as_gains(interfering, "interfering_gains") if len(interfering) else np.zeros(0)
    try:
        return _rate_laplace(s0, i0, budget, policy.quadrature_rel_tol), QUADRATURE
    except QuadratureError:
        return (_rate_monte_carlo(s0, i0, budget, policy.fallback_samples),
                MONTE_CARLO_FALLBACK)


def ergodic_user_rate_closed(serving_gains, interfering_gains, budget: LinkBudget,
                             policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Ergodic rate of one user in bits/s/Hz.

    Parameters
    ----------
    serving_gains : sequence of float
        Pathloss gains from the ports serving the user. Empty means the
        user is inactive and the rate is 0.
    interfering_gains : sequence of float
        Gains from the other active ports. May be empty.
    budget : LinkBudget
    policy : EvalPolicy, optional

    Notes
    -----
    Ill-conditioned instances are evaluated by quadrature (or, failing that,
    Monte Carlo); use :func:`ergodic_sum_rate_closed` to see which method
    was used.
    """
    return _user_rate(serving_gains, interfering_gains, budget, policy)[0]


def ergodic_sum_rate_closed(mode: TransmissionMode, gains, budget: LinkBudget,
                            policy: EvalPolicy = DEFAULT_POLICY) -> UserRateBreakdown:
    """Per-user and total ergodic rates of `mode` for a K x N pathloss matrix."""
    g = np.asarray(gains, dtype=float)
    if g.ndim != 2 or g.shape[1] != mode.n_ports:
        raise ValueError(f"gain matrix shape {g.shape} does not match a {mode.n_ports}-port mode")
    k = g.shape[0]
    groups = derive_groups(mode, k)
    rates = np.zeros(k)
    method = CLOSED_FORM
    for user in range(1, k + 1):
        if not groups.is_active(user):
            continue
        s, i = user_gains(groups, user, g[user - 1])
        rates[user - 1], m = _user_rate(s, i, budget, policy)
        if _METHOD_RANK[m] > _METHOD_RANK[method]:
            method = m
    return UserRateBreakdown(rates, float(np.sum(rates)), method)


def ergodic_user_rate_quadrature(serving_gains, interfering_gains, budget: LinkBudget,
                                 rel_tol: Optional[float] = None,
                                 policy: EvalPolicy = DEFAULT_POLICY) -> float:
    """Ergodic rate by adaptive quadrature of ``log2(1 + rho)`` against the SINR density.

    Independent of the exponential-integral route; used as its oracle.
    The half-line is mapped onto (0, 1) by ``rho = c t / (1 - t)`` with
    ``c`` the ratio of mean signal to mean interference-plus-noise.

    Raises
    ------
    QuadratureError
        If the adaptive scheme does not converge.
    """
    if len(serving_gains) == 0:
        return 0.0
    tol = policy.quadrature_rel_tol if rel_tol is None else rel_tol
    P, n2 = budget.power, budget.noise_variance
    s, i = _prepare(serving_gains, interfering_gains, policy)
    scale = float(np.sum(s) * P / (n2 + np.sum(i) * P))
    if i.size:
        def density(rho):
            return sinr_pdf(rho, s, i, budget, policy)
    else:
        def density(rho):
            return signal_pdf(rho * n2, s, P, policy) * n2

    def integrand(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        rho = scale * t / (1.0 - t)
        return math.log2(1.0 + rho) * density(rho) * scale / (1.0 - t) ** 2

    return _quad01(integrand, tol, points=[0.5])
