"""Monte Carlo fading simulation, mode selection and cell-averaged experiments.

Random streams are Philox generators keyed by ``(seed, stream_id)``; drop
``d`` of an experiment always uses ``stream_id = d``, so results do not
depend on how drops are scheduled across workers.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .geometry import CellLayout, LinkBudget, build_pathloss_matrix, distance_matrix, sample_uniform_users
from .modes import (TransmissionMode, as_mode, derive_groups, enumerate_ideal,
                    generate_min_distance_candidates)
from .rates import DEFAULT_POLICY, EvalPolicy, ergodic_sum_rate_closed

PROPOSED = "proposed_closed_form"
IDEAL_MC = "ideal_exhaustive_mc"
IDEAL_CLOSED = "ideal_exhaustive_closed"
FIXED = "fixed_mode"
SELECTORS = (PROPOSED, IDEAL_MC, IDEAL_CLOSED, FIXED)


def make_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Counter-based generator for substream `stream_id` of `seed`."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class McConfig:
    realizations: int = 5000
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        if self.realizations < 2:
            raise ValueError("need at least 2 realizations for a standard error")

    def stream(self) -> np.random.Generator:
        return make_stream(self.seed, self.stream_id)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    realizations: int


def sample_fading(k: int, n: int, rng: np.random.Generator,
                  realizations: Optional[int] = None) -> np.ndarray:
    """Rayleigh power gains ``|h|^2``: i.i.d. unit-mean exponentials.

    Returns shape ``(k, n)``, or ``(realizations, k, n)`` when given.
    """
    if k < 1 or n < 1:
        raise ValueError("k and n must be positive")
    shape = (k, n) if realizations is None else (realizations, k, n)
    return rng.standard_exponential(size=shape)


def instantaneous_user_rate(user: int, groups, gains_row, draw_row, budget: LinkBudget):
    """``log2(1 + SINR)`` of `user` (1-based) for one or many fading draws.

    `draw_row` holds ``|h_{user, j}|^2`` along its last axis; leading axes
    are treated as independent realizations.
    """
    serving = sorted(groups.serving(user))
    draw_row = np.asarray(draw_row, dtype=float)
    if not serving:
        return np.zeros(draw_row.shape[:-1]) if draw_row.ndim > 1 else 0.0
    row = np.asarray(gains_row, dtype=float) * budget.power
    s_idx = [p - 1 for p in serving]
    i_idx = [p - 1 for p in sorted(groups.interference(user))]
    sig = draw_row[..., s_idx] @ row[s_idx]
    intf = draw_row[..., i_idx] @ row[i_idx] if i_idx else 0.0
    out = np.log2(1.0 + sig / (budget.noise_variance + intf))
    return float(out) if np.ndim(out) == 0 else out


def _sum_rate_samples(mode: TransmissionMode, gains: np.ndarray, budget: LinkBudget,
                      draws: np.ndarray) -> np.ndarray:
    k = gains.shape[0]
    groups = derive_groups(mode, k)
    total = np.zeros(draws.shape[0])
    for user in sorted(mode.active_users):
        total += instantaneous_user_rate(user, groups, gains[user - 1], draws[:, user - 1, :], budget)
    return total


def _estimate(samples: np.ndarray) -> McEstimate:
    n = samples.size
    return McEstimate(float(np.mean(samples)), float(np.std(samples, ddof=1) / np.sqrt(n)), n)


def mc_ergodic_sum_rate(mode, gains, budget: LinkBudget, config: McConfig = McConfig(),
                        draws: Optional[np.ndarray] = None) -> McEstimate:
    """Sample-mean estimate of the ergodic sum rate of `mode`.

    Pass `draws` (shape ``(R, K, N)``) to reuse the same fading realizations
    across modes; otherwise they are drawn from ``config.stream()``.
    """
    mode = as_mode(mode)
    g = np.asarray(gains, dtype=float)
    if g.ndim != 2 or g.shape[1] != mode.n_ports or mode.max_user > g.shape[0]:
        raise ValueError(f"gain matrix shape {g.shape} does not fit mode {mode}")
    if draws is None:
        draws = sample_fading(g.shape[0], g.shape[1], config.stream(), config.realizations)
    return _estimate(_sum_rate_samples(mode, g, budget, draws))


def select_best_mode(candidates, gains, budget: LinkBudget, method: str = "closed_form",
                     mc_config: Optional[McConfig] = None, draws: Optional[np.ndarray] = None,
                     policy: EvalPolicy = DEFAULT_POLICY) -> Tuple[TransmissionMode, float]:
    """Mode with the largest ergodic sum rate; the earliest candidate wins ties.

    `method` is ``"closed_form"`` or ``"monte_carlo"``. The Monte Carlo
    variant evaluates every candidate on the same fading draws.
    """
    modes = list(candidates)
    if not modes:
        raise ValueError("candidate set is empty")
    g = np.asarray(gains, dtype=float)
    if method == "closed_form":
        def rate(m):
            return ergodic_sum_rate_closed(m, g, budget, policy).sum_rate
    elif method == "monte_carlo":
        if draws is None:
            cfg = mc_config or McConfig()
            draws = sample_fading(g.shape[0], g.shape[1], cfg.stream(), cfg.realizations)

        def rate(m):
            return float(np.mean(_sum_rate_samples(m, g, budget, draws)))
    else:
        raise ValueError(f"unknown selection method {method!r}")
    best, best_rate = modes[0], rate(modes[0])
    for m in modes[1:]:
        r = rate(m)
        if r > best_rate:
            best, best_rate = m, r
    return best, best_rate


# ---------------------------------------------------------------- experiments

@dataclass(frozen=True)
class DropExperimentConfig:
    """Cell-averaged experiment over random user drops.

    `selectors` lists any of :data:`SELECTORS` except ``fixed_mode``; fixed
    modes are requested through `fixed_modes` and reported as
    ``fixed_mode[...]``.
    """

    n_ports: int = 2
    k_users: int = 2
    snr_grid_db: Tuple[float, ...] = tuple(float(s) for s in range(0, 55, 5))
    drops: int = 4000
    realizations: int = 5000
    seed: int = 0
    selectors: Tuple[str, ...] = (PROPOSED, IDEAL_CLOSED)
    fixed_modes: Tuple[TransmissionMode, ...] = ()

    def __post_init__(self):
        if not self.snr_grid_db:
            raise ValueError("snr_grid_db must not be empty")
        if self.drops < 1:
            raise ValueError("drops must be at least 1")
        if self.realizations < 2:
            raise ValueError("realizations must be at least 2")
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "fixed_modes", tuple(as_mode(m) for m in self.fixed_modes))
        for sel in self.selectors:
            if sel not in SELECTORS or sel == FIXED:
                raise ValueError(f"unknown selector {sel!r}")
        for m in self.fixed_modes:
            if m.n_ports != self.n_ports or m.max_user > self.k_users:
                raise ValueError(f"fixed mode {m} does not fit N={self.n_ports}, K={self.k_users}")
        if not self.selectors and not self.fixed_modes:
            raise ValueError("request at least one selector or fixed mode")

    @property
    def labels(self) -> List[str]:
        return list(self.selectors) + [f"{FIXED}{m}" for m in self.fixed_modes]


@dataclass(frozen=True)
class CurveRow:
    snr_db: float
    selector: str
    mean_sum_rate: float
    std_error: float
    drops: int
    realizations: int


def evaluate_drop(config: DropExperimentConfig, layout: CellLayout, drop: int,
                  policy: EvalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Rates of every requested selector for one user drop.

    Returns an array of shape ``(len(snr_grid_db), len(config.labels))``.
    """
    rng = make_stream(config.seed, drop)
    users = sample_uniform_users(config.k_users, layout.cell_radius, rng, layout)
    gains = build_pathloss_matrix(users, layout)
    need_ideal = IDEAL_MC in config.selectors or IDEAL_CLOSED in config.selectors
    ideal = enumerate_ideal(config.n_ports, config.k_users) if need_ideal else None
    proposed = (generate_min_distance_candidates(distance_matrix(users, layout))
                if PROPOSED in config.selectors else None)
    draws = (sample_fading(config.k_users, config.n_ports, rng, config.realizations)
             if IDEAL_MC in config.selectors else None)

    out = np.empty((len(config.snr_grid_db), len(config.labels)))
    for s, snr_db in enumerate(config.snr_grid_db):
        budget = LinkBudget.from_snr_db(snr_db)
        cache = {}

        def closed(m):
            if m not in cache:
                cache[m] = ergodic_sum_rate_closed(m, gains, budget, policy).sum_rate
            return cache[m]

        col = 0
        for sel in config.selectors:
            if sel == PROPOSED:
                out[s, col] = max(closed(m) for m in proposed)
            elif sel == IDEAL_CLOSED:
                out[s, col] = max(closed(m) for m in ideal)
            else:
                out[s, col] = select_best_mode(ideal, gains, budget, "monte_carlo", draws=draws)[1]
            col += 1
        for m in config.fixed_modes:
            out[s, col] = closed(m)
            col += 1
    return out


def _drop_task(args):
    return evaluate_drop(*args)


def drop_rates(config: DropExperimentConfig, layout: CellLayout, workers: int = 1,
               policy: EvalPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Stacked per-drop rates, shape ``(drops, snr points, selectors)``."""
    if layout.n_ports != config.n_ports:
        raise ValueError(f"layout has {layout.n_ports} ports but config asks for {config.n_ports}")
    tasks = [(config, layout, d, policy) for d in range(config.drops)]
    if workers > 1 and config.drops > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_drop_task, tasks, chunksize=max(1, config.drops // (4 * workers))))
    else:
        results = [_drop_task(t) for t in tasks]
    return np.stack(results)


def cell_average_experiment(config: DropExperimentConfig, layout: Optional[CellLayout] = None,
                            workers: int = 1, policy: EvalPolicy = DEFAULT_POLICY) -> List[CurveRow]:
    """Cell-averaged ergodic sum rate per SNR point and selector.

    The standard error reflects the spread over user drops. Output is
    identical for any `workers` value.
    """
    if layout is None:
        layout = CellLayout.canonical(config.n_ports)
    rates = drop_rates(config, layout, workers, policy)
    mean = rates.mean(axis=0)
    if config.drops > 1:
        se = rates.std(axis=0, ddof=1) / np.sqrt(config.drops)
    else:
        se = np.zeros_like(mean)
    rows = []
    for s, snr in enumerate(config.snr_grid_db):
        for c, label in enumerate(config.labels):
            rows.append(CurveRow(snr, label, float(mean[s, c]), float(se[s, c]),
                                 config.drops, config.realizations))
    return rows
