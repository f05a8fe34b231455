"""Command-line front end.

Subcommands ``rate-curve``, ``cell-average``, ``modes`` and ``validate``.
Settings come from a JSON config file (``--config``) with flags taking
precedence. SNR is given in dB; the noise variance is fixed at 1.
"""

import argparse
import csv
import io
import json
import math
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import geometry, modes, montecarlo, rates
from .special import exp_e1_scaled

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VALIDATION = 4

FIG2_USERS = [[-2.5, -2.0], [3.0, 4.5]]
DEFAULT_SNR_GRID = [float(s) for s in range(0, 55, 5)]
DESK_SCALE = 20

RATE_CURVE_FIELDS = ["snr_db", "mode", "closed_form_rate", "mc_rate", "mc_std_error"]
CELL_AVERAGE_FIELDS = ["snr_db", "selector", "mean_sum_rate", "std_error", "drops", "realizations"]
MODES_FIELDS = ["candidate_set", "mode"]
VALIDATE_FIELDS = ["check", "passed", "measured", "tolerance", "detail"]

ALL_CHECKS = ["e1_bracket", "e1_reference", "pdf_normalization", "closed_vs_quadrature",
              "closed_vs_monte_carlo", "single_user_dominance", "candidate_counts",
              "conditioning_fallback"]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config

DEFAULTS = {
    "n_ports": 2,
    "k_users": 2,
    "cell_radius": geometry.DEFAULT_CELL_RADIUS,
    "pathloss_exponent": geometry.DEFAULT_PATHLOSS_EXPONENT,
    "exclusion_radius": 0.0,
    "ports": None,
    "users": None,
    "distances": None,
    "snr_db": DEFAULT_SNR_GRID,
    "seed": 0,
    "drops": 4000,
    "realizations": 5000,
    "selectors": [montecarlo.PROPOSED, montecarlo.IDEAL_CLOSED],
    "fixed_modes": [],
    "checks": ALL_CHECKS,
    "format": "csv",
    "out": None,
    "workers": 1,
    "desk_scale": False,
    "tie_perturbation": True,
}


def _parse_list(text: str, cast=float):
    text = text.strip()
    if not text:
        return []
    if text.startswith("["):
        return [cast(v) for v in json.loads(text)]
    return [cast(v) for v in text.split(",")]


def _parse_snr(text: str) -> List[float]:
    """Accept ``0,10,20`` or a ``start:step:stop`` range (stop inclusive)."""
    if ":" in text:
        start, step, stop = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ConfigError("SNR step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    return _parse_list(text)


def resolve_config(args: argparse.Namespace, command: str) -> Dict:
    cfg = dict(DEFAULTS)
    if command == "rate-curve":
        cfg["users"] = FIG2_USERS
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS) - {"scenario"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in ("seed", "drops", "realizations", "format", "out", "workers", "n_ports", "k_users"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "snr", None) is not None:
        cfg["snr_db"] = _parse_snr(args.snr)
    if getattr(args, "selector", None):
        cfg["selectors"] = [s for s in args.selector if s != montecarlo.FIXED]
    if getattr(args, "fixed_mode", None):
        cfg["fixed_modes"] = [json.loads(m) for m in args.fixed_mode]
    if getattr(args, "checks", None) is not None:
        cfg["checks"] = [c for c in args.checks.split(",") if c]
    if getattr(args, "desk_scale", False):
        cfg["desk_scale"] = True
    if getattr(args, "no_tie_perturbation", False):
        cfg["tie_perturbation"] = False
    if cfg["desk_scale"]:
        cfg["drops"] = max(1, int(cfg["drops"]) // DESK_SCALE)
        cfg["realizations"] = max(2, int(cfg["realizations"]) // DESK_SCALE)
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {cfg['format']!r}")
    unknown_checks = set(cfg["checks"]) - set(ALL_CHECKS)
    if unknown_checks:
        raise ConfigError(f"unknown checks: {sorted(unknown_checks)}")
    return cfg


def layout_from(cfg: Dict) -> geometry.CellLayout:
    try:
        if cfg["ports"] is not None:
            lay = geometry.CellLayout(float(cfg["cell_radius"]),
                                      tuple(tuple(p) for p in cfg["ports"]),
                                      float(cfg["pathloss_exponent"]),
                                      float(cfg["exclusion_radius"]))
        else:
            lay = geometry.CellLayout.canonical(int(cfg["n_ports"]), float(cfg["cell_radius"]),
                                                float(cfg["pathloss_exponent"]),
                                                float(cfg["exclusion_radius"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid geometry: {exc}") from exc
    return lay


# ---------------------------------------------------------------- output

def _cell(value):
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def format_table(rows: Sequence[Dict], fields: Sequence[str], fmt: str) -> str:
    """Serialize rows as CSV (header first) or as a JSON array of objects."""
    if fmt == "json":
        return json.dumps([{f: r[f] for f in fields} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([_cell(r[f]) for f in fields])
    return buf.getvalue()


def _typed(text: str):
    if text in ("true", "false"):
        return text == "true"
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_table(text: str, fmt: str) -> List[Dict]:
    """Inverse of :func:`format_table`."""
    if fmt == "json":
        return json.loads(text)
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return [dict(zip(header, (_typed(v) for v in row))) for row in reader]


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_rate_curve(cfg: Dict) -> List[Dict]:
    """Closed-form and Monte Carlo sum rate of every ideal candidate at fixed user positions."""
    if not cfg["users"]:
        raise ConfigError("rate-curve needs fixed user positions")
    lay = layout_from(cfg)
    users = [geometry.Position(*u) for u in cfg["users"]]
    try:
        gains = geometry.build_pathloss_matrix(users, lay)
    except ValueError as exc:
        raise ConfigError(f"invalid geometry: {exc}") from exc
    cands = modes.enumerate_ideal(lay.n_ports, len(users))
    policy = rates.EvalPolicy(perturb_ties=cfg["tie_perturbation"])
    rows = []
    for s, snr in enumerate(cfg["snr_db"]):
        budget = geometry.LinkBudget.from_snr_db(snr)
        mc_cfg = montecarlo.McConfig(int(cfg["realizations"]), int(cfg["seed"]), s)
        draws = montecarlo.sample_fading(len(users), lay.n_ports, mc_cfg.stream(), mc_cfg.realizations)
        for m in cands:
            est = montecarlo.mc_ergodic_sum_rate(m, gains, budget, mc_cfg, draws=draws)
            rows.append({"snr_db": float(snr), "mode": str(m),
                         "closed_form_rate": rates.ergodic_sum_rate_closed(m, gains, budget, policy).sum_rate,
                         "mc_rate": est.mean, "mc_std_error": est.std_error})
    return rows


def cmd_cell_average(cfg: Dict) -> List[Dict]:
    """Cell-averaged curves for each requested selector and fixed mode."""
    lay = layout_from(cfg)
    try:
        exp = montecarlo.DropExperimentConfig(
            n_ports=lay.n_ports, k_users=int(cfg["k_users"]), snr_grid_db=tuple(cfg["snr_db"]),
            drops=int(cfg["drops"]), realizations=int(cfg["realizations"]), seed=int(cfg["seed"]),
            selectors=tuple(cfg["selectors"]), fixed_modes=tuple(cfg["fixed_modes"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    policy = rates.EvalPolicy(perturb_ties=cfg["tie_perturbation"])
    curve = montecarlo.cell_average_experiment(exp, lay, int(cfg["workers"]), policy)
    return [r.__dict__.copy() for r in curve]


def cmd_modes(cfg: Dict) -> Dict:
    """Both candidate sets and their sizes."""
    n, k = int(cfg["n_ports"]), int(cfg["k_users"])
    try:
        ideal = modes.enumerate_ideal(n, k)
    except modes.CandidateLimitError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg["distances"] is not None:
        dist = np.asarray(cfg["distances"], dtype=float)
    else:
        lay = layout_from(cfg)
        if cfg["users"] is not None:
            users = [geometry.Position(*u) for u in cfg["users"]]
        else:
            users = geometry.sample_uniform_users(k, lay.cell_radius,
                                                  montecarlo.make_stream(int(cfg["seed"])), lay)
        dist = geometry.distance_matrix(users, lay)
    if dist.shape != (k, n):
        raise ConfigError(f"distance matrix shape {dist.shape} does not match K={k}, N={n}")
    proposed = modes.generate_min_distance_candidates(dist)
    return {"n_ports": n, "k_users": k,
            "ideal_count": modes.ideal_count(n, k), "ideal": ideal.as_lists(),
            "proposed_count": len(proposed), "proposed": proposed.as_lists()}


def _check(name, passed, measured, tolerance, detail=""):
    return {"check": name, "passed": bool(passed), "measured": float(measured),
            "tolerance": float(tolerance), "detail": detail}


def _random_instance(rng, max_ports=4, max_users=4):
    n = int(rng.integers(2, max_ports + 1))
    k = int(rng.integers(1, max_users + 1))
    lay = geometry.CellLayout.canonical(n)
    users = geometry.sample_uniform_users(k, lay.cell_radius, rng)
    gains = geometry.build_pathloss_matrix(users, lay)
    cands = modes.enumerate_ideal(n, k)
    mode = cands.modes[int(rng.integers(len(cands)))]
    return gains, mode


def run_checks(names: Sequence[str], seed: int = 0, tie_perturbation: bool = True) -> List[Dict]:
    """Run the named self-checks; every check runs even if an earlier one fails."""
    rng = montecarlo.make_stream(seed, 10_000)
    policy = rates.EvalPolicy(perturb_ties=tie_perturbation)
    out = []
    for name in names:
        try:
            out.append(_CHECKS[name](rng, policy))
        except ArithmeticError as exc:
            out.append(_check(name, False, float("nan"), 0.0, f"numerical failure: {exc}"))
    return out


def _chk_e1_bracket(rng, policy):
    xs = np.logspace(-6, 6, 241)
    f = exp_e1_scaled(xs)
    ok = np.all((1.0 / (xs + 1.0) < f) & (f < 1.0 / xs))
    margin = float(np.min(np.minimum(f - 1.0 / (xs + 1.0), 1.0 / xs - f) * xs))
    return _check("e1_bracket", ok, margin, 0.0, "min scaled distance to bracket")


def _chk_e1_reference(rng, policy):
    err = abs(exp_e1_scaled(1.0) / 0.59634736232319407434 - 1.0)
    return _check("e1_reference", err < 1e-12, err, 1e-12, "exp(1)E1(1)")


def _chk_pdf_normalization(rng, policy):
    worst = 0.0
    from scipy import integrate
    for _ in range(20):
        gains, mode = _random_instance(rng)
        groups = modes.derive_groups(mode, gains.shape[0])
        budget = geometry.LinkBudget.from_snr_db(float(rng.uniform(-10, 40)))
        for user in range(1, gains.shape[0] + 1):
            s, i = rates.user_gains(groups, user, gains[user - 1])
            if s.size == 0 or i.size == 0:
                continue
            scale = float(np.sum(s) / (budget.noise_variance / budget.power + np.sum(i)))
            val, _ = integrate.quad(
                lambda t: rates.sinr_pdf(scale * t / (1 - t), s, i, budget, policy) * scale / (1 - t) ** 2
                if 0 < t < 1 else 0.0, 0, 1, epsabs=0, epsrel=1e-10, limit=500, points=[0.5])
            worst = max(worst, abs(val - 1.0))
    return _check("pdf_normalization", worst < 1e-6, worst, 1e-6)


def _chk_closed_vs_quadrature(rng, policy):
    worst = 0.0
    for _ in range(20):
        gains, mode = _random_instance(rng)
        groups = modes.derive_groups(mode, gains.shape[0])
        budget = geometry.LinkBudget.from_snr_db(float(rng.uniform(-10, 40)))
        for user in range(1, gains.shape[0] + 1):
            s, i = rates.user_gains(groups, user, gains[user - 1])
            if s.size == 0:
                continue
            c = rates.ergodic_user_rate_closed(s, i, budget, policy)
            q = rates.ergodic_user_rate_quadrature(s, i, budget, policy=policy)
            worst = max(worst, abs(c - q) / abs(q))
    return _check("closed_vs_quadrature", worst < 1e-6, worst, 1e-6, "max relative difference")


def _chk_closed_vs_monte_carlo(rng, policy):
    lay = geometry.CellLayout.canonical(2)
    gains = geometry.build_pathloss_matrix([geometry.Position(*u) for u in FIG2_USERS], lay)
    inside, total, worst = 0, 0, 0.0
    for s, snr in enumerate([0.0, 10.0, 20.0, 30.0, 40.0]):
        budget = geometry.LinkBudget.from_snr_db(snr)
        cfg = montecarlo.McConfig(5000, 1, s)
        draws = montecarlo.sample_fading(2, 2, cfg.stream(), cfg.realizations)
        for m in modes.enumerate_ideal(2, 2):
            est = montecarlo.mc_ergodic_sum_rate(m, gains, budget, cfg, draws=draws)
            z = abs(rates.ergodic_sum_rate_closed(m, gains, budget, policy).sum_rate - est.mean) / est.std_error
            worst = max(worst, z)
            inside += z < 3.0
            total += 1
    return _check("closed_vs_monte_carlo", inside >= total - 1, worst, 3.0,
                  f"{inside}/{total} cells within 3 standard errors")


def _chk_single_user_dominance(rng, policy):
    violations = 0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        gains = rng.uniform(1e-3, 1.0, n)
        budget = geometry.LinkBudget.from_snr_db(float(rng.uniform(-10, 40)))
        mask = rng.random(n) < 0.5
        mask[int(rng.integers(n))] = True
        sub = rates.ergodic_user_rate_closed(gains[mask], [], budget, policy)
        full = rates.ergodic_user_rate_closed(gains, [], budget, policy)
        violations += sub > full * (1 + 1e-12)
    return _check("single_user_dominance", violations == 0, violations, 0)


def _chk_candidate_counts(rng, policy):
    bad = 0
    for n in range(1, 5):
        bad += len(modes.enumerate_ideal(n, n)) != modes.ideal_count(n, n)
    return _check("candidate_counts", bad == 0, bad, 0, "N=K=1..4")


def _chk_conditioning_fallback(rng, policy):
    # user on the perpendicular bisector of ports 1 and 2: equal gains
    lay = geometry.CellLayout.canonical(2)
    gains = geometry.build_pathloss_matrix([geometry.Position(0.0, 1.0)], lay)
    budget = geometry.LinkBudget.from_snr_db(10.0)
    res = rates.ergodic_sum_rate_closed(modes.TransmissionMode((1, 1)), gains, budget, policy)
    exact = rates._rate_laplace(gains[0], [], budget, 1e-12)
    err = abs(res.sum_rate - exact) / exact
    engaged = res.method != rates.CLOSED_FORM
    detail = f"method={res.method}" + ("; fallback engaged" if engaged else "")
    return _check("conditioning_fallback", err < 1e-6, err, 1e-6, detail)


_CHECKS = {
    "e1_bracket": _chk_e1_bracket,
    "e1_reference": _chk_e1_reference,
    "pdf_normalization": _chk_pdf_normalization,
    "closed_vs_quadrature": _chk_closed_vs_quadrature,
    "closed_vs_monte_carlo": _chk_closed_vs_monte_carlo,
    "single_user_dominance": _chk_single_user_dominance,
    "candidate_counts": _chk_candidate_counts,
    "conditioning_fallback": _chk_conditioning_fallback,
}


def cmd_validate(cfg: Dict) -> List[Dict]:
    return run_checks(cfg["checks"], int(cfg["seed"]), cfg["tie_perturbation"])


# ---------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--snr", help="SNR grid in dB: '0,10,20' or 'start:step:stop'")
    common.add_argument("--drops", type=int)
    common.add_argument("--realizations", type=int)
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--desk-scale", action="store_true",
                        help=f"divide drops and realizations by {DESK_SCALE}")
    common.add_argument("--workers", type=int)
    common.add_argument("--n-ports", type=int, dest="n_ports")
    common.add_argument("--k-users", type=int, dest="k_users")
    common.add_argument("--no-tie-perturbation", action="store_true",
                        help="disable tie spreading (exercises the conditioning fallback)")

    parser = argparse.ArgumentParser(prog="dasrate",
                                     description="Ergodic sum rates and mode selection for DAS.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("rate-curve", parents=[common], help="per-mode rates at fixed user positions")
    ca = sub.add_parser("cell-average", parents=[common], help="cell-averaged selector curves")
    ca.add_argument("--selector", action="append", choices=list(montecarlo.SELECTORS))
    ca.add_argument("--fixed-mode", action="append", dest="fixed_mode",
                    help="fixed mode as a JSON array, e.g. [1,2]; repeatable")
    sub.add_parser("modes", parents=[common], help="list both candidate sets")
    va = sub.add_parser("validate", parents=[common], help="run numerical self-checks")
    va.add_argument("--checks", help=f"comma-separated subset of {','.join(ALL_CHECKS)}")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args, args.command)
        if args.command == "rate-curve":
            emit(format_table(cmd_rate_curve(cfg), RATE_CURVE_FIELDS, cfg["format"]), cfg["out"])
        elif args.command == "cell-average":
            emit(format_table(cmd_cell_average(cfg), CELL_AVERAGE_FIELDS, cfg["format"]), cfg["out"])
        elif args.command == "modes":
            listing = cmd_modes(cfg)
            if cfg["format"] == "json":
                text = json.dumps(listing, indent=2) + "\n"
            else:
                rows = ([{"candidate_set": "ideal", "mode": json.dumps(m)} for m in listing["ideal"]]
                        + [{"candidate_set": "min_distance", "mode": json.dumps(m)}
                           for m in listing["proposed"]])
                text = format_table(rows, MODES_FIELDS, "csv")
            emit(text, cfg["out"])
            print(f"ideal: {listing['ideal_count']} candidates, "
                  f"min_distance: {listing['proposed_count']} candidates", file=sys.stderr)
        else:
            report = cmd_validate(cfg)
            emit(format_table(report, VALIDATE_FIELDS, cfg["format"]), cfg["out"])
            for r in report:
                print(f"{'PASS' if r['passed'] else 'FAIL'} {r['check']}: {r['detail']}",
                      file=sys.stderr)
            if not all(r["passed"] for r in report):
                return EXIT_VALIDATION
    except (ConfigError, modes.CandidateLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
