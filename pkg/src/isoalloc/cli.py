"""Command-line entry point: ``isoalloc {allocate, sector-scan, irmv-region, validate}``.

Exit codes: 0 success, 1 a validation check failed, 2 parse/config/input error.
Errors are reported on stderr as a single ``CODE: message`` line.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import allocators, irmv_solver, market_model, sector_tf
from .linalg_core import NotPositiveDefiniteError

EXIT_OK, EXIT_CHECK, EXIT_INPUT = 0, 1, 2
MASK64 = (1 << 64) - 1


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def splitmix64(master_seed: int, index: int) -> int:
    """Per-cell seed: one splitmix64 step from ``master_seed + (index + 1) * golden``."""
    z = (master_seed + (index + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows, comment: str | None = None):
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_matrix(path: Path, a: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(a):
            w.writerow([fmt(v) for v in row])


def read_matrix(path: Path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        a = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except FileNotFoundError:
        raise CliError("E_PARSE", f"file not found: {path}") from None
    except ValueError as exc:
        raise CliError("E_PARSE", f"malformed CSV {path}: {exc}") from None
    if a.ndim != 2 or a.size == 0 or not np.all(np.isfinite(a)):
        raise CliError("E_PARSE", f"malformed CSV {path}: expected a rectangular finite numeric table")
    return a


def load_config(path: str | None) -> tuple[dict, Path]:
    if path is None:
        return {}, Path.cwd()
    p = Path(path)
    try:
        cfg = json.loads(p.read_text())
    except FileNotFoundError:
        raise CliError("E_PARSE", f"config not found: {p}") from None
    except json.JSONDecodeError as exc:
        raise CliError("E_PARSE", f"invalid JSON in {p}: {exc}") from None
    if not isinstance(cfg, dict):
        raise CliError("E_CONFIG", "config must be a JSON object")
    return cfg, p.parent


def take(cfg: dict, spec: dict) -> dict:
    """Merge config with defaults; reject unknown keys and coerce types."""
    unknown = sorted(set(cfg) - set(spec))
    if unknown:
        raise CliError("E_CONFIG", f"unknown config key(s): {', '.join(unknown)}")
    out = {}
    for key, (kind, default) in spec.items():
        val = cfg.get(key, default)
        if val is None:
            out[key] = None
            continue
        try:
            if kind is float:
                val = float(val)
                if not math.isfinite(val):
                    raise ValueError
            elif kind is int:
                if float(val) != int(val):
                    raise ValueError
                val = int(val)
            elif kind is bool:
                if not isinstance(val, bool):
                    raise ValueError
            elif kind is str:
                if not isinstance(val, str):
                    raise ValueError
            elif kind is list:
                if not isinstance(val, list):
                    raise ValueError
            elif kind == "grid":
                if not isinstance(val, (str, list)):
                    raise ValueError
        except (TypeError, ValueError):
            raise CliError("E_CONFIG", f"config key {key!r} has invalid value {val!r}") from None
        out[key] = val
    return out


def parse_grid(spec) -> np.ndarray:
    """Grid from ``start:stop:step`` (inclusive), ``geom:start:stop:count`` or ``a,b,c``."""
    if isinstance(spec, list):
        vals = spec
    else:
        spec = str(spec).strip()
        try:
            if spec.startswith("geom:"):
                _, a, b, k = spec.split(":")
                a, b, k = float(a), float(b), int(k)
                if a <= 0 or b <= 0 or k < 1:
                    raise ValueError
                vals = np.geomspace(a, b, k)
            elif ":" in spec:
                a, b, h = (float(x) for x in spec.split(":"))
                if h <= 0 or b < a:
                    raise ValueError
                k = int(math.floor((b - a) / h + 1e-9))
                vals = np.round(a + h * np.arange(k + 1), 12)
            else:
                vals = [float(x) for x in spec.split(",") if x.strip()]
        except ValueError:
            raise CliError("E_CONFIG", f"invalid grid spec {spec!r}") from None
    try:
        arr = np.asarray(vals, dtype=float)
    except (TypeError, ValueError):
        raise CliError("E_CONFIG", f"invalid grid {spec!r}") from None
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise CliError("E_CONFIG", f"invalid grid {spec!r}")
    return arr


def pmap(fn, items, jobs: int):
    """Ordered map, in worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


# allocate --------------------------------------------------------------------

ALLOCATE_KEYS = {
    "omega": (str, "omega.csv"),
    "xi": (str, "xi.csv"),
    "pi": (str, "pi.csv"),
    "scheme": (str, "mean_variance"),
    "sigma": (float, None),
    "eta": (float, None),
    "tau": (float, None),
    "m_map": (str, None),
    "truncate": (bool, False),
}


def load_triple(cfg: dict, base: Path) -> market_model.CovarianceTriple:
    mats = [read_matrix(base / cfg[k]) for k in ("omega", "xi", "pi")]
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", market_model.PredictabilityWarning)
            triple = market_model.CovarianceTriple(*mats)
    except (ValueError, NotPositiveDefiniteError) as exc:
        raise CliError("E_INVARIANT", str(exc)) from None
    for w in caught:
        print(f"W_PREDICTABILITY: {w.message}", file=sys.stderr)
    return triple


def cmd_allocate(args) -> int:
    raw, base = load_config(args.config)
    cfg = take(raw, ALLOCATE_KEYS)
    if cfg["sigma"] is None or cfg["sigma"] <= 0:
        raise CliError("E_CONFIG", "config key 'sigma' is required and must be positive")
    triple = load_triple(cfg, base)
    name = cfg["scheme"]
    kwargs = {}
    if name == "irmv":
        if cfg["eta"] is None or cfg["tau"] is None:
            raise CliError("E_CONFIG", "scheme 'irmv' needs 'eta' and 'tau'")
        kwargs = {"eta": cfg["eta"], "tau": cfg["tau"]}
    elif name == "isotropy_enforced":
        if cfg["m_map"] is None:
            raise CliError("E_CONFIG", "scheme 'isotropy_enforced' needs 'm_map'")
        kwargs = {"m_map": read_matrix(base / cfg["m_map"])}
    elif name == "isotropic_mean":
        kwargs = {"truncate": cfg["truncate"]}
    try:
        scheme = allocators.make_scheme(name, **kwargs)
        if name == "irmv":
            irmv_solver.IrmvConfig(scheme.eta, scheme.tau, cfg["sigma"])
    except ValueError as exc:
        raise CliError("E_CONFIG", str(exc)) from None
    try:
        l = allocators.allocate(scheme, triple, cfg["sigma"])
    except (ValueError, irmv_solver.ConvergenceError) as exc:
        raise CliError("E_INVARIANT", str(exc)) from None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "allocation.csv", l)

    dec = allocators.canonical_decomposition(triple)
    n, sigma = triple.n, cfg["sigma"]
    # theta_k: coefficient of the unit-risk canonical operator L_k, in units of sigma/sqrt(n)
    theta = [np.sqrt(n) / sigma * float(np.sum((triple.xi @ lk @ triple.omega) * l))
             for lk in dec.portfolio_operators]
    write_csv(out / "modes.csv", ["mode", "singular_value", "theta"],
              [(k, dec.singular_values[k], theta[k]) for k in range(n)])

    rep = market_model.isotropy_report(l, triple, eta=cfg["eta"] if cfg["eta"] is not None else 1.0)
    summary = {
        "scheme": name,
        "sigma": sigma,
        "n": n,
        "m": triple.m,
        "expected_pnl": market_model.expected_pnl(l, triple),
        "variance_approx": market_model.pnl_variance(l, triple, "approx"),
        "variance_full": market_model.pnl_variance(l, triple, "full"),
        "sharpe": market_model.sharpe(l, triple),
        "anisotropy": rep.anisotropy,
        "participation_ratio": rep.participation_ratio,
        "effective_rank": rep.effective_rank,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out / 'allocation.csv'}, {out / 'modes.csv'}, {out / 'summary.json'}")
    return EXIT_OK


# sector-scan -----------------------------------------------------------------

SECTOR_KEYS = {
    "n": (int, 10),
    "beta0": (float, 0.1),
    "p": (float, 0.99),
    "q": (float, 0.99),
    "eta": (float, 1.0),
    "tau": (float, 1.0),
    "sigma_eps": (float, 3.0),
    "grid": ("grid", "0:0.9:0.05"),
    "figures": (list, None),
    "n_values": (list, [2, 5, 10, 20, 50, 100, 150, 200]),
    "n_pairs": (list, [[0.1, 0.2], [0.1, 0.8], [0.3, 0.7], [0.5, 0.5]]),
}

SK = sector_tf.StrategyKind


def _per_asset(kind, p):
    return sector_tf.strategy_sharpe(kind, p) / math.sqrt(p.n)


def _lam1(kind, p):
    return sector_tf.eigen_weights(kind, p).lambda1


FIGURES = {
    "TFsharpe": ("annualized Sharpe per asset, conventional trend following",
                 lambda p, irmv, se: sector_tf.conventional_tf_sharpe(p) / math.sqrt(p.n)),
    "LeadLag0": ("lead-lag ratio, isotropic mean",
                 lambda p, irmv, se: sector_tf.lead_lag_ratio(sector_tf.eigen_weights(SK.ISOTROPIC_MEAN, p))),
    "LeadLag1": ("lead-lag ratio, closed-form mean-variance",
                 lambda p, irmv, se: sector_tf.lead_lag_ratio(sector_tf.eigen_weights(SK.CLOSED_FORM_MV, p))),
    "Sharpes0": ("annualized Sharpe per asset, isotropic mean",
                 lambda p, irmv, se: _per_asset(SK.ISOTROPIC_MEAN, p)),
    "Sharpes1": ("annualized Sharpe per asset, closed-form mean-variance",
                 lambda p, irmv, se: _per_asset(SK.CLOSED_FORM_MV, p)),
    "DiffSharpes": ("Sharpe per asset, mean-variance minus isotropic mean",
                    lambda p, irmv, se: _per_asset(SK.CLOSED_FORM_MV, p) - _per_asset(SK.ISOTROPIC_MEAN, p)),
    "RatioFirstEigenmode": ("log2 of market-mode weight, mean-variance over isotropic mean",
                            lambda p, irmv, se: math.log2(_lam1(SK.CLOSED_FORM_MV, p) / _lam1(SK.ISOTROPIC_MEAN, p))),
    "IsoIsotropy": ("1/psi - 1 of the canonical spectrum (mean-variance anisotropy)",
                    lambda p, irmv, se: sector_tf.mv_anisotropy(p)),
    "IsoLeadLag": ("lead-lag ratio, isotropy-regularized mean-variance",
                   lambda p, irmv, se: sector_tf.lead_lag_ratio(sector_tf.eigen_weights(irmv, p))),
    "IsoRatioFirstEigenmode": ("log2 of market-mode weight, mean-variance over regularized",
                               lambda p, irmv, se: math.log2(_lam1(SK.CLOSED_FORM_MV, p) / _lam1(irmv, p))),
    "IsoDiffSharpes": ("Sharpe per asset, mean-variance minus regularized",
                       lambda p, irmv, se: _per_asset(SK.CLOSED_FORM_MV, p) - _per_asset(irmv, p)),
    "VarianceTerms": ("second variance term over first, closed-form mean-variance",
                      lambda p, irmv, se: sector_tf.second_variance_ratio(p)),
    "ratiolambdas": ("closed-form over exact mean-variance eigenvalue, modes 1 and 2",
                     lambda p, irmv, se: sector_tf.eigenmode_ratios(p)),
    "CrashStress": ("PnL per unit average signal under r = -sigma_eps 1, mean-variance and isotropic mean",
                    lambda p, irmv, se: (-p.n * se * _lam1(SK.CLOSED_FORM_MV, p),
                                         -p.n * se * _lam1(SK.ISOTROPIC_MEAN, p))),
}
FIGURE_ORDER = list(FIGURES) + ["Shapes_n"]


def _sector_cell(job):
    fig, base_kw, re, rx, eta, tau, se = job
    p = sector_tf.SectorParams(**{**base_kw, "rho_eps": re, "rho_xi": rx})
    val = FIGURES[fig][1](p, sector_tf.IrmvRegularized(eta, tau), se)
    return val if isinstance(val, tuple) else (val,)


def _shapes_cell(job):
    base_kw, re, rx, n = job
    p = sector_tf.SectorParams(**{**base_kw, "n": n, "rho_eps": re, "rho_xi": rx})
    return _per_asset(SK.CLOSED_FORM_MV, p), _per_asset(SK.ISOTROPIC_MEAN, p)


def cmd_sector_scan(args) -> int:
    raw, _ = load_config(args.config)
    cfg = take(raw, SECTOR_KEYS)
    grid = parse_grid(args.grid if args.grid is not None else cfg["grid"])
    figures = cfg["figures"] or FIGURE_ORDER
    bad = [f for f in figures if f not in FIGURE_ORDER]
    if bad:
        raise CliError("E_CONFIG", f"unknown figure(s): {', '.join(map(str, bad))}")
    base_kw = {k: cfg[k] for k in ("n", "beta0", "p", "q")}
    try:
        base = sector_tf.SectorParams(**base_kw)
        irmv_solver.IrmvConfig(cfg["eta"], cfg["tau"])
        for r in grid:
            sector_tf.SectorParams(**{**base_kw, "rho_eps": r, "rho_xi": r})
        if base.beta0 <= 0:
            raise ValueError("beta0 must be positive for a scan")
        for pair in cfg["n_pairs"]:
            re, rx = (float(v) for v in pair)
            if not (0 < re < 1 and 0 < rx < 1):
                raise ValueError(f"n_pairs entry {pair} must lie in (0, 1)")
        n_values = [int(v) for v in cfg["n_values"]]
        if any(v < 1 for v in n_values):
            raise ValueError("n_values must be positive")
    except (ValueError, TypeError, NotPositiveDefiniteError) as exc:
        raise CliError("E_CONFIG", str(exc)) from None

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cells = [(re, rx) for re in grid for rx in grid]
    s1 = sector_tf.single_asset_sharpe(base)
    write_csv(out / "single_asset.csv", ["quantity", "value"],
              [("Q", base.Q), ("R", base.R), ("S1", s1)], comment="SingleAsset: calibration constants")
    for fig in figures:
        if fig == "Shapes_n":
            jobs = [(base_kw, float(re), float(rx), n) for re, rx in cfg["n_pairs"] for n in n_values]
            vals = pmap(_shapes_cell, jobs, args.jobs)
            rows = [(j[1], j[2], j[3], v[0], v[1]) for j, v in zip(jobs, vals)]
            write_csv(out / "Shapes_n.csv", ["rho_eps", "rho_xi", "n", "value_mv", "value_im"], rows,
                      comment="Shapes_n: annualized Sharpe per asset against n")
            continue
        jobs = [(fig, base_kw, re, rx, cfg["eta"], cfg["tau"], cfg["sigma_eps"]) for re, rx in cells]
        try:
            vals = pmap(_sector_cell, jobs, args.jobs)
        except (ValueError, irmv_solver.ConvergenceError) as exc:
            raise CliError("E_CONFIG", f"{fig}: {exc}") from None
        width = len(vals[0])
        header = ["rho_eps", "rho_xi"] + (["value"] if width == 1 else [f"value_{i + 1}" for i in range(width)])
        rows = [(re, rx, *v) for (re, rx), v in zip(cells, vals)]
        write_csv(out / f"{fig}.csv", header, rows, comment=f"{fig}: {FIGURES[fig][0]}")
    print(f"S1 = {fmt(s1)}; wrote {len(figures)} figure file(s) to {out}")
    return EXIT_OK


# irmv-region -----------------------------------------------------------------

REGION_KEYS = {
    "n": (int, 10),
    "m": (int, 3),
    "c_max": (float, 1.0),
    "c_min": (float, 0.0),
    "psi_ratio": (float, 0.3),
    "eta_grid": ("grid", "0:1:0.1"),
    "tau_grid": ("grid", "geom:0.001:10:25"),
    "spectra": (list, ["two_mode", "exponential"]),
}


def _region_cell(job):
    name, spectrum, eta, tau = job
    sol = irmv_solver.solve_irmv(spectrum, irmv_solver.IrmvConfig(eta, tau))
    return (name, eta, tau, sol.region.value, float(sol.theta.max()), float(sol.theta.min()), sol.variance,
            sol.anisotropy(eta), irmv_solver.theta_sharpe(sol.theta, spectrum), sol.gamma, sol.lam)


def cmd_irmv_region(args) -> int:
    raw, _ = load_config(args.config)
    cfg = take(raw, REGION_KEYS)
    etas = parse_grid(cfg["eta_grid"])
    taus = parse_grid(args.grid if args.grid is not None else cfg["tau_grid"])
    n, m = cfg["n"], cfg["m"]
    if not 0 < m < n:
        raise CliError("E_CONFIG", "need 0 < m < n")
    if np.any(etas < 0) or np.any(etas > 1) or np.any(taus <= 0):
        raise CliError("E_CONFIG", "eta must lie in [0, 1] and tau must be positive")
    if not (cfg["c_max"] > 0 and 0 <= cfg["c_min"] <= cfg["c_max"]) or cfg["psi_ratio"] <= 0:
        raise CliError("E_CONFIG", "need c_max > 0, 0 <= c_min <= c_max and psi_ratio > 0")
    spectra = {
        "two_mode": irmv_solver.two_mode_spectrum(n, m, cfg["c_max"], cfg["c_min"]),
        "exponential": irmv_solver.exponential_spectrum(n, cfg["psi_ratio"]),
    }
    bad = [s for s in cfg["spectra"] if s not in spectra]
    if bad:
        raise CliError("E_CONFIG", f"unknown spectrum name(s): {bad}")
    jobs = [(s, spectra[s], float(e), float(t)) for s in cfg["spectra"] for e in etas for t in taus]
    rows = pmap(_region_cell, jobs, args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["spectrum", "eta", "tau", "region", "theta_max", "theta_min", "variance", "anisotropy",
              "sharpe", "gamma", "lambda"]
    write_csv(out / "irmv_region.csv", header, rows, comment="Regions: constraint activity over (eta, tau)")
    ref = []
    for s in cfg["spectra"]:
        psi = spectra[s]
        ref.append((s, irmv_solver.theta_sharpe(np.sqrt(n) * psi, psi),
                    irmv_solver.theta_sharpe(np.ones(n), psi), float(np.sum(psi**2) ** 2 / (n * np.sum(psi**4)))))
    write_csv(out / "irmv_reference.csv", ["spectrum", "sharpe_mv", "sharpe_im", "participation_ratio"], ref,
              comment="limit Sharpes of each spectrum")
    print(f"wrote {len(rows)} rows to {out / 'irmv_region.csv'}")
    return EXIT_OK


# validate --------------------------------------------------------------------

VALIDATE_KEYS = {
    "n": (int, 1),
    "beta0": (float, 0.1),
    "p": (float, 0.99),
    "q": (float, 0.99),
    "rho_eps": (float, 0.0),
    "rho_xi": (float, 0.0),
    "horizon": (int, 100_000),
    "n_batches": (int, 100),
    "z_max": (float, 3.0),
    "strategies": (list, ["ConventionalTF", "IsotropicMean"]),
    "triple": (str, None),
    "mc_samples": (int, 200_000),
}


def _moment_job(job):
    params_kw, horizon, seed, n_batches = job
    return sector_tf.moment_checks(sector_tf.SectorParams(**params_kw), horizon, seed, n_batches)


def _sharpe_job(job):
    name, params_kw, horizon, seed = job
    p = sector_tf.SectorParams(**params_kw)
    kind = SK(name)
    value, se = sector_tf.empirical_strategy_sharpe(kind, p, horizon, seed, return_stderr=True)
    return [sector_tf.MomentCheck(f"sharpe[{name}]", value, sector_tf.strategy_sharpe(kind, p), se)]


def _wick_checks(triple, samples, seed):
    l = allocators.mean_variance(triple, 1.0)
    mc = market_model.monte_carlo_pnl(l, triple, samples, seed)
    return [
        sector_tf.MomentCheck("wick[mean]", mc.mean, market_model.expected_pnl(l, triple), mc.mean_se),
        sector_tf.MomentCheck("wick[variance]", mc.variance, market_model.pnl_variance(l, triple, "full"),
                              mc.variance_se),
    ]


def cmd_validate(args) -> int:
    raw, base = load_config(args.config)
    cfg = take(raw, VALIDATE_KEYS)
    params_kw = {k: cfg[k] for k in ("n", "beta0", "p", "q", "rho_eps", "rho_xi")}
    try:
        params = sector_tf.SectorParams(**params_kw)
        kinds = [SK(s) for s in cfg["strategies"]]
    except (ValueError, NotPositiveDefiniteError) as exc:
        raise CliError("E_CONFIG", str(exc)) from None
    if cfg["horizon"] < 2 * cfg["n_batches"] or cfg["n_batches"] < 2:
        raise CliError("E_CONFIG", "horizon must be at least twice n_batches, and n_batches >= 2")

    seed = args.seed
    checks = []
    if cfg["triple"] is not None:
        traw, tbase = load_config(str(base / cfg["triple"]))
        triple = load_triple(take(traw, {k: ALLOCATE_KEYS[k] for k in ("omega", "xi", "pi")}), tbase)
        try:
            checks += _wick_checks(triple, cfg["mc_samples"], splitmix64(seed, 0))
        except market_model.InconsistentTripleError as exc:
            raise CliError("E_INVARIANT", str(exc)) from None
    jobs_m = [(params_kw, cfg["horizon"], splitmix64(seed, 1), cfg["n_batches"])]
    jobs_s = [] if params.beta0 == 0 else [
        (k.value, params_kw, cfg["horizon"], splitmix64(seed, 2 + i)) for i, k in enumerate(kinds)]
    results = pmap(_moment_job, jobs_m, 1) + pmap(_sharpe_job, jobs_s, args.jobs)
    for r in results:
        checks += r

    rows = []
    failed = 0
    for c in checks:
        ok = abs(c.z) <= cfg["z_max"]
        failed += not ok
        rows.append((c.name, c.measured, c.analytic, c.stderr, c.z, "PASS" if ok else "FAIL"))
        print(f"{'PASS' if ok else 'FAIL'} {c.name} measured={fmt(c.measured)} analytic={fmt(c.analytic)} "
              f"stderr={fmt(c.stderr)} z={c.z:+.3f}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "validate.csv", ["check", "measured", "analytic", "stderr", "z", "status"], rows)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


# entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="isoalloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("allocate", cmd_allocate, "allocation for a covariance triple given by CSV files and a JSON manifest"),
        ("sector-scan", cmd_sector_scan, "sector trend-following parameter scans as CSV"),
        ("irmv-region", cmd_irmv_region, "IRMV constraint regions over an (eta, tau) grid"),
        ("validate", cmd_validate, "Monte Carlo checks of the analytic moments and Sharpes"),
    ]
    for name, fn, help_ in specs:
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", default=None, help="JSON config/manifest path")
        p.add_argument("--out", default=None if name == "validate" else ".", help="output directory")
        p.add_argument("--seed", type=int, default=42, help="master seed (u64)")
        p.add_argument("--grid", default=None, help="grid spec: start:stop:step, geom:start:stop:count or a,b,c")
        p.add_argument("--jobs", type=int, default=1, help="worker processes")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    if not 0 <= args.seed <= MASK64:
        print("E_CONFIG: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    if args.jobs < 1:
        print("E_CONFIG: --jobs must be positive", file=sys.stderr)
        return EXIT_INPUT
    if args.command == "allocate" and args.config is None:
        print("E_CONFIG: allocate requires --config", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except CliError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
