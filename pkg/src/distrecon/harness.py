"""Monte Carlo harness: trials, threshold scans, exponent fitting.

Everything is deterministic given (config, master seed): each trial owns
an RNG stream derived from the master seed and its trial index, so the
worker schedule cannot affect results.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .geometry import Tolerance
from .percolation import closure, SimpleGraph
from .reconstruct import run_pipeline, DistanceState
from .simulate import InstanceSpec, RevealPlan, generate, reveal
from . import svgplot


class HarnessError(Exception):
    pass


class ConfigError(HarnessError):
    pass


class Unbracketed(HarnessError):
    """The success curve never crosses one half on the scanned grid."""


def eta(d: int) -> Fraction:
    """Percolation exponent (C(d+3,2) - 2) / (d + 1), as an exact rational."""
    if d < 1:
        raise ValueError("d must be at least 1")
    a = Fraction(comb(d + 3, 2) - 2, (d + 3) - 2)
    b = Fraction(d + 4, 2) - Fraction(1, d + 1)
    assert a == b
    return a


def p_star(n: int, d: int) -> float:
    """(log n / log log n)^(2/eta) * n^(-1/eta), natural logarithms."""
    if n < 3:
        raise ValueError("n must be at least 3")
    e = float(eta(d))
    ln = math.log(n)
    return (ln / math.log(ln)) ** (2.0 / e) * n ** (-1.0 / e)


@dataclass
class TrialReport:
    trial: int
    seed: int
    n: int
    d: int
    p: float
    fraction_pairs_known_after_closure: float
    reconstructible_set_fraction: float
    levels: int
    wall_time: float                  # informational; never serialized
    hidden_pair_inferred: bool | None = None

    CSV_HEADER = "trial,seed,n,d,p,frac_pairs_known,recon_fraction,levels,hidden_pair_inferred"

    def csv_row(self) -> str:
        hp = "" if self.hidden_pair_inferred is None else str(self.hidden_pair_inferred).lower()
        return (f"{self.trial},{self.seed},{self.n},{self.d},{self.p:.10g},"
                f"{self.fraction_pairs_known_after_closure:.10g},"
                f"{self.reconstructible_set_fraction:.10g},{self.levels},{hp}")

    def to_json(self):
        return {
            "trial": self.trial, "seed": self.seed, "n": self.n, "d": self.d,
            "p": self.p,
            "frac_pairs_known": self.fraction_pairs_known_after_closure,
            "recon_fraction": self.reconstructible_set_fraction,
            "levels": self.levels,
            "hidden_pair_inferred": self.hidden_pair_inferred,
        }


def _validate(config, required):
    missing = [k for k in required if k not in config]
    if missing:
        raise ConfigError(f"missing config fields: {', '.join(missing)}")
    if config.get("schema", 1) != 1:
        raise ConfigError(f"unsupported schema version {config.get('schema')!r}")


def _tol_from_config(config) -> Tolerance:
    t = config.get("tol", {})
    return Tolerance(eps_rel=float(t.get("eps_rel", 1e-9)),
                     exact_mode=bool(t.get("exact", False)))


def _derive_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def _run_one_trial(args):
    config, trial = args
    master = int(config["seed"])
    seed = _derive_seed(master, trial)
    spec = InstanceSpec.from_json({**config["instance"], "seed": seed})
    plan = RevealPlan.from_json({**config["reveal"], "seed": _derive_seed(master, trial + 10**9)})
    tol = _tol_from_config(config)
    delta = float(config.get("delta", 0.1))
    t0 = time.perf_counter()
    P = generate(spec)
    rounds = reveal(P, plan)
    hidden = config.get("hide_pair")
    if hidden is not None:
        hu, hv = sorted(int(x) for x in hidden)
        for S in rounds:
            S.dist2.pop((hu, hv), None)
            S.provenance.pop((hu, hv), None)
            S.adj[hu] &= ~(1 << hv)
            S.adj[hv] &= ~(1 << hu)
    surviving, emb, steps, distances, info = run_pipeline(rounds, spec.d, delta, tol)
    wall = time.perf_counter() - t0
    hp_inferred = None
    if hidden is not None:
        hp_inferred = info["provenance"].get((hu, hv)) is not None
    return TrialReport(
        trial=trial, seed=seed, n=spec.n, d=spec.d, p=plan.p,
        fraction_pairs_known_after_closure=info["frac_known_after_first_closure"],
        reconstructible_set_fraction=len(surviving) / spec.n,
        levels=info["levels"], wall_time=wall, hidden_pair_inferred=hp_inferred)


def run_trials(config, threads: int = 1):
    """One TrialReport per trial; trial i's RNG derives from (seed, i)."""
    _validate(config, ["instance", "reveal", "trials", "seed"])
    trials = int(config["trials"])
    jobs = [(config, t) for t in range(trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(_run_one_trial, jobs))
    else:
        reports = [_run_one_trial(j) for j in jobs]
    reports.sort(key=lambda r: r.trial)
    return reports


@dataclass
class ScanResult:
    clique_size: int
    n_values: list
    p_grid: dict                       # n -> list of p
    success: dict                      # (n, p) -> fraction
    trials: int
    p_c: dict                          # n -> p_c or None
    slope: float | None
    slope_stderr: float | None
    unbracketed: list = field(default_factory=list)

    def csv(self) -> str:
        lines = ["n,p,trials,success_fraction,stderr"]
        for n in self.n_values:
            for p in self.p_grid[n]:
                f = self.success[(n, p)]
                se = math.sqrt(f * (1.0 - f) / self.trials)
                lines.append(f"{n},{p:.10g},{self.trials},{f:.10g},{se:.10g}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {
            "clique_size": self.clique_size,
            "n_values": self.n_values,
            "curves": [{"n": n, "p": list(self.p_grid[n]),
                        "success": [self.success[(n, p)] for p in self.p_grid[n]]}
                       for n in self.n_values],
            "trials": self.trials,
            "p_c": {str(n): self.p_c[n] for n in self.n_values},
            "slope": self.slope,
            "slope_stderr": self.slope_stderr,
            "unbracketed": self.unbracketed,
        }


def _trial_min_percolating_index(n, p_grid, clique_size, seed, trial):
    """Smallest grid index whose graph percolates, via shared-seed coupling.

    One uniform per pair serves every p; outcomes are monotone in p, so a
    binary search over the sorted grid is exact.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, n, trial]))
    iu, ju = np.triu_indices(n, k=1)
    U = rng.random(iu.size)

    def percolates(p):
        mask = U < p
        g = SimpleGraph(n=n, edges=frozenset(
            (int(a), int(b)) for a, b in zip(iu[mask], ju[mask])))
        return closure(g, clique_size).is_complete()

    lo, hi = 0, len(p_grid)       # invariant: percolates for all >= hi, none < lo
    if not percolates(p_grid[-1]):
        return len(p_grid)
    hi = len(p_grid) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if percolates(p_grid[mid]):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _scan_worker(args):
    n, p_grid, clique_size, seed, trial = args
    return n, _trial_min_percolating_index(n, tuple(p_grid), clique_size, seed, trial)


def scan_threshold(config, threads: int = 1) -> ScanResult:
    """Percolation probability curves over (n, p) and the p_c exponent fit.

    p_c(n) is interpolated linearly in log p at the one-half crossing; the
    slope of log p_c against log n comes from least squares.
    """
    _validate(config, ["n_values", "trials", "seed"])
    n_values = [int(n) for n in config["n_values"]]
    if len(n_values) < 3:
        raise ConfigError("need at least 3 values of n")
    clique_size = int(config.get("clique_size", 4))
    trials = int(config["trials"])
    seed = int(config["seed"])
    grid_cfg = config.get("p_grid", {"kind": "relative", "lo": 0.15, "hi": 0.6, "count": 8,
                                     "exponent": -1.0 / float(eta(clique_size - 3))})
    p_grid = {}
    for n in n_values:
        if isinstance(grid_cfg, list):
            ps = [float(p) for p in grid_cfg]
        elif grid_cfg.get("kind") == "relative":
            expo = float(grid_cfg.get("exponent", -1.0 / float(eta(clique_size - 3))))
            lo, hi, count = float(grid_cfg["lo"]), float(grid_cfg["hi"]), int(grid_cfg["count"])
            ratio = (hi / lo) ** (1.0 / (count - 1))
            ps = [lo * ratio ** i * n ** expo for i in range(count)]
        else:
            raise ConfigError("p_grid must be a list or a relative grid spec")
        p_grid[n] = sorted(ps)

    jobs = [(n, p_grid[n], clique_size, seed, t) for n in n_values for t in range(trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_scan_worker, jobs, chunksize=8))
    else:
        outcomes = [_scan_worker(j) for j in jobs]

    success = {}
    counts = {n: [0] * len(p_grid[n]) for n in n_values}
    for n, idx in outcomes:
        for i in range(idx, len(p_grid[n])):
            counts[n][i] += 1
    for n in n_values:
        for i, p in enumerate(p_grid[n]):
            success[(n, p)] = counts[n][i] / trials

    p_c = {}
    unbracketed = []
    for n in n_values:
        ps = p_grid[n]
        fs = [success[(n, p)] for p in ps]
        pc = None
        for i in range(len(ps) - 1):
            if fs[i] < 0.5 <= fs[i + 1]:
                t = (0.5 - fs[i]) / (fs[i + 1] - fs[i])
                pc = math.exp(math.log(ps[i]) + t * (math.log(ps[i + 1]) - math.log(ps[i])))
                break
        if pc is None and fs and fs[0] >= 0.5:
            unbracketed.append(n)
        elif pc is None:
            unbracketed.append(n)
        p_c[n] = pc

    slope = stderr = None
    fitted = [(n, p_c[n]) for n in n_values if p_c[n] is not None]
    if len(fitted) >= 2:
        x = np.log([n for n, _ in fitted])
        y = np.log([pc for _, pc in fitted])
        A = np.vstack([x, np.ones_like(x)]).T
        coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
        slope = float(coef[0])
        if len(fitted) > 2:
            rss = float(res[0]) if res.size else float(np.sum((A @ coef - y) ** 2))
            sxx = float(np.sum((x - x.mean()) ** 2))
            stderr = math.sqrt(rss / (len(fitted) - 2) / sxx)
        else:
            stderr = float("inf")
    return ScanResult(clique_size=clique_size, n_values=n_values, p_grid=p_grid,
                      success=success, trials=trials, p_c=p_c, slope=slope,
                      slope_stderr=stderr, unbracketed=unbracketed)


def emit(results, fmt: str, path):
    """Write trial or scan results as csv, json, or svg."""
    path = str(path)
    try:
        if isinstance(results, ScanResult):
            text = _emit_scan(results, fmt)
        else:
            text = _emit_trials(list(results), fmt)
        with open(path, "w") as f:
            f.write(text)
    except OSError as exc:
        raise HarnessError(f"cannot write {path}: {exc}") from exc


def _emit_scan(r: ScanResult, fmt: str) -> str:
    if fmt == "csv":
        return r.csv()
    if fmt == "json":
        return json.dumps(r.to_json(), indent=2, sort_keys=True) + "\n"
    if fmt == "svg":
        curves = [(f"n={n}", [(p, r.success[(n, p)]) for p in r.p_grid[n]])
                  for n in r.n_values]
        ann = []
        if r.slope is not None:
            se = "inf" if r.slope_stderr in (None, float("inf")) else f"{r.slope_stderr:.3f}"
            ann.append(f"log-log slope of p_c: {r.slope:.3f} (se {se})")
        return svgplot.line_plot(curves, title=f"K_{r.clique_size}-percolation probability",
                                 xlabel="p", ylabel="fraction percolating",
                                 logx=True, annotations=ann)
    raise ValueError(f"unknown format {fmt!r}")


def _emit_trials(reports, fmt: str) -> str:
    if fmt == "csv":
        lines = [TrialReport.CSV_HEADER] + [r.csv_row() for r in reports]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps([r.to_json() for r in reports], indent=2, sort_keys=True) + "\n"
    if fmt == "svg":
        if not reports:
            raise ValueError("no data to plot")
        pts = [(r.trial, r.reconstructible_set_fraction) for r in reports]
        return svgplot.line_plot([("recon fraction", pts)], title="Reconstructible fraction",
                                 xlabel="trial", ylabel="fraction")
    raise ValueError(f"unknown format {fmt!r}")
