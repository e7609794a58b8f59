"""Simulation study: SA vs AA vs interweaving over a grid of panel shapes.

Seeds are derived with ``numpy.random.SeedSequence(base_seed,
spawn_key=(N, T, pattern, replication, stream))`` where stream 0 draws the
dataset and stream ``1 + scheme.code`` drives that scheme's chain.  Adding
configurations therefore never perturbs existing ones.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .diagnostics import acf, mcse_batch_means
from .model import ModelSpec, generate_synthetic
from .samplers import Scheme, run_mu_chain
from .theory import rate_report

__all__ = [
    "PatternParameters",
    "pattern_parameters",
    "ExperimentGrid",
    "TableRow",
    "GridResult",
    "run_grid",
    "run_configuration",
    "write_grid_outputs",
    "load_grid_config",
    "PUBLISHED_MCSE",
]

MCSE_SCALE = 1e5

# Published SA / AA / ASIS values (x1e-5), keyed by (N, T) then pattern.
PUBLISHED_MCSE = {
    (10, 10): {1: (2.980, 6.178, 2.427), 2: (56.286, 17.057, 13.716), 3: (9.644, 14.399, 6.697)},
    (10, 100): {1: (3.255, 8.587, 2.877), 2: (53.828, 17.665, 13.781), 3: (9.221, 13.949, 6.589)},
    (500, 10): {1: (0.600, 2.279, 0.567), 2: (10.496, 1.753, 1.722), 3: (1.192, 1.126, 0.738)},
    (500, 100): {1: (0.618, 2.379, 0.585), 2: (8.815, 1.813, 1.733), 3: (1.169, 1.168, 0.744)},
}


@dataclass(frozen=True)
class PatternParameters:
    sigma_eps_sq: float
    sigma_alpha_sq: float

    @property
    def sigma_eps(self) -> float:
        return math.sqrt(self.sigma_eps_sq)

    @property
    def sigma_alpha(self) -> float:
        return math.sqrt(self.sigma_alpha_sq)


def pattern_parameters(pattern_id: int, T: int) -> PatternParameters:
    """Noise and heterogeneity variances for the three comparison patterns.

    Pattern 1: sigma_eps^2 = T/10 (SA favoured), Pattern 2: 10 T (AA favoured),
    Pattern 3: T (boundary).  With sigma_alpha = 1 this reproduces the
    published settings for T = 10 and T = 100.
    """
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    factor = {1: T / 10, 2: 10.0 * T, 3: float(T)}
    try:
        return PatternParameters(sigma_eps_sq=factor[int(pattern_id)], sigma_alpha_sq=1.0)
    except KeyError:
        raise ValueError(f"unknown pattern id {pattern_id!r}; expected 1, 2 or 3") from None


def _default_sizes():
    return [(10, 10), (10, 100), (500, 10), (500, 100)]


@dataclass
class ExperimentGrid:
    panel_sizes: list[tuple[int, int]] = field(default_factory=_default_sizes)
    patterns: list[int] = field(default_factory=lambda: [1, 2, 3])
    iterations: int = 10_000
    burn_in: int = 1_000
    replications: int = 100
    base_seed: int = 0
    schemes: list[Scheme] = field(default_factory=lambda: [Scheme.SA, Scheme.AA, Scheme.ASIS_SA_AA])
    mu_true: float = 0.0
    phi_alpha: float = 0.0
    tau_alpha_sq: float = 100.0
    shared_dataset: bool = False
    max_lag: int = 50

    def __post_init__(self):
        self.panel_sizes = [(int(n), int(t)) for n, t in self.panel_sizes]
        self.patterns = [int(p) for p in self.patterns]
        self.schemes = [Scheme(s) for s in self.schemes]
        if self.iterations < 1 or self.replications < 1:
            raise ValueError("iterations and replications must be positive")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if any(n < 1 or t < 1 for n, t in self.panel_sizes):
            raise ValueError("panel sizes must be positive")
        for p in self.patterns:
            pattern_parameters(p, 10)

    def spec_for(self, pattern: int, T: int) -> ModelSpec:
        pp = pattern_parameters(pattern, T)
        return ModelSpec(pp.sigma_eps_sq, pp.sigma_alpha_sq, self.phi_alpha, self.tau_alpha_sq)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schemes"] = [s.value for s in self.schemes]
        d["panel_sizes"] = [list(p) for p in self.panel_sizes]
        return d


@dataclass(frozen=True)
class TableRow:
    N: int
    T: int
    pattern: int
    scheme: Scheme
    mean_mcse: float
    n_replications: int
    mean_lag1_acf: float
    rho_exact: float | None
    mean_posterior_sd: float
    n_draws: int = 0

    @property
    def mcse_scaled(self) -> float:
        return self.mean_mcse * MCSE_SCALE

    @property
    def mcse_per_root_draw_scaled(self) -> float:
        """Mean MCSE divided once more by sqrt(draws), times 1e5.

        The published table magnitudes sit close to this normalisation rather
        than to the standard error itself; see README.
        """
        return self.mcse_scaled / math.sqrt(self.n_draws) if self.n_draws else float("nan")

    @property
    def key(self):
        return (self.N, self.T, self.pattern, self.scheme.code)


@dataclass
class GridResult:
    grid: ExperimentGrid
    rows: list[TableRow]
    acf_curves: dict[tuple[int, int, int, Scheme], np.ndarray]

    def row(self, N, T, pattern, scheme) -> TableRow:
        scheme = Scheme(scheme)
        for r in self.rows:
            if (r.N, r.T, r.pattern, r.scheme) == (N, T, pattern, scheme):
                return r
        raise KeyError((N, T, pattern, scheme))


def _seed(base_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(base_seed, spawn_key=tuple(int(k) for k in key))


def _replication(args):
    grid, N, T, pattern, rep = args
    spec = grid.spec_for(pattern, T)
    data_rep = 0 if grid.shared_dataset else rep
    data = generate_synthetic(spec, grid.mu_true, N, T, _seed(grid.base_seed, N, T, pattern, data_rep, 0))
    out = {}
    for scheme in grid.schemes:
        rng = np.random.default_rng(_seed(grid.base_seed, N, T, pattern, rep, 1 + scheme.code))
        kept = run_mu_chain(scheme, data, spec, grid.iterations, rng)[grid.burn_in:]
        out[scheme] = (mcse_batch_means(kept), acf(kept, grid.max_lag), float(kept.std(ddof=1)))
    return (N, T, pattern, rep), out


def run_configuration(grid: ExperimentGrid, N: int, T: int, pattern: int, pool=None):
    """Run every replication of one (N, T, pattern) cell."""
    tasks = [(grid, N, T, pattern, rep) for rep in range(grid.replications)]
    try:
        results = list(pool.map(_replication, tasks, chunksize=4) if pool else map(_replication, tasks))
    except Exception as exc:
        raise RuntimeError(f"configuration N={N}, T={T}, pattern={pattern} failed: {exc}") from exc
    return _aggregate(grid, N, T, pattern, results)


def _aggregate(grid, N, T, pattern, results):
    results = sorted(results, key=lambda kv: kv[0])
    spec = grid.spec_for(pattern, T)
    report = rate_report(spec, N, T)
    rows, curves = [], {}
    for scheme in grid.schemes:
        mcse = np.array([res[scheme][0] for _, res in results])
        acfs = np.array([res[scheme][1] for _, res in results])
        sds = np.array([res[scheme][2] for _, res in results])
        rho = {Scheme.SA: report.rho_sa_exact, Scheme.AA: report.rho_aa_exact}.get(scheme)
        rows.append(TableRow(N, T, pattern, scheme, float(mcse.mean()), len(results),
                             float(acfs[:, 1].mean()), rho, float(sds.mean()),
                             grid.iterations - grid.burn_in))
        curves[(N, T, pattern, scheme)] = acfs.mean(axis=0)
    return rows, curves


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("ASIS_PANEL_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def run_grid(grid: ExperimentGrid, threads: int | None = None, progress=None) -> GridResult:
    """Run all (panel size, pattern) cells; output is sorted by configuration key."""
    threads = _resolve_threads(threads)
    rows, curves = [], {}
    cells = [(N, T, p) for N, T in grid.panel_sizes for p in grid.patterns]
    pool = ProcessPoolExecutor(threads) if threads > 1 else None
    try:
        for N, T, p in cells:
            r, c = run_configuration(grid, N, T, p, pool)
            rows.extend(r)
            curves.update(c)
            if progress:
                progress(N, T, p)
    finally:
        if pool:
            pool.shutdown()
    rows.sort(key=lambda r: r.key)
    return GridResult(grid, rows, curves)


_TABLE_FIELDS = ["N", "T", "pattern", "scheme", "mean_mcse", "mean_mcse_x1e5", "n_replications",
                 "mean_lag1_acf", "rho_exact", "mean_posterior_sd", "published_x1e5",
                 "mcse_per_root_draw_x1e5"]


def _table_record(r: TableRow) -> dict:
    published = PUBLISHED_MCSE.get((r.N, r.T), {}).get(r.pattern)
    col = {Scheme.SA: 0, Scheme.AA: 1}.get(r.scheme, 2)
    return {
        "N": r.N, "T": r.T, "pattern": r.pattern, "scheme": r.scheme.value,
        "mean_mcse": repr(r.mean_mcse), "mean_mcse_x1e5": f"{r.mcse_scaled:.3f}",
        "n_replications": r.n_replications, "mean_lag1_acf": f"{r.mean_lag1_acf:.4f}",
        "rho_exact": "" if r.rho_exact is None else f"{r.rho_exact:.4f}",
        "mean_posterior_sd": f"{r.mean_posterior_sd:.6f}",
        "published_x1e5": "" if published is None else published[col],
        "mcse_per_root_draw_x1e5": f"{r.mcse_per_root_draw_scaled:.3f}",
    }


def write_grid_outputs(result: GridResult, out_dir: str | Path, extra: dict | None = None) -> list[Path]:
    """Write tables.csv, table_<N>_<T>.csv, acf_<N>_<T>.csv and summary.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def write_rows(path, rows):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=_TABLE_FIELDS)
            w.writeheader()
            w.writerows(_table_record(r) for r in rows)
        written.append(path)

    write_rows(out / "tables.csv", result.rows)
    for N, T in result.grid.panel_sizes:
        write_rows(out / f"table_{N}_{T}.csv", [r for r in result.rows if (r.N, r.T) == (N, T)])
        path = out / f"acf_{N}_{T}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["pattern", "scheme", "lag", "acf"])
            for (n, t, p, s), curve in sorted(result.acf_curves.items(), key=lambda kv: (kv[0][2], kv[0][3].code)):
                if (n, t) == (N, T):
                    w.writerows([p, s.value, lag, f"{v:.6f}"] for lag, v in enumerate(curve))
        written.append(path)

    summary = {
        "grid": result.grid.to_dict(),
        "seed_derivation": "SeedSequence(base_seed, spawn_key=(N, T, pattern, replication, stream)); "
                           "stream 0 = dataset, 1 + scheme code = chain",
        "scheme_codes": {s.value: s.code for s in Scheme},
        "mcse_estimator": "batch means, floor(sqrt(n)) batches, per chain after burn-in, "
                          "arithmetic mean across replications",
        "draws_per_chain": result.grid.iterations - result.grid.burn_in,
        "asis_order": [s.value for s in result.grid.schemes if s.is_interweaving],
        "mcse_scale": "values in *_x1e5 columns are multiplied by 1e5",
        "rows": [asdict(r) | {"scheme": r.scheme.value} for r in result.rows],
    }
    if extra:
        summary.update(extra)
    path = out / "summary.json"
    path.write_text(json.dumps(summary, indent=2))
    written.append(path)
    return written


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for item in text.split(","):
        n, t = item.lower().split("x")
        sizes.append((int(n), int(t)))
    return sizes


def load_grid_config(path: str | Path, base: ExperimentGrid | None = None) -> ExperimentGrid:
    """Read a ``key = value`` file whose keys mirror ExperimentGrid fields.

    Lists are comma separated; panel sizes are written ``10x10,500x100``.
    Blank lines and ``#`` comments are ignored.
    """
    base = base or ExperimentGrid()
    known = {f.name: f for f in fields(ExperimentGrid)}
    updates = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        if key == "panel_sizes":
            updates[key] = _parse_sizes(value)
        elif key in ("patterns",):
            updates[key] = [int(v) for v in value.split(",")]
        elif key == "schemes":
            updates[key] = [Scheme(v.strip()) for v in value.split(",")]
        elif key == "shared_dataset":
            updates[key] = value.lower() in ("1", "true", "yes", "on")
        elif key in ("mu_true", "phi_alpha", "tau_alpha_sq"):
            updates[key] = float(value)
        else:
            updates[key] = int(value)
    return replace(base, **updates)
