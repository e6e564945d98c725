"""Benchmark harness: uniform vs CNW vs composed coresets on a grid.

Config files are flat ``key = value`` documents (``#`` starts a comment)::

    datasets   = synth:subspaces, data/signals.csv   # synth:<kind> or a path
    algorithms = uniform, cnw, composed
    k          = 5, 10
    sizes      = 100, 200, 400, 800
    seeds      = 10          # seed indices 0..seeds-1 per cell
    seed       = 0           # master seed
    repeats    = 3           # timing repetitions, median reported
    workers    = 1
    max_rows   = 1000        # keep only the first rows of every dataset
    n          = 1000        # synthetic shape and generator settings
    d          = 128
    noise      = 0.05
    synth_k    = 10
    synth_j    = 3
    header     = false       # CSV inputs start with a header line
    error_form = squared     # or unsquared
    out        = bench-out

Outputs in ``out``:

``records.csv``
    one row per (dataset, algorithm, k, size, seed) with the error; it is
    byte-identical across reruns with the same master seed and any
    ``workers``;
``timings.csv``
    the matching build and evaluation times (median over ``repeats``,
    measured with the garbage collector off and the kernels already
    compiled);
``plot-<dataset>-k<k>-<error|time>.csv``
    per-panel medians over seeds with columns ``algorithm,size,<metric>``;
``plot.py``
    a matplotlib script that renders those panels.
"""

from __future__ import annotations

import csv
import gc
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .cnw import cnw
from .config import TOL
from .core import WeightedPointSet, opt_single_subspace
from .coreset import fixed_size_coreset
from .evaluation import EXACT_RANK, svd_error, uniform_coreset
from .io import Dataset, load_dataset
from .rng import make_rng
from .synth import KINDS, synth

ALGORITHMS = ("uniform", "cnw", "composed")
# error column for cells that could not be built or evaluated
FAILED = -2.0

RECORD_FIELDS = ["dataset", "algorithm", "k", "size", "seed", "rows", "error", "status"]
TIMING_FIELDS = ["dataset", "algorithm", "k", "size", "seed", "build_time", "eval_time"]


@dataclass(frozen=True)
class BenchConfig:
    datasets: tuple[str, ...] = ("synth:subspaces",)
    algorithms: tuple[str, ...] = ALGORITHMS
    k: tuple[int, ...] = (5,)
    sizes: tuple[int, ...] = (100,)
    seeds: int = 1
    seed: int = 0
    repeats: int = 3
    workers: int = 1
    max_rows: Optional[int] = None
    n: int = 1000
    d: int = 128
    noise: float = 0.05
    synth_k: int = 10
    synth_j: int = 3
    header: bool = False
    error_form: str = "squared"
    out: str = "bench-out"
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ValueError(f"unknown algorithm(s) {sorted(bad)}")
        if self.seeds < 1 or self.repeats < 1 or self.workers < 1:
            raise ValueError("seeds, repeats and workers must be positive")
        if self.error_form not in ("squared", "unsquared"):
            raise ValueError("error_form must be 'squared' or 'unsquared'")
        if not self.datasets or not self.k or not self.sizes:
            raise ValueError("datasets, k and sizes must be non-empty")


_LIST_KEYS = {"datasets": str, "algorithms": str, "k": int, "sizes": int}
_SCALAR_KEYS = {
    "seeds": int,
    "seed": int,
    "repeats": int,
    "workers": int,
    "max_rows": int,
    "n": int,
    "d": int,
    "noise": float,
    "synth_k": int,
    "synth_j": int,
    "error_form": str,
    "out": str,
}


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def parse_config(text: str, base_dir: str = ".") -> BenchConfig:
    """Parse the flat ``key = value`` format described in the module docstring."""
    kw: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _LIST_KEYS:
                kw[key] = tuple(_LIST_KEYS[key](v.strip()) for v in value.split(",") if v.strip())
            elif key in _SCALAR_KEYS:
                kw[key] = _SCALAR_KEYS[key](value)
            elif key == "header":
                kw[key] = _parse_bool(value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return BenchConfig(base_dir=base_dir, **kw)


def load_config(path) -> BenchConfig:
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), base_dir=str(p.parent))


def resolve_dataset(spec: str, cfg: BenchConfig) -> Dataset:
    if spec.startswith("synth:"):
        kind = spec.split(":", 1)[1]
        if kind not in KINDS:
            raise ValueError(f"unknown synthetic kind {kind!r}")
        ds = synth(kind, cfg.n, cfg.d, k=cfg.synth_k, j=cfg.synth_j, noise=cfg.noise, rng_seed=cfg.seed)
    else:
        path = Path(spec)
        if not path.is_absolute():
            path = Path(cfg.base_dir) / path
        ds = load_dataset(path, header=cfg.header)
    if cfg.max_rows is not None and ds.points.n > cfg.max_rows:
        P = ds.points.subset(np.arange(cfg.max_rows))
        ds = replace(ds, points=P)
    return ds


@dataclass(frozen=True)
class Cell:
    cell_id: int
    dataset: str
    algorithm: str
    k: int
    size: int
    seed: int


def build(P: WeightedPointSet, algorithm: str, k: int, size: int, rng):
    """Build one coreset of (at most) ``size`` rows."""
    if not 1 <= size <= P.n:
        raise ValueError(f"size {size} outside [1, {P.n}]")
    if algorithm == "uniform":
        return uniform_coreset(P, size, rng)
    if algorithm == "cnw":
        eps = min(math.sqrt(k / size), TOL.cnw_eps_max)
        return cnw(P, k, eps, iterations=size)
    eps = math.sqrt(4 * k / size)
    if eps > 1:
        raise ValueError(f"composed needs size >= 4k = {4 * k}")
    opt = opt_single_subspace(P, k)
    return fixed_size_coreset(P, k, k, eps, opt, rng_seed=rng)


_WORKER_DATA: dict = {}


def _init_worker(data, cfg):
    kernels.warmup()
    _WORKER_DATA["data"] = data
    _WORKER_DATA["cfg"] = cfg


def run_cell(cell: Cell, data: dict, cfg: BenchConfig) -> tuple[dict, dict]:
    P = data[cell.dataset]
    times = []
    C = None
    status = "ok"
    try:
        for _ in range(cfg.repeats):
            rng = make_rng(cfg.seed, cell.cell_id)
            # as timeit does: no collector pauses inside the timed region
            gc_was_on = gc.isenabled()
            gc.disable()
            try:
                t0 = time.perf_counter()
                C = build(P, cell.algorithm, cell.k, cell.size, rng)
                times.append(time.perf_counter() - t0)
            finally:
                if gc_was_on:
                    gc.enable()
        t0 = time.perf_counter()
        err = svd_error(P, C, cell.k, form=cfg.error_form)
        eval_time = time.perf_counter() - t0
        if err == EXACT_RANK:
            status = "exact-rank"
    except Exception as exc:
        err, eval_time, status = FAILED, 0.0, f"failed: {type(exc).__name__}: {exc}"
    base = {"dataset": cell.dataset, "algorithm": cell.algorithm, "k": cell.k, "size": cell.size, "seed": cell.seed}
    rec = {**base, "rows": C.size if err != FAILED else 0, "error": err, "status": status}
    tim = {**base, "build_time": statistics.median(times) if times else 0.0, "eval_time": eval_time}
    return rec, tim


def _pool_cell(cell: Cell):
    return cell.cell_id, run_cell(cell, _WORKER_DATA["data"], _WORKER_DATA["cfg"])


def make_cells(cfg: BenchConfig, names: list[str]) -> list[Cell]:
    cells = []
    for name in names:
        for alg in cfg.algorithms:
            for k in cfg.k:
                for size in cfg.sizes:
                    for s in range(cfg.seeds):
                        cells.append(Cell(len(cells), name, alg, k, size, s))
    return cells


def _fmt(v) -> str:
    # repr of a numpy scalar is "np.float64(...)" on numpy 2
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _write_csv(path: Path, fields: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(fields)
        for r in rows:
            w.writerow([_fmt(r[f]) for f in fields])


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "-" for c in name)


def write_plot_data(out: Path, records: list[dict], timings: list[dict]) -> list[Path]:
    written = []
    for metric, rows, col in (("error", records, "error"), ("time", timings, "build_time")):
        panels: dict = {}
        for r in rows:
            if metric == "time" or r[col] >= 0:
                panels.setdefault((r["dataset"], r["k"]), {}).setdefault((r["algorithm"], r["size"]), []).append(r[col])
        for (ds, k), series in sorted(panels.items()):
            path = out / f"plot-{_slug(ds)}-k{k}-{metric}.csv"
            body = [
                {"algorithm": alg, "size": size, metric: statistics.median(vals)}
                for (alg, size), vals in sorted(series.items(), key=lambda kv: (ALGORITHMS.index(kv[0][0]), kv[0][1]))
            ]
            _write_csv(path, ["algorithm", "size", metric], body)
            written.append(path)
    return written


PLOT_SCRIPT = '''"""Render the benchmark panels written next to this script."""
import csv
import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, "plot-*.csv"))):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    metric = [c for c in rows[0] if c not in ("algorithm", "size")][0]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for alg in dict.fromkeys(r["algorithm"] for r in rows):
        pts = [(int(r["size"]), float(r[metric])) for r in rows if r["algorithm"] == alg]
        ax.plot(*zip(*pts), marker="o", label=alg)
    ax.set_xlabel("coreset size")
    ax.set_ylabel(metric if metric == "error" else "build time [s]")
    ax.set_title(os.path.basename(path)[5:-4])
    ax.legend()
    fig.tight_layout()
    fig.savefig(path[:-4] + ".png", dpi=120)
    plt.close(fig)
'''


@dataclass(frozen=True, eq=False)
class BenchResult:
    records: list[dict]
    timings: list[dict]
    out: Path


def run_benchmark(cfg: BenchConfig, out: Optional[str] = None) -> BenchResult:
    """Run every cell of the grid and write the report files.

    CNW is deterministic, so it is built once per (dataset, k, size) and
    the result is repeated for every seed index.
    """
    out_dir = Path(out or cfg.out)
    if not out_dir.is_absolute() and out is None:
        out_dir = Path(cfg.base_dir) / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    data = {}
    for spec in cfg.datasets:
        ds = resolve_dataset(spec, cfg)
        name = spec if spec.startswith("synth:") else ds.name
        if name in data:
            raise ValueError(f"duplicate dataset name {name!r}")
        data[name] = ds.points
    cells = make_cells(cfg, list(data))
    kernels.warmup()
    todo = [c for c in cells if c.algorithm != "cnw" or c.seed == 0]

    results: dict[int, tuple[dict, dict]] = {}
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(data, cfg)) as pool:
            for cid, res in pool.map(_pool_cell, todo):
                results[cid] = res
    else:
        for c in todo:
            results[c.cell_id] = run_cell(c, data, cfg)

    first_cnw = {(c.dataset, c.k, c.size): c.cell_id for c in todo if c.algorithm == "cnw"}
    records, timings = [], []
    for c in cells:
        if c.cell_id in results:
            rec, tim = results[c.cell_id]
        else:
            rec0, tim0 = results[first_cnw[(c.dataset, c.k, c.size)]]
            rec, tim = {**rec0, "seed": c.seed}, {**tim0, "seed": c.seed}
        records.append(rec)
        timings.append(tim)

    _write_csv(out_dir / "records.csv", RECORD_FIELDS, records)
    _write_csv(out_dir / "timings.csv", TIMING_FIELDS, timings)
    write_plot_data(out_dir, records, timings)
    (out_dir / "plot.py").write_text(PLOT_SCRIPT, encoding="utf-8")
    return BenchResult(records, timings, out_dir)


def medians(rows: list[dict], col: str) -> dict:
    """Median of ``col`` over seeds, keyed by (dataset, algorithm, k, size)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["dataset"], r["algorithm"], r["k"], r["size"]), []).append(r[col])
    return {key: statistics.median(v) for key, v in groups.items()}
