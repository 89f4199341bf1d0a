"""Benchmark harness: accuracy tables, missing-data curve, clustering demo.

Every replicate is a pure function of its cell and of ``seed + replicate``,
so runs are reproducible and may execute in any order or in parallel.  Raw
rows are sorted by key before writing; wall-clock times go to a separate
file so the raw CSV is byte-identical across reruns.
"""
import csv
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.cluster import KMeans

from . import io
from .evaluation import fms, normalize_model, paired_t_test, success, tcs
from .model import CoupledDataset, Side, random_model, svd_model
from .solvers import StopConfig, cmtf_als, cmtf_opt, truncated_svd
from .synth import ScenarioConfig, WeightMode, gen_clustering_example, gen_mask, gen_scenario
from .validation import check_dataset, check_rank

__all__ = [
    "ExperimentPlan",
    "ClusteringConfig",
    "RAW_FIELDS",
    "AGGREGATE_FIELDS",
    "run_accuracy_tables",
    "aggregate_rows",
    "read_csv",
    "verify",
    "run_missing_curve",
    "cluster_purity",
    "run_clustering_demo",
    "fit_files",
]

ALGORITHMS = ("opt", "als")
RAW_FIELDS = ["scenario", "weights", "eta", "rank", "fit_rank", "replicate", "seed", "algorithm",
              "fms", "success", "stop_reason", "iterations", "func_evals", "objective"]
AGGREGATE_FIELDS = ["scenario", "weights", "eta", "rank", "fit_rank", "algorithm", "replicates",
                    "success_pct", "mean_fms", "t_statistic", "p_value", "degenerate"]
CELL_KEYS = ["scenario", "weights", "eta", "rank", "fit_rank"]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return str(v)


def _write_csv(path, fields, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for row in rows:
            w.writerow([_fmt(row[k]) for k in fields])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _map(fn, tasks, jobs):
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, tasks))
    return [fn(t) for t in tasks]


@dataclass
class ExperimentPlan:
    """Grid of accuracy-table cells.

    Each cell is one (scenario, eta, fit_rank); the data generated for
    replicate ``i`` uses seed ``seed + i`` and is shared by all algorithms
    and fit ranks, as is the starting point for a given fit rank.
    """

    scenarios: tuple = (1,)
    etas: tuple = (0.1,)
    rank: int = 3
    fit_ranks: tuple = (3, 4)
    replicates: int = 30
    algorithms: tuple = ALGORITHMS
    weights: str = "unit"
    shape: tuple = (20, 20, 20)
    side_dim: int = 20
    seed: int = 0
    init: str = "svd"
    jobs: int = 1

    def __post_init__(self):
        self.scenarios = tuple(int(s) for s in self.scenarios)
        self.etas = tuple(float(e) for e in self.etas)
        self.fit_ranks = tuple(check_rank(r) for r in self.fit_ranks)
        self.algorithms = tuple(a.lower() for a in self.algorithms)
        self.shape = tuple(int(s) for s in self.shape)
        self.weights = WeightMode(self.weights).value
        if self.init not in ("svd", "random"):
            raise ValueError("init must be 'svd' or 'random'")
        check_rank(self.rank)
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if any(r < self.rank for r in self.fit_ranks):
            raise ValueError("every fit rank must be at least the true rank")
        if not self.algorithms or any(a not in ALGORITHMS for a in self.algorithms):
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}")

    def tasks(self):
        return [(self, scenario, eta, r)
                for scenario in self.scenarios for eta in self.etas for r in range(self.replicates)]


def _fit(algorithm, data, rank, init):
    if algorithm == "opt":
        return cmtf_opt(data, rank, init=init)
    return cmtf_als(data, rank, init=init, stop=StopConfig.for_als())


def _run_replicate(task):
    plan, scenario, eta, replicate = task
    seed = plan.seed + replicate
    gt = gen_scenario(ScenarioConfig(scenario=scenario, shape=plan.shape, side_dim=plan.side_dim, rank=plan.rank,
                                     eta=eta, weight_mode=plan.weights, seed=seed))
    truth = normalize_model(gt.model)
    rows, times = [], []
    for fit_rank in plan.fit_ranks:
        if plan.init == "svd":
            init = svd_model(gt.data, fit_rank, seed)
        else:
            init = random_model(gt.data.spec(fit_rank), seed)
        for algorithm in plan.algorithms:
            start = time.perf_counter()
            result = _fit(algorithm, gt.data, fit_rank, init)
            elapsed = time.perf_counter() - start
            try:
                score = fms(truth, normalize_model(result.model)).score
            except ValueError:
                score = 0.0
            row = dict(scenario=scenario, weights=plan.weights, eta=eta, rank=plan.rank, fit_rank=fit_rank,
                       replicate=replicate, seed=seed, algorithm=algorithm, fms=score,
                       success=success(score, gt.n_factor_matrices), stop_reason=result.stop_reason.value,
                       iterations=result.iterations, func_evals=result.func_evals, objective=result.objective)
            rows.append(row)
            times.append({k: row[k] for k in ("scenario", "eta", "fit_rank", "replicate", "algorithm")}
                         | {"wall_time": elapsed})
    return rows, times


def _row_key(row):
    return (int(row["scenario"]), str(row["weights"]), float(row["eta"]), int(row["fit_rank"]),
            str(row["algorithm"]), int(row["replicate"]))


def aggregate_rows(rows):
    """Per-cell success rate, mean FMS and paired t-test of OPT against ALS.

    Works on raw rows as produced or as read back from CSV.  The t-test pairs
    replicates of the same cell; both algorithm rows of a cell carry the same
    statistic.  It is left empty when the cell lacks one of the algorithms.
    """
    cells = {}
    for row in rows:
        cell = (int(row["scenario"]), str(row["weights"]), float(row["eta"]), int(row["rank"]), int(row["fit_rank"]))
        per_rep = cells.setdefault(cell, {}).setdefault(str(row["algorithm"]), {})
        per_rep[int(row["replicate"])] = (float(row["fms"]), bool(int(row["success"])))
    out = []
    for cell in sorted(cells):
        algos = cells[cell]
        test = None
        if all(a in algos for a in ALGORITHMS):
            reps = sorted(set(algos["opt"]) & set(algos["als"]))
            if len(reps) >= 2:
                test = paired_t_test([algos["opt"][r][0] for r in reps], [algos["als"][r][0] for r in reps])
        for algorithm in sorted(algos, key=ALGORITHMS.index):
            vals = algos[algorithm]
            scores = [v[0] for v in vals.values()]
            out.append(dict(zip(CELL_KEYS, cell)) | dict(
                algorithm=algorithm,
                replicates=len(vals),
                success_pct=100.0 * sum(v[1] for v in vals.values()) / len(vals),
                mean_fms=float(np.mean(scores)),
                t_statistic="" if test is None else test.statistic,
                p_value="" if test is None else test.pvalue,
                degenerate="" if test is None else test.degenerate,
            ))
    return out


def stop_reason_histogram(rows):
    counts = Counter((str(r["algorithm"]), str(r["stop_reason"])) for r in rows)
    return [dict(algorithm=a, stop_reason=s, count=n) for (a, s), n in sorted(counts.items())]


def run_accuracy_tables(plan, out_dir):
    """Run `plan` and write ``raw.csv``, ``aggregate.csv``, ``timing.csv`` and ``stop_reasons.csv``.

    Returns
    -------
    rows, aggregate : list of dict
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, times = [], []
    for r, t in _map(_run_replicate, plan.tasks(), plan.jobs):
        rows.extend(r)
        times.extend(t)
    rows.sort(key=_row_key)
    times.sort(key=lambda t: (t["scenario"], t["eta"], t["fit_rank"], t["algorithm"], t["replicate"]))
    agg = aggregate_rows(rows)
    _write_csv(out / "raw.csv", RAW_FIELDS, rows)
    _write_csv(out / "aggregate.csv", AGGREGATE_FIELDS, agg)
    _write_csv(out / "timing.csv", ["scenario", "eta", "fit_rank", "algorithm", "replicate", "wall_time"], times)
    _write_csv(out / "stop_reasons.csv", ["algorithm", "stop_reason", "count"], stop_reason_histogram(rows))
    plan_items = {k: (",".join(map(str, v)) if isinstance(v, tuple) else v) for k, v in asdict(plan).items()}
    io.write_manifest(out / "plan.txt", plan_items)
    return rows, agg


def verify(out_dir, rtol=1e-12):
    """Recompute ``aggregate.csv`` from ``raw.csv``; return a list of mismatch messages."""
    out = Path(out_dir)
    expected = aggregate_rows(read_csv(out / "raw.csv"))
    found = read_csv(out / "aggregate.csv")
    problems = []
    if len(expected) != len(found):
        return [f"aggregate has {len(found)} rows, raw data gives {len(expected)}"]
    for n, (e, f) in enumerate(zip(expected, found), 1):
        for key in AGGREGATE_FIELDS:
            a, b = _fmt(e[key]), f.get(key)
            if a == b:
                continue
            try:
                if np.isclose(float(a), float(b), rtol=rtol, atol=0):
                    continue
            except (TypeError, ValueError):
                pass
            problems.append(f"row {n} {key}: recomputed {a}, file has {b}")
    return problems


def _missing_replicate(task):
    fraction, replicate, shape, side_dim, rank, eta, seed = task
    gt = gen_scenario(ScenarioConfig(scenario=1, shape=shape, side_dim=side_dim, rank=rank, eta=eta,
                                     seed=seed + replicate))
    mask = gen_mask(shape, fraction, seed=seed + replicate + 1)
    x = gt.data.tensor
    out = {}
    for method, sides in (("cp", ()), ("cmtf", gt.data.sides)):
        result = cmtf_opt(CoupledDataset(x, sides, mask), rank)
        out[method] = tcs(x, mask, result.model.full()) if np.any(mask == 0) else 0.0
    return dict(fraction=fraction, replicate=replicate, seed=seed + replicate,
                tcs_cp=out["cp"], tcs_cmtf=out["cmtf"])


def run_missing_curve(fractions, replicates=10, shape=(20, 20, 20), side_dim=20, rank=3, eta=0.0, seed=0,
                      out_dir=None, jobs=1):
    """Mean tensor completion score of CP alone and of CMTF per missing fraction.

    Replicate ``i`` uses data seed ``seed + i`` and mask seed ``seed + i + 1``.
    With no missing entries the score is reported as 0.

    Returns
    -------
    raw, curve : list of dict
        ``curve`` holds ``fraction``, ``tcs_cp`` and ``tcs_cmtf`` means.
    """
    fractions = [float(f) for f in fractions]
    if any(not 0 <= f <= 0.95 for f in fractions):
        raise ValueError("missing fractions must lie in [0, 0.95]")
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    shape = tuple(int(s) for s in shape)
    tasks = [(f, r, shape, side_dim, rank, eta, seed) for f in fractions for r in range(replicates)]
    raw = sorted(_map(_missing_replicate, tasks, jobs), key=lambda d: (d["fraction"], d["replicate"]))
    curve = []
    for f in sorted(set(fractions)):
        sel = [d for d in raw if d["fraction"] == f]
        curve.append(dict(fraction=f, replicates=len(sel),
                          tcs_cp=float(np.mean([d["tcs_cp"] for d in sel])),
                          tcs_cmtf=float(np.mean([d["tcs_cmtf"] for d in sel]))))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "missing_raw.csv", ["fraction", "replicate", "seed", "tcs_cp", "tcs_cmtf"], raw)
        _write_csv(out / "missing_curve.csv", ["fraction", "replicates", "tcs_cp", "tcs_cmtf"], curve)
    return raw, curve


@dataclass
class ClusteringConfig:
    n_rows: int = 40
    n_cols: int = 20
    n_tubes: int = 20
    side_dim: int = 20
    noise_scale: float = 0.1
    n_clusters: int = 4
    seed: int = 0


def cluster_purity(labels, coords, n_clusters=4, random_state=0):
    """k-means purity of the rows of `coords`.

    The coordinates are first replaced by an orthonormal basis of their
    column space, which removes the arbitrary scaling and mixing of factor
    columns.
    """
    labels = np.asarray(labels)
    basis = np.linalg.svd(np.asarray(coords, dtype=float), full_matrices=False)[0]
    pred = KMeans(n_clusters=n_clusters, n_init=10, random_state=random_state).fit_predict(basis)
    hits = sum(np.bincount(labels[pred == c]).max() for c in np.unique(pred))
    return hits / labels.size


def _svg_scatter(panels, labels):
    colors = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"]
    size, pad = 240, 20
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size * len(panels)}" height="{size + pad}">']
    for p, (name, xy) in enumerate(panels):
        lo, hi = xy.min(axis=0), xy.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        pts = pad + (xy - lo) / span * (size - 2 * pad)
        x0 = p * size
        parts.append(f'<text x="{x0 + pad}" y="14" font-size="12">{name}</text>')
        for (u, v), lab in zip(pts, labels):
            parts.append(f'<circle cx="{x0 + u:.2f}" cy="{size + pad - v:.2f}" r="3" '
                         f'fill="{colors[int(lab) % len(colors)]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def run_clustering_demo(cfg=None, out_dir=None, svg=False):
    """First-mode coordinates from rank-2 SVD of Y, CP of X and CMTF of (X, Y).

    Returns
    -------
    coords : dict of ndarray
        Method name to an ``(n_rows, 2)`` array.
    purity : dict of float
    labels : ndarray
    """
    cfg = cfg or ClusteringConfig()
    ex = gen_clustering_example(cfg.n_rows, cfg.n_cols, cfg.n_tubes, cfg.side_dim, cfg.noise_scale, cfg.seed)
    u, s, _ = truncated_svd(ex.matrix, 2)
    coords = {
        "svd": u * s,
        "cp": cmtf_opt(CoupledDataset(ex.tensor), 2, random_state=cfg.seed).model.factors[0],
        "cmtf": cmtf_opt(CoupledDataset(ex.tensor, (Side(0, ex.matrix),)), 2,
                         random_state=cfg.seed).model.factors[0],
    }
    purity = {m: cluster_purity(ex.labels, c, cfg.n_clusters, cfg.seed) for m, c in coords.items()}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rows = [dict(method=m, row=i, label=int(ex.labels[i]), x=c[i, 0], y=c[i, 1])
                for m, c in coords.items() for i in range(cfg.n_rows)]
        _write_csv(out / "clustering.csv", ["method", "row", "label", "x", "y"], rows)
        _write_csv(out / "purity.csv", ["method", "purity"],
                   [dict(method=m, purity=p) for m, p in purity.items()])
        if svg:
            (out / "clustering.svg").write_text(_svg_scatter(list(coords.items()), ex.labels))
    return coords, purity, ex.labels


@dataclass
class FitReport:
    stop_reason: object
    objective: float
    iterations: int
    written: list = field(default_factory=list)


def fit_files(tensor_path, sides=(), rank=3, algorithm="opt", out_dir=".", mask_path=None, init="svd",
              random_state=None, stop=None):
    """Fit factor files to a tensor file and coupled side files.

    Parameters
    ----------
    tensor_path : path
    sides : sequence of (path, mode)
    rank : int
    algorithm : {"opt", "als"}
    out_dir : path
        Receives ``A<n>.txt`` per tensor mode, ``V<s>_<k>.txt`` per side
        factor, ``trace.csv`` and ``report.txt``.
    mask_path : path, optional

    Raises
    ------
    cmtf.io.FormatError
        On an unparsable file; nothing is written.
    ValueError
        On inconsistent dimensions; nothing is written.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}")
    rank = check_rank(rank)
    x = io.read_array(tensor_path)
    side_arrays = [io.read_array(p) for p, _ in sides]
    mask = io.read_array(mask_path) if mask_path is not None else None
    data = check_dataset(x, side_arrays, [int(m) for _, m in sides], mask)
    if algorithm == "opt":
        result = cmtf_opt(data, rank, init=init, random_state=random_state, stop=stop)
    else:
        result = cmtf_als(data, rank, init=init, random_state=random_state, stop=stop)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for n, f in enumerate(result.model.factors):
        written.append(out / f"A{n}.txt")
        io.write_array(written[-1], f)
    for s, vs in enumerate(result.model.side_factors):
        for k, v in enumerate(vs, 1):
            written.append(out / f"V{s}_{k}.txt")
            io.write_array(written[-1], v)
    trace_rows = [dict(iteration=i, objective=f) for i, f in enumerate(result.objective_trace)]
    _write_csv(out / "trace.csv", ["iteration", "objective"], trace_rows)
    io.write_manifest(out / "report.txt", {
        "algorithm": algorithm,
        "rank": rank,
        "stop_reason": result.stop_reason.value,
        "converged": int(result.stop_reason.converged),
        "objective": f"{result.objective:.17g}",
        "iterations": result.iterations,
        "func_evals": result.func_evals,
    })
    written += [out / "trace.csv", out / "report.txt"]
    return FitReport(result.stop_reason, result.objective, result.iterations, written)
