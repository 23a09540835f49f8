"""Single runs, parameter sweeps, CSV/JSON reports and the bound-validation harness."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .bounds import BoundInapplicable, fairness_deviation_bound, psi, psi_tilde, vc_deviation
from .datasets import DatasetSpec, LoadedDataset, load_dataset
from .entropy import (BenefitParams, FiniteDistribution, as_order, benefits, entropy_from_count_arrays,
                      population_entropy_exact)
from .learner import HypothesisSpace, LogisticModel, predict_scores, train_logistic
from .solver import (RandomizedClassifier, SolverConfig, SolveTrace, evaluate_on_test, hedge_solve,
                     mixture_entropy, mixture_risk)

log = logging.getLogger(__name__)

# confidence used for the bound columns of a run record
RECORD_DELTA = 0.1
# VC dimension of one-dimensional thresholds
THRESHOLD_VC_DIM = 1


@dataclass
class RunRecord:
    alpha: float
    gamma: float
    a: float
    c: float
    seed: int
    status: str = "ok"
    message: str = ""
    iterations: int | None = None
    theoretical_iterations: int | None = None
    lambda_bar: float | None = None
    n_train: int | None = None
    n_test: int | None = None
    train_error: float | None = None
    train_entropy: float | None = None
    train_entropy_bound: float | None = None
    train_entropy_ok: bool | None = None
    h0_threshold: float | None = None
    h0_train_error: float | None = None
    h0_test_error: float | None = None
    h0_test_entropy: float | None = None
    psi: float | None = None
    fairness_bound: float | None = None
    psi_tilde: float | None = None
    tight_bound: float | None = None
    draws: int | None = None
    # test_<metric>, test_<metric>_sampled, test_<metric>_ci
    metrics: dict = field(default_factory=dict)

    @property
    def key(self):
        return (self.alpha, self.c, self.gamma, self.seed)

    def to_row(self) -> dict:
        row = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "metrics"}
        row.update(self.metrics)
        return row

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_row()), indent=2, sort_keys=False)


_FIELD_TYPES = {f.name: f.type for f in fields(RunRecord)}


def _jsonable(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if isinstance(v, float) and not math.isfinite(v):
            v = None
        out[k] = v
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _parse(name: str, text: str):
    kind = _FIELD_TYPES.get(name, "float | None")
    if kind.startswith("str"):
        return text
    if text == "":
        return None
    if kind.startswith("bool"):
        return text == "true"
    if kind.startswith("int"):
        return int(text)
    return float(text)


def record_columns(records) -> list:
    cols = [f.name for f in fields(RunRecord) if f.name != "metrics"]
    extra = []
    for r in records:
        for k in r.metrics:
            if k not in extra:
                extra.append(k)
    return cols + extra


def write_records_csv(records, fh) -> None:
    cols = record_columns(records)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    for r in records:
        row = r.to_row()
        w.writerow([_fmt(row.get(c)) for c in cols])


def records_to_csv(records) -> str:
    buf = io.StringIO()
    write_records_csv(records, buf)
    return buf.getvalue()


def read_records_csv(text: str) -> list:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    fixed = {f.name for f in fields(RunRecord)} - {"metrics"}
    out = []
    for row in reader:
        kw, metrics = {}, {}
        for name, value in zip(header, row):
            if name in fixed:
                kw[name] = _parse(name, value)
            else:
                metrics[name] = None if value == "" else float(value)
        out.append(RunRecord(metrics=metrics, **kw))
    return out


@dataclass
class PreparedData:
    """Everything about one split that does not depend on alpha, gamma or c."""

    dataset: LoadedDataset
    model: LogisticModel
    train_space: HypothesisSpace
    test_space: HypothesisSpace


def prepare(spec: DatasetSpec, l2: float = 0.0) -> PreparedData:
    ds = load_dataset(spec)
    model = train_logistic(ds.train.x.values, ds.train.y, l2=l2)
    train_scores = predict_scores(model, ds.train.x.values)
    test_scores = predict_scores(model, ds.test.x.values)
    G = ds.n_groups
    train_space = HypothesisSpace.from_scores(train_scores, ds.train.y, ds.train.groups, n_groups=G)
    test_space = HypothesisSpace.from_scores(test_scores, ds.test.y, ds.test.groups, n_groups=G)
    return PreparedData(ds, model, train_space, test_space)


def _bounds_columns(order, params, n, train_risk) -> dict:
    out = {"psi": psi(order, params), "fairness_bound": fairness_deviation_bound(order, params, n, RECORD_DELTA)}
    try:
        eps2 = vc_deviation(n, THRESHOLD_VC_DIM, RECORD_DELTA, 8)
        out["psi_tilde"] = psi_tilde(order, params, train_risk, eps2)
        out["tight_bound"] = out["psi_tilde"] * eps2
    except BoundInapplicable:
        out["psi_tilde"] = out["tight_bound"] = None
    return out


def solve_cell(data: PreparedData, cfg: SolverConfig, params: BenefitParams, eval_mode: str = "sampled",
               draws: int = 10_000, trace_path=None) -> tuple[RunRecord, RandomizedClassifier, SolveTrace]:
    order = cfg.order
    train, test = data.train_space, data.test_space
    d, trace = hedge_solve(train, cfg, params)
    if trace_path is not None:
        trace.write_csv(trace_path)
    h0 = int(np.argmin(train.risks()))
    rec = RunRecord(alpha=order.value, gamma=cfg.gamma, a=params.a, c=params.c, seed=cfg.seed)
    rec.iterations = trace.iterations
    rec.theoretical_iterations = trace.theoretical_iterations
    rec.lambda_bar = d.lambda_bar
    rec.n_train, rec.n_test = train.n, test.n
    rec.train_error = mixture_risk(d, train)
    rec.train_entropy = mixture_entropy(d, train, params, order)
    rec.train_entropy_bound = trace.guarantees["entropy_bound"]
    rec.train_entropy_ok = bool(trace.guarantees["entropy_ok"])
    rec.h0_threshold = float(train.thresholds[h0])
    rec.h0_train_error = float(train.risks()[h0])
    rec.h0_test_error = float(test.risks()[h0])
    rec.h0_test_entropy = float(test.entropies(params, order)[h0])
    for k, v in _bounds_columns(order, params, train.n, rec.train_error).items():
        setattr(rec, k, v)
    # evaluation draws get their own stream, distinct from the solver's
    ev = evaluate_on_test(d, test, params, order, mode=eval_mode, draws=draws,
                          seed=np.random.SeedSequence([cfg.seed, 1]).generate_state(1)[0])
    for k, v in ev.exact.items():
        rec.metrics[f"test_{k}"] = v
        if ev.sampled is not None:
            rec.metrics[f"test_{k}_sampled"] = ev.sampled[k]
            rec.metrics[f"test_{k}_ci"] = ev.ci[k]
    rec.draws = ev.draws or None
    return rec, d, trace


def run_single(spec: DatasetSpec, cfg: SolverConfig, params: BenefitParams, eval_mode: str = "sampled",
               draws: int = 10_000, out_dir=None, l2: float = 0.0) -> RunRecord:
    """Train, solve, evaluate; optionally write ``run.json`` and ``trace.csv`` to ``out_dir``."""
    data = prepare(spec, l2)
    trace_path = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / "trace.csv"
    rec, d, _ = solve_cell(data, cfg, params, eval_mode, draws, trace_path)
    if out_dir is not None:
        payload = json.loads(rec.to_json())
        payload["mixture"] = d.as_dict()
        payload["model"] = json.loads(data.model.to_json())
        payload["features"] = list(data.dataset.train.x.columns)
        payload["groups"] = list(data.dataset.group_labels)
        (Path(out_dir) / "run.json").write_text(json.dumps(payload, indent=2) + "\n")
    return rec


@dataclass(frozen=True)
class SweepConfig:
    gammas: tuple
    alphas: tuple = (0.0, 1.0, 2.0)
    a: float = 5.0
    cs: tuple = (8.0, 9.0, 10.0)
    lambda_max: float = 20.0
    nu: float = 0.005
    t_cap: int | None = 10_000
    lambda_mode: str = "sampled"
    seeds: tuple = (0,)
    eval_mode: str = "sampled"
    draws: int = 10_000
    l2: float = 0.0

    def __post_init__(self):
        if not self.gammas or not self.alphas or not self.cs or not self.seeds:
            raise ValueError("sweep grids must be nonempty")
        if any(g <= 0 for g in self.gammas):
            raise ValueError("all gammas must be positive")


def _cell_seed(seed: int, ia: int, ic: int, ig: int) -> int:
    return int(np.random.SeedSequence([seed, ia, ic, ig]).generate_state(1)[0])


def _run_cell(job):
    data, alpha, gamma, a, c, seed, cell_seed, sweep, trace_path = job
    try:
        params = BenefitParams(a, c)
        cfg = SolverConfig(gamma, as_order(alpha), sweep.lambda_max, sweep.nu, sweep.t_cap, cell_seed,
                           sweep.lambda_mode)
        rec, _, _ = solve_cell(data, cfg, params, sweep.eval_mode, sweep.draws, trace_path)
        rec.seed = seed
        return rec
    except Exception as exc:  # a failed cell must not take the sweep down
        log.exception("cell alpha=%s gamma=%s c=%s seed=%s failed", alpha, gamma, c, seed)
        return RunRecord(alpha=float(alpha), gamma=float(gamma), a=float(a), c=float(c), seed=seed,
                         status="error", message=f"{type(exc).__name__}: {exc}")


def run_sweep(spec: DatasetSpec, sweep: SweepConfig, out_dir=None, jobs: int = 1, write_traces: bool = False):
    """One record per (alpha, gamma, c, seed), sorted by (alpha, c, gamma, seed).

    With ``out_dir`` writes ``sweep.csv``, ``summary.csv`` (per-cell mean and
    95% CI across seeds), ``trend.csv`` and optionally per-cell traces.
    """
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if write_traces:
            (out / "traces").mkdir(exist_ok=True)
    jobs_list = []
    failed = []
    for seed in sweep.seeds:
        try:
            data = prepare(replace(spec, split_seed=seed), sweep.l2)
        except Exception as exc:
            log.exception("data preparation failed for seed %s", seed)
            for alpha in sweep.alphas:
                for c in sweep.cs:
                    for gamma in sweep.gammas:
                        failed.append(RunRecord(alpha=float(alpha), gamma=float(gamma), a=float(sweep.a),
                                                c=float(c), seed=seed, status="error",
                                                message=f"{type(exc).__name__}: {exc}"))
            continue
        for ia, alpha in enumerate(sweep.alphas):
            for ic, c in enumerate(sweep.cs):
                for ig, gamma in enumerate(sweep.gammas):
                    tp = None
                    if out is not None and write_traces:
                        tp = out / "traces" / f"trace_alpha{alpha:g}_c{c:g}_gamma{gamma:g}_seed{seed}.csv"
                    jobs_list.append((data, float(alpha), float(gamma), float(sweep.a), float(c), seed,
                                      _cell_seed(seed, ia, ic, ig), sweep, tp))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell, jobs_list))
    else:
        records = [_run_cell(j) for j in jobs_list]
    records = sorted(records + failed, key=lambda r: r.key)
    if out is not None:
        (out / "sweep.csv").write_text(records_to_csv(records))
        _write_rows(out / "summary.csv", summarize(records))
        _write_rows(out / "trend.csv", trend_report(records))
    return records


SUMMARY_METRICS = ("train_error", "train_entropy", "test_error", "test_entropy", "test_between",
                   "h0_test_error")


def _value(rec: RunRecord, name: str):
    v = getattr(rec, name, None) if name in _FIELD_TYPES else rec.metrics.get(name)
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


def summarize(records) -> list:
    """Mean and normal 95% CI half-width across seeds for each (alpha, c, gamma) cell."""
    cells = {}
    for r in records:
        cells.setdefault((r.alpha, r.c, r.gamma), []).append(r)
    rows = []
    for (alpha, c, gamma), recs in sorted(cells.items()):
        ok = [r for r in recs if r.status == "ok"]
        row = {"alpha": alpha, "c": c, "gamma": gamma, "n_seeds": len(recs), "n_ok": len(ok)}
        for m in SUMMARY_METRICS:
            vals = np.array([_value(r, m) for r in ok if _value(r, m) is not None], dtype=float)
            row[f"{m}_mean"] = float(vals.mean()) if vals.size else None
            row[f"{m}_ci"] = (float(1.959963984540054 * vals.std(ddof=1) / math.sqrt(vals.size))
                              if vals.size > 1 else None)
        rows.append(row)
    return rows


def trend_report(records) -> list:
    """Soft monotonicity statistics in gamma for each (alpha, c); no pass/fail.

    Reports the fraction of consecutive gamma steps where the train-side
    mixture entropy does not decrease and the test error does not increase,
    plus Kendall's tau of each against gamma.
    """
    rows = []
    keys = sorted({(r.alpha, r.c) for r in records})
    for alpha, c in keys:
        summary = [s for s in summarize([r for r in records if r.alpha == alpha and r.c == c])]
        g = np.array([s["gamma"] for s in summary])
        ent = np.array([np.nan if s["train_entropy_mean"] is None else s["train_entropy_mean"] for s in summary])
        err = np.array([np.nan if s["test_error_mean"] is None else s["test_error_mean"] for s in summary])
        row = {"alpha": alpha, "c": c, "n_gammas": g.size}
        for name, vals, sign in (("train_entropy", ent, 1), ("test_error", err, -1)):
            ok = ~np.isnan(vals)
            v, gg = vals[ok], g[ok]
            steps = np.diff(v)
            row[f"{name}_monotone_fraction"] = (float(np.mean(sign * steps >= -1e-12)) if steps.size else None)
            if v.size > 1 and np.ptp(v) > 0:
                row[f"{name}_kendall_tau"] = float(stats.kendalltau(gg, v).statistic)
            else:
                row[f"{name}_kendall_tau"] = None
        rows.append(row)
    return rows


def _write_rows(path, rows) -> None:
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in cols])


# bound validation ----------------------------------------------------------

@dataclass(frozen=True)
class BoundValidationConfig:
    support: int = 20
    n: int = 1000
    resamples: int = 500
    delta: float = 0.1
    alphas: tuple = (0.0, 1.0, 2.0)
    a: float = 5.0
    c: float = 8.0
    d_h: int = THRESHOLD_VC_DIM
    seed: int = 0
    # all predictions correct: benefit is constant, so every deviation is 0
    constant: bool = False


@dataclass(frozen=True)
class SyntheticPopulation:
    labels: np.ndarray
    predictions: np.ndarray
    groups: np.ndarray
    masses: np.ndarray

    def distribution(self, params: BenefitParams) -> FiniteDistribution:
        return FiniteDistribution(benefits(self.predictions, self.labels, params), self.masses, self.groups)


def synthetic_population(cfg: BoundValidationConfig) -> SyntheticPopulation:
    """A finite population of ``support`` atoms and a fixed threshold-at-0.5 hypothesis."""
    rng = np.random.default_rng(cfg.seed)
    k = cfg.support
    groups = np.arange(k) % 2
    scores = rng.random(k)
    labels = (rng.random(k) < 0.25 + 0.5 * scores).astype(np.int64)
    predictions = labels.copy() if cfg.constant else (scores >= 0.5).astype(np.int64)
    masses = rng.dirichlet(np.ones(k))
    masses[-1] = 1.0 - math.fsum(masses[:-1])
    return SyntheticPopulation(labels, predictions, groups, masses)


def validate_bounds(cfg: BoundValidationConfig = BoundValidationConfig()) -> dict:
    """Monte-Carlo check of the fairness deviation bounds on a known population.

    Each resample draws ``n`` individuals i.i.d. from the population; the
    empirical index is compared with the exact population value.
    """
    params = BenefitParams(cfg.a, cfg.c)
    pop = synthetic_population(cfg)
    dist = pop.distribution(params)
    fp_atom = ((pop.predictions == 1) & (pop.labels == 0)).astype(np.int64)
    fn_atom = ((pop.predictions == 0) & (pop.labels == 1)).astype(np.int64)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    draws = rng.multinomial(cfg.n, pop.masses, size=cfg.resamples)
    n_fp = draws @ fp_atom
    n_fn = draws @ fn_atom
    risk_s = (n_fp + n_fn) / cfg.n
    eps2 = vc_deviation(cfg.n, cfg.d_h, cfg.delta, 8)
    rows = []
    for alpha in cfg.alphas:
        order = as_order(alpha)
        true_value = population_entropy_exact(dist, order)
        empirical = entropy_from_count_arrays(cfg.n, n_fp, n_fn, params, order)
        dev = np.abs(empirical - true_value)
        bound = fairness_deviation_bound(order, params, cfg.n, cfg.delta)
        violation = float(np.mean(dev > bound))
        tight = np.full(cfg.resamples, np.nan)
        for i, rs in enumerate(risk_s):
            try:
                tight[i] = psi_tilde(order, params, float(rs), eps2) * eps2
            except BoundInapplicable:
                pass
        applicable = ~np.isnan(tight)
        tight_violation = float(np.mean(dev[applicable] > tight[applicable])) if applicable.any() else None
        rows.append({
            "alpha": order.value,
            "true_entropy": true_value,
            "mean_empirical_entropy": float(empirical.mean()),
            "max_deviation": float(dev.max()),
            "bound": bound,
            "violation_frequency": violation,
            "tight_applicable_fraction": float(applicable.mean()),
            "tight_bound_mean": float(np.nanmean(tight)) if applicable.any() else None,
            "tight_violation_frequency": tight_violation,
            "ok": violation <= cfg.delta,
        })
    return {"config": asdict(cfg), "eps2": eps2, "rows": rows, "ok": all(r["ok"] for r in rows)}
