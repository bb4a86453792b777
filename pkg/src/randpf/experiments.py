"""Seeded Monte Carlo experiments for randomized product formulas.

Every repetition draws from its own random stream keyed by
``(master seed, experiment, n, N, rep)``, so tables are identical for any
number of worker processes and any execution order.
"""
from __future__ import annotations

import csv
import io
import json
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache, partial
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import __version__
from .formulas import (
    ProductFormulaPlan,
    SeededRng,
    apply_plan,
    diagonal_phases,
    expected_step,
    first_order_plan,
    permuted_suzuki_plan,
    qdrift_sample,
    realize_unitary,
    suzuki2p_plan,
)
from .hamiltonian import Hamiltonian, all_z_strings, build_model, dense, single_site_z
from .linalg import expm_hermitian, haar_state, operator_norm, pure_trace_distance
from .metrics import freedman_tail, vector_tail_l2, vector_tail_trace

CSV_HEADER = ("experiment", "model", "n", "N", "rep", "seed", "metric", "value")
AGGREGATE_REP = -1
METHODS = ("qdrift", "first-order", "suzuki", "permuted-suzuki")
ERROR_METRICS = ("worst_case", "fixed_input", "fixed_input_trace")
_STATE_KEY = 1
_PLAN_KEY = 0


def stream_id(name: str) -> int:
    """Stable integer tag of an experiment name for RNG stream keys."""
    return zlib.crc32(name.encode())


@dataclass
class ExperimentConfig:
    """Parameters of one experiment run.

    Grids (``n_grid``, ``N_grid``, ``eps_grid``) fall back to the scalar
    fields when empty. ``workers`` only affects speed, never results.
    """

    experiment: str
    model: str = "heisenberg"
    n: int = 4
    n_grid: tuple = ()
    t: float = 2.0
    N: int = 160
    N_grid: tuple = ()
    reps: int = 50
    seed: int = 0
    method: str = "qdrift"
    p: int = 1
    r: int = 1
    metrics: tuple = ("worst_case", "fixed_input")
    eps: float = 0.5
    eps_grid: tuple = ()
    workers: int = 1

    def __post_init__(self):
        self.n_grid = tuple(int(x) for x in self.n_grid)
        self.N_grid = tuple(int(x) for x in self.N_grid)
        self.eps_grid = tuple(float(x) for x in self.eps_grid)
        self.metrics = tuple(self.metrics)

    def validate(self) -> "ExperimentConfig":
        checks = [
            (self.reps >= 1, "reps", "must be >= 1"),
            (self.n >= 1 and all(k >= 1 for k in self.n_grid), "n", "qubit counts must be >= 1"),
            (self.N >= 1 and all(k >= 1 for k in self.N_grid), "gates", "gate counts must be >= 1"),
            (math.isfinite(self.t) and self.t >= 0, "t", "must be finite and >= 0"),
            (self.method in METHODS, "method", f"must be one of {METHODS}"),
            (self.p >= 1, "order", "must be >= 1"),
            (self.r >= 1, "blocks", "must be >= 1"),
            (all(m in ERROR_METRICS for m in self.metrics) and self.metrics, "metrics", f"must be a nonempty subset of {ERROR_METRICS}"),
            (self.eps > 0 and all(e >= 0 for e in self.eps_grid), "eps", "must be positive"),
            (self.workers >= 1, "workers", "must be >= 1"),
        ]
        for ok, flag, msg in checks:
            if not ok:
                raise ConfigError(flag, msg)
        return self

    @property
    def ns(self) -> tuple:
        return self.n_grid or (self.n,)

    @property
    def Ns(self) -> tuple:
        return self.N_grid or (self.N,)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration key")
        return cls(**data)


class ConfigError(ValueError):
    """Invalid experiment configuration; ``flag`` names the offending setting."""

    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


class Row(NamedTuple):
    experiment: str
    model: str
    n: int
    N: int
    rep: int
    seed: int
    metric: str
    value: float


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


@dataclass
class ResultTable:
    """Tidy rows ``(experiment, model, n, N, rep, seed, metric, value)``.

    Per-repetition rows have ``rep >= 0``; aggregates use ``rep = -1``.
    """

    config: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)

    def add(self, experiment, model, n, N, rep, seed, metric, value):
        self.rows.append(Row(experiment, model, int(n), int(N), int(rep), int(seed), metric, float(value)))

    def values(self, metric: str, n: int | None = None, N: int | None = None, rep: str = "reps") -> np.ndarray:
        """Values of ``metric``; ``rep`` is ``"reps"``, ``"aggregate"`` or ``"all"``."""
        out = []
        for row in self.rows:
            if row.metric != metric or (n is not None and row.n != n) or (N is not None and row.N != N):
                continue
            if rep == "reps" and row.rep < 0 or rep == "aggregate" and row.rep >= 0:
                continue
            out.append(row.value)
        return np.array(out, dtype=float)

    def value(self, metric: str, n: int | None = None, N: int | None = None) -> float:
        vals = self.values(metric, n, N, rep="aggregate")
        if len(vals) != 1:
            raise KeyError(f"expected one aggregate row for {metric!r} (n={n}, N={N}), found {len(vals)}")
        return float(vals[0])

    def metrics(self) -> list:
        return sorted({row.metric for row in self.rows})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"CSV header must be {','.join(CSV_HEADER)}")
        table = cls()
        for rec in reader:
            if not rec:
                continue
            e, m, n, N, rep, seed, metric, value = rec
            table.add(e, m, int(n), int(N), int(rep), int(seed), metric, float(value))
        return table

    def summary(self) -> dict:
        """``{config, metrics: {"metric@n=..,N=..": {mean, std, count}}}`` over repetition rows."""
        groups = {}
        for row in self.rows:
            if row.rep < 0:
                continue
            groups.setdefault(f"{row.metric}@n={row.n},N={row.N}", []).append(row.value)
        stats = {}
        for key in sorted(groups):
            vals = np.array(groups[key])
            std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
            stats[key] = {"mean": float(vals.mean()), "std": std, "count": int(len(vals))}
        return {"config": self.config, "version": __version__, "metrics": stats}

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


@dataclass
class CountStats:
    """Term selection counts ``m`` of a plan and ``s = (m - N p) / sqrt(N)``."""

    m: np.ndarray
    probs: np.ndarray

    @property
    def N(self) -> int:
        return int(self.m.sum())

    @property
    def s(self) -> np.ndarray:
        N = self.N
        return (self.m - N * self.probs) / math.sqrt(N)

    @classmethod
    def from_plan(cls, plan: ProductFormulaPlan, H: Hamiltonian) -> "CountStats":
        return cls(np.bincount(plan.terms, minlength=H.L), H.probs)


def _mean_std(vals) -> tuple:
    vals = np.asarray(vals, dtype=float)
    std = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
    return float(vals.mean()), std


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def run_tasks(func: Callable, tasks: Sequence, workers: int = 1) -> list:
    """Map ``func`` over ``tasks`` in order, optionally in worker processes."""
    tasks = list(tasks)
    if workers <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=chunk))


def random_product_state(n: int, rng) -> np.ndarray:
    """Tensor product of ``n`` independent Haar-random qubit states."""
    if n < 1:
        raise ValueError("n must be >= 1")
    gen = rng.generator() if isinstance(rng, SeededRng) else rng
    psi = np.ones(1, dtype=np.complex128)
    for _ in range(n):
        psi = np.kron(psi, haar_state(2, gen))
    return psi


@lru_cache(maxsize=16)
def _model(model: str, n: int) -> Hamiltonian:
    return build_model(model, n)


@lru_cache(maxsize=16)
def exact_evolution(model: str, n: int, t: float) -> np.ndarray:
    """Cached ``exp(-i t H)`` for a named model."""
    u = expm_hermitian(dense(_model(model, n)), t)
    u.setflags(write=False)
    return u


@lru_cache(maxsize=16)
def averaged_product(model: str, n: int, t: float, N: int) -> np.ndarray:
    """Cached ``(E V)^N`` for qDRIFT on a named model."""
    a = np.linalg.matrix_power(expected_step(_model(model, n), t, N), N)
    a.setflags(write=False)
    return a


def build_plan(H: Hamiltonian, method: str, t: float, N: int, rng, p: int = 1, r: int = 1) -> ProductFormulaPlan:
    """Plan with (about) ``N`` gates for a named method.

    Suzuki methods use ``r = N // (2 * 5**(p-1) * L)`` blocks, or ``r`` when that is zero.
    """
    if method == "qdrift":
        return qdrift_sample(H, t, N, rng)
    if method == "first-order":
        return first_order_plan(H, t, N)
    blocks = max(N // (2 * 5 ** (p - 1) * H.L), r, 1)
    if method == "suzuki":
        plan = suzuki2p_plan(H, t / blocks, p)
        reps = np.tile(plan.terms, blocks), np.tile(plan.durations, blocks), np.tile(plan.rescaled, blocks)
        return ProductFormulaPlan(*reps, {**plan.meta, "t": t, "r": blocks})
    if method == "permuted-suzuki":
        return permuted_suzuki_plan(H, t, blocks, p, rng)
    raise ValueError(f"unknown method {method!r}")


def _rep_streams(cfg: ExperimentConfig, n: int, N: int, rep: int):
    base = SeededRng(cfg.seed, (stream_id(cfg.experiment), n, N, rep))
    return base.child(_PLAN_KEY), base.child(_STATE_KEY)


def _error_task(cfg: ExperimentConfig, key) -> dict:
    n, N, rep = key
    H = _model(cfg.model, n)
    U = exact_evolution(cfg.model, n, cfg.t)
    plan_rng, state_rng = _rep_streams(cfg, n, N, rep)
    plan = build_plan(H, cfg.method, cfg.t, N, plan_rng, cfg.p, cfg.r)
    out = {}
    psi = random_product_state(n, state_rng)
    if "worst_case" in cfg.metrics:
        V = realize_unitary(plan, H)
        out["worst_case"] = operator_norm(U - V)
        vpsi = V @ psi
    else:
        vpsi = apply_plan(plan, H, psi)
    upsi = U @ psi
    if "fixed_input" in cfg.metrics:
        out["fixed_input"] = float(np.linalg.norm(upsi - vpsi))
    if "fixed_input_trace" in cfg.metrics:
        out["fixed_input_trace"] = pure_trace_distance(upsi, vpsi)
    return out


def _error_grid(cfg: ExperimentConfig) -> ResultTable:
    cfg.validate()
    keys = [(n, N, rep) for n in cfg.ns for N in cfg.Ns for rep in range(cfg.reps)]
    results = run_tasks(partial(_error_task, cfg), keys, cfg.workers)
    table = ResultTable(config=cfg.to_dict())
    name, model, seed = cfg.experiment, cfg.model, cfg.seed
    for (n, N, rep), res in zip(keys, results):
        for metric in cfg.metrics:
            table.add(name, model, n, N, rep, seed, metric, res[metric])
    for n in cfg.ns:
        for N in cfg.Ns:
            for metric in cfg.metrics:
                mean, std = _mean_std(table.values(metric, n, N))
                table.add(name, model, n, N, AGGREGATE_REP, seed, f"{metric}_mean", mean)
                table.add(name, model, n, N, AGGREGATE_REP, seed, f"{metric}_std", std)
    return table


def run_error_vs_gatecount(cfg: ExperimentConfig) -> ResultTable:
    """Errors of sampled product formulas across a gate-count grid.

    Per ``(N, rep)`` rows hold the requested metrics; aggregate rows hold
    ``<metric>_mean`` and ``<metric>_std``.
    """
    return _error_grid(cfg)


def run_error_vs_systemsize(cfg: ExperimentConfig) -> ResultTable:
    """Errors at fixed ``N`` across qubit counts, normalized to the smallest ``n``.

    Adds aggregate rows ``<metric>_ratio`` (mean over mean at the reference
    size), ``<metric>_ratio_std`` and ``reference_sqrt_n_ratio``.
    """
    table = _error_grid(cfg)
    ns = cfg.ns
    n_ref = ns[0]
    name, model, seed = cfg.experiment, cfg.model, cfg.seed
    for N in cfg.Ns:
        for metric in cfg.metrics:
            ref = table.value(f"{metric}_mean", n_ref, N)
            for n in ns:
                mean = table.value(f"{metric}_mean", n, N)
                std = table.value(f"{metric}_std", n, N)
                ratio = mean / ref if ref > 0 else float("nan")
                table.add(name, model, n, N, AGGREGATE_REP, seed, f"{metric}_ratio", ratio)
                table.add(name, model, n, N, AGGREGATE_REP, seed, f"{metric}_ratio_std", std / ref if ref > 0 else float("nan"))
        for n in ns:
            table.add(name, model, n, N, AGGREGATE_REP, seed, "reference_sqrt_n_ratio", math.sqrt(n / n_ref))
    return table


def ghz_state_for(n: int, touched) -> np.ndarray:
    """``|0>`` on ``touched`` qubits and GHZ on the first ``n/2`` untouched ones.

    Remaining untouched qubits are also set to ``|0>``. If fewer than ``n/2``
    qubits are untouched the state is ``|0...0>``.
    """
    touched = set(int(k) for k in touched)
    free = [k for k in range(n) if k not in touched]
    half = n // 2
    psi = np.zeros(1 << n, dtype=np.complex128)
    if len(free) < half or half == 0:
        psi[0] = 1.0
        return psi
    ones = sum(1 << (n - 1 - k) for k in free[:half])
    psi[0] = psi[ones] = 1.0 / math.sqrt(2.0)
    return psi


def ghz_counterexample(n: int, plan: ProductFormulaPlan, strict: bool = True):
    """Adversarial input for single-site Z plans on ``H = (1/n) sum_k Z_k``, ``t = pi``.

    Term ``k`` of the Hamiltonian is ``Z`` on qubit ``k``. Returns
    ``(psi, trace_distance)`` between ``U psi`` and ``V psi``.

    Raises
    ------
    ValueError
        If ``n`` is odd, or (with ``strict``) the plan touches ``n/2`` or more sites.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2")
    H = single_site_z(n, 1.0 / n)
    touched = np.unique(plan.terms)
    if strict and len(touched) >= n // 2:
        raise ValueError(f"plan touches {len(touched)} sites; need fewer than {n // 2}")
    psi = ghz_state_for(n, touched)
    upsi = np.exp(-1j * diagonal_phases(H, t=math.pi)) * psi
    vpsi = np.exp(-1j * diagonal_phases(H, plan=plan)) * psi
    return psi, pure_trace_distance(upsi, vpsi)


def _ghz_task(cfg: ExperimentConfig, rep: int) -> dict:
    n, N = cfg.n, cfg.N
    gen = _rep_streams(cfg, n, N, rep)[0].generator()
    k = n // 2 - 1
    sites = np.sort(gen.choice(n, size=k, replace=False)) if k > 0 else np.zeros(0, dtype=int)
    if k == 0:
        plan = ProductFormulaPlan([], [], [])
    else:
        terms = sites[gen.integers(0, k, size=N)]
        plan = ProductFormulaPlan(terms, np.full(N, math.pi / N), np.ones(N, dtype=bool), {"method": "single-site", "t": math.pi})
    _, dist = ghz_counterexample(n, plan)
    return {"trace_distance": dist, "sites_touched": float(len(np.unique(plan.terms)))}


def run_ghz(cfg: ExperimentConfig) -> ResultTable:
    """Random single-site plans on fewer than ``n/2`` sites and their GHZ distance."""
    cfg.validate()
    results = run_tasks(partial(_ghz_task, cfg), range(cfg.reps), cfg.workers)
    table = ResultTable(config=cfg.to_dict())
    for rep, res in enumerate(results):
        for metric in ("trace_distance", "sites_touched"):
            table.add(cfg.experiment, "single-site-z", cfg.n, cfg.N, rep, cfg.seed, metric, res[metric])
    dists = table.values("trace_distance")
    table.add(cfg.experiment, "single-site-z", cfg.n, cfg.N, AGGREGATE_REP, cfg.seed, "trace_distance_min", dists.min())
    return table


def _diag_task(cfg: ExperimentConfig, signs, rep: int) -> dict:
    n, N = cfg.n, cfg.N
    H = all_z_strings(n, signs, weight=1.0 / (1 << n))
    plan = qdrift_sample(H, cfg.t, N, _rep_streams(cfg, n, N, rep)[0])
    dev = np.abs(diagonal_phases(H, plan=plan) - diagonal_phases(H, t=cfg.t))
    return {
        "max_deviation": float(dev.max()),
        "mean_deviation": float(dev.mean()),
        "fixed_deviation": float(dev[0]),
    }


def diagonal_union_bound_demo(cfg: ExperimentConfig, signs=None) -> ResultTable:
    """Concentration of qDRIFT phases on ``2**-n sum_p alpha_p Z_p``.

    Per repetition: the largest deviation ``max_b |S_hat(b) - S(b)|``, the
    mean over ``b`` and the deviation at ``b = 0``. Aggregates report how often
    each exceeds ``cfg.eps``.
    """
    cfg.validate()
    n = cfg.n
    signs = np.ones(1 << n) if signs is None else np.asarray(signs, dtype=float)
    results = run_tasks(partial(_diag_task, cfg, signs), range(cfg.reps), cfg.workers)
    table = ResultTable(config=cfg.to_dict())
    name, seed, N = cfg.experiment, cfg.seed, cfg.N
    for rep, res in enumerate(results):
        for metric in ("max_deviation", "mean_deviation", "fixed_deviation"):
            table.add(name, "all-z", n, N, rep, seed, metric, res[metric])
    for metric, label in (("max_deviation", "max_exceed_fraction"), ("fixed_deviation", "fixed_exceed_fraction")):
        frac = float(np.mean(table.values(metric) > cfg.eps))
        table.add(name, "all-z", n, N, AGGREGATE_REP, seed, label, frac)
    return table


DEFAULT_EPS_GRID = tuple(round(0.05 * k, 10) for k in range(1, 61))


def _tail_task(cfg: ExperimentConfig, psi, rep: int) -> dict:
    n, N = cfg.n, cfg.N
    H = _model(cfg.model, n)
    U = exact_evolution(cfg.model, n, cfg.t)
    avg = averaged_product(cfg.model, n, cfg.t, N)
    V = realize_unitary(qdrift_sample(H, cfg.t, N, _rep_streams(cfg, n, N, rep)[0]), H)
    vpsi = V @ psi
    return {
        "fluctuation": operator_norm(V - avg),
        "fixed_l2": float(np.linalg.norm(vpsi - avg @ psi)),
        "fixed_trace": pure_trace_distance(U @ psi, vpsi),
    }


TAIL_PAIRS = (
    ("fluctuation", "freedman"),
    ("fixed_l2", "vector_l2"),
    ("fixed_trace", "vector_trace"),
)


def tail_dominance_study(cfg: ExperimentConfig) -> ResultTable:
    """Empirical survival functions of qDRIFT deviations against the analytic tails.

    Deviations per repetition: ``fluctuation = ||V - (E V)^N||``,
    ``fixed_l2 = ||(V - (E V)^N) psi||`` and ``fixed_trace``, the trace
    distance of ``U psi`` and ``V psi``, for one fixed random product state
    ``psi``. For every ``eps`` on the grid the table holds the survival
    fraction ``P[X >= eps]``, the bound, and a violation flag.
    """
    cfg.validate()
    n, N, t = cfg.n, cfg.N, cfg.t
    H = _model(cfg.model, n)
    lam = H.lam
    psi = random_product_state(n, SeededRng(cfg.seed, (stream_id(cfg.experiment), n, N)).child(_STATE_KEY))
    results = run_tasks(partial(_tail_task, cfg, psi), range(cfg.reps), cfg.workers)
    table = ResultTable(config=cfg.to_dict())
    name, model, seed = cfg.experiment, cfg.model, cfg.seed
    for rep, res in enumerate(results):
        for metric, _ in TAIL_PAIRS:
            table.add(name, model, n, N, rep, seed, metric, res[metric])
    bounds = {
        "freedman": lambda e: freedman_tail(e, t, lam, N, n),
        "vector_l2": lambda e: vector_tail_l2(e, t, lam, N),
        "vector_trace": lambda e: vector_tail_trace(e, t, lam, N),
    }
    grid = cfg.eps_grid or DEFAULT_EPS_GRID
    violations = {m: 0 for m, _ in TAIL_PAIRS}
    for eps in grid:
        for metric, bname in TAIL_PAIRS:
            surv = float(np.mean(table.values(metric) >= eps))
            bound = bounds[bname](eps)
            tag = f"@eps={eps!r}"
            table.add(name, model, n, N, AGGREGATE_REP, seed, f"survival_{metric}{tag}", surv)
            table.add(name, model, n, N, AGGREGATE_REP, seed, f"bound_{bname}{tag}", bound)
            if bound < 1.0 and surv > bound:
                violations[metric] += 1
    for metric, count in violations.items():
        table.add(name, model, n, N, AGGREGATE_REP, seed, f"violations_{metric}", count)
    for metric, _ in TAIL_PAIRS:
        table.add(name, model, n, N, AGGREGATE_REP, seed, f"median_{metric}", float(np.median(table.values(metric))))
    return table


def single_site_lower_bound(n: int, t: float, N: int) -> float:
    """``sqrt(2/pi) sqrt((n-1) t**2 lam**2 / N) - (n-1) t**2 lam**2 / (2N)`` with ``lam = n``."""
    x = (n - 1) * (t * n) ** 2 / N
    return math.sqrt(2.0 / math.pi) * math.sqrt(x) - 0.5 * x


def many_body_lower_bound(n: int, t: float, N: int) -> float:
    """``sqrt(n t**2 lam**2 / N) / 2 - 2 (n + 1/2) t**2 lam**2 / N`` with ``lam = 2**n``."""
    x = (t * (1 << n)) ** 2 / N
    return 0.5 * math.sqrt(n * x) - 2.0 * (n + 0.5) * x


def max_phase_error(theta) -> float:
    """``|| exp(-i sum_k theta_k Z_k) - I ||`` for commuting single-site rotations.

    The spectrum is ``exp(-i sum_k s_k theta_k)`` over all sign choices, so the
    norm is ``2 sin(sum |theta_k| / 2)`` while that sum stays below ``pi`` and
    otherwise the largest ``2 |sin(phi/2)|`` over all signed sums.
    """
    a = np.abs(np.asarray(theta, dtype=float))
    total = float(a.sum())
    if total <= math.pi:
        return 2.0 * math.sin(total / 2.0)
    sums = np.zeros(1)
    for x in a:
        sums = np.concatenate([sums + x, sums - x])
    return float(np.max(2.0 * np.abs(np.sin(sums / 2.0))))


def single_site_error(counts, n: int, t: float, N: int) -> float:
    """Exact ``||V - U||`` for qDRIFT on ``sum_k Z_k`` with site counts ``counts``."""
    lam = float(n)
    theta = (t * lam / N) * (np.asarray(counts, dtype=float) - N / n)
    return max_phase_error(theta)


class SaturationResult(NamedTuple):
    mean: float
    se: float
    bound: float
    table: ResultTable


def _saturation_single_task(cfg: ExperimentConfig, rep: int) -> float:
    n, N = cfg.n, cfg.N
    H = single_site_z(n, 1.0)
    plan = qdrift_sample(H, cfg.t, N, _rep_streams(cfg, n, N, rep)[0])
    return single_site_error(CountStats.from_plan(plan, H).m, n, cfg.t, N)


def _saturation_many_task(cfg: ExperimentConfig, rep: int) -> float:
    n, N = cfg.n, cfg.N
    H = all_z_strings(n)
    plan = qdrift_sample(H, cfg.t, N, _rep_streams(cfg, n, N, rep)[0])
    phi = diagonal_phases(H, plan=plan) - diagonal_phases(H, t=cfg.t)
    return float(np.max(2.0 * np.abs(np.sin(phi / 2.0))))


def _saturation(cfg, task, bound, model) -> SaturationResult:
    cfg.validate()
    errs = np.array(run_tasks(partial(task, cfg), range(cfg.reps), cfg.workers))
    table = ResultTable(config=cfg.to_dict())
    name, n, N, seed = cfg.experiment, cfg.n, cfg.N, cfg.seed
    for rep, e in enumerate(errs):
        table.add(name, model, n, N, rep, seed, "error", e)
    mean, std = _mean_std(errs)
    se = std / math.sqrt(len(errs))
    for metric, val in (("error_mean", mean), ("error_se", se), ("lower_bound", bound)):
        table.add(name, model, n, N, AGGREGATE_REP, seed, metric, val)
    return SaturationResult(mean, se, bound, table)


def saturation_single_site(cfg: ExperimentConfig) -> SaturationResult:
    """Monte Carlo ``E||U - V||`` for qDRIFT on ``sum_k Z_k`` against its lower bound."""
    return _saturation(cfg, _saturation_single_task, single_site_lower_bound(cfg.n, cfg.t, cfg.N), "single-site-z")


def saturation_many_body(cfg: ExperimentConfig) -> SaturationResult:
    """Monte Carlo ``E||U - V||`` for qDRIFT on ``sum_p Z_p`` against its lower bound."""
    if cfg.n > 12:
        raise ConfigError("n", "many-body saturation needs n <= 12")
    return _saturation(cfg, _saturation_many_task, many_body_lower_bound(cfg.n, cfg.t, cfg.N), "all-z")


def suzuki_local_errors(H: Hamiltonian, p: int, taus) -> np.ndarray:
    """``||S_2p(tau) - exp(-i tau H)||`` for each ``tau``."""
    D = dense(H)
    return np.array([operator_norm(realize_unitary(suzuki2p_plan(H, tau, p), H) - expm_hermitian(D, tau)) for tau in taus])


def _suzuki_task(cfg: ExperimentConfig, key) -> dict:
    p, rep = key
    n = cfg.n
    H = _model(cfg.model, n)
    U = exact_evolution(cfg.model, n, cfg.t)
    gates = cfg.r * 2 * 5 ** (p - 1) * H.L
    base = SeededRng(cfg.seed, (stream_id(cfg.experiment), n, p, rep))
    det = build_plan(H, "suzuki", cfg.t, gates, None, p, cfg.r)
    perm = permuted_suzuki_plan(H, cfg.t, cfg.r, p, base.child(0))
    qd = qdrift_sample(H, cfg.t, gates, base.child(1))
    return {
        "gates": gates,
        f"suzuki{2 * p}_deterministic": operator_norm(realize_unitary(det, H) - U),
        f"suzuki{2 * p}_permuted": operator_norm(realize_unitary(perm, H) - U),
        f"qdrift_matched_p{p}": operator_norm(realize_unitary(qd, H) - U),
    }


def suzuki_comparison(cfg: ExperimentConfig, orders=(1, 2)) -> ResultTable:
    """Deterministic and permuted ``S_2p`` with ``cfg.r`` blocks, plus qDRIFT at equal gate count."""
    cfg.validate()
    keys = [(p, rep) for p in orders for rep in range(cfg.reps)]
    results = run_tasks(partial(_suzuki_task, cfg), keys, cfg.workers)
    table = ResultTable(config=cfg.to_dict())
    name, model, n, seed = cfg.experiment, cfg.model, cfg.n, cfg.seed
    for (p, rep), res in zip(keys, results):
        for metric, val in res.items():
            if metric != "gates":
                table.add(name, model, n, res["gates"], rep, seed, metric, val)
    for p in orders:
        gates = results[keys.index((p, 0))]["gates"]
        for metric in (f"suzuki{2 * p}_deterministic", f"suzuki{2 * p}_permuted", f"qdrift_matched_p{p}"):
            mean, std = _mean_std(table.values(metric))
            table.add(name, model, n, gates, AGGREGATE_REP, seed, f"{metric}_mean", mean)
            table.add(name, model, n, gates, AGGREGATE_REP, seed, f"{metric}_std", std)
    return table


DEFAULTS = {
    "fig3-gatecount": dict(model="heisenberg", n=4, t=2.0, N_grid=(10, 20, 40, 80, 160, 320, 640), reps=50),
    "fig3-systemsize": dict(model="heisenberg", n_grid=(4, 5, 6, 7, 8), t=2.0, N=160, reps=50),
    "ghz": dict(model="single-site-z", n=8, t=math.pi, N=12, reps=10),
    "diagonal-union": dict(model="all-z", n=8, t=1.0, N=32, reps=200, eps=0.5),
    "tails": dict(model="heisenberg", n=4, t=2.0, N=160, reps=1000),
    "saturation-single": dict(model="single-site-z", n=8, t=1.0, N=10_000, reps=500),
    "saturation-many": dict(model="all-z", n=6, t=0.15625, N=10_000, reps=500),
    "suzuki": dict(model="heisenberg", n=3, t=1.0, r=4, reps=20),
}


def default_config(name: str, **overrides) -> ExperimentConfig:
    if name not in DEFAULTS:
        raise ConfigError("experiment", f"unknown experiment {name!r}; choose from {sorted(DEFAULTS)}")
    return ExperimentConfig(experiment=name, **{**DEFAULTS[name], **overrides})


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    """Dispatch a configuration to its experiment by name."""
    name = cfg.experiment
    if name == "fig3-gatecount":
        return run_error_vs_gatecount(cfg)
    if name == "fig3-systemsize":
        return run_error_vs_systemsize(cfg)
    if name == "ghz":
        return run_ghz(cfg)
    if name == "diagonal-union":
        return diagonal_union_bound_demo(cfg)
    if name == "tails":
        return tail_dominance_study(cfg)
    if name == "saturation-single":
        return saturation_single_site(cfg).table
    if name == "saturation-many":
        return saturation_many_body(cfg).table
    if name == "suzuki":
        return suzuki_comparison(cfg)
    raise ConfigError("experiment", f"unknown experiment {name!r}; choose from {sorted(DEFAULTS)}")
