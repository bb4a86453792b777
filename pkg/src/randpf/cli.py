"""Command-line interface: ``randpf {simulate,bounds,experiment,plot}``.

Exit codes: 0 on success, 1 on numerical failure, 2 on invalid input.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .experiments import DEFAULTS, ConfigError, ExperimentConfig, ResultTable, default_config, run_experiment
from .formulas import SeededRng, permuted_suzuki_plan, qdrift_sample, first_order_plan, realize_unitary, suzuki2p_plan
from .hamiltonian import DENSE_MAX_QUBITS, MODELS, Hamiltonian, build_model, dense
from .linalg import EigenConvergenceError, expm_hermitian, unitary_diamond_distance
from .metrics import (
    BoundParams,
    bias_bound,
    error_decomposition,
    freedman_tail,
    gate_counts,
    step_bias_bound,
    step_radius_bound,
    theorem3_bounds,
    vector_tail_l2,
    vector_tail_trace,
    worst_case_error,
)

EXIT_OK, EXIT_NUMERIC, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    def __init__(self, flag, message):
        super().__init__(f"--{flag}: {message}")


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError("config", f"cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config", "file must hold a JSON object")
    return data


def _merge(args, keys, base):
    """Config-file values overridden by flags given on the command line."""
    merged = dict(base)
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _write_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


SIM_KEYS = ("model", "n", "t", "method", "gates", "order", "blocks", "seed", "scale", "hamiltonian", "diamond")
SIM_DEFAULTS = dict(model="heisenberg", n=4, t=2.0, method="qdrift", gates=160, order=1, blocks=1, seed=0, scale=None, hamiltonian=None, diamond=False)


def _sim_hamiltonian(cfg):
    if cfg["hamiltonian"]:
        try:
            with open(cfg["hamiltonian"]) as fh:
                return Hamiltonian.from_json(fh.read())
        except (OSError, ValueError) as exc:
            raise UsageError("hamiltonian", str(exc)) from None
    if cfg["model"] not in MODELS:
        raise UsageError("model", f"unknown model {cfg['model']!r}; choose from {sorted(MODELS)}")
    kwargs = {}
    if cfg["scale"] is not None:
        if cfg["model"] != "single-site-z":
            raise UsageError("scale", "only applies to the single-site-z model")
        kwargs["scale"] = float(cfg["scale"])
    try:
        return build_model(cfg["model"], int(cfg["n"]), **kwargs)
    except ValueError as exc:
        raise UsageError("n", str(exc)) from None


def _validate_sim(cfg):
    if not (isinstance(cfg["n"], int) and 1 <= cfg["n"] <= DENSE_MAX_QUBITS):
        raise UsageError("n", f"must be an integer in [1, {DENSE_MAX_QUBITS}]")
    if not (math.isfinite(cfg["t"]) and cfg["t"] >= 0):
        raise UsageError("t", "must be finite and >= 0")
    if not (isinstance(cfg["gates"], int) and cfg["gates"] >= 1):
        raise UsageError("gates", "must be a positive integer")
    if cfg["method"] not in ("qdrift", "first-order", "suzuki", "permuted-suzuki"):
        raise UsageError("method", "must be qdrift, first-order, suzuki or permuted-suzuki")
    if cfg["order"] < 1:
        raise UsageError("order", "must be >= 1")
    if cfg["blocks"] < 1:
        raise UsageError("blocks", "must be >= 1")


def cmd_simulate(args):
    cfg = _merge(args, SIM_KEYS, {**SIM_DEFAULTS, **_load_config(args.config)})
    _validate_sim(cfg)
    H = _sim_hamiltonian(cfg)
    t, N, seed = float(cfg["t"]), int(cfg["gates"]), int(cfg["seed"])
    method = cfg["method"]
    if method == "qdrift":
        plan = qdrift_sample(H, t, N, SeededRng(seed))
    elif method == "first-order":
        if N % H.L:
            raise UsageError("gates", f"first-order needs a multiple of L={H.L}")
        plan = first_order_plan(H, t, N)
    elif method == "suzuki":
        r = int(cfg["blocks"])
        block = suzuki2p_plan(H, t / r, int(cfg["order"]))
        plan = type(block)(np.tile(block.terms, r), np.tile(block.durations, r), np.tile(block.rescaled, r), {**block.meta, "t": t, "r": r})
    else:
        plan = permuted_suzuki_plan(H, t, int(cfg["blocks"]), int(cfg["order"]), SeededRng(seed))
    U = expm_hermitian(dense(H), t)
    V = realize_unitary(plan, H)
    report = {
        "version": __version__,
        "config": cfg,
        "hamiltonian": {"n": H.n, "L": H.L, "lam": H.lam, "Lam": H.Lam, "fingerprint": H.fingerprint()},
        "gates": len(plan),
        "worst_case_error": worst_case_error(U, V),
    }
    if method == "qdrift":
        report["decomposition"] = error_decomposition(H, t, N, plan, U).to_dict()
        report["bias_bound"] = bias_bound(t, H.lam, N)
    if cfg["diamond"]:
        report["diamond_distance"] = unitary_diamond_distance(U, V)
    if args.plan_out:
        with open(args.plan_out, "w") as fh:
            fh.write(plan.to_json() + "\n")
    _write_json(report, args.out)
    return EXIT_OK


def cmd_bounds(args):
    t, lam, n, eps, delta = args.t, args.lam, args.n, args.eps, args.delta
    if not 0 < eps < 1:
        raise UsageError("eps", "must lie in (0, 1)")
    if not 0 < delta < 1:
        raise UsageError("delta", "must lie in (0, 1)")
    if t < 0 or lam <= 0 or n < 1:
        raise UsageError("t" if t < 0 else "lam" if lam <= 0 else "n", "out of range")
    out = {"inputs": {"t": t, "lam": lam, "n": n, "eps": eps, "delta": delta, "gates": args.gates}, "gate_counts": gate_counts(eps, delta, t, lam, n)}
    if args.gates is not None:
        N = args.gates
        if N < 1:
            raise UsageError("gates", "must be >= 1")
        out["at_gates"] = {
            "bias_bound": bias_bound(t, lam, N),
            "step_bias_bound": step_bias_bound(t, lam, N),
            "step_radius_bound": step_radius_bound(t, lam, N),
            "freedman_tail": freedman_tail(eps, t, lam, N, n),
            "freedman_tail_simplified": freedman_tail(eps, t, lam, N, n, simplified=True),
            "vector_tail_l2": vector_tail_l2(eps, t, lam, N),
            "vector_tail_trace": vector_tail_trace(eps, t, lam, N),
            "error_scales": theorem3_bounds(BoundParams.qdrift(t, lam, N, n), const=args.const),
        }
    _write_json(out, None)
    return EXIT_OK


EXP_KEYS = ("model", "n", "n_grid", "t", "N", "N_grid", "reps", "seed", "method", "p", "r", "metrics", "eps", "eps_grid", "workers")


def cmd_experiment(args):
    base = _load_config(args.config)
    base.pop("experiment", None)
    if args.nmin is not None or args.nmax is not None:
        grid = DEFAULTS[args.name].get("n_grid") or (4,)
        lo = args.nmin if args.nmin is not None else min(grid)
        hi = args.nmax if args.nmax is not None else max(grid)
        if lo > hi:
            raise UsageError("nmin", "must not exceed --nmax")
        args.n_grid = tuple(range(lo, hi + 1))
    overrides = _merge(args, EXP_KEYS, base)
    try:
        cfg = default_config(args.name, **overrides).validate()
    except ConfigError as exc:
        raise UsageError(exc.flag, str(exc).split(": ", 1)[-1]) from None
    except TypeError as exc:
        raise UsageError("config", str(exc)) from None
    table = run_experiment(cfg)
    if args.out:
        table.write_csv(args.out)
    else:
        sys.stdout.write(table.to_csv())
    if args.summary:
        _write_json(table.summary(), args.summary)
    return EXIT_OK


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _series(table: ResultTable, x: str, metrics):
    data = {}
    for row in table.rows:
        if row.rep >= 0 or (metrics and row.metric not in metrics):
            continue
        if not metrics and (row.metric.endswith("_std") or "@" in row.metric):
            continue
        data.setdefault(row.metric, {})[getattr(row, x)] = row.value
    return {m: sorted(pts.items()) for m, pts in data.items() if len(pts) >= 1}


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0**k for k in range(a, b + 1) if lo <= 10.0**k <= hi] or [lo, hi]
    return list(np.linspace(lo, hi, 5))


def render_svg(series: dict, references: dict, xlabel: str, ylabel: str, title: str = "", log: bool = True) -> str:
    """Line chart as SVG 1.1 text: one ``<path>`` per series, ``<polyline>`` per reference."""
    width, height, ml, mr, mt, mb = 640, 420, 70, 170, 40, 50
    pts = [p for s in (series, references) for v in s.values() for p in v]
    xs = np.array([p[0] for p in pts], dtype=float)
    ys = np.array([p[1] for p in pts], dtype=float)
    ok = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = xs[ok], ys[ok]
    logx = log and np.all(xs > 0)
    logy = log and np.all(ys > 0)
    tx = np.log10 if logx else (lambda v: np.asarray(v, dtype=float))
    ty = np.log10 if logy else (lambda v: np.asarray(v, dtype=float))
    x0, x1 = float(np.min(tx(xs))), float(np.max(tx(xs)))
    y0, y1 = float(np.min(ty(ys))), float(np.max(ty(ys)))
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw, ph = width - ml - mr, height - mt - mb

    def px(v):
        return ml + (float(tx(v)) - x0) / (x1 - x0) * pw

    def py(v):
        return mt + ph - (float(ty(v)) - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    xr = (10**x0, 10**x1) if logx else (x0, x1)
    yr = (10**y0, 10**y1) if logy else (y0, y1)
    for v in _ticks(*xr, logx):
        out.append(f'<text x="{px(v):.2f}" y="{mt + ph + 16}" font-size="11" text-anchor="middle">{v:.3g}</text>')
    for v in _ticks(*yr, logy):
        out.append(f'<text x="{ml - 6}" y="{py(v) + 4:.2f}" font-size="11" text-anchor="end">{v:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 12}" font-size="13" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2}" font-size="13" text-anchor="middle" transform="rotate(-90 16 {mt + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="22" font-size="14" text-anchor="middle">{escape(title)}</text>')
    legend_y = mt + 10
    for k, (name, pts_) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        good = [(a, b) for a, b in pts_ if math.isfinite(a) and math.isfinite(b) and (not logx or a > 0) and (not logy or b > 0)]
        d = " ".join(f"{'M' if i == 0 else 'L'}{px(a):.2f},{py(b):.2f}" for i, (a, b) in enumerate(good))
        out.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="2"><title>{escape(name)}</title></path>')
        out.append(f'<text x="{ml + pw + 10}" y="{legend_y}" font-size="11" fill="{color}">{escape(name)}</text>')
        legend_y += 16
    for name, pts_ in references.items():
        good = [(a, b) for a, b in pts_ if (not logx or a > 0) and (not logy or b > 0)]
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in good)
        out.append(f'<polyline points="{coords}" fill="none" stroke="gray" stroke-dasharray="5,4"><title>{escape(name)}</title></polyline>')
        out.append(f'<text x="{ml + pw + 10}" y="{legend_y}" font-size="11" fill="gray">{escape(name)}</text>')
        legend_y += 16
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args):
    try:
        with open(args.csv) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError("csv", str(exc)) from None
    if not text.strip():
        raise UsageError("csv", "file is empty")
    try:
        table = ResultTable.from_csv(text)
    except ValueError as exc:
        raise UsageError("csv", str(exc)) from None
    metrics = tuple(m for m in (args.metrics or "").split(",") if m)
    x = args.x
    if x is None:
        x = "N" if len({row.N for row in table.rows}) > 1 else "n"
    series = _series(table, x, metrics)
    refs = {m: v for m, v in series.items() if m.startswith("reference")}
    series = {m: v for m, v in series.items() if not m.startswith("reference")}
    if not series:
        raise UsageError("csv", "no aggregate series to plot")
    xs = sorted({a for v in series.values() for a, _ in v})
    if args.reference == "sqrt-n":
        refs["sqrt(n/n0)"] = [(a, math.sqrt(a / xs[0])) for a in xs]
    elif args.reference == "inv-sqrt-N":
        first = next(iter(series.values()))
        scale = first[0][1] * math.sqrt(first[0][0])
        refs["N^-1/2"] = [(a, scale / math.sqrt(a)) for a in xs]
    svg = render_svg(series, refs, args.xlabel or x, args.ylabel or "error", args.title or "", log=not args.linear)
    with open(args.out, "w") as fh:
        fh.write(svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="randpf", description="Randomized product formula simulations and bounds.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="build one product formula and report its error")
    sim.add_argument("--config", help="JSON file with default values for the flags below")
    sim.add_argument("--model", choices=sorted(MODELS))
    sim.add_argument("--hamiltonian", help="Hamiltonian JSON file, overrides --model")
    sim.add_argument("--n", type=int)
    sim.add_argument("--scale", type=float, help="coefficient for the single-site-z model")
    sim.add_argument("--t", type=float)
    sim.add_argument("--method", choices=["qdrift", "first-order", "suzuki", "permuted-suzuki"])
    sim.add_argument("--gates", type=int, help="gate count N for qdrift and first-order")
    sim.add_argument("--order", type=int, help="Suzuki order parameter p")
    sim.add_argument("--blocks", type=int, help="Suzuki block count r")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--diamond", action="store_const", const=True, help="also compute the diamond distance")
    sim.add_argument("--out", help="report JSON path (stdout if omitted)")
    sim.add_argument("--plan-out", help="plan JSON path")
    sim.set_defaults(func=cmd_simulate)

    bnd = sub.add_parser("bounds", help="gate counts and tail bounds")
    bnd.add_argument("--t", type=float, default=2.0)
    bnd.add_argument("--lam", type=float, default=3.0)
    bnd.add_argument("--n", type=int, default=4)
    bnd.add_argument("--eps", type=float, default=0.5)
    bnd.add_argument("--delta", type=float, default=0.1)
    bnd.add_argument("--gates", type=int, help="also evaluate bounds at this gate count")
    bnd.add_argument("--const", type=float, default=1.0, help="absolute constant of the typical/fixed scales")
    bnd.set_defaults(func=cmd_bounds)

    exp = sub.add_parser("experiment", help="run a named Monte Carlo experiment")
    exp.add_argument("name", choices=sorted(DEFAULTS))
    exp.add_argument("--config", help="JSON file mirroring the experiment configuration")
    exp.add_argument("--model", choices=sorted(MODELS))
    exp.add_argument("--n", type=int)
    exp.add_argument("--n-grid", dest="n_grid", type=_int_list)
    exp.add_argument("--nmin", type=int)
    exp.add_argument("--nmax", type=int)
    exp.add_argument("--t", type=float)
    exp.add_argument("--gates", dest="N", type=int)
    exp.add_argument("--gates-grid", dest="N_grid", type=_int_list)
    exp.add_argument("--reps", type=int)
    exp.add_argument("--seed", type=int)
    exp.add_argument("--method", choices=["qdrift", "first-order", "suzuki", "permuted-suzuki"])
    exp.add_argument("--order", dest="p", type=int)
    exp.add_argument("--blocks", dest="r", type=int)
    exp.add_argument("--metrics", type=lambda s: tuple(x for x in s.split(",") if x))
    exp.add_argument("--eps", type=float)
    exp.add_argument("--eps-grid", dest="eps_grid", type=_float_list)
    exp.add_argument("--workers", type=int)
    exp.add_argument("--out", help="CSV path (stdout if omitted)")
    exp.add_argument("--summary", help="JSON summary path")
    exp.set_defaults(func=cmd_experiment)

    plt = sub.add_parser("plot", help="render an experiment CSV as an SVG line chart")
    plt.add_argument("csv")
    plt.add_argument("--out", required=True)
    plt.add_argument("--x", choices=["N", "n"])
    plt.add_argument("--metrics", help="comma-separated aggregate metrics to draw")
    plt.add_argument("--xlabel")
    plt.add_argument("--ylabel")
    plt.add_argument("--title")
    plt.add_argument("--linear", action="store_true", help="linear axes instead of log-log")
    plt.add_argument("--reference", choices=["none", "sqrt-n", "inv-sqrt-N"], default="none")
    plt.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"randpf {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (EigenConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"randpf {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
