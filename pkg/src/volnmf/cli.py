"""Command-line entry point: ``volnmf {generate,solve,evaluate,reproduce,plot-simplex,rerun}``.

Exit codes: 0 success, 2 usage or input error, 3 solver hit ``--max-outer``
without converging (results are still written), 4 runtime error,
5 a reproduction run violated the expected volume ordering.
"""

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import datagen, metrics, plotting, reproduce, solver
from .errors import ParseError, VolNMFError

log = logging.getLogger("volnmf")

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED, EXIT_RUNTIME, EXIT_ORDERING = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _default_seed():
    try:
        return int(os.environ.get("VOLNMF_SEED", "0"))
    except ValueError:
        return 0


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_matrix(path, a, row_labels=None, col_labels=None):
    datagen.write_csv(datagen.Dataset(x=np.asarray(a), row_labels=row_labels, col_labels=col_labels), path)
    return str(path)


def _write_rows(path, rows, fields):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: datagen.format_float(v) if isinstance(v, float) else v for k, v in r.items()})
    return str(path)


def _load(path):
    try:
        return datagen.load_csv(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _manifest(args, command, dataset_id, outputs, metrics_report=None, config=None, started=None, **extra):
    m = {
        "command": command,
        "argv": args.argv,
        "dataset_id": dataset_id,
        "seed": getattr(args, "seed", None),
        "config": config,
        "outputs": outputs,
        "metrics": metrics_report,
        "wall_time_ms": int(1000 * (time.perf_counter() - started)) if started else 0,
    }
    m.update(extra)
    return m


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# Commands -----------------------------------------------------------------


def cmd_generate(args):
    started = time.perf_counter()
    try:
        spec = datagen.SyntheticSpec(
            setting=datagen.Setting(args.setting), i=args.i, j=args.j, cap=args.cap,
            beta=args.beta, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = datagen.generate_synthetic(spec)
    out = _out_dir(args)
    outputs = [
        _write_matrix(out / "X.csv", ds.x),
        _write_matrix(out / "M_true.csv", ds.m_true),
        _write_matrix(out / "H_true.csv", ds.h_true),
    ]
    outputs.append(str(out / "manifest.json"))
    _write_json(out / "manifest.json", _manifest(
        args, "generate", f"synthetic:{spec.setting.value}:seed={spec.seed}", outputs,
        config={"setting": spec.setting.value, "i": spec.i, "j": spec.j, "k": spec.k,
                "cap": spec.cap, "beta": spec.beta, "seed": spec.seed},
        started=started,
    ))
    return EXIT_OK


def _solver_config(args, k):
    try:
        return solver.SolverConfig(
            k=k, lambda_prime=args.lambda_prime, delta=args.delta, max_outer=args.max_outer,
            inner_iter=args.inner_iter, seed=args.seed, placement=args.placement,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_solve(args):
    started = time.perf_counter()
    ds = _load(args.x)
    x = ds.x
    if not 1 <= args.k <= min(x.shape):
        raise UsageError(f"--k {args.k} must lie in [1, {min(x.shape)}] for X of shape {x.shape}")
    if np.any(x < 0):
        raise UsageError("X has negative entries")
    cfg = _solver_config(args, args.k)
    res = solver.best_of_restarts(reproduce.METHODS[args.method], x, cfg, args.restarts)
    out = _out_dir(args)
    klabels = [f"k{i + 1}" for i in range(args.k)]
    outputs = [
        _write_matrix(out / "M.csv", res.m, ds.row_labels, klabels if ds.row_labels else None),
        _write_matrix(out / "H.csv", res.h, klabels if ds.col_labels else None, ds.col_labels),
    ]
    hist = [
        {"iteration": i + 1, "objective": o, "fit": f, "volume": v}
        for i, (o, f, v) in enumerate(zip(res.objective_history, res.fit_history, res.volume_history))
    ]
    outputs.append(_write_rows(out / "history.csv", hist, ["iteration", "objective", "fit", "volume"]))
    report = metrics.metrics_report(x, res.m, res.h, args.delta_metric)
    outputs.append(str(out / "manifest.json"))
    _write_json(out / "manifest.json", _manifest(
        args, "solve", str(args.x), outputs, report.to_dict(), cfg.to_dict(), started,
        method=args.method, restarts=args.restarts, lam=res.lam, converged=res.converged,
        iterations_run=res.iterations_run,
    ))
    log.info("objective %.10g after %d iterations (converged=%s)", res.objective, res.iterations_run, res.converged)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_evaluate(args):
    x = _load(args.x).x
    m = _load(args.m).x
    h = _load(args.h).x
    report = {"metrics": metrics.metrics_report(x, m, h, args.delta_metric).to_dict()}
    if args.m_true:
        al = metrics.align_basis(m, _load(args.m_true).x)
        report["alignment"] = {
            "permutation": list(al.permutation),
            "scaling": list(al.scaling),
            "mean_abs_error": al.mean_abs_error,
            "per_column_error": list(al.per_column_error),
        }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        _write_json(_out_dir(args) / "report.json", report)
    return EXIT_OK


def _plot_inputs(args):
    m_est = _load(args.m_est).x
    m_true = _load(args.m_true).x if args.m_true else None
    h_true = _load(args.h_true).x if args.h_true else None
    x = _load(args.x).x if args.x else None
    if h_true is None and x is None:
        raise UsageError("plot-simplex needs --h-true or --x")
    return m_est, m_true, h_true, x


def cmd_plot_simplex(args):
    m_est, m_true, h_true, x = _plot_inputs(args)
    svg, _ = plotting.plot_simplex(m_est, m_true=m_true, h_true=h_true, x=x)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg + "\n", encoding="utf-8")
    return EXIT_OK


CELL_FIELDS = [
    "experiment", "row", "method", "lambda_prime", "volume_logdet", "aligned_error",
    "published_volume", "objective", "converged", "iterations", "monotone", "selected",
]


def _reproduce_synthetic(args, out, started):
    cfg = _solver_config(args, 3)
    run = reproduce.run_synthetic(seed=args.seed, restarts=args.restarts, config=cfg,
                                   jobs=args.jobs, delta_metric=args.delta_metric)
    outputs = [_write_rows(out / "sweep.csv", [c.to_dict() for c in run.cells], CELL_FIELDS)]
    summary = [dict(c.to_dict(), setting=c.row) for c in run.cells if c.selected]
    outputs.append(_write_rows(out / "summary.csv", summary,
                               ["setting", "method", "volume_logdet", "aligned_error", "lambda_prime", "published_volume"]))
    for setting, ds in run.datasets.items():
        sub = out / setting.value
        sub.mkdir(exist_ok=True)
        outputs.append(_write_matrix(sub / "X.csv", ds.x))
        outputs.append(_write_matrix(sub / "M_true.csv", ds.m_true))
        for method in ("mvc", "mav"):
            res = run.results[(setting, method, run.selected(setting.value, method).lambda_prime)]
            outputs.append(_write_matrix(sub / f"M_{method}.csv", res.m))
    ok = run.ordering_ok()
    return outputs, ok, cfg


def _reproduce_time_allocation(args, out, started):
    cfg = _solver_config(args, 3)
    run = reproduce.run_time_allocation(seed=args.seed, restarts=args.restarts, config=cfg,
                                        jobs=args.jobs, delta_metric=args.delta_metric)
    ds = run.dataset
    outputs = [_write_rows(out / "sweep.csv", [c.to_dict() for c in run.cells], CELL_FIELDS)]
    outputs.append(_write_matrix(out / "M_k1.csv", run.k1_m, ds.row_labels, ["k1"]))
    mav = run.selected_result("mav")
    mvc = run.selected_result("mvc")
    m_mvc, h_mvc = reproduce.order_like(mvc.m, mvc.h, mav.m)
    labels = [f"k{i + 1}" for i in range(3)]
    for name, m, h in (("mvc", m_mvc, h_mvc), ("mav", mav.m, mav.h)):
        outputs.append(_write_matrix(out / f"M_{name}.csv", m, ds.row_labels, labels))
        outputs.append(_write_matrix(out / f"Ht_{name}.csv", h.T, ds.col_labels, labels))
    vols = [
        {"method": c.method, "lambda_prime": c.lambda_prime, "volume_logdet": c.volume_logdet,
         "published_volume": c.published_volume}
        for c in run.cells if c.selected
    ]
    outputs.append(_write_rows(out / "volumes.csv", vols, ["method", "lambda_prime", "volume_logdet", "published_volume"]))
    ok = run.selected("mav").volume_logdet > run.selected("mvc").volume_logdet
    return outputs, ok, cfg


def cmd_reproduce(args):
    started = time.perf_counter()
    out = _out_dir(args)
    if args.experiment == "appendix-b":
        outputs, ok, cfg = _reproduce_synthetic(args, out, started)
    else:
        outputs, ok, cfg = _reproduce_time_allocation(args, out, started)
    outputs.append(str(out / "manifest.json"))
    _write_json(out / "manifest.json", _manifest(
        args, "reproduce", args.experiment, outputs, None, cfg.to_dict(), started,
        restarts=args.restarts, ordering_ok=ok,
    ))
    if not ok:
        print("reproduction ordering failed: MAV volume not above MVC volume", file=sys.stderr)
        return EXIT_ORDERING
    return EXIT_OK


def cmd_rerun(args):
    manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    argv = list(manifest["argv"])
    if args.out:
        argv = _replace_out(argv, args.out)
    return main(argv)


def _replace_out(argv, new_out):
    argv = list(argv)
    for i, a in enumerate(argv):
        if a == "--out" and i + 1 < len(argv):
            argv[i + 1] = new_out
            return argv
        if a.startswith("--out="):
            argv[i] = f"--out={new_out}"
            return argv
    return argv + ["--out", new_out]


# Parser -------------------------------------------------------------------


def _solver_flags(p, method=True):
    if method:
        p.add_argument("--method", choices=["mvc", "mav"], required=True)
        p.add_argument("--k", type=int, required=True)
    p.add_argument("--lambda-prime", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--max-outer", type=int, default=500)
    p.add_argument("--inner-iter", type=int, default=50)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--placement", choices=[pl.value for pl in solver.Placement], default="h-cols")


def build_parser():
    parser = argparse.ArgumentParser(prog="volnmf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthetic rank-3 data set")
    p.add_argument("--setting", choices=[s.value for s in datagen.Setting], required=True)
    p.add_argument("--i", type=int, default=9)
    p.add_argument("--j", type=int, default=500)
    p.add_argument("--cap", type=float, default=0.75)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="factorize a CSV matrix")
    p.add_argument("--x", required=True)
    _solver_flags(p)
    p.add_argument("--delta-metric", type=float, default=metrics.DEFAULT_DELTA_METRIC)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="metrics for given factors")
    p.add_argument("--m", required=True)
    p.add_argument("--h", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--m-true")
    p.add_argument("--delta-metric", type=float, default=metrics.DEFAULT_DELTA_METRIC)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("reproduce", help="rerun a published experiment")
    p.add_argument("experiment", choices=["appendix-b", "time-allocation"])
    _solver_flags(p, method=False)
    p.add_argument("--delta-metric", type=float, default=metrics.DEFAULT_DELTA_METRIC)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("plot-simplex", help="unit-sum slice SVG of a rank-3 basis")
    p.add_argument("--m-est", required=True)
    p.add_argument("--m-true")
    p.add_argument("--h-true")
    p.add_argument("--x")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_simplex)

    p = sub.add_parser("rerun", help="replay the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ParseError) as exc:
        print(f"volnmf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VolNMFError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"volnmf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
