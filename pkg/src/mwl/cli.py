"""``mwl`` command-line interface.

Exit codes: 0 success, 2 coverage failure, 3 disconnected graph, 4 I/O error,
5 malformed input, 6 precondition violation, 1 anything else.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings

from . import jsonio
from .config import load_config
from .errors import MWLError, StorageError
from .graph import assemble_matrices, graph_from_json, graph_to_json
from .pipeline import (
    bound_rows,
    fit_envelope_from_graphs,
    make_graph,
    run_experiment,
    run_walk,
    stage,
    thresholds,
)
from .report import (
    bound_csv,
    experiment_report,
    report_json,
    spectrum_dict,
    tail_csv,
    tail_svg,
)
from .spectral import GAP_CONVENTIONS, summarize


def _read(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc.strerror}") from exc


def _load_graph(path):
    return graph_from_json(_read(path), str(path))


def cmd_build_graph(args):
    cfg = load_config(args.config)
    with stage("graph"):
        g = make_graph(cfg)
    _write(args.out, graph_to_json(g))
    return 0


def cmd_spectrum(args):
    g = _load_graph(args.graph)
    with stage("spectrum"):
        summary = summarize(assemble_matrices(g), args.convention)
    doc = {"n_vertices": g.n_vertices, "n_edges": g.n_edges}
    doc.update(spectrum_dict(summary))
    _write(args.out, jsonio.dumps(doc, indent=1) + "\n")
    return 0


def cmd_walk(args):
    cfg = load_config(args.config)
    g = _load_graph(args.graph)
    with stage("walk"):
        tail = run_walk(cfg, assemble_matrices(g), workers=args.threads)
    _write(args.out, tail_csv(tail))
    return 0


def cmd_bound(args):
    cfg = load_config(args.config)
    g = _load_graph(args.graph)
    with stage("bound"):
        m = assemble_matrices(g)
        summary = summarize(m, cfg.bound.gap_convention)
        reports, _, _ = bound_rows(cfg, g, m, summary, thresholds(cfg))
    _write(args.out, bound_csv(reports))
    return 0


def cmd_experiment(args):
    cfg = load_config(args.config)
    res = run_experiment(cfg, workers=args.threads)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
    except OSError as exc:
        raise StorageError(f"cannot create {args.out_dir}: {exc.strerror}") from exc
    join = os.path.join
    _write(join(args.out_dir, "graph.json"), graph_to_json(res.graph))
    _write(join(args.out_dir, "tail.csv"), tail_csv(res.tail))
    _write(join(args.out_dir, "bound.csv"), bound_csv(res.bounds))
    _write(join(args.out_dir, "report.json"), report_json(experiment_report(res)))
    if args.svg:
        _write(join(args.out_dir, "tail.svg"), tail_svg(res.tail, res.bounds))
    return 0


def cmd_fit_envelope(args):
    graphs = [_load_graph(p) for p in args.graphs]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        with stage("fit-envelope"):
            fit, levels = fit_envelope_from_graphs(graphs, args.count, args.scale_by_radius)
    notes = sorted({str(w.message) for w in caught})
    for n in notes:
        print(f"mwl: warning: {n}", file=sys.stderr)
    doc = {
        "C_const": fit.C_const,
        "label": fit.note,
        "degenerate": fit.degenerate,
        "n_points": fit.n_points,
        "rms_residual": fit.rms_residual,
        "eigenvalues_per_level": args.count,
        "levels": [
            {"source": str(p), "n_vertices": g.n_vertices, "epsilon": lv[2], "kappa": lv[3],
             "graph_eigs": lv[0], "manifold_eigs": lv[1]}
            for p, g, lv in zip(args.graphs, graphs, levels)
        ],
        "warnings": notes,
    }
    _write(args.out, jsonio.dumps(doc, indent=1) + "\n")
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="mwl", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def threads(p):
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for walk trials (default: $MWL_THREADS or 1; 0 = all cores)")

    p = sub.add_parser("build-graph", help="sample the manifold and write the graph file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("spectrum", help="spectra, gaps and the eigenvalue-map residual of a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--convention", choices=GAP_CONVENTIONS, default=GAP_CONVENTIONS[0])
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("walk", help="Monte Carlo tail table for a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    threads(p)
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("bound", help="tail bound table for a graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("experiment", help="run the full pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--svg", action="store_true", help="also write tail.svg")
    threads(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("fit-envelope", help="least-squares envelope constant from refinements")
    p.add_argument("--graphs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=5, help="eigenvalues per level (default 5)")
    p.add_argument("--scale-by-radius", action="store_true")
    p.set_defaults(func=cmd_fit_envelope)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MWLError as exc:
        where = getattr(exc, "stage", None)
        prefix = f"[{where}] " if where else ""
        print(f"mwl: error: {prefix}{exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
