"""Benchmark harness.

Subcommands:

  run <config.json>            solve the whole RHS sequence with recycling
                               and with the MINRES baseline, emit CSVs,
                               a summary and a plot script
  diagnose <config.json>       emit the Q (orthogonality) and G (section
                               condition) stability maps
  sequence-dump <config.json>  write the generated right-hand sides as text

The config file is JSON; see the repository README for the schema.
Environment overrides: SRKRYLOV_OUTPUT_DIR replaces the configured output
directory, SRKRYLOV_THREADS caps the BLAS thread count (determinism wants
1, the default).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .diagnostics import compute_g, compute_q, emit_map_csv
from .errors import ConfigError, SrkError
from .operators import MvecCounter, OperatorChain
from .preconditioners import make_preconditioner
from .problems import (
    default_start_vector,
    gen_laplace_1d,
    gen_laplace_2d,
    gen_shifted_laplace,
    read_matrix_market,
)
from .recycling import build_recycle_basis, cost_formula, srpcr_ap_solve
from .sequences import example31_sequence, gen_sequence
from .solvers import HarvestConfig, pcr_solve, pminres_solve


def _limit_threads():
    want = os.environ.get("SRKRYLOV_THREADS", "1")
    try:
        n = max(1, int(want))
    except ValueError:
        raise ConfigError(f"SRKRYLOV_THREADS must be an integer, got {want!r}") from None
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        pass


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    return cfg


def _build_problem(cfg: dict):
    prob = cfg.get("problem")
    if not isinstance(prob, dict):
        raise ConfigError("config needs a 'problem' object")
    if "matrix_market" in prob:
        A = read_matrix_market(prob["matrix_market"])
        label = Path(prob["matrix_market"]).stem
    elif "generator" in prob:
        gen = prob["generator"]
        if gen == "laplace_1d":
            A = gen_laplace_1d(int(prob["N"]), float(prob.get("scale", 1.0)))
        elif gen == "laplace_2d":
            A = gen_laplace_2d(int(prob["n"]))
        elif gen == "shifted_laplace":
            A = gen_shifted_laplace(int(prob["n"]), float(prob["sigma"]))
        elif gen == "example31":
            from .sequences import gen_example31

            A, _, _ = gen_example31(int(prob["N"]))
        else:
            raise ConfigError(f"unknown generator {gen!r}")
        label = gen
    else:
        raise ConfigError("'problem' needs 'matrix_market' or 'generator'")
    d_cfg = prob.get("d", "a-ones")
    if d_cfg == "a-ones":
        d = default_start_vector(A)
    elif isinstance(d_cfg, list):
        d = np.asarray(d_cfg, dtype=np.float64)
    else:
        raise ConfigError("'d' must be 'a-ones' or an explicit list")
    return A, d, label


def _build_setup(cfg: dict):
    A, d, label = _build_problem(cfg)
    pkind = cfg.get("preconditioner", {}).get("kind", "identity")
    M = make_preconditioner(pkind, A)
    seq_cfg = cfg.get("sequence", {})
    kind = seq_cfg.get("kind", "B")
    if kind == "example31":
        A31, M, seq = example31_sequence(A.shape[0])
        A = A31
    else:
        seq = gen_sequence(
            kind,
            A,
            M,
            d,
            int(seq_cfg.get("q", 5)),
            float(seq_cfg.get("inner_tol", 1e-12)),
        )
    rec = cfg.get("recycle")
    if not isinstance(rec, dict):
        raise ConfigError("config needs a 'recycle' object with ell, k, J")
    harvest = HarvestConfig(J=int(rec["J"]), k=int(rec["k"]), ell=int(rec["ell"]))
    tol = float(cfg.get("tol", 1e-8))
    max_iter = int(cfg.get("max_iter", 4 * A.shape[0]))
    if harvest.m + 1 > max_iter:
        raise ConfigError("recycle dimensions exceed max_iter of the first solve")
    out_dir = Path(os.environ.get("SRKRYLOV_OUTPUT_DIR", cfg.get("output_dir", "out")))
    return A, M, seq, harvest, tol, max_iter, out_dir, label


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_history(path, rhs_index, rows):
    """rows: iterable of (phase, iteration, mvec_cumulative, relres)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("rhs_index,phase,iteration,mvec_cumulative,relres\n")
        for phase, iteration, mvec, relres in rows:
            fh.write(f"{rhs_index},{phase},{iteration},{mvec},{_fmt(relres)}\n")


def _baseline_rows(report):
    ref = report.ref_norm if report.ref_norm > 0 else 1.0
    for it, res in enumerate(report.residual_history):
        yield ("baseline", it, it, res / ref)


def _recycled_rows(recycle_report, ref):
    ref = ref if ref > 0 else 1.0
    proj = recycle_report.projection_history
    ell = len(proj) - 1
    per_block = recycle_report.projection_mvec_a // max(ell, 1)
    for it, res in enumerate(proj):
        yield ("projection", it, it * per_block, res / ref)
    post = recycle_report.post_report
    # setup cost of the post phase (initial residual) plus one A-apply per
    # iteration
    base_mvec = recycle_report.projection_mvec_a + (post.mvec_a - post.iterations)
    for it, res in enumerate(post.residual_history[1:], start=1):
        yield ("post", it, base_mvec + it, res / ref)


PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot convergence histories emitted by the benchmark harness.

Reads every srpcr_ap_rhs*.csv and baseline_rhs*.csv in this directory;
thick black line = first right-hand side, thin gray = the subsequent ones.
\"\"\"
import csv
import glob
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
for ax, stem, title in (
    (axes[0], "srpcr_ap_rhs", "with recycling"),
    (axes[1], "baseline_rhs", "baseline"),
):
    for path in sorted(glob.glob(os.path.join(here, stem + "*.csv"))):
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            continue
        mv = [int(r["mvec_cumulative"]) for r in rows]
        res = [float(r["relres"]) for r in rows]
        first = rows[0]["rhs_index"] == "1"
        ax.semilogy(
            mv,
            res,
            color="black" if first else "gray",
            linewidth=2.0 if first else 0.8,
        )
    ax.set_title(title)
    ax.set_xlabel("matrix-vector products")
    ax.grid(True, which="both", alpha=0.3)
axes[0].set_ylabel("relative residual")
fig.tight_layout()
fig.savefig(os.path.join(here, "convergence.png"), dpi=150)
print("wrote", os.path.join(here, "convergence.png"))
"""


def cmd_run(cfg: dict) -> int:
    A, M, seq, harvest, tol, max_iter, out_dir, label = _build_setup(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_converged = True
    summary = []

    # first RHS: plain solve with harvesting
    counter = MvecCounter()
    chain = OperatorChain(A, M, (), counter)
    first_report, harvest_data = pcr_solve(
        chain, seq.vectors[0], tol=tol, max_iter=max_iter, harvest=harvest
    )
    all_converged &= first_report.converged
    _write_history(
        out_dir / "srpcr_ap_rhs1.csv",
        1,
        (
            ("post", it, it, res)
            for it, res in enumerate(first_report.relres)
        ),
    )
    summary.append((1, first_report.mvec_a, None))
    if harvest_data is None or not harvest_data.complete:
        print("error: harvest incomplete on the first right-hand side", file=sys.stderr)
        return 1
    basis = build_recycle_basis(chain, harvest_data)
    stored, proj_mvecs = cost_formula(harvest.ell, harvest.k, harvest.J)

    for idx in range(1, seq.q):
        counter = MvecCounter()
        chain_i = OperatorChain(A, M, (), counter)
        basis_i = build_recycle_basis(chain_i, harvest_data)
        combined, rec = srpcr_ap_solve(
            basis_i, chain_i, seq.vectors[idx], tol=tol, max_post_iter=max_iter
        )
        all_converged &= combined.converged
        _write_history(
            out_dir / f"srpcr_ap_rhs{idx + 1}.csv",
            idx + 1,
            _recycled_rows(rec, combined.ref_norm),
        )
        summary.append((idx + 1, combined.mvec_a, rec))

    baseline_mvecs = []
    for idx in range(seq.q):
        rep = pminres_solve(A, M, seq.vectors[idx], tol=tol, max_iter=max_iter)
        all_converged &= rep.converged
        _write_history(
            out_dir / f"baseline_rhs{idx + 1}.csv", idx + 1, _baseline_rows(rep)
        )
        baseline_mvecs.append(rep.mvec_a)

    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("rhs_index,srpcr_ap_mvecs,baseline_mvecs,speedup\n")
        ratios = []
        for (idx, mv, _rec), base in zip(summary, baseline_mvecs):
            ratio = base / mv if mv else float("nan")
            if idx >= 2:
                ratios.append(ratio)
            fh.write(f"{idx},{mv},{base},{_fmt(ratio)}\n")
        avg = sum(ratios) / len(ratios) if ratios else float("nan")
        fh.write(f"avg_rhs2_onward,,,{_fmt(avg)}\n")
        fh.write(f"stored_columns,{stored},,\n")
        fh.write(f"projection_mvecs_per_rhs,{proj_mvecs},,\n")

    plot_path = out_dir / "plot_convergence.py"
    plot_path.write_text(PLOT_SCRIPT, encoding="utf-8")
    print(f"{label}: wrote results to {out_dir}")
    return 0 if all_converged else 1


def cmd_diagnose(cfg: dict) -> int:
    A, M, seq, harvest, tol, max_iter, out_dir, label = _build_setup(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    chain = OperatorChain(A, M)
    _report, data = pcr_solve(
        chain,
        seq.vectors[0],
        tol=tol,
        max_iter=max_iter,
        harvest=harvest,
        keep_full_basis=True,
    )
    if data is None or data.full_v is None or not data.complete:
        print("error: harvest incomplete; cannot build stability maps", file=sys.stderr)
        return 1
    Q = compute_q(M, data.full_v)
    G = compute_g(data.T)
    emit_map_csv(out_dir / "q_map.csv", Q - np.eye(Q.shape[0]))
    emit_map_csv(out_dir / "g_map.csv", G)
    print(f"{label}: wrote q_map.csv and g_map.csv to {out_dir}")
    return 0


def cmd_sequence_dump(cfg: dict) -> int:
    _A, _M, seq, _harvest, _tol, _max_iter, out_dir, label = _build_setup(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sequence.txt"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# kind={seq.kind} q={seq.q} n={seq.vectors[0].size}\n")
        for row in np.column_stack(seq.vectors):
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
    print(f"{label}: wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="srkrylov", description="recycling solver benchmark harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "diagnose", "sequence-dump"):
        p = sub.add_parser(name)
        p.add_argument("config", help="path to a JSON experiment config")
    args = parser.parse_args(argv)
    try:
        _limit_threads()
        cfg = load_config(args.config)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "diagnose":
            return cmd_diagnose(cfg)
        return cmd_sequence_dump(cfg)
    except SrkError as exc:
        print(f"error [{exc.tag}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
