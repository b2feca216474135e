"""Command-line interface.

Exit codes: 0 success / member / feasible, 1 non-member / infeasible,
2 inconclusive, 64 usage error, 65 data error.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .bounds import lower_bound_dist, upper_bound_dist, worst_case_witness
from .cone import (
    certify_membership,
    check_dd,
    check_sdd,
    coarsen_decomposition,
    dual_membership,
    recompose,
    validate_decomposition,
)
from .errors import BlockFWError, NumericError
from .linalg import min_eig
from .partition import balanced_partition, is_sub_partition, trivial_partition
from .reformulate import to_block_fw_program
from .solver import solve

EX_OK, EX_NO, EX_UNDECIDED, EX_USAGE, EX_DATAERR = 0, 1, 2, 64, 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class Output:
    """Collects ``key, value`` pairs and prints them as text or ``key=value`` lines."""

    def __init__(self, fmt="text", precision=6, stream=None):
        self.fmt = fmt
        self.precision = precision
        self.stream = stream or sys.stdout

    def fmt_value(self, v):
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        if isinstance(v, (float, np.floating)):
            return f"{float(v):.{self.precision}g}"
        if isinstance(v, (list, tuple, np.ndarray)):
            return " ".join(self.fmt_value(x) for x in v)
        return str(v)

    def emit(self, key, value):
        sep = "=" if self.fmt == "kv" else ": "
        print(f"{key}{sep}{self.fmt_value(value)}", file=self.stream)


def _membership_code(status):
    return {"member": EX_OK, "non_member": EX_NO}.get(status, EX_UNDECIDED)


def _partition_for(args, n):
    if args.partition is None:
        return trivial_partition(n)
    alpha = io.partition_arg(args.partition)
    if alpha.n != n:
        raise BlockFWError(f"partition covers {alpha.n} but the matrix is {n}x{n}")
    return alpha


def cmd_check(args, out):
    A = io.read_matrix(args.matrix)
    n = A.shape[0]
    out.emit("cone", args.cone)
    if args.cone == "psd":
        lam = min_eig(A)
        ok = lam >= -1e-8 * (1 + np.linalg.norm(A))
        out.emit("status", "member" if ok else "non_member")
        out.emit("min_eig", lam)
        return EX_OK if ok else EX_NO
    if args.cone == "dd":
        ok = check_dd(A) and bool(np.all(np.diag(A) >= 0))
        out.emit("status", "member" if ok else "non_member")
        return EX_OK if ok else EX_NO
    if args.cone == "sdd":
        ok, d = check_sdd(A)
        status = {True: "member", False: "non_member", None: "inconclusive"}[ok]
        out.emit("status", status)
        if d is not None:
            out.emit("scaling", d)
        return _membership_code(status)
    alpha = _partition_for(args, n)
    out.emit("partition", list(alpha.sizes))
    if args.cone == "dual":
        ok, pair, lam = dual_membership(A, alpha)
        out.emit("status", "member" if ok else "non_member")
        out.emit("worst_min_eig", lam)
        if pair is not None:
            out.emit("worst_pair", list(pair))
        return EX_OK if ok else EX_NO
    res = certify_membership(A, alpha)
    out.emit("status", res.status)
    out.emit("gap", res.gap)
    if res.decomposition is not None and res.is_member:
        rep = validate_decomposition(res.decomposition, A)
        out.emit("blocks", len(res.decomposition.blocks))
        out.emit("min_block_eig", min(rep.min_eigs.values(), default=0.0))
        out.emit("residual", rep.residual)
    if res.separator is not None:
        Y = res.separator
        out.emit("separator_inner", float(np.sum(Y * A)))
        out.emit("separator_min_pair_eig", dual_membership(Y, alpha, tol=0.0)[2])
    return _membership_code(res.status)


def _write_blocks(dec, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for (i, j), X in sorted(dec.blocks.items()):
        io.write_matrix(X, outdir / f"X_{i + 1}_{j + 1}.mat")
    (outdir / "partition.txt").write_text(str(dec.alpha) + "\n")


def cmd_decompose(args, out):
    A = io.read_matrix(args.matrix)
    alpha = _partition_for(args, A.shape[0])
    res = certify_membership(A, alpha)
    out.emit("status", res.status)
    if not res.is_member:
        return _membership_code(res.status)
    rep = validate_decomposition(res.decomposition, A)
    out.emit("residual", rep.residual)
    out.emit("min_block_eig", min(rep.min_eigs.values(), default=0.0))
    if args.out:
        _write_blocks(res.decomposition, args.out)
        out.emit("written", args.out)
    return EX_OK


def cmd_coarsen(args, out):
    A = io.read_matrix(args.matrix)
    alpha = _partition_for(args, A.shape[0])
    beta = io.partition_arg(args.to)
    w = is_sub_partition(alpha, beta)
    if w is None:
        raise BlockFWError(f"{alpha} does not refine {beta}")
    res = certify_membership(A, alpha)
    out.emit("status", res.status)
    if not res.is_member:
        return _membership_code(res.status)
    dec = coarsen_decomposition(res.decomposition, w)
    rep = validate_decomposition(dec, A)
    out.emit("partition", list(beta.sizes))
    out.emit("residual", float(np.linalg.norm(recompose(dec) - A)))
    out.emit("min_block_eig", min(rep.min_eigs.values(), default=0.0))
    if args.out:
        _write_blocks(dec, args.out)
        out.emit("written", args.out)
    return EX_OK


def cmd_reformulate(args, out):
    prog = io.read_sdpa(args.input)
    if len(prog.block_sizes) != 1:
        raise BlockFWError("reformulation needs a single-block program")
    n = prog.block_sizes[0]
    alpha = _partition_for(args, n)
    block = to_block_fw_program(prog, alpha, drop_zero=args.drop_zero)
    io.write_sdpa(block, args.output)
    out.emit("blocks", len(block.block_sizes))
    out.emit("constraints", block.m)
    out.emit("written", args.output)
    return EX_OK


def _print_solution(sol, out):
    out.emit("status", sol.status)
    out.emit("objective", sol.objective)
    out.emit("dual_objective", sol.dual_objective)
    out.emit("primal_residual", sol.primal_residual)
    out.emit("dual_residual", sol.dual_residual)
    out.emit("iterations", sol.iterations)


def _solution_code(status):
    if status == "optimal":
        return EX_OK
    if status in ("infeasible_evidence", "unbounded_evidence"):
        return EX_NO
    return EX_UNDECIDED


def cmd_solve(args, out):
    prog = io.read_sdpa(args.input)
    sol = solve(prog, eps_abs=args.eps, eps_rel=args.eps, max_iters=args.max_iters)
    _print_solution(sol, out)
    return _solution_code(sol.status)


def cmd_bounds(args, out):
    n, p = args.n, args.p
    if p < 2 or n < p:
        raise BlockFWError("need n >= p >= 2")
    out.emit("upper", float(upper_bound_dist(p)))
    out.emit("upper_exact", str(upper_bound_dist(p)))
    out.emit("lower", lower_bound_dist(n, p))
    if n % p == 0:
        _, dist = worst_case_witness(n, p)
        out.emit("witness_distance", dist)
    else:
        out.emit("witness_distance", "n/a (partition not homogeneous)")
    return EX_OK


def cmd_sos_min(args, out):
    from .sos import build_alpha_sdsos_program, build_sos_program, half_degree, monomial_basis

    poly = io.read_poly(args.poly)
    N = monomial_basis(poly.n_vars, half_degree(poly)).N
    if args.partition_blocks is None or args.partition_blocks == 1:
        prog = build_sos_program(poly)
        out.emit("cone", "sos")
    else:
        p = args.partition_blocks
        if not 2 <= p <= N:
            raise BlockFWError(f"--partition-blocks must be between 2 and {N}")
        alpha = balanced_partition(N, p)
        prog = build_alpha_sdsos_program(poly, alpha)
        out.emit("cone", "sdsos" if alpha.is_trivial else "alpha_sdsos")
        out.emit("partition", list(alpha.sizes))
    sol = solve(prog, eps_abs=args.eps, eps_rel=args.eps, max_iters=args.max_iters)
    out.emit("status", sol.status)
    out.emit("gamma", sol.objective)
    out.emit("iterations", sol.iterations)
    return _solution_code(sol.status)


def cmd_sos_matrix(args, out):
    from .sos import check_matrix_shift

    P = io.read_polymatrix(args.polymatrix)
    if args.cone == "sos":
        alpha = None
    elif args.cone == "alpha":
        alpha = "natural"
    else:
        from .sos import matrix_sos_shift_program

        sdp, _, _ = matrix_sos_shift_program(P)
        alpha = trivial_partition(sdp.block_sizes[0])
    res = check_matrix_shift(P, args.shift, alpha, eps_abs=args.eps, eps_rel=args.eps, max_iters=args.max_iters)
    out.emit("cone", args.cone)
    out.emit("shift", args.shift)
    out.emit("min_shift", res.min_shift)
    out.emit("status", res.status)
    out.emit("feasible", "unknown" if res.feasible is None else res.feasible)
    return {True: EX_OK, False: EX_NO, None: EX_UNDECIDED}[res.feasible]


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["text", "kv"], default="text")
    common.add_argument("--precision", type=int, default=6, help="significant digits of printed numbers")
    common.add_argument("--threads", type=int, default=None,
                        help="cap on BLAS threads (default: $BLOCKFW_THREADS or 1)")

    ap = _Parser(prog="blockfw", description="Block factor-width-two cone tools.", parents=[common])
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="cone membership of a matrix")
    c.add_argument("matrix")
    c.add_argument("--partition")
    c.add_argument("--cone", choices=["fw", "dual", "psd", "sdd", "dd"], default="fw")
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("decompose", parents=[common], help="pair-block decomposition of a member")
    c.add_argument("matrix")
    c.add_argument("--partition")
    c.add_argument("--out", help="directory for the X_i_j.mat block files")
    c.set_defaults(func=cmd_decompose)

    c = sub.add_parser("coarsen", parents=[common], help="decompose, then re-express under a coarser partition")
    c.add_argument("matrix")
    c.add_argument("--partition")
    c.add_argument("--to", required=True)
    c.add_argument("--out")
    c.set_defaults(func=cmd_coarsen)

    c = sub.add_parser("reformulate", parents=[common], help="restrict a single-block SDPA program to FW")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--partition")
    c.add_argument("--drop-zero", action="store_true", help="leave out pair blocks with no data")
    c.set_defaults(func=cmd_reformulate)

    c = sub.add_parser("solve", parents=[common], help="solve an SDPA program")
    c.add_argument("input")
    c.add_argument("--eps", type=float, default=1e-6)
    c.add_argument("--max-iters", type=int, default=50000)
    c.set_defaults(func=cmd_solve)

    c = sub.add_parser("bounds", parents=[common], help="distance bounds between the cones")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--p", type=int, required=True)
    c.set_defaults(func=cmd_bounds)

    c = sub.add_parser("sos", parents=[common], help="sum-of-squares programs")
    ss = c.add_subparsers(dest="sos_command", parser_class=_Parser)
    m = ss.add_parser("min", parents=[common], help="least gamma with poly + gamma certified")
    m.add_argument("poly")
    m.add_argument("--partition-blocks", type=int, default=None,
                   help="number of blocks p of a balanced partition (omit for full SOS)")
    m.add_argument("--eps", type=float, default=1e-6)
    m.add_argument("--max-iters", type=int, default=50000)
    m.set_defaults(func=cmd_sos_min)
    m = ss.add_parser("matrix", parents=[common], help="is P(x) + shift I certified?")
    m.add_argument("polymatrix")
    m.add_argument("--shift", type=float, required=True)
    m.add_argument("--cone", choices=["sos", "alpha", "sdsos"], default="alpha")
    m.add_argument("--eps", type=float, default=1e-6)
    m.add_argument("--max-iters", type=int, default=50000)
    m.set_defaults(func=cmd_sos_matrix)
    return ap


def _thread_limit(n):
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(limits=n)


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("blockfw: a subcommand is required (see --help)")
        threads = args.threads
        if threads is None:
            env = os.environ.get("BLOCKFW_THREADS")
            try:
                threads = int(env) if env else 1
            except ValueError:
                raise UsageError(f"BLOCKFW_THREADS must be an integer, got {env!r}") from None
        if threads < 1:
            raise UsageError("--threads must be positive")
        if args.precision < 1:
            raise UsageError("--precision must be positive")
    except UsageError as exc:
        print(exc, file=stderr)
        return EX_USAGE
    out = Output(args.format, args.precision, stdout)
    try:
        with _thread_limit(threads):
            return args.func(args, out)
    except (BlockFWError, NumericError, OSError) as exc:
        print(f"blockfw: error: {exc}", file=stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
