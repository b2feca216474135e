"""Text formats: sparse SDPA, dense matrices, polynomials, polynomial matrices, partitions.

SDPA files describe ``max <F0, Y> s.t. <F_i, Y> = c_i, Y >= 0``. A
ConicProgram ``min <C, X> s.t. <A_i, X> = b_i`` is stored with
``F0 = -C``, ``F_i = A_i`` and ``c_i = b_i``. A nonzero objective offset
is kept in a ``* offset <value>`` comment line.
"""

from __future__ import annotations

import os
import re
from pathlib import Path

import numpy as np

from .errors import ParseError, PartitionError
from .linalg import as_sym
from .partition import Partition
from .solver import ConicProgram
from .sos import PolynomialForm

_PUNCT = re.compile(r"[{}(),]")


def _tokens(line):
    # "=mdim"-style annotations after header values are ignored
    return [t for t in _PUNCT.sub(" ", line).split() if not t.startswith("=")]


def _num(tok, lineno, kind=float):
    try:
        v = kind(tok)
    except ValueError:
        raise ParseError(f"expected a number, got {tok!r}", lineno) from None
    if kind is float and not np.isfinite(v):
        raise ParseError(f"non-finite value {tok!r}", lineno)
    return v


def _int(tok, lineno):
    try:
        return int(tok)
    except ValueError:
        pass
    v = _num(tok, lineno)
    if v != int(v):
        raise ParseError(f"expected an integer, got {tok!r}", lineno)
    return int(v)


def parse_sdpa(text: str) -> ConicProgram:
    lines = text.splitlines()
    offset = 0.0
    body = []
    for k, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s:
            continue
        if s[0] in "\"*":
            m = re.match(r"\*\s*offset\s+(\S+)", s)
            if m:
                offset = _num(m.group(1), k)
            continue
        body.append((k, _tokens(s)))
    # header values may share lines, so read a token stream for them
    stream = [(k, t) for k, toks in body for t in toks]
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(stream):
            last = stream[-1][0] if stream else len(lines)
            raise ParseError(f"unexpected end of file while reading {what}", last)
        out = stream[pos:pos + n]
        pos += n
        return out

    (ln, tok), = take(1, "the constraint count")
    m = _int(tok, ln)
    (ln, tok), = take(1, "the block count")
    nblocks = _int(tok, ln)
    if m < 0 or nblocks < 1:
        raise ParseError("need m >= 0 and at least one block", ln)
    struct = [_int(t, k) for k, t in take(nblocks, "the block structure")]
    if any(s == 0 for s in struct):
        raise ParseError("block sizes must be nonzero", ln)
    c = [_num(t, k) for k, t in take(m, "the right-hand side")]

    # expand diagonal blocks into 1x1 blocks
    first = []
    sizes = []
    for s in struct:
        first.append(len(sizes))
        sizes.extend([s] if s > 0 else [1] * (-s))
    mats = [[np.zeros((k, k)) for k in sizes] for _ in range(m + 1)]
    used = [set() for _ in range(m + 1)]
    rest = stream[pos:]
    if len(rest) % 5:
        raise ParseError("entries must have five fields: matno blkno i j value", rest[-1][0])
    for q in range(0, len(rest), 5):
        group = rest[q:q + 5]
        ln = group[0][0]
        matno, blk, i, j = (_int(t, k) for k, t in group[:4])
        val = _num(group[4][1], group[4][0])
        if not 0 <= matno <= m:
            raise ParseError(f"matrix number {matno} outside 0..{m}", ln)
        if not 1 <= blk <= nblocks:
            raise ParseError(f"block {blk} outside 1..{nblocks}", ln)
        s = struct[blk - 1]
        if not (1 <= i <= abs(s) and 1 <= j <= abs(s)):
            raise ParseError(f"entry ({i}, {j}) outside block {blk} of size {abs(s)}", ln)
        if s < 0:
            if i != j:
                raise ParseError(f"off-diagonal entry in diagonal block {blk}", ln)
            b, i, j = first[blk - 1] + i - 1, 1, 1
        else:
            b = first[blk - 1]
        i, j = min(i, j) - 1, max(i, j) - 1
        M = mats[matno][b]
        M[i, j] += val
        M[j, i] = M[i, j]
        used[matno].add(b)
    objective = [-M for M in mats[0]]
    cons = [({b: mats[r][b] for b in sorted(used[r])}, c[r - 1]) for r in range(1, m + 1)]
    return ConicProgram(sizes, objective, cons, offset=offset)


def read_sdpa(path) -> ConicProgram:
    return parse_sdpa(Path(path).read_text())


def _entries(M):
    M = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
    iu = np.triu_indices(M.shape[0])
    vals = M[iu]
    nz = vals != 0
    return zip(iu[0][nz] + 1, iu[1][nz] + 1, vals[nz])


def format_sdpa(prog: ConicProgram) -> str:
    out = [f'"written by blockfw: {prog.m} constraints, {len(prog.block_sizes)} blocks']
    if prog.offset:
        out.append(f"* offset {prog.offset!r}")
    out.append(str(prog.m))
    out.append(str(len(prog.block_sizes)))
    out.append(" ".join(str(k) for k in prog.block_sizes))
    out.append(" ".join(repr(float(v)) for v in prog.b) if prog.m else "")
    for b, C in enumerate(prog.objective):
        for i, j, v in _entries(-C):
            out.append(f"0 {b + 1} {i} {j} {float(v)!r}")
    for r, (blocks, _) in enumerate(prog.constraints, start=1):
        for b in sorted(blocks):
            for i, j, v in _entries(blocks[b]):
                out.append(f"{r} {b + 1} {i} {j} {float(v)!r}")
    return "\n".join(out) + "\n"


def write_sdpa(prog: ConicProgram, path) -> None:
    Path(path).write_text(format_sdpa(prog))


def programs_equal(p: ConicProgram, q: ConicProgram) -> bool:
    """Entry-exact comparison (zero blocks and missing blocks count as equal)."""
    if p.block_sizes != q.block_sizes or p.m != q.m or p.offset != q.offset:
        return False
    if not np.array_equal(p.b, q.b):
        return False
    if any(not np.array_equal(a, b) for a, b in zip(p.objective, q.objective)):
        return False

    def dense(M):
        return M.toarray() if hasattr(M, "toarray") else np.asarray(M)

    for (bp, _), (bq, _) in zip(p.constraints, q.constraints):
        for b in set(bp) | set(bq):
            k = p.block_sizes[b]
            A = dense(bp[b]) if b in bp else np.zeros((k, k))
            B = dense(bq[b]) if b in bq else np.zeros((k, k))
            if not np.array_equal(A, B):
                return False
    return True


def _content_lines(text):
    for k, raw in enumerate(text.splitlines(), start=1):
        s = raw.split("#", 1)[0].strip()
        if s:
            yield k, s.split()


def parse_matrix(text: str) -> np.ndarray:
    lines = list(_content_lines(text))
    if not lines:
        raise ParseError("empty matrix file", 1)
    k, toks = lines[0]
    if len(toks) != 1:
        raise ParseError("first line must hold the dimension n", k)
    n = _int(toks[0], k)
    if n < 1:
        raise ParseError("dimension must be positive", k)
    rows = lines[1:]
    if len(rows) != n:
        raise ParseError(f"expected {n} rows, found {len(rows)}", rows[-1][0] if rows else k)
    A = np.empty((n, n))
    for r, (k, toks) in enumerate(rows):
        if len(toks) != n:
            raise ParseError(f"row {r + 1} has {len(toks)} entries, expected {n}", k)
        A[r] = [_num(t, k) for t in toks]
    try:
        return as_sym(A)
    except Exception as exc:
        raise ParseError(str(exc)) from None


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def format_matrix(A) -> str:
    A = np.asarray(A, dtype=float)
    return "\n".join([str(A.shape[0])] + [" ".join(repr(float(v)) for v in row) for row in A]) + "\n"


def write_matrix(A, path) -> None:
    Path(path).write_text(format_matrix(A))


def _nvars_header(lines, what):
    if not lines:
        raise ParseError(f"empty {what} file", 1)
    k, toks = lines[0]
    if len(toks) != 2 or toks[0] != "nvars":
        raise ParseError('first line must be "nvars <k>"', k)
    n = _int(toks[1], k)
    if n < 1:
        raise ParseError("need at least one variable", k)
    return n


def _exponents(toks, n, k):
    e = tuple(_int(t, k) for t in toks)
    if len(e) != n:
        raise ParseError(f"expected {n} exponents, got {len(e)}", k)
    if min(e) < 0:
        raise ParseError("negative exponent", k)
    return e


def parse_poly(text: str) -> PolynomialForm:
    """Header ``nvars <k>``, then lines ``coeff e_1 ... e_k``; repeated monomials add up."""
    lines = list(_content_lines(text))
    n = _nvars_header(lines, "polynomial")
    terms = {}
    for k, toks in lines[1:]:
        c = _num(toks[0], k)
        e = _exponents(toks[1:], n, k)
        terms[e] = terms.get(e, 0.0) + c
    return PolynomialForm(n, terms)


def read_poly(path) -> PolynomialForm:
    return parse_poly(Path(path).read_text())


def format_poly(p: PolynomialForm) -> str:
    out = [f"nvars {p.n_vars}"]
    for e, c in sorted(p.terms.items(), key=lambda t: (sum(t[0]), tuple(-x for x in t[0]))):
        out.append(" ".join([repr(c)] + [str(x) for x in e]))
    return "\n".join(out) + "\n"


def parse_polymatrix(text: str):
    """Header ``nvars <k>`` and ``size <r>``, then ``row col coeff e_1 ... e_k`` (1-based, row <= col).

    Lower-triangle entries are filled in by symmetry.
    """
    lines = list(_content_lines(text))
    n = _nvars_header(lines, "polynomial matrix")
    if len(lines) < 2 or len(lines[1][1]) != 2 or lines[1][1][0] != "size":
        raise ParseError('second line must be "size <r>"', lines[1][0] if len(lines) > 1 else 1)
    r = _int(lines[1][1][1], lines[1][0])
    if r < 1:
        raise ParseError("size must be positive", lines[1][0])
    terms = [[{} for _ in range(r)] for _ in range(r)]
    for k, toks in lines[2:]:
        if len(toks) != 3 + n:
            raise ParseError(f"expected row, col, coefficient and {n} exponents", k)
        i, j = _int(toks[0], k), _int(toks[1], k)
        if not (1 <= i <= j <= r):
            raise ParseError(f"entry ({i}, {j}) must satisfy 1 <= row <= col <= {r}", k)
        c = _num(toks[2], k)
        e = _exponents(toks[3:], n, k)
        terms[i - 1][j - 1][e] = terms[i - 1][j - 1].get(e, 0.0) + c
    P = [[None] * r for _ in range(r)]
    for i in range(r):
        for j in range(i, r):
            P[i][j] = PolynomialForm(n, terms[i][j])
            P[j][i] = P[i][j]
    return P


def read_polymatrix(path):
    return parse_polymatrix(Path(path).read_text())


def parse_partition(text: str) -> Partition:
    body = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    toks = body.replace(",", " ").split()
    if not toks:
        raise ParseError("empty partition")
    try:
        return Partition(tuple(_int(t, None) for t in toks))
    except PartitionError as exc:
        raise ParseError(str(exc)) from None


def read_partition(path) -> Partition:
    return parse_partition(Path(path).read_text())


def partition_arg(arg: str) -> Partition:
    """Inline sizes (``"2 2 2"``) or the path of a partition file; inline wins when both could apply."""
    try:
        return parse_partition(arg)
    except ParseError:
        if os.path.exists(arg):
            return read_partition(arg)
        raise
