"""Executable registry of the tensor-calculus formula catalog.

Each record states one identity between operator expressions and verifies
it on seeded random fields.  Algebraic identities are pointwise and exact
everywhere; differential identities are evaluated on the interior region
where no stencil touches a box face (they hold there as exact operator
identities because all assembled partials commute exactly).

Where the operator algebra offers two factorizations, both sides are
assembled through genuinely different code paths (block-matrix algebra on
full 3x3 tensors versus direct per-component stencil assembly), so the
suite detects assembly bugs rather than confirming tautologies.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from . import tensor_algebra as ta
from .diff_ops import (
    SparseOp,
    assemble_biharmonic_ops,
    assemble_vector_ops,
    dev9_op,
    id_tensor_op,
    partial,
    skw9_op,
    spn_inv_op,
    spn_op,
    sym9_op,
    tau_t_op,
    tr9_op,
    transpose9_op,
)
from .domain import GridSpec
from .errors import ShapeMismatch

REL_TOL = 1e-12

_EPS = np.zeros((3, 3, 3), dtype=int)
_EPS[0, 1, 2] = _EPS[1, 2, 0] = _EPS[2, 0, 1] = 1
_EPS[0, 2, 1] = _EPS[2, 1, 0] = _EPS[1, 0, 2] = -1

_SYM_SLOT = {(0, 0): 0, (1, 1): 1, (2, 2): 2, (0, 1): 3, (1, 0): 3,
             (0, 2): 4, (2, 0): 4, (1, 2): 5, (2, 1): 5}
_DEV_ORDER = ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1))


class IdentityContext:
    """Assembled operators shared by all identity checks on one grid."""

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.n = grid.n_nodes
        v = assemble_vector_ops(grid)
        self.grad, self.rot, self.div = v["grad"], v["rot"], v["div"]
        self.Grad, self.Rot, self.Div = v["Grad"], v["Rot"], v["Div"]
        self.spn = spn_op(grid)
        self.spninv = spn_inv_op(grid)
        self.sym9 = sym9_op(grid)
        self.skw9 = skw9_op(grid)
        self.dev9 = dev9_op(grid)
        self.tr9 = tr9_op(grid)
        self.idT = id_tensor_op(grid)
        self.T9 = transpose9_op(grid)
        self.bih = assemble_biharmonic_ops(grid)
        self.partials = [partial(a, grid) for a in (1, 2, 3)]

    def interior(self, radius: int) -> np.ndarray:
        """Node mask of the region untouched by any stencil of that radius."""
        nx, ny, nz = self.grid.dims
        ok = np.zeros(self.grid.dims, dtype=bool)
        if all(n - 2 * radius > 0 for n in (nx, ny, nz)):
            ok[radius : nx - radius, radius : ny - radius, radius : nz - radius] = True
        return self.grid.flatten(ok)


@dataclass
class Check:
    """One lhs == rhs matrix comparison on a random input field."""

    lhs: sp.spmatrix
    rhs: sp.spmatrix | None  # None means rhs == 0
    in_comps: int
    prep: sp.spmatrix | None = None  # projector onto the hypothesis subspace


@dataclass
class IdentityRecord:
    """A named identity with builders for its lhs/rhs operator expressions."""

    id: str
    statement: str
    scope: str  # "algebraic" | "differential"
    family: str  # "lemma" | "complex" | "crosscheck"
    radius: int
    build: Callable[[IdentityContext], Sequence[Check]] | None = None
    custom: Callable[[IdentityContext, np.random.Generator], tuple[float, float]] | None = None


def _mat(op: SparseOp) -> sp.csr_matrix:
    return op.matrix


def _apply_interior(y: np.ndarray, ctx: IdentityContext, radius: int) -> np.ndarray:
    mask = ctx.interior(radius)
    comps = len(y) // ctx.n
    return y.reshape(comps, ctx.n)[:, mask].ravel()


def run_identity(rec: IdentityRecord, grid: GridSpec, seed: int,
                 ctx: IdentityContext | None = None) -> dict[str, object]:
    """Evaluate one identity; returns {id, statement, residual, status, scope}."""
    ctx = ctx if ctx is not None else IdentityContext(grid)
    rng = np.random.default_rng(seed)
    if rec.scope == "differential" and not ctx.interior(rec.radius).any():
        return {
            "id": rec.id,
            "statement": rec.statement,
            "residual": None,
            "status": "SKIPPED-EMPTY-INTERIOR",
            "scope": rec.scope,
        }
    if rec.custom is not None:
        resid, scale = rec.custom(ctx, rng)
    else:
        resid, scale = 0.0, 1.0
        for chk in rec.build(ctx):
            x = rng.standard_normal(chk.in_comps * ctx.n)
            if chk.prep is not None:
                x = chk.prep @ x
            ylhs = chk.lhs @ x
            yrhs = chk.rhs @ x if chk.rhs is not None else np.zeros_like(ylhs)
            if ylhs.shape != yrhs.shape:
                raise ShapeMismatch(f"{rec.id}: sides have shapes {ylhs.shape} vs {yrhs.shape}")
            if rec.scope == "differential":
                ylhs = _apply_interior(ylhs, ctx, rec.radius)
                yrhs = _apply_interior(yrhs, ctx, rec.radius)
            diff = float(np.abs(ylhs - yrhs).max()) if ylhs.size else 0.0
            resid = max(resid, diff)
            scale = max(
                scale,
                float(np.abs(ylhs).max()) if ylhs.size else 0.0,
                float(np.abs(yrhs).max()) if yrhs.size else 0.0,
            )
    relative = resid / scale
    status = "PASS" if relative <= REL_TOL else "FAIL"
    return {
        "id": rec.id,
        "statement": rec.statement,
        "residual": relative,
        "status": status,
        "scope": rec.scope,
    }


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


def _spn_cross(ctx: IdentityContext, rng: np.random.Generator) -> tuple[float, float]:
    v = rng.standard_normal((ctx.n, 3))
    w = rng.standard_normal((ctx.n, 3))
    lhs = np.einsum("nij,nj->ni", ta.spn(v), w)
    cross = np.cross(v, w)
    anti = -np.einsum("nij,nj->ni", ta.spn(w), v)
    resid = max(np.abs(lhs - cross).max(), np.abs(lhs - anti).max())
    scale = max(np.abs(lhs).max(), np.abs(cross).max(), 1.0)
    return float(resid), float(scale)


def _spn_inv_contract(ctx: IdentityContext, rng: np.random.Generator) -> tuple[float, float]:
    v = rng.standard_normal((ctx.n, 3))
    s = ta.skw(rng.standard_normal((ctx.n, 3, 3)))
    lhs = np.einsum("nij,nj->ni", ta.spn(v), ta.skw_part_vector(s))
    rhs = -np.einsum("nij,nj->ni", s, v)
    resid = np.abs(lhs - rhs).max()
    return float(resid), float(max(np.abs(rhs).max(), 1.0))


def _sym_spn_dev_id(ctx: IdentityContext, rng: np.random.Generator) -> tuple[float, float]:
    v = rng.standard_normal((ctx.n, 3))
    u = rng.standard_normal(ctx.n)
    r1 = np.abs(ta.sym(ta.spn(v))).max()
    uid = u[:, None, None] * np.eye(3)
    r2 = np.abs(ta.dev(uid)).max()
    return float(max(r1, r2)), float(max(np.abs(v).max(), np.abs(u).max(), 1.0))


def _registry() -> list[IdentityRecord]:
    recs: list[IdentityRecord] = []
    a = recs.append

    a(IdentityRecord("spn-cross", "spn(v) w = v x w = -spn(w) v", "algebraic", "lemma", 0,
                     custom=_spn_cross))
    a(IdentityRecord("spn-inv-contract", "spn(v) spn_inv(S) = -S v for skew S",
                     "algebraic", "lemma", 0, custom=_spn_inv_contract))
    a(IdentityRecord("sym-spn-dev-id", "sym spn v = 0 and dev(u id) = 0",
                     "algebraic", "lemma", 0, custom=_sym_spn_dev_id))

    a(IdentityRecord("tr-grad-skw-grad", "tr Grad v = div v and 2 skw Grad v = spn rot v",
                     "differential", "lemma", 1,
                     build=lambda c: [
                         Check(_mat(c.tr9 @ c.Grad), _mat(c.div), 3),
                         Check(2.0 * _mat(c.skw9 @ c.Grad), _mat(c.spn @ c.rot), 3),
                     ]))
    a(IdentityRecord("ops-on-u-id",
                     "Div(u id) = grad u, Rot(u id) = -spn grad u, with rot/sym consequences",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(_mat(c.Div @ c.idT), _mat(c.grad), 1),
                         Check(_mat(c.Rot @ c.idT), -_mat(c.spn @ c.grad), 1),
                         Check(_mat(c.rot @ c.Div @ c.idT), None, 1),
                         Check(_mat(c.rot @ c.spninv @ c.Rot @ c.idT), None, 1),
                         Check(_mat(c.sym9 @ c.Rot @ c.idT), None, 1),
                     ]))
    a(IdentityRecord("div-spn", "Div spn v = -rot v; Div skw S = -rot spn_inv skw S; "
                                "div Div skw S = 0",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(_mat(c.Div @ c.spn), -_mat(c.rot), 3),
                         Check(_mat(c.Div @ c.skw9), -_mat(c.rot @ c.spninv @ c.skw9), 9),
                         Check(_mat(c.div @ c.Div @ c.skw9), None, 9),
                     ]))
    a(IdentityRecord("rot-spn", "Rot spn v = (div v) id - (Grad v)^T, and the skw S variant",
                     "differential", "lemma", 1,
                     build=lambda c: [
                         Check(_mat(c.Rot @ c.spn), _mat(c.idT @ c.div) - _mat(c.T9 @ c.Grad), 3),
                         Check(_mat(c.Rot @ c.skw9),
                               _mat(c.idT @ c.div @ c.spninv @ c.skw9)
                               - _mat(c.T9 @ c.Grad @ c.spninv @ c.skw9), 9),
                     ]))
    a(IdentityRecord("dev-rot-spn", "dev Rot spn v = -(dev Grad v)^T",
                     "differential", "lemma", 1,
                     build=lambda c: [
                         Check(_mat(c.dev9 @ c.Rot @ c.spn), -_mat(c.T9 @ c.dev9 @ c.Grad), 3),
                     ]))
    a(IdentityRecord("rot-sym-grad", "-2 Rot sym Grad v = 2 Rot skw Grad v = -(Grad rot v)^T",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(-2.0 * _mat(c.Rot @ c.sym9 @ c.Grad),
                               2.0 * _mat(c.Rot @ c.skw9 @ c.Grad), 3),
                         Check(2.0 * _mat(c.Rot @ c.skw9 @ c.Grad),
                               -_mat(c.T9 @ c.Grad @ c.rot), 3),
                     ]))
    a(IdentityRecord("skw-rot-contract",
                     "2 spn_inv skw Rot S = Div S^T - grad tr S = Div(S - (tr S) id)^T, "
                     "rot Div S^T = 2 rot spn_inv skw Rot S, and 2 skw Rot S = spn Div S^T "
                     "if tr S = 0",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(2.0 * _mat(c.spninv @ c.skw9 @ c.Rot),
                               _mat(c.Div @ c.T9) - _mat(c.grad @ c.tr9), 9),
                         Check(_mat(c.Div @ c.T9) - _mat(c.grad @ c.tr9),
                               _mat(c.Div @ c.T9) - _mat(c.Div @ c.T9 @ c.idT @ c.tr9), 9),
                         Check(_mat(c.rot @ c.Div @ c.T9),
                               2.0 * _mat(c.rot @ c.spninv @ c.skw9 @ c.Rot), 9),
                         Check(2.0 * _mat(c.skw9 @ c.Rot), _mat(c.spn @ c.Div @ c.T9), 9,
                               prep=_mat(c.dev9)),
                     ]))
    a(IdentityRecord("tr-rot", "tr Rot S = 2 div spn_inv skw S; vanishes on symmetric S",
                     "differential", "lemma", 1,
                     build=lambda c: [
                         Check(_mat(c.tr9 @ c.Rot), 2.0 * _mat(c.div @ c.spninv @ c.skw9), 9),
                         Check(_mat(c.tr9 @ c.Rot @ c.sym9), None, 9),
                         Check(_mat(c.tr9 @ c.Rot @ c.skw9), _mat(c.tr9 @ c.Rot), 9),
                         Check(_mat(c.tr9 @ c.Rot @ _iota_s_sp(c)), None, 6),
                     ]))
    a(IdentityRecord("grad-spninv-skw",
                     "2 (Grad spn_inv skw S)^T = (tr Rot skw S) id - 2 Rot skw S",
                     "differential", "lemma", 1,
                     build=lambda c: [
                         Check(2.0 * _mat(c.T9 @ c.Grad @ c.spninv @ c.skw9),
                               _mat(c.idT @ c.tr9 @ c.Rot @ c.skw9)
                               - 2.0 * _mat(c.Rot @ c.skw9), 9),
                     ]))
    a(IdentityRecord("div-dev-grad", "3 Div (dev Grad v)^T = 2 grad div v",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(3.0 * _mat(c.Div @ c.T9 @ c.dev9 @ c.Grad),
                               2.0 * _mat(c.grad @ c.div), 3),
                     ]))
    a(IdentityRecord("rot-grad-chain",
                     "2 Rot sym Grad v = -2 Rot skw Grad v = -Rot spn rot v = (Grad rot v)^T",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(2.0 * _mat(c.Rot @ c.sym9 @ c.Grad),
                               -2.0 * _mat(c.Rot @ c.skw9 @ c.Grad), 3),
                         Check(-2.0 * _mat(c.Rot @ c.skw9 @ c.Grad),
                               -_mat(c.Rot @ c.spn @ c.rot), 3),
                         Check(-_mat(c.Rot @ c.spn @ c.rot), _mat(c.T9 @ c.Grad @ c.rot), 3),
                     ]))
    a(IdentityRecord("div-sym-rot", "2 Div sym Rot S = -2 Div skw Rot S = rot Div S^T",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(2.0 * _mat(c.Div @ c.sym9 @ c.Rot),
                               -2.0 * _mat(c.Div @ c.skw9 @ c.Rot), 9),
                         Check(-2.0 * _mat(c.Div @ c.skw9 @ c.Rot),
                               _mat(c.rot @ c.Div @ c.T9), 9),
                     ]))
    a(IdentityRecord("rot-rot-sym", "Rot (Rot sym S)^T = sym Rot (Rot S)^T",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(_mat(c.Rot @ c.T9 @ c.Rot @ c.sym9),
                               _mat(c.sym9 @ c.Rot @ c.T9 @ c.Rot), 9),
                     ]))
    a(IdentityRecord("rot-rot-skw", "Rot (Rot skw S)^T = skw Rot (Rot S)^T",
                     "differential", "lemma", 2,
                     build=lambda c: [
                         Check(_mat(c.Rot @ c.T9 @ c.Rot @ c.skw9),
                               _mat(c.skw9 @ c.Rot @ c.T9 @ c.Rot), 9),
                     ]))

    # complex properties, evaluated exactly on the integer cores
    for name, (o1, o0) in {
        "complex-rot-gradgrad": ("rot_s", "gradgrad"),
        "complex-div-rot": ("div_t", "rot_s"),
        "complex-symrot-devgrad": ("sym_rot", "dev_grad"),
        "complex-divdiv-symrot": ("div_div", "sym_rot"),
    }.items():
        a(IdentityRecord(name, f"{o1} o {o0} = 0", "differential", "complex", 0,
                         custom=_make_complex_check(o1, o0, transposed=False)))
        a(IdentityRecord(name + "-adjoint", f"({o0})* o ({o1})* = 0 (transposed statement)",
                         "differential", "complex", 0,
                         custom=_make_complex_check(o1, o0, transposed=True)))

    # dual-path factorization cross-checks: block algebra vs direct stencils
    for op_name, radius in (("gradgrad", 2), ("rot_s", 1), ("div_t", 1),
                            ("dev_grad", 1), ("sym_rot", 1), ("div_div", 2)):
        a(IdentityRecord(
            f"crosscheck-{op_name}",
            f"{op_name}: embedding algebra equals direct stencil assembly",
            "differential", "crosscheck", radius,
            custom=_make_crosscheck(op_name),
        ))
    return recs


def _iota_s_sp(ctx: IdentityContext) -> SparseOp:
    from .diff_ops import iota_s_op

    return iota_s_op(ctx.grid)


def _make_complex_check(o1: str, o0: str, transposed: bool):
    def check(ctx: IdentityContext, rng: np.random.Generator) -> tuple[float, float]:
        comp = ctx.bih[o1] @ ctx.bih[o0]
        if transposed:
            comp = comp.T
        return comp.max_abs(), 1.0

    return check


def _make_crosscheck(op_name: str):
    def check(ctx: IdentityContext, rng: np.random.Generator) -> tuple[float, float]:
        algebra = ctx.bih[op_name].matrix
        direct = direct_stencil_op(op_name, ctx.grid)
        x = rng.standard_normal(algebra.shape[1])
        ya, yd = algebra @ x, direct @ x
        resid = float(np.abs(ya - yd).max())
        return resid, float(max(np.abs(ya).max(), np.abs(yd).max(), 1.0))

    return check


# ---------------------------------------------------------------------------
# Direct stencil assembly (independent path for the cross-checks)
# ---------------------------------------------------------------------------


def _kron_derivative(grid: GridSpec, orders: tuple[int, int, int]) -> sp.csr_matrix:
    """d1^a d2^b d3^c as a Kronecker product of 1D composed differences."""
    mats = []
    for n, order in zip(grid.dims, orders):
        d = sp.identity(n, format="csr")
        one = _one_dim_diff(n) / grid.h
        for _ in range(order):
            d = d @ one
        mats.append(d.tocsr())
    return sp.kron(mats[2], sp.kron(mats[1], mats[0])).tocsr()


def _one_dim_diff(n: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for x in range(n - 1):
        rows += [x, x]
        cols += [x, x + 1]
        vals += [-1.0, 1.0]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _axis_orders(*axes: int) -> tuple[int, int, int]:
    out = [0, 0, 0]
    for ax in axes:
        out[ax] += 1
    return tuple(out)


def direct_stencil_op(op_name: str, grid: GridSpec) -> sp.csr_matrix:
    """Per-component stencil assembly of one compact operator.

    Intentionally bypasses the block-matrix algebra: every output
    component is written down as an explicit combination of derivative
    stencils acting on input components.
    """
    n = grid.n_nodes
    d = {orders: _kron_derivative(grid, orders)
         for orders in {_axis_orders(i) for i in range(3)}
         | {_axis_orders(i, j) for i in range(3) for j in range(3)}}
    z = sp.csr_matrix((n, n))

    def build(rows: int, cols: int, table: dict[tuple[int, int], sp.spmatrix]) -> sp.csr_matrix:
        blocks = [[z] * cols for _ in range(rows)]
        for (r, c2), m in table.items():
            blocks[r][c2] = m
        return sp.bmat(blocks, format="csr")

    if op_name == "gradgrad":
        table = {}
        for c2, (i, j) in enumerate(ta.SYM_COMPONENTS):
            table[(c2, 0)] = d[_axis_orders(i, j)]
        return build(6, 1, table)
    if op_name == "div_div":
        table = {(0, c2): (1.0 if i == j else 2.0) * d[_axis_orders(i, j)]
                 for c2, (i, j) in enumerate(ta.SYM_COMPONENTS)}
        return build(1, 6, table)
    if op_name == "div_t":
        # (Div iota_t y)_i = sum_j dj (iota_t y)_{ij}
        table: dict[tuple[int, int], sp.spmatrix] = {}
        for i in range(3):
            for j in range(3):
                for c2, coeff in _iota_t_entry(i, j):
                    key = (i, c2)
                    term = coeff * d[_axis_orders(j)]
                    table[key] = table.get(key, z) + term
        return build(3, 8, table)
    if op_name == "dev_grad":
        table = {}
        for r, (i, j) in enumerate(_DEV_ORDER):
            if i != j:
                table[(r, i)] = d[_axis_orders(j)]
            else:
                for k in range(3):
                    coeff = 2.0 / 3.0 if k == i else -1.0 / 3.0
                    key = (r, k)
                    term = coeff * d[_axis_orders(k)]
                    table[key] = table.get(key, z) + term
        return build(8, 3, table)
    if op_name == "rot_s":
        # (Rot iota_s x)_{ij} = sum_{k,l} eps_{jkl} dk x_{slot(i,l)}
        table = {}
        for r, (i, j) in enumerate(_DEV_ORDER):
            for k in range(3):
                for l in range(3):
                    e = _EPS[j, k, l]
                    if e:
                        key = (r, _SYM_SLOT[(i, l)])
                        table[key] = table.get(key, z) + float(e) * d[_axis_orders(k)]
        return build(8, 6, table)
    if op_name == "sym_rot":
        # sym-chart rows of sym(Rot iota_t y)
        table = {}
        for r, (i, j) in enumerate(ta.SYM_COMPONENTS):
            pairs = [(i, j, 0.5), (j, i, 0.5)] if i != j else [(i, i, 1.0)]
            for a_, b_, w in pairs:
                for k in range(3):
                    for l in range(3):
                        e = _EPS[b_, k, l]
                        if not e:
                            continue
                        for c2, coeff in _iota_t_entry(a_, l):
                            key = (r, c2)
                            table[key] = table.get(key, z) + w * float(e) * coeff * d[_axis_orders(k)]
        return build(6, 8, table)
    raise ValueError(op_name)


def _iota_t_entry(i: int, j: int) -> list[tuple[int, float]]:
    """Chart components contributing to (iota_t y)_{ij}."""
    if (i, j) == (2, 2):
        return [(0, -1.0), (4, -1.0)]
    return [(_DEV_ORDER.index((i, j)), 1.0)]


REGISTRY: list[IdentityRecord] = _registry()


def registry_counts() -> dict[str, int]:
    out: dict[str, int] = {}
    for rec in REGISTRY:
        out[rec.family] = out.get(rec.family, 0) + 1
    return out


def run_all(grid: GridSpec, seed: int = 1) -> list[dict[str, object]]:
    """Run every registered identity; records are independent and run in
    parallel (worker count capped by BIHLAB_THREADS)."""
    ctx = IdentityContext(grid)
    workers = int(os.environ.get("BIHLAB_THREADS", "0")) or min(8, os.cpu_count() or 1)
    if workers <= 1:
        return [run_identity(rec, grid, seed, ctx=ctx) for rec in REGISTRY]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_identity, rec, grid, seed, ctx) for rec in REGISTRY]
        return [f.result() for f in futures]
