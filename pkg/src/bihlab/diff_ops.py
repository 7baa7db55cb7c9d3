"""Discrete derivative operators on the full index box and their algebra.

Scalar partials are forward shift differences assembled per axis as
Kronecker factors, so any two partials commute *exactly* as matrices.  The
six tensor operators of the two biharmonic complexes are assembled purely
by composing partials with the constant embedding/projection operators of
:mod:`bihlab.tensor_algebra`, so every complex property (e.g.
``rot_s @ gradgrad == 0``) is inherited from commutativity alone.

Every operator carries an exact integer core: ``matrix = core / (den * h**h_power)``
with ``core`` an int64 sparse matrix.  Compositions multiply the cores, so
"the composite is the zero matrix" is an exact integer statement, immune
to floating-point rounding.

Row policy at the box faces: the difference row referencing a node past
the face is zeroed.  A row of an assembled operator is *clean* (equals
the untruncated stencil) exactly when its full stencil fits in the box;
each output component is therefore reliable on its own shifted
sub-lattice, described by :func:`chain_bounds`.  Restricting every level
of a complex to these staggered per-component lattices is what makes the
discrete complexes exact with the correct polynomial kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .domain import RANK_COMPONENTS, DofMask, GridSpec
from .errors import IncompatibleWidths, ShapeMismatch, WeightNotSPD

#: Chebyshev stencil radius of each compact operator.
STENCIL_RADIUS = {
    "gradgrad": 2,
    "rot_s": 1,
    "div_t": 1,
    "dev_grad": 1,
    "sym_rot": 1,
    "div_div": 2,
}

#: Levels (rank per space) of the first and second biharmonic complex.
COMPLEX_RANKS = {
    "first": ("scalar", "sym", "dev", "vector"),
    "second": ("vector", "dev", "sym", "scalar"),
}

#: Operator names along each complex.
COMPLEX_OPS = {
    "first": ("gradgrad", "rot_s", "div_t"),
    "second": ("dev_grad", "sym_rot", "div_div"),
}


@dataclass
class SparseOp:
    """Sparse operator with an exact rational representation.

    The floating-point matrix is ``core / (den * h**h_power)``; ``core``
    holds int64 numerators.  Products of SparseOps multiply the cores, so
    exact-zero composites can be verified in integer arithmetic.
    """

    core: sp.csr_matrix  # int64 numerators
    den: int
    h_power: int
    h: float
    _matrix: sp.csr_matrix | None = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.core.shape

    @property
    def nnz(self) -> int:
        return self.core.nnz

    @property
    def matrix(self) -> sp.csr_matrix:
        """Float CSR matrix (cached)."""
        if self._matrix is None:
            m = self.core.astype(np.float64) / (self.den * self.h**self.h_power)
            m.eliminate_zeros()
            self._matrix = m.tocsr()
        return self._matrix

    def __matmul__(self, other: "SparseOp") -> "SparseOp":
        if not isinstance(other, SparseOp):
            return NotImplemented
        if self.h != other.h:
            raise ShapeMismatch("operators built for different spacings")
        if self.shape[1] != other.shape[0]:
            raise ShapeMismatch(f"cannot compose {self.shape} with {other.shape}")
        core = (self.core @ other.core).tocsr()
        core.eliminate_zeros()
        return SparseOp(core, self.den * other.den, self.h_power + other.h_power, self.h)

    def __add__(self, other: "SparseOp") -> "SparseOp":
        if not isinstance(other, SparseOp):
            return NotImplemented
        if self.h_power != other.h_power or self.h != other.h:
            raise ShapeMismatch("cannot add operators of different derivative order")
        d = lcm(self.den, other.den)
        core = (self.core * (d // self.den) + other.core * (d // other.den)).tocsr()
        core.eliminate_zeros()
        return SparseOp(core, d, self.h_power, self.h)

    def __sub__(self, other: "SparseOp") -> "SparseOp":
        return self + other.scaled(-1)

    def __neg__(self) -> "SparseOp":
        return self.scaled(-1)

    def scaled(self, num: int, den: int = 1) -> "SparseOp":
        """Exact rational scaling."""
        return SparseOp((self.core * int(num)).tocsr(), self.den * int(den), self.h_power, self.h)

    def transpose(self) -> "SparseOp":
        return SparseOp(self.core.T.tocsr(), self.den, self.h_power, self.h)

    @property
    def T(self) -> "SparseOp":
        return self.transpose()

    def is_zero(self) -> bool:
        """Exact zero test on the integer core."""
        return self.core.nnz == 0 or not self.core.data.any()

    def max_abs(self) -> float:
        m = self.matrix
        return 0.0 if m.nnz == 0 else float(np.abs(m.data).max())

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x

    def submatrix(self, rows: np.ndarray, cols: np.ndarray) -> "SparseOp":
        core = self.core[rows][:, cols].tocsr()
        return SparseOp(core, self.den, self.h_power, self.h)


def identity_op(n: int, h: float) -> SparseOp:
    return SparseOp(sp.identity(n, dtype=np.int64, format="csr"), 1, 0, h)


def zero_op(rows: int, cols: int, h: float, h_power: int = 0, den: int = 1) -> SparseOp:
    return SparseOp(sp.csr_matrix((rows, cols), dtype=np.int64), den, h_power, h)


def _diff_1d(n: int, side: str) -> sp.csr_matrix:
    """1D shift-difference numerators; rows past the face are zero."""
    rows, cols, vals = [], [], []
    if side == "forward":
        for x in range(n - 1):
            rows += [x, x]
            cols += [x, x + 1]
            vals += [-1, 1]
    elif side == "backward":
        for x in range(1, n):
            rows += [x, x]
            cols += [x - 1, x]
            vals += [-1, 1]
    else:
        raise ValueError(f"side must be forward or backward, got {side!r}")
    return sp.csr_matrix((np.array(vals, dtype=np.int64), (rows, cols)), shape=(n, n))


def partial(axis: int, grid: GridSpec, side: str = "forward") -> SparseOp:
    """Scalar partial derivative along ``axis`` (1-based, as in grad = [d1;d2;d3])."""
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1..3, got {axis}")
    nx, ny, nz = grid.dims
    mats = [sp.identity(n, dtype=np.int64, format="csr") for n in grid.dims]
    mats[axis - 1] = _diff_1d(grid.dims[axis - 1], side)
    # dof = x + nx*(y + ny*z): x runs fastest -> rightmost Kronecker factor
    core = sp.kron(mats[2], sp.kron(mats[1], mats[0])).tocsr()
    return SparseOp(core, 1, 1, grid.h)


def _block(blocks: Sequence[Sequence[SparseOp | None]], h: float) -> SparseOp:
    """Assemble a block operator; blocks must share h_power."""
    ops = [b for row in blocks for b in row if b is not None]
    if not ops:
        raise ValueError("empty block operator")
    h_power = ops[0].h_power
    if any(b.h_power != h_power for b in ops):
        raise ShapeMismatch("mixing derivative orders in one block operator")
    d = lcm(*[b.den for b in ops]) if len(ops) > 1 else ops[0].den
    grid_blocks = [
        [None if b is None else (b.core * (d // b.den)) for b in row] for row in blocks
    ]
    core = sp.bmat(grid_blocks, format="csr", dtype=np.int64)
    core.eliminate_zeros()
    return SparseOp(core, d, h_power, h)


_EPS = np.zeros((3, 3, 3), dtype=np.int64)
_EPS[0, 1, 2] = _EPS[1, 2, 0] = _EPS[2, 0, 1] = 1
_EPS[0, 2, 1] = _EPS[2, 1, 0] = _EPS[1, 0, 2] = -1

_SYM_SLOT = {(0, 0): 0, (1, 1): 1, (2, 2): 2, (0, 1): 3, (1, 0): 3, (0, 2): 4, (2, 0): 4, (1, 2): 5, (2, 1): 5}
_DEV_ORDER = ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1))


def _constant_blocks(table: dict[tuple[int, int], tuple[int, int]], rows: int, cols: int,
                     n: int, den: int, h: float) -> SparseOp:
    """Constant (pointwise) block operator from {(row_comp, col_comp): numerator}."""
    data, r_idx, c_idx = [], [], []
    nodes = np.arange(n)
    for (rc, cc), num in table.items():
        r_idx.append(rc * n + nodes)
        c_idx.append(cc * n + nodes)
        data.append(np.full(n, num, dtype=np.int64))
    core = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(r_idx), np.concatenate(c_idx))),
        shape=(rows * n, cols * n),
    )
    return SparseOp(core, den, 0, h)


def iota_s_op(grid: GridSpec) -> SparseOp:
    """Embed 6 symmetric components into 9 tensor components (row-major)."""
    table = {}
    for (i, j), c in _SYM_SLOT.items():
        table[(3 * i + j, c)] = 1
    return _constant_blocks(table, 9, 6, grid.n_nodes, 1, grid.h)


def iota_s_star_op(grid: GridSpec) -> SparseOp:
    """Gram adjoint of iota_s: 9 components -> 6, averaging the triangles."""
    table = {(0, 0): 2, (1, 4): 2, (2, 8): 2}
    for c, (p, q) in ((3, (1, 3)), (4, (2, 6)), (5, (5, 7))):
        table[(c, p)] = 1
        table[(c, q)] = 1
    return _constant_blocks(table, 6, 9, grid.n_nodes, 2, grid.h)


def iota_t_op(grid: GridSpec) -> SparseOp:
    """Embed 8 deviatoric components into 9; entry 33 = -(11 + 22)."""
    table = {}
    for c, (i, j) in enumerate(_DEV_ORDER):
        table[(3 * i + j, c)] = 1
    table[(8, 0)] = -1
    table[(8, 4)] = -1
    return _constant_blocks(table, 9, 8, grid.n_nodes, 1, grid.h)


def tau_t_op(grid: GridSpec) -> SparseOp:
    """Chart read-off 9 -> 8 for tensors already known to be trace free."""
    table = {(c, 3 * i + j): 1 for c, (i, j) in enumerate(_DEV_ORDER)}
    return _constant_blocks(table, 8, 9, grid.n_nodes, 1, grid.h)


def sym9_op(grid: GridSpec) -> SparseOp:
    """Pointwise symmetrizer on 9 components."""
    table = {}
    for i in range(3):
        for j in range(3):
            table[(3 * i + j, 3 * i + j)] = 1
            key = (3 * i + j, 3 * j + i)
            table[key] = table.get(key, 0) + 1
    return _constant_blocks(table, 9, 9, grid.n_nodes, 2, grid.h)


def skw9_op(grid: GridSpec) -> SparseOp:
    table = {}
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            table[(3 * i + j, 3 * i + j)] = 1
            table[(3 * i + j, 3 * j + i)] = -1
    return _constant_blocks(table, 9, 9, grid.n_nodes, 2, grid.h)


def dev9_op(grid: GridSpec) -> SparseOp:
    """Pointwise deviatoric projection on 9 components."""
    table = {}
    for i in range(3):
        for j in range(3):
            if i != j:
                table[(3 * i + j, 3 * i + j)] = 3
    for i in range(3):
        for k in range(3):
            table[(4 * i, 4 * k)] = 2 if i == k else -1
    return _constant_blocks(table, 9, 9, grid.n_nodes, 3, grid.h)


def tr9_op(grid: GridSpec) -> SparseOp:
    """Pointwise trace: 9 components -> scalar."""
    return _constant_blocks({(0, 0): 1, (0, 4): 1, (0, 8): 1}, 1, 9, grid.n_nodes, 1, grid.h)


def id_tensor_op(grid: GridSpec) -> SparseOp:
    """Pointwise u -> u * Id: scalar -> 9 components."""
    return _constant_blocks({(0, 0): 1, (4, 0): 1, (8, 0): 1}, 9, 1, grid.n_nodes, 1, grid.h)


def transpose9_op(grid: GridSpec) -> SparseOp:
    """Pointwise matrix transposition on 9 components."""
    table = {(3 * i + j, 3 * j + i): 1 for i in range(3) for j in range(3)}
    return _constant_blocks(table, 9, 9, grid.n_nodes, 1, grid.h)


def spn_op(grid: GridSpec) -> SparseOp:
    """Pointwise spn: vector -> 9 components."""
    table = {}
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if _EPS[i, j, k]:
                    # spn(v)_{ij} = -eps_{ijk} v_k
                    table[(3 * i + j, k)] = -int(_EPS[i, j, k])
    return _constant_blocks(table, 9, 3, grid.n_nodes, 1, grid.h)


def spn_inv_op(grid: GridSpec) -> SparseOp:
    """Pointwise spn^{-1} (valid on skew input): 9 components -> vector."""
    table = {(0, 3 * 2 + 1): 1, (1, 3 * 0 + 2): 1, (2, 3 * 1 + 0): 1}
    return _constant_blocks(table, 3, 9, grid.n_nodes, 1, grid.h)


def assemble_vector_ops(grid: GridSpec, side: str = "forward") -> dict[str, SparseOp]:
    """The de Rham layer: grad, rot, div and the row-wise Grad, Rot, Div."""
    p = [partial(a, grid, side) for a in (1, 2, 3)]
    n = grid.n_nodes
    z = None
    grad = _block([[p[0]], [p[1]], [p[2]]], grid.h)
    div = _block([[p[0], p[1], p[2]]], grid.h)
    # (rot v)_j = sum_kl eps_{jkl} d_k v_l
    rot_blocks: list[list[SparseOp | None]] = [[z] * 3 for _ in range(3)]
    for j in range(3):
        for k in range(3):
            for l in range(3):
                if _EPS[j, k, l]:
                    cur = rot_blocks[j][l]
                    term = p[k].scaled(int(_EPS[j, k, l]))
                    rot_blocks[j][l] = term if cur is None else cur + term
    rot = _block(rot_blocks, grid.h)
    # Row-wise operators on 9 components (row-major c = 3i + j).
    grad9: list[list[SparseOp | None]] = [[z] * 3 for _ in range(9)]
    for i in range(3):
        for j in range(3):
            grad9[3 * i + j][i] = p[j]  # (Grad v)_{ij} = d_j v_i
    rot9: list[list[SparseOp | None]] = [[z] * 9 for _ in range(9)]
    for i in range(3):
        for j in range(3):
            for l in range(3):
                if rot_blocks[j][l] is not None:
                    rot9[3 * i + j][3 * i + l] = rot_blocks[j][l]
    div9: list[list[SparseOp | None]] = [[z] * 9 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            div9[i][3 * i + j] = p[j]  # (Div M)_i = sum_j d_j M_{ij}
    return {
        "grad": grad,
        "rot": rot,
        "div": div,
        "Grad": _block(grad9, grid.h),
        "Rot": _block(rot9, grid.h),
        "Div": _block(div9, grid.h),
    }


def assemble_biharmonic_ops(grid: GridSpec, side: str = "forward") -> dict[str, SparseOp]:
    """The six compact operators of the two biharmonic complexes.

    gradgrad: scalar -> sym      rot_s:   sym -> dev     div_t:   dev -> vector
    dev_grad: vector -> dev      sym_rot: dev -> sym     div_div: sym -> scalar
    """
    v = assemble_vector_ops(grid, side)
    i_s, i_s_star = iota_s_op(grid), iota_s_star_op(grid)
    i_t, tau = iota_t_op(grid), tau_t_op(grid)
    return {
        "gradgrad": i_s_star @ v["Grad"] @ v["grad"],
        "rot_s": tau @ v["Rot"] @ i_s,
        "div_t": v["Div"] @ i_t,
        "dev_grad": tau @ dev9_op(grid) @ v["Grad"],
        "sym_rot": i_s_star @ v["Rot"] @ i_t,
        "div_div": v["div"] @ v["Div"] @ i_s,
    }


#: Reference grid used to read off grid-independent stencil patterns.
_REFERENCE_DIMS = (8, 8, 8)


def _interior_patterns(op: SparseOp, ncomp_out: int, side: str) -> list[list[tuple[int, tuple[int, int, int]]]]:
    """(input component, offset) stencil terms per output component,
    extracted from a deep-interior row on the reference grid."""
    nx, ny, nz = _REFERENCE_DIMS
    n = nx * ny * nz
    mid = np.array([nx // 2, ny // 2, nz // 2]) - (0 if side == "backward" else 1)
    lin = int(mid[0] + nx * (mid[1] + ny * mid[2]))
    pats = []
    for c in range(ncomp_out):
        row = op.core.getrow(c * n + lin).tocoo()
        terms = []
        for col in row.col:
            cin, node = divmod(int(col), n)
            x = np.array([node % nx, (node // nx) % ny, node // (nx * ny)])
            terms.append((cin, tuple(int(v) for v in x - mid)))
        pats.append(terms)
    return pats


def operator_stencils(side: str = "forward") -> dict[str, list[list[tuple[int, tuple[int, int, int]]]]]:
    """Interior stencil patterns of the six compact operators (cached)."""
    if side not in _STENCIL_CACHE:
        grid = GridSpec(_REFERENCE_DIMS, 1.0)
        ops = assemble_biharmonic_ops(grid, side)
        ncomp = {"gradgrad": 6, "rot_s": 8, "div_t": 3, "dev_grad": 8, "sym_rot": 6, "div_div": 1}
        _STENCIL_CACHE[side] = {
            name: _interior_patterns(op, ncomp[name], side) for name, op in ops.items()
        }
    return _STENCIL_CACHE[side]


_STENCIL_CACHE: dict[str, dict] = {}


def chain_bounds(which: str, dims: tuple[int, int, int], side: str = "forward") -> list[list[tuple[int, int, int]]]:
    """Per-level, per-component staggered lattice bounds of one complex.

    For the forward side, component c of level k+1 is reliable on nodes
    ``x <= bounds[k+1][c]`` (componentwise); the bounds chain through the
    interior stencils so that every kept row references only kept nodes
    of the previous level.  The backward side mirrors to lower bounds
    (``x >= reach``), returned as the same structure of reaches.
    """
    pats = operator_stencils(side)
    names = COMPLEX_OPS[which]
    comps = [RANK_COMPONENTS[r] for r in COMPLEX_RANKS[which]]
    top = tuple(n - 1 for n in dims)
    sign = 1 if side == "forward" else -1
    bounds: list[list[tuple[int, int, int]]] = [[(0, 0, 0)] * comps[0]]
    for k, name in enumerate(names):
        lvl = []
        for terms in pats[name]:
            r = np.zeros(3, dtype=int)
            for cin, delta in terms:
                r = np.maximum(r, np.array(bounds[k][cin]) + sign * np.array(delta))
            lvl.append(tuple(int(v) for v in r))
        bounds.append(lvl)
    if side == "forward":
        return [
            [tuple(t - r for t, r in zip(top, comp)) for comp in lvl] for lvl in bounds
        ]
    return bounds  # backward: minimal coordinates per component


def lattice_masks(which: str, grid: GridSpec, side: str = "forward") -> list[list[np.ndarray]]:
    """Per-level per-component boolean node masks of the staggered lattices."""
    bounds = chain_bounds(which, grid.dims, side)
    idx = np.indices(grid.dims)
    out = []
    for lvl in bounds:
        comps = []
        for b in lvl:
            if side == "forward":
                keep = (idx[0] <= b[0]) & (idx[1] <= b[1]) & (idx[2] <= b[2])
            else:
                keep = (idx[0] >= b[0]) & (idx[1] >= b[1]) & (idx[2] >= b[2])
            comps.append(grid.flatten(keep))
        out.append(comps)
    return out


def restrict(op: SparseOp, mask_in: DofMask, mask_out: DofMask) -> SparseOp:
    """Row/column selection of ``op`` to the kept DOFs of the two masks.

    Exactness of the restricted chain (each composite identically zero)
    is asserted at complex build time on the integer cores.
    """
    n_in = op.shape[1] // RANK_COMPONENTS[mask_in.rank]
    n_out = op.shape[0] // RANK_COMPONENTS[mask_out.rank]
    cols = mask_in.dof_indices(n_in)
    rows = mask_out.dof_indices(n_out)
    return op.submatrix(rows, cols)


class BlockDiagMass:
    """Node-block-diagonal SPD mass matrix on masked, component-major DOFs.

    ``blocks`` gives the per-node coefficient block over the full grid
    (n_nodes, c, c); ``keep`` selects the kept components per node
    (c, n_nodes).  The restricted mass is the principal submatrix, still
    block-diagonal per node with variable block size.  Provides the
    matrix, its inverse, and the Cholesky split M = C^T C used to
    symmetrize operators; DOF k of component c is ordered component-major.
    """

    def __init__(self, blocks: np.ndarray, keep: np.ndarray, h3: float):
        blocks = np.asarray(blocks, dtype=float)
        keep = np.asarray(keep, dtype=bool)
        if blocks.ndim != 3 or blocks.shape[1] != blocks.shape[2]:
            raise ValueError("blocks must be (n_nodes, c, c)")
        if keep.shape != (blocks.shape[1], blocks.shape[0]):
            raise ValueError("keep must be (c, n_nodes)")
        scale = float(np.abs(blocks).max()) if blocks.size else 1.0
        if not np.allclose(blocks, np.swapaxes(blocks, 1, 2), rtol=0, atol=1e-13 * max(scale, 1.0)):
            raise WeightNotSPD("mass blocks are not symmetric")
        blocks = 0.5 * (blocks + np.swapaxes(blocks, 1, 2))
        self.h3 = float(h3)
        self.c, n = keep.shape
        # component-major DOF positions; -1 for dropped DOFs
        pos = -np.ones((self.c, n), dtype=np.int64)
        counts = keep.sum(axis=1)
        base = np.concatenate([[0], np.cumsum(counts)])
        for comp in range(self.c):
            pos[comp, keep[comp]] = base[comp] + np.arange(counts[comp])
        self.n_dofs = int(base[-1])
        rows, cols, m_data, mi_data, ch_data, chi_data = [], [], [], [], [], []
        lam = np.inf
        patterns = keep.T @ (1 << np.arange(self.c))
        for pat in np.unique(patterns):
            comps = [i for i in range(self.c) if pat & (1 << i)]
            if not comps:
                continue
            nodes = np.flatnonzero(patterns == pat)
            sub = blocks[np.ix_(nodes, comps, comps)]
            try:
                chol_l = np.linalg.cholesky(sub)
            except np.linalg.LinAlgError as exc:
                raise WeightNotSPD("mass block not positive definite") from exc
            lam = min(lam, float(np.linalg.eigvalsh(sub).min()))
            upper = np.sqrt(self.h3) * np.swapaxes(chol_l, 1, 2)
            upper_inv = np.linalg.inv(upper)
            inv = np.linalg.inv(sub) / self.h3
            for a, ca in enumerate(comps):
                for b, cb in enumerate(comps):
                    rows.append(pos[ca, nodes])
                    cols.append(pos[cb, nodes])
                    m_data.append(self.h3 * sub[:, a, b])
                    mi_data.append(inv[:, a, b])
                    ch_data.append(upper[:, a, b])
                    chi_data.append(upper_inv[:, a, b])
        self.lambda_min = 0.0 if np.isinf(lam) else lam

        def build(data):
            if not rows:
                return sp.csr_matrix((self.n_dofs, self.n_dofs))
            m = sp.csr_matrix(
                (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                shape=(self.n_dofs, self.n_dofs),
            )
            m.eliminate_zeros()
            return m

        self.matrix = build(m_data)
        self.inverse_matrix = build(mi_data)
        self.chol_matrix = build(ch_data)
        self.chol_inv_matrix = build(chi_data)

    def inner(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(x @ (self.matrix @ y))

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(x, x), 0.0)))


def weighted_adjoint(op: SparseOp | sp.spmatrix, mass_in: BlockDiagMass,
                     mass_out: BlockDiagMass) -> sp.csr_matrix:
    """Adjoint M_in^{-1} op^T M_out of ``op`` between weighted spaces."""
    m = op.matrix if isinstance(op, SparseOp) else op
    if m.shape[0] != mass_out.n_dofs or m.shape[1] != mass_in.n_dofs:
        raise ShapeMismatch(
            f"operator {m.shape} does not match masses {mass_out.n_dofs} x {mass_in.n_dofs}"
        )
    return (mass_in.inverse_matrix @ m.T.tocsr() @ mass_out.matrix).tocsr()


def write_sparseop(target: str | Path | IO[str], op: SparseOp | sp.spmatrix) -> None:
    """Text triplet export: ``sparseop <rows> <cols> <nnz>`` then entries."""
    m = (op.matrix if isinstance(op, SparseOp) else op).tocoo()
    lines = [f"sparseop {m.shape[0]} {m.shape[1]} {m.nnz}"]
    lines += [f"{r} {c} {v!r}" for r, c, v in zip(m.row, m.col, m.data)]
    text = "\n".join(lines) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        Path(target).write_text(text)


def read_sparseop(source: str | Path | IO[str]) -> sp.csr_matrix:
    """Read the text triplet format written by :func:`write_sparseop`."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    lines = text.strip().splitlines()
    head = lines[0].split()
    if head[0] != "sparseop" or len(head) != 4:
        raise ValueError("not a sparseop file")
    rows, cols, nnz = (int(t) for t in head[1:])
    if len(lines) - 1 != nnz:
        raise ValueError(f"expected {nnz} entries, found {len(lines) - 1}")
    r = np.empty(nnz, dtype=np.int64)
    c = np.empty(nnz, dtype=np.int64)
    v = np.empty(nnz)
    for k, line in enumerate(lines[1:]):
        a, b, val = line.split()
        r[k], c[k], v[k] = int(a), int(b), float(val)
    return sp.csr_matrix((v, (r, c)), shape=(rows, cols))
