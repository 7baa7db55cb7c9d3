"""Assembly of the two biharmonic Hilbert complexes on a voxel domain.

A complex is four weighted DOF spaces joined by three restricted
difference operators.  Three structural ingredients make the discrete
chains faithful:

* staggered lattices: each tensor component of each level lives on its
  own shifted sub-lattice (where every kept operator row is an exact
  stencil referencing only kept nodes), which makes the natural-boundary
  complex exact with the correct 4-dimensional polynomial end kernels;
* essential bands: strong boundary conditions exclude Chebyshev bands of
  nodes behind essential faces, with widths descending fast enough along
  the chain that restricted composites stay identically zero;
* duality: the fully essential complex is built as the reversed chain of
  weighted adjoints of the other complex with fully natural conditions,
  exactly mirroring the adjoint pairings of the continuous operators, so
  its exactness is inherited instead of re-engineered.

Weights enter through the level inner products (block-diagonal mass
matrices), never through the operators: the chain operators keep exact
integer cores, so ``d_{k+1} d_k == 0`` holds exactly for every admissible
weight.  Also here: the P1/RT end spaces and their projectors, the
weak-boundary-condition subspaces computed from the integration-by-parts
residual, and the descriptor-file front end.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import tensor_algebra as ta
from .diff_ops import (
    COMPLEX_OPS,
    COMPLEX_RANKS,
    STENCIL_RADIUS,
    BlockDiagMass,
    SparseOp,
    assemble_biharmonic_ops,
    lattice_masks,
    restrict,
    weighted_adjoint,
)
from .domain import (
    RANK_COMPONENTS,
    BoundaryPartition,
    DofMask,
    GridSpec,
    VoxelDomain,
    build_domain,
    build_masks,
    partition_boundary,
    validate_chain,
)
from .errors import RankDeficient, ShapeMismatch, WeightNotSPD

#: Default essential band widths per level rank: the minimal chain so that
#: every restricted composite is identically zero (leak-free masking).
DEFAULT_WIDTHS = {
    "first": {"scalar": 4, "sym": 2, "dev": 1, "vector": 0},
    "second": {"vector": 4, "dev": 3, "sym": 2, "scalar": 0},
}

#: (rank, stencil radius of the outgoing operator) along each complex.
CHAINS = {
    "first": (("scalar", 2), ("sym", 1), ("dev", 1), ("vector", 0)),
    "second": (("vector", 1), ("dev", 1), ("sym", 2), ("scalar", 0)),
}

_OTHER = {"first": "second", "second": "first"}

_GRAM = {
    "scalar": np.eye(1),
    "vector": np.eye(3),
    "sym": ta.SYM_GRAM,
    "dev": ta.DEV_GRAM,
}


def _gram_sqrt(rank: str) -> np.ndarray:
    w, v = np.linalg.eigh(_GRAM[rank])
    return (v * np.sqrt(w)) @ v.T


_GRAM_SQRT = {rank: _gram_sqrt(rank) for rank in ("sym", "dev")}


@dataclass(frozen=True)
class Weight:
    """Admissible pointwise weight on symmetric or deviatoric fields.

    ``blocks`` holds the operator per node in a Frobenius-orthonormal
    frame, shape (n_nodes, c, c); ``None`` means the identity weight.
    """

    rank: str
    blocks: np.ndarray | None
    kind: str = "identity"
    lambda_min: float = 1.0
    cond: float = 1.0

    def __post_init__(self):
        if self.rank not in ("sym", "dev"):
            raise ValueError(f"weights act on sym or dev fields, got {self.rank!r}")
        if self.blocks is not None:
            b = np.asarray(self.blocks, dtype=float)
            if not np.allclose(b, np.swapaxes(b, 1, 2), rtol=0, atol=1e-14):
                raise WeightNotSPD("weight blocks are not symmetric")
            ev = np.linalg.eigvalsh(b)
            if ev.min() <= 0:
                raise WeightNotSPD("weight block not positive definite")
            object.__setattr__(self, "lambda_min", float(ev.min()))
            object.__setattr__(self, "cond", float(ev.max() / ev.min()))

    @property
    def is_identity(self) -> bool:
        return self.blocks is None

    def frame_blocks(self, n_nodes: int, inverse: bool = False) -> np.ndarray:
        c = RANK_COMPONENTS[self.rank]
        if self.blocks is None:
            return np.broadcast_to(np.eye(c), (n_nodes, c, c)).copy()
        b = np.asarray(self.blocks)
        if b.shape[0] != n_nodes:
            raise ValueError(f"weight spans {b.shape[0]} nodes, grid has {n_nodes}")
        return np.linalg.inv(b) if inverse else b.copy()


def identity_weight(rank: str) -> Weight:
    return Weight(rank, None, kind="identity")


def random_weight(rank: str, n_nodes: int, seed: int, cond_max: float = 100.0) -> Weight:
    """Seeded random SPD weight with per-node condition number <= cond_max."""
    c = RANK_COMPONENTS[rank]
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n_nodes, c, c)))
    s = np.sqrt(cond_max)
    ev = np.exp(rng.uniform(np.log(1.0 / s), np.log(s), size=(n_nodes, c)))
    blocks = np.einsum("nik,nk,njk->nij", q, ev, q)
    blocks = 0.5 * (blocks + np.swapaxes(blocks, 1, 2))
    return Weight(rank, blocks, kind=f"random(seed={seed})")


@dataclass(frozen=True)
class DofSpace:
    """Masked, weighted DOF space of one field rank."""

    rank: str
    mask: DofMask
    mass: BlockDiagMass
    label: str = ""

    @property
    def n_dofs(self) -> int:
        return self.mass.n_dofs

    def random_field(self, seed: int) -> np.ndarray:
        return np.random.default_rng(seed).standard_normal(self.n_dofs)


@dataclass(frozen=True)
class PolynomialSpace:
    """Global degree-1 polynomial (P1) or Raviart-Thomas (RT) end space.

    ``basis`` columns are mass-orthonormal samples on the kept DOFs;
    inactive spaces (essential conditions present) have dimension 0.
    """

    tag: str
    basis: np.ndarray  # (n_dofs, dim)
    active: bool

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


class HilbertComplex:
    """Four DOF spaces with three exact-core operators and weighted metrics."""

    def __init__(
        self,
        which: str,
        domain: VoxelDomain,
        partition: BoundaryPartition,
        levels: Sequence[DofSpace],
        ops: Sequence[SparseOp] | None,
        eps: Weight,
        mu: Weight,
        widths: Mapping[str, int],
        head: PolynomialSpace,
        tail: PolynomialSpace,
        primal: "HilbertComplex | None" = None,
        reversed_of: "HilbertComplex | None" = None,
    ):
        self.which = which
        self.domain = domain
        self.partition = partition
        self.levels = tuple(levels)
        self.ops = tuple(ops) if ops is not None else None
        self.eps = eps
        self.mu = mu
        self.widths = dict(widths)
        self.head = head
        self.tail = tail
        self.primal = primal  # set when this complex is a chain of adjoints
        self._adjoints: dict[int, sp.csr_matrix] = {}
        if self.ops is not None:
            self.verify_exact_complex()

    @property
    def grid(self) -> GridSpec:
        return self.domain.grid

    @property
    def is_dual(self) -> bool:
        return self.primal is not None

    def d(self, k: int) -> sp.csr_matrix:
        """Operator from level k to level k+1 (float matrix)."""
        if self.ops is not None:
            return self.ops[k].matrix
        return self.primal.d_adj(2 - k)

    def d_adj(self, k: int) -> sp.csr_matrix:
        """Weighted adjoint of d(k), mapping level k+1 back to level k."""
        if self.ops is None:
            return self.primal.d(2 - k)
        if k not in self._adjoints:
            self._adjoints[k] = weighted_adjoint(
                self.ops[k], self.levels[k].mass, self.levels[k + 1].mass
            )
        return self._adjoints[k]

    def verify_exact_complex(self) -> None:
        """Assert d_{k+1} d_k == 0 exactly (integer cores)."""
        for k in range(2):
            comp = self.ops[k + 1] @ self.ops[k]
            if not comp.is_zero():
                raise AssertionError(
                    f"complex property violated at level {k}: max |entry| {comp.max_abs():.3e}"
                )

    def composite_max_abs(self, k: int) -> float:
        """max |entry| of d_{k+1} d_k; exactly 0.0 for a valid complex.

        For the adjoint-built chain the composite equals
        M^{-1} (d_{1-k} d_{2-k})^T M of the primal, so the primal's exact
        zero core certifies the dual composite as well.
        """
        if self.ops is not None:
            return (self.ops[k + 1] @ self.ops[k]).max_abs()
        return self.primal.composite_max_abs(1 - k)

    def dims(self) -> list[int]:
        return [lv.n_dofs for lv in self.levels]


def _level_weight_blocks(which: str, level: int, rank: str, eps: Weight, mu: Weight,
                         n_nodes: int) -> np.ndarray:
    """Full-grid mass coefficient blocks of one level.

    After the change of variables that keeps the operators unweighted, the
    first complex carries products (1, eps, mu^{-1}, 1) and the second
    (1, mu, eps^{-1}, 1), conjugated by the chart Gram square roots.  For
    identity weights the blocks are exactly the rational chart Grams.
    """
    c = RANK_COMPONENTS[rank]
    if rank in ("scalar", "vector"):
        return np.broadcast_to(np.eye(c), (n_nodes, c, c)).copy()
    w = eps if rank == "sym" else mu
    inverse = level == 2
    if w.is_identity:
        return np.broadcast_to(_GRAM[rank], (n_nodes, c, c)).copy()
    g = _GRAM_SQRT[rank]
    frames = w.frame_blocks(n_nodes, inverse=inverse)
    return np.einsum("ij,njk,kl->nil", g, frames, g)


def _poly_samples(tag: str, grid: GridSpec, mask: DofMask) -> np.ndarray:
    """Raw P1 / RT samples on the kept DOFs, as (n_dofs, 4) columns."""
    coords = grid.coordinates()
    cols = []
    if tag == "P1":
        kept = mask.keep[0]
        c0 = coords[kept]
        cols = [np.ones(kept.sum()), c0[:, 0], c0[:, 1], c0[:, 2]]
        return np.stack(cols, axis=-1)
    if tag == "RT":
        counts = mask.comp_counts()
        total = sum(counts)
        out = np.zeros((total, 4))
        base = 0
        for comp in range(3):
            kept = mask.keep[comp]
            m = counts[comp]
            out[base : base + m, comp] = 1.0
            out[base : base + m, 3] = coords[kept, comp]
            base += m
        return out
    raise ValueError(tag)


def _mass_orthonormalize(v: np.ndarray, mass: BlockDiagMass, tol: float = 1e-10) -> np.ndarray:
    """Mass-orthonormal basis of span(v) columns, dropping dependent ones."""
    if v.shape[1] == 0 or v.shape[0] == 0:
        return np.zeros((v.shape[0], 0))
    g = v.T @ (mass.matrix @ v)
    w, q = np.linalg.eigh(0.5 * (g + g.T))
    keep = w > tol * max(w.max(), 1.0)
    if not keep.any():
        return np.zeros((v.shape[0], 0))
    return v @ (q[:, keep] / np.sqrt(w[keep]))


def _end_space(tag: str, active: bool, grid: GridSpec, space: DofSpace) -> PolynomialSpace:
    if not active or space.n_dofs == 0:
        return PolynomialSpace(tag, np.zeros((space.n_dofs, 0)), active)
    basis = _mass_orthonormalize(_poly_samples(tag, grid, space.mask), space.mass)
    return PolynomialSpace(tag, basis, active)


def build_complex(
    which: str,
    dom: VoxelDomain,
    part: BoundaryPartition,
    eps: Weight | None = None,
    mu: Weight | None = None,
    widths: Mapping[str, int] | None = None,
    margins: Mapping[str, int] | None = None,
) -> HilbertComplex:
    """Assemble one biharmonic complex with strong essential conditions.

    ``which`` is ``"first"`` (gradgrad / rot_s / div_t) or ``"second"``
    (dev_grad / sym_rot / div_div).  A fully essential partition is
    realized as the reversed adjoint chain of the other complex with
    fully natural conditions (the adjoint pairing of the two chains).
    """
    if which not in COMPLEX_RANKS:
        raise ValueError(f"which must be 'first' or 'second', got {which!r}")
    eps = eps if eps is not None else identity_weight("sym")
    mu = mu if mu is not None else identity_weight("dev")
    if eps.rank != "sym" or mu.rank != "dev":
        raise WeightNotSPD("eps must weight sym fields and mu dev fields")
    n_gamma_t, n_gamma_n = part.face_counts()
    if n_gamma_n == 0 and n_gamma_t > 0:
        natural = build_complex(_OTHER[which], dom, part_all_natural(dom), eps=eps, mu=mu)
        return _reversed_adjoint_complex(which, natural, part)
    widths = dict(widths) if widths is not None else dict(DEFAULT_WIDTHS[which])
    margins = dict(margins) if margins is not None else widths
    chain = CHAINS[which]
    validate_chain(widths, chain)
    validate_chain(margins, chain)
    grid = dom.grid
    ranks = COMPLEX_RANKS[which]
    lattices = {
        rank: lats for rank, lats in zip(ranks, lattice_masks(which, grid, "forward"))
    }
    masks = build_masks(dom, part, widths, margins=margins, lattices=lattices)
    levels = []
    for lvl, rank in enumerate(ranks):
        blocks = _level_weight_blocks(which, lvl, rank, eps, mu, grid.n_nodes)
        mass = BlockDiagMass(blocks, masks[rank].keep, grid.h**3)
        levels.append(DofSpace(rank, masks[rank], mass, label=f"{which}:{lvl}:{rank}"))
    all_ops = assemble_biharmonic_ops(grid)
    ops = []
    for k, name in enumerate(COMPLEX_OPS[which]):
        ops.append(restrict(all_ops[name], masks[ranks[k]], masks[ranks[k + 1]]))
    gamma_t_empty = n_gamma_t == 0
    gamma_n_empty = n_gamma_n == 0
    if which == "first":
        head = _end_space("P1", gamma_t_empty, grid, levels[0])
        tail = _end_space("RT", gamma_n_empty, grid, levels[3])
    else:
        head = _end_space("RT", gamma_t_empty, grid, levels[0])
        tail = _end_space("P1", gamma_n_empty, grid, levels[3])
    return HilbertComplex(which, dom, part, levels, ops, eps, mu, widths, head, tail)


def part_all_natural(dom: VoxelDomain) -> BoundaryPartition:
    return partition_boundary(dom, "all-n")


def _reversed_adjoint_complex(which: str, natural: HilbertComplex,
                              part: BoundaryPartition) -> HilbertComplex:
    """The fully essential complex as reversed adjoints of ``natural``."""
    levels = tuple(reversed(natural.levels))
    return HilbertComplex(
        which,
        natural.domain,
        part,
        levels,
        None,
        natural.eps,
        natural.mu,
        {},
        head=natural.tail,  # P1/RT of the essential side: inactive
        tail=natural.head,  # the natural-side 4-dimensional end space
        primal=natural,
    )


def dual_complex(c: HilbertComplex) -> HilbertComplex:
    """Reversed chain of weighted adjoints.

    The adjoint of the divergence slot carries the analytic minus sign
    intrinsically (it is the weighted transpose of the restricted matrix),
    so no extra sign flips are applied; the dual of the dual reproduces
    the original operators exactly.
    """
    if c.is_dual:
        return c.primal
    return HilbertComplex(
        c.which + "-dual",
        c.domain,
        c.partition,
        tuple(reversed(c.levels)),
        None,
        c.eps,
        c.mu,
        c.widths,
        head=c.tail,
        tail=c.head,
        primal=c,
    )


def end_projectors(c: HilbertComplex) -> dict[str, dict[str, object]]:
    """Orthogonal projectors onto the P1/RT end spaces and their complements.

    For each end: ``iota`` (the orthonormal basis columns), ``pi`` (a
    callable projecting a field onto the space) and ``pi_perp``.
    """
    out = {}
    for name, space, level in (("head", c.head, c.levels[0]), ("tail", c.tail, c.levels[3])):
        v = space.basis
        m = level.mass.matrix

        def pi(x, v=v, m=m):
            return v @ (v.T @ (m @ x)) if v.shape[1] else np.zeros_like(x)

        def pi_perp(x, pi=pi):
            return x - pi(x)

        out[name] = {"tag": space.tag, "iota": v, "pi": pi, "pi_perp": pi_perp}
    return out


# ---------------------------------------------------------------------------
# Weak boundary-condition subspaces
# ---------------------------------------------------------------------------

#: For each graph space: (field rank, forward op, complex/level of the field
#: lattice, test rank, test-side op, pairing sign, band depth).
WEAK_SPACES = {
    "rot_s": ("sym", "rot_s", ("first", 1), "dev", "sym_rot", 1.0, 1),
    "div_t": ("dev", "div_t", ("first", 2), "vector", "dev_grad", -1.0, 1),
    "sym_rot": ("dev", "sym_rot", ("second", 1), "sym", "rot_s", 1.0, 1),
    "div_div": ("sym", "div_div", ("second", 2), "scalar", "gradgrad", 1.0, 2),
}


def _identity_mass_full(rank: str, grid: GridSpec) -> sp.csr_matrix:
    base = sp.csr_matrix(_GRAM[rank])
    return (grid.h**3) * sp.kron(base, sp.identity(grid.n_nodes, format="csr")).tocsr()


def _ambient_mask(space: str, dom: VoxelDomain, part: BoundaryPartition,
                  band: int = 0) -> DofMask:
    rank, _, (which, lvl), _, _, _, _ = WEAK_SPACES[space]
    lats = lattice_masks(which, dom.grid, "forward")[lvl]
    return build_masks(dom, part, {rank: band}, lattices={rank: lats})[rank]


def weak_bc_space(
    dom: VoxelDomain,
    part: BoundaryPartition,
    space: str,
    tau_sub: float = 1e-8,
    gap_min: float = 1e2,
) -> tuple[np.ndarray, dict[str, object]]:
    """Orthonormal basis of the weak-boundary-condition subspace.

    The weak space collects fields of the ambient (staggered) graph space
    whose integration-by-parts residual against every natural-side test
    DOF vanishes; computed as the numerical null space of the residual
    operator, with a RankDeficient error when the singular spectrum shows
    no clear gap at the cut.
    """
    if space not in WEAK_SPACES:
        raise ValueError(f"unknown weak space {space!r}")
    rank_in, op_name, _, rank_test, test_op_name, sign, depth = WEAK_SPACES[space]
    grid = dom.grid
    n = grid.n_nodes
    fwd = assemble_biharmonic_ops(grid, side="forward")[op_name]
    bwd = assemble_biharmonic_ops(grid, side="backward")[test_op_name]
    rank_out = {"rot_s": "dev", "div_t": "vector", "sym_rot": "sym", "div_div": "scalar"}[space]
    m_out = _identity_mass_full(rank_out, grid)
    m_in = _identity_mass_full(rank_in, grid)
    r_full = (m_out @ fwd.matrix - sign * (bwd.matrix.T @ m_in)).tocsr()
    flipped = BoundaryPartition(dom, part.gamma_n)  # natural faces become essential
    test_mask = build_masks(dom, flipped, {rank_test: depth})[rank_test]
    rows = test_mask.dof_indices(n)
    ambient = _ambient_mask(space, dom, part, band=0)
    cols = ambient.dof_indices(n)
    r = r_full[rows][:, cols]
    if min(r.shape) == 0:
        svals = np.zeros(0)
    else:
        svals = np.linalg.svd(r.toarray(), compute_uv=False)
    scale = svals[0] if svals.size else 1.0
    small = svals < tau_sub * max(scale, 1.0)
    rank_r = int((~small).sum())
    if rank_r and rank_r < svals.size:
        gap = svals[rank_r - 1] / max(svals[rank_r], np.finfo(float).tiny)
        if gap < gap_min:
            raise RankDeficient(
                f"singular spectrum gap {gap:.2e} < {gap_min:.0e} at cut {rank_r}"
            )
    if r.shape[0] and min(r.shape):
        _, _, vt = np.linalg.svd(r.toarray(), full_matrices=True)
        null = vt[rank_r:].T
    else:
        null = np.eye(len(cols))
    mass_amb = BlockDiagMass(
        np.broadcast_to(_GRAM[rank_in], (n, RANK_COMPONENTS[rank_in], RANK_COMPONENTS[rank_in])).copy(),
        ambient.keep,
        grid.h**3,
    )
    basis = _mass_orthonormalize(null, mass_amb)
    report = {
        "space": space,
        "dim": int(basis.shape[1]),
        "rows": int(r.shape[0]),
        "cols": int(r.shape[1]),
        "sval_max": float(scale),
    }
    return basis, report


def strong_bc_space(dom: VoxelDomain, part: BoundaryPartition, space: str) -> tuple[np.ndarray, DofMask]:
    """Strong subspace: positions (within the ambient DOF enumeration) of
    the DOFs kept by the banded mask."""
    depth = WEAK_SPACES[space][6]
    rank_in = WEAK_SPACES[space][0]
    grid = dom.grid
    strong_mask = _ambient_mask(space, dom, part, band=depth)
    ambient = _ambient_mask(space, dom, part, band=0)
    amb_dofs = ambient.dof_indices(grid.n_nodes)
    kept = np.isin(amb_dofs, strong_mask.dof_indices(grid.n_nodes))
    return np.flatnonzero(kept), strong_mask


def weak_strong_report(
    dom: VoxelDomain,
    part: BoundaryPartition,
    space: str,
    tau_sub: float = 1e-8,
) -> dict[str, object]:
    """Compare weak and strong subspaces: dimensions, inclusion residual,
    and principal angles in the mass metric."""
    weak, info = weak_bc_space(dom, part, space, tau_sub=tau_sub)
    strong_idx, _ = strong_bc_space(dom, part, space)
    rank_in = WEAK_SPACES[space][0]
    grid = dom.grid
    ambient = _ambient_mask(space, dom, part, band=0)
    mass_amb = BlockDiagMass(
        np.broadcast_to(_GRAM[rank_in], (grid.n_nodes, RANK_COMPONENTS[rank_in], RANK_COMPONENTS[rank_in])).copy(),
        ambient.keep,
        grid.h**3,
    )
    weak_z = mass_amb.chol_matrix @ weak
    strong_dim = len(strong_idx)
    # the strong space is a coordinate subspace in z-coordinates (full node
    # blockettes are kept together, and C maps each blockette to itself)
    if weak.shape[1] and strong_dim:
        cross = weak_z[strong_idx, :]
        svals = np.linalg.svd(cross, compute_uv=False)
        k = min(strong_dim, weak.shape[1])
        cosines = np.clip(svals[:k], 0.0, 1.0)
        max_angle = float(np.arccos(cosines).max()) if strong_dim <= weak.shape[1] else float("nan")
        incl = float(np.sqrt(max(0.0, 1.0 - np.min(svals[:k]) ** 2))) if strong_dim <= weak.shape[1] else float("nan")
    else:
        max_angle = 0.0 if strong_dim == weak.shape[1] else float("nan")
        incl = 0.0 if strong_dim == weak.shape[1] else float("nan")
    report = {
        "space": space,
        "weak_dim": int(weak.shape[1]),
        "strong_dim": int(strong_dim),
        "dims_equal": bool(weak.shape[1] == strong_dim),
        "max_principal_angle": max_angle,
        "strong_in_weak_residual": incl,
        "residual_rows": info["rows"],
        "residual_cols": info["cols"],
    }
    return report


# ---------------------------------------------------------------------------
# Descriptor files
# ---------------------------------------------------------------------------


def parse_descriptor(path: str | Path) -> dict[str, object]:
    """Parse a complex descriptor file.

    Sections/[keys]: [grid] dims, h; [domain] shape; [partition] gamma_t;
    [weights] weight_kind, weight_seed; [complex] which (and optional
    widths, e.g. ``scalar:4 sym:2 dev:1 vector:0``).
    """
    cp = configparser.ConfigParser()
    read = cp.read(str(path))
    if not read:
        raise FileNotFoundError(path)
    try:
        dims = tuple(int(t) for t in cp.get("grid", "dims").split())
        if len(dims) == 1:
            dims = dims * 3
        h = cp.getfloat("grid", "h", fallback=1.0)
        shape = cp.get("domain", "shape", fallback="full-box")
        gamma_t = cp.get("partition", "gamma_t", fallback="all-n")
        weight_kind = cp.get("weights", "weight_kind", fallback="identity")
        weight_seed = cp.getint("weights", "weight_seed", fallback=0)
        which = cp.get("complex", "which", fallback="first")
        widths_text = cp.get("complex", "widths", fallback="")
    except (configparser.Error, ValueError) as exc:
        raise ValueError(f"bad descriptor {path}: {exc}") from exc
    widths = None
    if widths_text.strip():
        widths = {}
        for tok in widths_text.replace(",", " ").split():
            rank, w = tok.split(":")
            widths[rank.strip()] = int(w)
    return {
        "dims": dims,
        "h": h,
        "shape": shape,
        "gamma_t": gamma_t,
        "weight_kind": weight_kind,
        "weight_seed": weight_seed,
        "which": which,
        "widths": widths,
    }


def complex_from_descriptor(desc: Mapping[str, object]) -> HilbertComplex:
    """Build a complex from a parsed descriptor dictionary."""
    grid = GridSpec(tuple(desc["dims"]), float(desc["h"]))
    dom = build_domain(grid, str(desc["shape"]))
    part = partition_boundary(dom, str(desc["gamma_t"]))
    if desc.get("weight_kind", "identity") == "identity":
        eps, mu = identity_weight("sym"), identity_weight("dev")
    elif desc["weight_kind"] == "random":
        seed = int(desc.get("weight_seed", 0))
        eps = random_weight("sym", grid.n_nodes, seed)
        mu = random_weight("dev", grid.n_nodes, seed + 1)
    else:
        raise ValueError(f"unknown weight_kind {desc['weight_kind']!r}")
    return build_complex(
        str(desc["which"]), dom, part, eps=eps, mu=mu, widths=desc.get("widths")
    )
