"""Voxelized computational domains with tagged boundary faces and DOF masks.

A domain is a face-connected set of active nodes on a structured grid.
Boundary faces (active node, outward direction with no active neighbour)
are partitioned into an essential part and its natural complement.  Strong
boundary conditions are realized by excluding bands of nodes near
essential faces from the degree-of-freedom set; interior walls (faces not
on the hull of the index box) additionally carry a mandatory margin band
so that restricted difference operators keep the exact complex property.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import ndimage

from .errors import Disconnected, Empty, FieldIoError, IncompatibleWidths

RANKS = ("scalar", "vector", "sym", "dev")

#: Components carried per node for each field rank.
RANK_COMPONENTS = {"scalar": 1, "vector": 3, "sym": 6, "dev": 8}

#: Outward unit steps for the six face directions (-x, +x, -y, +y, -z, +z).
FACE_DIRECTIONS = (
    (-1, 0, 0),
    (1, 0, 0),
    (0, -1, 0),
    (0, 1, 0),
    (0, 0, -1),
    (0, 0, 1),
)


@dataclass(frozen=True)
class GridSpec:
    """Structured grid: node counts per axis and uniform spacing."""

    dims: tuple[int, int, int]
    h: float = 1.0

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(n) < 2 for n in self.dims):
            raise ValueError(f"dims must be 3 integers >= 2, got {self.dims}")
        if not self.h > 0:
            raise ValueError(f"spacing must be positive, got {self.h}")
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))

    @property
    def n_nodes(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def coordinates(self) -> np.ndarray:
        """(N, 3) node coordinates in x-fastest linear order."""
        nx, ny, nz = self.dims
        x, y, z = np.meshgrid(
            np.arange(nx) * self.h,
            np.arange(ny) * self.h,
            np.arange(nz) * self.h,
            indexing="ij",
        )
        return np.stack(
            [x.flatten(order="F"), y.flatten(order="F"), z.flatten(order="F")], axis=-1
        )

    def flatten(self, a: np.ndarray) -> np.ndarray:
        """Flatten an (nx, ny, nz) array to linear (x-fastest) order."""
        return np.asarray(a).flatten(order="F")

    def unflatten(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v).reshape(self.dims, order="F")


@dataclass(frozen=True)
class VoxelDomain:
    """Active node set on a grid.  ``extendable`` is a user-supplied flag
    selecting which topological expectations apply; it is never computed."""

    grid: GridSpec
    active: np.ndarray  # bool, shape grid.dims
    extendable: bool | None = None

    def __post_init__(self):
        act = np.asarray(self.active, dtype=bool)
        if act.shape != self.grid.dims:
            raise ValueError(f"active mask shape {act.shape} != grid dims {self.grid.dims}")
        object.__setattr__(self, "active", act)
        if not act.any():
            raise Empty("domain has no active nodes")
        structure = ndimage.generate_binary_structure(3, 1)  # face connectivity
        _, n_comp = ndimage.label(act, structure=structure)
        if n_comp != 1:
            raise Disconnected(f"active set has {n_comp} face-connected components")

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def boundary_faces(self) -> np.ndarray:
        """(nx, ny, nz, 6) bool: face d of node n is a boundary face."""
        act = self.active
        out = np.zeros(act.shape + (6,), dtype=bool)
        for d, step in enumerate(FACE_DIRECTIONS):
            neighbour = _shift(act, step)
            out[..., d] = act & ~neighbour
        return out

    def interior_wall_faces(self) -> np.ndarray:
        """Boundary faces whose outside neighbour is an inactive in-box node.

        These are the faces where a restricted operator would see the zero
        extension of a field; they carry mandatory margin bands.
        """
        act = self.active
        out = np.zeros(act.shape + (6,), dtype=bool)
        for d, step in enumerate(FACE_DIRECTIONS):
            neighbour_exists = _inside(act.shape, step)
            neighbour = _shift(act, step)
            out[..., d] = act & neighbour_exists & ~neighbour
        return out


def _shift(a: np.ndarray, step: Sequence[int]) -> np.ndarray:
    """a evaluated at node + step, False outside the box."""
    out = np.zeros_like(a, dtype=bool)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    for ax, s in enumerate(step):
        if s == 1:
            src[ax] = slice(1, None)
            dst[ax] = slice(0, -1)
        elif s == -1:
            src[ax] = slice(0, -1)
            dst[ax] = slice(1, None)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _inside(shape: Sequence[int], step: Sequence[int]) -> np.ndarray:
    """Bool array: node + step is still inside the index box."""
    out = np.ones(shape, dtype=bool)
    for ax, s in enumerate(step):
        idx = [slice(None)] * 3
        if s == 1:
            idx[ax] = slice(-1, None)
            out[tuple(idx)] = False
        elif s == -1:
            idx[ax] = slice(0, 1)
            out[tuple(idx)] = False
    return out


def build_domain(spec: GridSpec, shape: str | np.ndarray) -> VoxelDomain:
    """Construct a domain from a descriptor.

    Descriptors: ``"full-box"``; ``"box-minus-box:<k>"`` removing a central
    k^3 block; ``"mask-file:<path>"`` reading an explicit 0/1 mask; or a
    boolean array of shape ``spec.dims``.
    """
    if isinstance(shape, np.ndarray):
        return VoxelDomain(spec, shape, extendable=None)
    if shape == "full-box":
        return VoxelDomain(spec, np.ones(spec.dims, dtype=bool), extendable=True)
    if shape.startswith("box-minus-box"):
        k = int(shape.split(":")[1]) if ":" in shape else 3
        active = np.ones(spec.dims, dtype=bool)
        lo = [(n - k) // 2 for n in spec.dims]
        if any(l < 1 or l + k > n - 1 for l, n in zip(lo, spec.dims)):
            raise ValueError(f"inner {k}^3 box does not fit strictly inside {spec.dims}")
        active[lo[0] : lo[0] + k, lo[1] : lo[1] + k, lo[2] : lo[2] + k] = False
        return VoxelDomain(spec, active, extendable=False)
    if shape.startswith("mask-file:"):
        mask = load_mask(shape.split(":", 1)[1])
        if mask.shape != spec.dims:
            raise ValueError(f"mask file dims {mask.shape} != grid dims {spec.dims}")
        return VoxelDomain(spec, mask, extendable=None)
    raise ValueError(f"unknown domain descriptor {shape!r}")


@dataclass(frozen=True)
class BoundaryPartition:
    """Essential/natural split of the boundary faces."""

    domain: VoxelDomain
    gamma_t: np.ndarray  # bool, shape dims + (6,)

    def __post_init__(self):
        gt = np.asarray(self.gamma_t, dtype=bool)
        boundary = self.domain.boundary_faces()
        if gt.shape != boundary.shape:
            raise ValueError("gamma_t shape mismatch")
        if (gt & ~boundary).any():
            raise ValueError("gamma_t tags non-boundary faces")
        object.__setattr__(self, "gamma_t", gt)

    @property
    def gamma_n(self) -> np.ndarray:
        return self.domain.boundary_faces() & ~self.gamma_t

    def face_counts(self) -> tuple[int, int]:
        return int(self.gamma_t.sum()), int(self.gamma_n.sum())


Selector = Callable[[tuple[int, int, int], int], bool]


def partition_boundary(dom: VoxelDomain, selector: str | Selector) -> BoundaryPartition:
    """Tag boundary faces.  Canonical selectors: ``"all-t"``, ``"all-n"``,
    ``"half-x"`` / ``"half-y"`` / ``"half-z"`` (owner node below the
    midplane of that axis is tagged t), or any callable(node, direction).
    """
    boundary = dom.boundary_faces()
    if selector == "all-t":
        gamma_t = boundary.copy()
    elif selector == "all-n":
        gamma_t = np.zeros_like(boundary)
    elif isinstance(selector, str) and selector.startswith("half-"):
        axis = "xyz".index(selector[-1])
        mid = (dom.grid.dims[axis] - 1) / 2.0
        coords = np.indices(dom.grid.dims)[axis]
        gamma_t = boundary & (coords < mid)[..., None]
    elif callable(selector):
        gamma_t = np.zeros_like(boundary)
        for idx in np.argwhere(boundary.any(axis=-1)):
            for d in range(6):
                if boundary[tuple(idx) + (d,)]:
                    gamma_t[tuple(idx) + (d,)] = bool(selector(tuple(idx), d))
    else:
        raise ValueError(f"unknown boundary selector {selector!r}")
    return BoundaryPartition(dom, gamma_t)


@dataclass(frozen=True)
class DofMask:
    """Kept-node masks for one field rank, one per component.

    Components of a tensor level live on their own staggered sub-lattices,
    so ``keep`` has shape (ncomp, N).  ``band_width`` nodes (Chebyshev)
    behind every essential face and ``margin_width`` nodes behind every
    interior wall are excluded from all components.
    """

    rank: str
    keep: np.ndarray  # bool, (ncomp, N), x-fastest node order
    band_width: int
    margin_width: int = 0

    def __post_init__(self):
        k = np.asarray(self.keep, dtype=bool)
        if k.ndim == 1:
            k = np.broadcast_to(k, (RANK_COMPONENTS[self.rank], k.size)).copy()
        if k.shape[0] != RANK_COMPONENTS[self.rank]:
            raise ValueError(f"{self.rank} mask needs {RANK_COMPONENTS[self.rank]} component rows")
        object.__setattr__(self, "keep", k)

    @property
    def n_kept(self) -> int:
        return int(self.keep.sum())

    def comp_counts(self) -> list[int]:
        return [int(row.sum()) for row in self.keep]

    def dof_indices(self, n_nodes: int) -> np.ndarray:
        """Flat DOF indices (component-major) selected by this mask."""
        return np.concatenate(
            [c * n_nodes + np.flatnonzero(row) for c, row in enumerate(self.keep)]
        ).astype(np.int64) if self.keep.any() else np.zeros(0, dtype=np.int64)


def chebyshev_distance_to(owners: np.ndarray, max_dist: int) -> np.ndarray:
    """Chebyshev distance (capped at max_dist + 1) to the nearest owner node."""
    dist = np.full(owners.shape, max_dist + 1, dtype=np.int32)
    frontier = owners.copy()
    dist[frontier] = 0
    structure = np.ones((3, 3, 3), dtype=bool)
    for d in range(1, max_dist + 1):
        if not frontier.any():
            break
        frontier = ndimage.binary_dilation(frontier, structure=structure)
        newly = frontier & (dist > d)
        dist[newly] = d
    return dist


def face_owner_nodes(faces: np.ndarray) -> np.ndarray:
    """Nodes owning at least one tagged face."""
    return faces.any(axis=-1)


def validate_chain(widths: Mapping[str, int], chain: Sequence[tuple[str, int]]) -> None:
    """Check band_width(r1) >= band_width(r2) + stencil_radius along a chain.

    ``chain`` lists (rank, stencil_radius_of_outgoing_operator) pairs; the
    final rank is listed with radius 0.
    """
    for (r1, s), (r2, _) in zip(chain, chain[1:]):
        w1, w2 = int(widths[r1]), int(widths[r2])
        if w1 < w2 + s:
            raise IncompatibleWidths(
                f"width[{r1}]={w1} < width[{r2}]={w2} + stencil radius {s}"
            )


def build_masks(
    dom: VoxelDomain,
    part: BoundaryPartition,
    widths: Mapping[str, int],
    margins: Mapping[str, int] | None = None,
    chain: Sequence[tuple[str, int]] | None = None,
    lattices: Mapping[str, Sequence[np.ndarray]] | None = None,
) -> dict[str, DofMask]:
    """Build one DofMask per rank listed in ``widths``.

    ``margins`` defaults to ``widths`` and governs the mandatory exclusion
    behind interior walls (cavity boundaries); essential bands use
    ``widths`` and the partition's gamma_t faces.  ``lattices`` optionally
    supplies per-component staggered node masks (flat bool arrays) that are
    intersected with the band conditions.
    """
    if margins is None:
        margins = widths
    if chain is not None:
        validate_chain(widths, chain)
        validate_chain(margins, chain)
    grid = dom.grid
    max_w = max([0, *widths.values(), *margins.values()])
    t_owners = face_owner_nodes(part.gamma_t)
    wall_owners = face_owner_nodes(dom.interior_wall_faces())
    dist_t = chebyshev_distance_to(t_owners, max_w) if t_owners.any() else None
    dist_wall = chebyshev_distance_to(wall_owners, max_w) if wall_owners.any() else None
    masks = {}
    for rank, w in widths.items():
        keep = dom.active.copy()
        if dist_t is not None and w > 0:
            keep &= dist_t >= w
        m = int(margins[rank])
        if dist_wall is not None and m > 0:
            keep &= dist_wall >= m
        node_keep = grid.flatten(keep)
        if lattices is not None and rank in lattices:
            per_comp = np.stack([node_keep & lat for lat in lattices[rank]])
        else:
            per_comp = np.broadcast_to(node_keep, (RANK_COMPONENTS[rank], node_keep.size)).copy()
        masks[rank] = DofMask(rank, per_comp, int(w), m)
    return masks


def save_mask(path: str | Path, mask: np.ndarray) -> None:
    """Write a voxel mask in the text format ``voxmask nx ny nz`` + 0/1 tokens."""
    mask = np.asarray(mask, dtype=bool)
    nx, ny, nz = mask.shape
    tokens = " ".join(str(int(v)) for v in mask.flatten(order="F"))
    Path(path).write_text(f"voxmask {nx} {ny} {nz}\n{tokens}\n")


def load_mask(path: str | Path) -> np.ndarray:
    """Read a voxel mask written by :func:`save_mask`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FieldIoError(str(exc)) from exc
    parts = text.split()
    if len(parts) < 4 or parts[0] != "voxmask":
        raise FieldIoError(f"{path}: not a voxmask file")
    nx, ny, nz = (int(p) for p in parts[1:4])
    tokens = parts[4:]
    if len(tokens) != nx * ny * nz:
        raise FieldIoError(
            f"{path}: expected {nx * ny * nz} tokens, found {len(tokens)}"
        )
    flat = np.array([int(t) for t in tokens], dtype=bool)
    return flat.reshape((nx, ny, nz), order="F")
