"""Harmonic fields, Helmholtz decompositions, potentials, Poincare constants.

All spectral work happens in symmetrized coordinates: with the level mass
split M = C^T C (block Cholesky), the operator between levels k and k+1
becomes B_k = C_{k+1} d_k C_k^{-1}, and every weighted notion (adjoints,
orthogonality, harmonic fields) turns Euclidean.  The Hodge Laplacian at
level k is L_k = B_k^T B_k + B_{k-1} B_{k-1}^T; its near-null space is the
space of generalized Dirichlet/Neumann fields.

Dimensions are integers: the eigenvalue cut demands a factor-100 spectral
gap and raises NoSpectralGap instead of guessing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .complexes import (
    HilbertComplex,
    Weight,
    build_complex,
    identity_weight,
    random_weight,
)
from .domain import BoundaryPartition, VoxelDomain
from .errors import NoSpectralGap, NotInRange, SolverDiverged

#: Harmonic cut: eigenvalues below TAU_HARM_FACTOR * norm(L) count as zero.
TAU_HARM_FACTOR = 1e-8

#: Required ratio between the first kept and last discarded eigenvalue.
GAP_MIN = 1e2

#: Dense eigendecomposition below this many DOFs, iterative above.
DENSE_EIG_CUTOFF = 3200

#: The oracle refuses problems larger than this.
ORACLE_MAX_DOFS = 20000

SOLVER_TOL = 1e-10


def sym_operator(c: HilbertComplex, k: int) -> sp.csr_matrix:
    """B_k = C_{k+1} d_k C_k^{-1}, the operator in orthonormal coordinates."""
    out = c.levels[k + 1].mass.chol_matrix
    inn = c.levels[k].mass.chol_inv_matrix
    return (out @ c.d(k) @ inn).tocsr()


def hodge_laplacian(c: HilbertComplex, level: int) -> sp.csr_matrix:
    """Symmetric PSD Hodge Laplacian of one level in orthonormal coordinates."""
    n = c.levels[level].n_dofs
    lap = sp.csr_matrix((n, n))
    if level < 3:
        b_up = sym_operator(c, level)
        lap = lap + b_up.T @ b_up
    if level > 0:
        b_dn = sym_operator(c, level - 1)
        lap = lap + b_dn @ b_dn.T
    return lap.tocsr()


@dataclass
class HarmonicBasis:
    """Mass-orthonormal basis of the discrete Dirichlet/Neumann fields."""

    level: int
    fields: np.ndarray  # (n_dofs, dim), x-coordinates, M-orthonormal
    eigen_gap: float
    eigenvalues: np.ndarray  # ascending, as computed
    residual: float  # max of |d_k x|, |d_{k-1}* x| over the basis

    @property
    def dim(self) -> int:
        return self.fields.shape[1]


def _smallest_eigenpairs(lap: sp.csr_matrix, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k smallest eigenpairs of a symmetric PSD sparse matrix."""
    n = lap.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    if n <= DENSE_EIG_CUTOFF or k >= n - 1:
        w, v = np.linalg.eigh(lap.toarray())
        return w[: min(k, n)], v[:, : min(k, n)]
    scale = max(float(np.abs(lap).sum(axis=1).max()), 1.0)
    sigma = -1e-3 * scale
    v0 = np.cos(np.arange(n) * 0.7) + 0.1  # fixed start vector for determinism
    w, v = spla.eigsh(lap, k=k, sigma=sigma, which="LM", v0=v0)
    order = np.argsort(w)
    return w[order], v[:, order]


def _cut_spectrum(evals: np.ndarray, tau: float) -> int:
    return int((evals < tau).sum())


def harmonic_fields(
    c: HilbertComplex,
    level: int,
    tol: float = TAU_HARM_FACTOR,
    gap_min: float = GAP_MIN,
) -> HarmonicBasis:
    """Near-null space of the weighted Hodge Laplacian at a level.

    Raises NoSpectralGap when the eigenvalue cut is ambiguous (the
    discrete cohomology dimension must be an unambiguous integer).
    """
    n = c.levels[level].n_dofs
    if n == 0:
        return HarmonicBasis(level, np.zeros((0, 0)), float("inf"), np.zeros(0), 0.0)
    lap = hodge_laplacian(c, level)
    scale = max(float(np.abs(lap).sum(axis=1).max()), np.finfo(float).tiny)
    tau = tol * scale
    k = min(n, 16)
    while True:
        evals, evecs = _smallest_eigenpairs(lap, k)
        cut = _cut_spectrum(evals, tau)
        if cut < len(evals) or len(evals) == n:
            break
        k = min(n, 2 * k)  # all computed eigenvalues were below the cut
    if cut == 0:
        gap = float(evals[0] / tau) if len(evals) else float("inf")
    else:
        below = max(float(evals[cut - 1]), np.finfo(float).tiny)
        gap = float(evals[cut] / below) if cut < len(evals) else float("inf")
        # also demand clear separation from the threshold on both sides
        gap = min(gap, float(evals[cut] / tau)) if cut < len(evals) else gap
    if gap < gap_min:
        raise NoSpectralGap(
            f"level {level}: eigenvalue gap {gap:.2e} below {gap_min:.0e} "
            f"(cut at {cut}, eigenvalues {evals[: cut + 2]})"
        )
    z = evecs[:, :cut]
    fields = c.levels[level].mass.chol_inv_matrix @ z if cut else np.zeros((n, 0))
    residual = 0.0
    for j in range(cut):
        x = fields[:, j]
        if level < 3:
            residual = max(residual, c.levels[level + 1].mass.norm(c.d(level) @ x))
        if level > 0:
            residual = max(residual, c.levels[level - 1].mass.norm(c.d_adj(level - 1) @ x))
    return HarmonicBasis(level, fields, gap, evals, residual)


def _lsmr_minnorm(b: sp.spmatrix, rhs: np.ndarray, tol: float, maxiter: int) -> tuple[np.ndarray, int]:
    """Minimal-norm least-squares solve, returning (solution, istop)."""
    res = spla.lsmr(b, rhs, atol=tol, btol=tol, maxiter=maxiter)
    return res[0], res[1]


def _iter_cap(n: int) -> int:
    return max(200, int(50 * np.sqrt(max(n, 1))))


def potential_solve(
    c: HilbertComplex,
    k: int,
    y: np.ndarray,
    tol: float = 1e-8,
) -> np.ndarray:
    """Minimal-norm x with d_k x = y and x orthogonal to ker(d_k).

    Realizes the reduced-operator inverse: the solution is the unique
    preimage in the mass-orthogonal complement of the kernel.  Raises
    NotInRange when y has a component outside the range, SolverDiverged
    when the iteration cap is hit first.
    """
    b = sym_operator(c, k)
    zy = c.levels[k + 1].mass.chol_matrix @ y
    ny = float(np.linalg.norm(zy))
    if ny == 0.0:
        return np.zeros(c.levels[k].n_dofs)
    cap = _iter_cap(b.shape[1])
    z, istop = _lsmr_minnorm(b, zy, tol=min(tol, SOLVER_TOL), maxiter=cap)
    residual = float(np.linalg.norm(b @ z - zy)) / ny
    if residual > tol:
        # converged least-squares with large residual => y not in range
        if istop in (7, 8):
            raise SolverDiverged(f"lsmr hit cap {cap} (residual {residual:.2e})")
        raise NotInRange(f"relative residual {residual:.2e} exceeds {tol:.1e}")
    return c.levels[k].mass.chol_inv_matrix @ z


@dataclass
class DecompositionResult:
    """Weighted-orthogonal Helmholtz splitting of a field."""

    range_part: np.ndarray
    harmonic_part: np.ndarray
    corange_part: np.ndarray
    residual: float
    orthogonality_defect: float

    def parts(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.range_part, self.harmonic_part, self.corange_part


def helmholtz(
    c: HilbertComplex,
    level: int,
    x: np.ndarray,
    tol: float = SOLVER_TOL,
    harm: HarmonicBasis | None = None,
) -> DecompositionResult:
    """Split a level-1 or level-2 field into range + harmonic + corange.

    range_part lies in R(d_{k-1}), corange_part in R(d_k^*), and
    harmonic_part is the projection onto the Dirichlet/Neumann fields;
    the three parts are pairwise orthogonal in the weighted product.
    """
    if level not in (1, 2):
        raise ValueError("helmholtz decomposes the middle levels (1 or 2)")
    mass = c.levels[level].mass
    z = mass.chol_matrix @ x
    b_dn = sym_operator(c, level - 1)
    b_up = sym_operator(c, level)
    cap = _iter_cap(len(z))
    p, _ = _lsmr_minnorm(b_dn, z, tol=tol, maxiter=cap)
    z_range = b_dn @ p
    q, _ = _lsmr_minnorm(b_up.T, z, tol=tol, maxiter=cap)
    z_corange = b_up.T @ q
    if harm is None:
        harm = harmonic_fields(c, level)
    if harm.dim:
        vz = mass.chol_matrix @ harm.fields
        z_harm = vz @ (vz.T @ z)
    else:
        z_harm = np.zeros_like(z)
    nz = float(np.linalg.norm(z))
    parts_z = (z_range, z_harm, z_corange)
    residual = float(np.linalg.norm(z - sum(parts_z))) / nz if nz else 0.0
    defect = 0.0
    for i in range(3):
        for j in range(i + 1, 3):
            na, nb = np.linalg.norm(parts_z[i]), np.linalg.norm(parts_z[j])
            if na > 0 and nb > 0:
                defect = max(defect, abs(float(parts_z[i] @ parts_z[j])) / (na * nb))
    cinv = mass.chol_inv_matrix
    return DecompositionResult(
        cinv @ z_range, cinv @ z_harm, cinv @ z_corange, residual, defect
    )


@dataclass
class PoincareReport:
    """Optimal Friedrichs/Poincare constants with attaining fields."""

    c0: float
    c1: float
    c2: float
    attaining: tuple[np.ndarray, np.ndarray, np.ndarray]
    gaps: tuple[float, float, float]

    def constant(self, i: int) -> float:
        return (self.c0, self.c1, self.c2)[i]


def _sigma_min_positive_dense(b: sp.spmatrix, tau_factor: float = 1e-10) -> tuple[float, np.ndarray, float]:
    """Smallest positive singular value, its right vector, and the gap to the
    numerical null spectrum (dense path)."""
    m = b.toarray()
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise NoSpectralGap("operator is identically zero")
    cut = s > tau_factor * s[0]
    pos = s[cut]
    sigma = float(pos[-1])
    vec = vt[int(cut.sum()) - 1]
    below = s[~cut]
    gap = float(sigma / below[0]) if below.size else float("inf")
    return sigma, vec, gap


def _sigma_min_positive_iterative(c: HilbertComplex, i: int) -> tuple[float, np.ndarray, float]:
    """Smallest positive singular value of B_i via Hodge-Laplacian eigenpairs.

    Works at the level whose Laplacian has a small null space: level 0 for
    i = 0 (nullity <= dim P1/RT), otherwise level i+1, whose positive
    spectrum is classified by down-energy (the B_i part) versus up-energy.
    """
    b = sym_operator(c, i)
    lap = (b.T @ b).tocsr() if i == 0 else hodge_laplacian(c, i + 1)
    scale = max(float(np.abs(lap).sum(axis=1).max()), np.finfo(float).tiny)
    tau = TAU_HARM_FACTOR * scale
    k = 16
    while True:
        evals, evecs = _smallest_eigenpairs(lap, min(k, lap.shape[0]))
        for idx in range(len(evals)):
            lam = float(evals[idx])
            if lam < tau:
                continue
            z = evecs[:, idx]
            if i == 0:
                wanted = True
            else:
                down_energy = float(np.linalg.norm(b.T @ z) ** 2)
                wanted = down_energy / lam > 0.5
            if wanted:
                sigma = float(np.sqrt(lam))
                below = evals[evals < tau]
                gap = float(lam / below.max()) if below.size and below.max() > 0 else float("inf")
                if i == 0:
                    vec = z
                else:
                    vec = b.T @ z
                    vec /= max(np.linalg.norm(vec), np.finfo(float).tiny)
                return sigma, vec, gap
        if k >= lap.shape[0]:
            raise NoSpectralGap(f"no positive eigenvalue of the wanted class among {k}")
        k = min(2 * k, lap.shape[0])


def poincare_constants(c: HilbertComplex, dense_cutoff: int = DENSE_EIG_CUTOFF) -> PoincareReport:
    """Optimal constants c_i = 1 / sigma_min^+ of the three reduced operators.

    The attaining field x satisfies |x| = c_i |d_i x| in the weighted norms.
    """
    consts, vecs, gaps = [], [], []
    for i in range(3):
        b = sym_operator(c, i)
        if min(b.shape) == 0:
            consts.append(float("nan"))
            vecs.append(np.zeros(c.levels[i].n_dofs))
            gaps.append(float("inf"))
            continue
        if max(b.shape) <= dense_cutoff:
            sigma, zvec, gap = _sigma_min_positive_dense(b)
        else:
            sigma, zvec, gap = _sigma_min_positive_iterative(c, i)
        consts.append(1.0 / sigma)
        vecs.append(c.levels[i].mass.chol_inv_matrix @ zvec)
        gaps.append(gap)
    return PoincareReport(consts[0], consts[1], consts[2], tuple(vecs), tuple(gaps))


def combined_estimate_check(
    c: HilbertComplex,
    samples: int = 20,
    seed: int = 0,
    report: PoincareReport | None = None,
    harm: HarmonicBasis | None = None,
) -> dict[str, float]:
    """Check |S|^2 <= c1^2 |d_1 S|^2 + c0^2 |d_0^* S|^2 on harmonic-free fields.

    Also evaluates the ratio at the extremal divDiv-attaining field, where
    the estimate is tight (ratio 1).
    """
    if report is None:
        report = poincare_constants(c)
    if harm is None:
        harm = harmonic_fields(c, 1)
    mass1 = c.levels[1].mass
    rng = np.random.default_rng(seed)

    def h_free(x: np.ndarray) -> np.ndarray:
        if harm.dim:
            v = harm.fields
            return x - v @ (v.T @ (mass1.matrix @ x))
        return x

    def ratio(x: np.ndarray) -> float:
        nx2 = mass1.inner(x, x)
        if nx2 == 0.0:
            return 0.0
        up = c.levels[2].mass.inner(c.d(1) @ x, c.d(1) @ x)
        dn_v = c.d_adj(0) @ x
        dn = c.levels[0].mass.inner(dn_v, dn_v)
        return nx2 / (report.c1**2 * up + report.c0**2 * dn)

    max_ratio = 0.0
    for _ in range(samples):
        x = h_free(rng.standard_normal(mass1.n_dofs))
        max_ratio = max(max_ratio, ratio(x))
    u_star = report.attaining[0]
    s_star = c.d(0) @ u_star
    tight = ratio(h_free(s_star)) if np.linalg.norm(s_star) else float("nan")
    return {"max_ratio": float(max_ratio), "tight_ratio": float(tight), "samples": samples}


def kernel_projector(c: HilbertComplex, k: int, tol: float = SOLVER_TOL) -> Callable[[np.ndarray], np.ndarray]:
    """Mass-orthogonal projector onto ker(d_k), applied iteratively."""
    b = sym_operator(c, k)
    mass = c.levels[k].mass
    cap = _iter_cap(b.shape[0])

    def project(x: np.ndarray) -> np.ndarray:
        z = mass.chol_matrix @ x
        w, _ = _lsmr_minnorm(b.T, z, tol=tol, maxiter=cap)
        return mass.chol_inv_matrix @ (z - b.T @ w)

    return project


def alt_projection_check(
    c: HilbertComplex,
    level: int,
    harm: HarmonicBasis | None = None,
    angle_tol: float = 1e-6,
) -> dict[str, object]:
    """Dense verification of the alternative-projection identities at a level.

    (a) no nonzero harmonic field is orthogonal to the pre-basis (here the
    computed harmonic basis itself), and (b) ker(d_level) intersected with
    the pre-basis orthocomplement equals R(d_{level-1}).
    """
    if harm is None:
        harm = harmonic_fields(c, level)
    b_up = sym_operator(c, level).toarray()
    b_dn = sym_operator(c, level - 1).toarray()
    mass = c.levels[level].mass
    # z-coordinates throughout
    _, s_up, vt_up = np.linalg.svd(b_up, full_matrices=True)
    r_up = int((s_up > 1e-10 * max(s_up.max(), 1.0)).sum()) if s_up.size else 0
    ker = vt_up[r_up:].T  # orthonormal basis of ker(B_up)
    u_dn, s_dn, _ = np.linalg.svd(b_dn, full_matrices=False)
    r_dn = int((s_dn > 1e-10 * max(s_dn.max(), 1.0)).sum()) if s_dn.size else 0
    rng_basis = u_dn[:, :r_dn]
    bz = mass.chol_matrix @ harm.fields if harm.dim else np.zeros((ker.shape[0], 0))
    # (a): Gram of harmonic fields against the pre-basis is nonsingular
    gram_ok = True
    if harm.dim:
        g = bz.T @ bz
        gram_ok = bool(np.linalg.matrix_rank(g, tol=1e-10) == harm.dim)
    # (b): ker ∩ B^perp == range(d_{level-1})
    if harm.dim:
        coef = bz.T @ ker  # (dim, dim ker)
        _, s_c, vt_c = np.linalg.svd(coef, full_matrices=True)
        r_c = int((s_c > 1e-10 * max(s_c.max(), 1.0)).sum()) if s_c.size else 0
        inter = ker @ vt_c[r_c:].T
    else:
        inter = ker
    dims_ok = inter.shape[1] == r_dn
    max_angle = 0.0
    if inter.shape[1] and r_dn:
        cosines = np.clip(np.linalg.svd(rng_basis.T @ inter, compute_uv=False), -1.0, 1.0)
        if inter.shape[1] == r_dn:
            max_angle = float(np.arccos(np.minimum(cosines, 1.0)).max())
        else:
            max_angle = float("nan")
    return {
        "level": level,
        "harm_dim": harm.dim,
        "gram_nonsingular": gram_ok,
        "ker_dim": int(ker.shape[1]),
        "range_dim": int(r_dn),
        "intersection_dim": int(inter.shape[1]),
        "dims_ok": bool(dims_ok),
        "max_principal_angle": max_angle,
        "angles_ok": bool(dims_ok and max_angle < angle_tol),
    }


def weight_independence_study(
    dom: VoxelDomain,
    part: BoundaryPartition,
    which: str,
    seeds: Sequence[int] = (1, 2, 3),
) -> dict[str, object]:
    """Harmonic dimensions across identity and random admissible weights."""
    n = dom.grid.n_nodes
    runs = [("identity", identity_weight("sym"), identity_weight("dev"))]
    for s in seeds:
        runs.append((f"random{s}", random_weight("sym", n, s), random_weight("dev", n, s + 1000)))
    dims: dict[str, list[int]] = {}
    for name, eps, mu in runs:
        cx = build_complex(which, dom, part, eps=eps, mu=mu)
        dims[name] = [harmonic_fields(cx, 1).dim, harmonic_fields(cx, 2).dim]
    ref = dims["identity"]
    return {
        "which": which,
        "dims": dims,
        "all_equal": bool(all(v == ref for v in dims.values())),
    }


# ---------------------------------------------------------------------------
# Dense oracle
# ---------------------------------------------------------------------------


def _check_oracle_size(c: HilbertComplex) -> None:
    n = max(lv.n_dofs for lv in c.levels)
    if n > ORACLE_MAX_DOFS:
        raise ValueError(f"oracle refuses {n} DOFs (> {ORACLE_MAX_DOFS})")


def oracle_harmonic_dim(c: HilbertComplex, level: int, tol: float = TAU_HARM_FACTOR) -> int:
    """Harmonic dimension from a dense eigendecomposition."""
    _check_oracle_size(c)
    lap = hodge_laplacian(c, level).toarray()
    if lap.size == 0:
        return 0
    evals = np.linalg.eigvalsh(lap)
    scale = max(float(np.abs(lap).sum(axis=1).max()), np.finfo(float).tiny)
    return int((evals < tol * scale).sum())


def oracle_poincare(c: HilbertComplex) -> tuple[float, float, float]:
    """Poincare constants from dense SVDs of the three operators."""
    _check_oracle_size(c)
    out = []
    for i in range(3):
        b = sym_operator(c, i)
        if min(b.shape) == 0:
            out.append(float("nan"))
            continue
        sigma, _, _ = _sigma_min_positive_dense(b)
        out.append(1.0 / sigma)
    return tuple(out)


def oracle_helmholtz(c: HilbertComplex, level: int, x: np.ndarray) -> DecompositionResult:
    """Helmholtz split via dense orthogonal projections."""
    _check_oracle_size(c)
    mass = c.levels[level].mass
    z = mass.chol_matrix @ x
    b_dn = sym_operator(c, level - 1).toarray()
    b_up = sym_operator(c, level).toarray()
    u_dn, s_dn, _ = np.linalg.svd(b_dn, full_matrices=False)
    r_dn = int((s_dn > 1e-10 * max(s_dn.max(), 1.0)).sum()) if s_dn.size else 0
    q_range = u_dn[:, :r_dn]
    _, s_up, vt_up = np.linalg.svd(b_up, full_matrices=False)
    r_up = int((s_up > 1e-10 * max(s_up.max(), 1.0)).sum()) if s_up.size else 0
    q_corange = vt_up[:r_up].T
    z_range = q_range @ (q_range.T @ z)
    z_corange = q_corange @ (q_corange.T @ z)
    z_harm = z - z_range - z_corange
    cinv = mass.chol_inv_matrix
    nz = float(np.linalg.norm(z))
    residual = float(np.linalg.norm(z - (z_range + z_harm + z_corange))) / nz if nz else 0.0
    defect = 0.0
    for a, b2 in ((z_range, z_harm), (z_range, z_corange), (z_harm, z_corange)):
        na, nb = np.linalg.norm(a), np.linalg.norm(b2)
        if na > 0 and nb > 0:
            defect = max(defect, abs(float(a @ b2)) / (na * nb))
    return DecompositionResult(cinv @ z_range, cinv @ z_harm, cinv @ z_corange, residual, defect)


def oracle_kernel_dim(c: HilbertComplex, k: int) -> int:
    """dim ker(d_k) by dense rank computation."""
    _check_oracle_size(c)
    m = c.d(k).toarray()
    if m.size == 0:
        return c.levels[k].n_dofs
    return int(m.shape[1] - np.linalg.matrix_rank(m))


def oracle_rank(c: HilbertComplex, k: int) -> int:
    _check_oracle_size(c)
    m = c.d(k).toarray()
    if m.size == 0:
        return 0
    return int(np.linalg.matrix_rank(m))


def rank_nullity_ledger(c: HilbertComplex) -> dict[str, object]:
    """Exact dimension bookkeeping per level (oracle sizes only).

    Checks dim(level k) = rank(d_k) + dim ker(d_k) and, at the middle
    levels, dim ker(d_k) = rank(d_{k-1}) + dim Harm_k.
    """
    _check_oracle_size(c)
    entries = []
    ok = True
    ranks = [oracle_rank(c, k) for k in range(3)]
    kers = [oracle_kernel_dim(c, k) for k in range(3)]
    for k in range(3):
        n = c.levels[k].n_dofs
        ok &= n == ranks[k] + kers[k]
        entry = {"level": k, "dofs": n, "rank": ranks[k], "kernel": kers[k]}
        if k in (1, 2):
            hdim = oracle_harmonic_dim(c, k)
            entry["harm"] = hdim
            ok &= kers[k] == ranks[k - 1] + hdim
        entries.append(entry)
    return {"levels": entries, "consistent": bool(ok)}
