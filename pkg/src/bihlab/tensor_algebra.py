"""Pointwise linear algebra of R^3 vectors and 3x3 tensors.

Provides the algebraic operators sym, skw, dev, tr, spn, spn_inv and the
embeddings of symmetric (6 components) and deviatoric (8 components)
tensors into general 3x3 tensors, together with their adjoints.

Compact coordinate conventions
------------------------------
Symmetric tensors are stored as the 6 raw entries
``(S11, S22, S33, S12, S13, S23)``; deviatoric (trace-free) tensors as the
8 raw entries ``(T11, T12, T13, T21, T22, T23, T31, T32)`` with
``T33 = -(T11 + T22)``.  Neither chart is orthonormal: the Frobenius inner
product pulls back to the Gram matrices ``SYM_GRAM`` and ``DEV_GRAM``.
Keeping the charts rational (no sqrt(2) scaling) keeps every assembled
differential operator entry a small rational, which is what makes the
discrete complex properties hold *exactly* in floating point.

All functions broadcast over leading axes: vectors are ``(..., 3)``,
matrices ``(..., 3, 3)``, compact coordinates ``(..., 6)`` / ``(..., 8)``.
"""

from __future__ import annotations

import numpy as np

from .errors import NotSkew

#: Relative tolerance below which a symmetric part counts as zero.
TAU_ALG = 1e-12

#: (i, j) entry behind each symmetric compact component.
SYM_COMPONENTS = ((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2))

#: (i, j) entry behind each deviatoric compact component; (2, 2) is implied.
DEV_COMPONENTS = ((0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2), (2, 0), (2, 1))

#: Gram matrix of the symmetric chart: <iota_s x, iota_s y>_F = x^T G y.
SYM_GRAM = np.diag([1.0, 1.0, 1.0, 2.0, 2.0, 2.0])

#: Gram matrix of the deviatoric chart (the implied T33 entry couples T11, T22).
DEV_GRAM = np.eye(8)
DEV_GRAM[0, 0] = DEV_GRAM[4, 4] = 2.0
DEV_GRAM[0, 4] = DEV_GRAM[4, 0] = 1.0

# Exact rational inverses, used by the adjoints.
_SYM_GRAM_INV = np.diag([1.0, 1.0, 1.0, 0.5, 0.5, 0.5])
_DEV_GRAM_INV = np.eye(8)
_DEV_GRAM_INV[0, 0] = _DEV_GRAM_INV[4, 4] = 2.0 / 3.0
_DEV_GRAM_INV[0, 4] = _DEV_GRAM_INV[4, 0] = -1.0 / 3.0


def spn(v: np.ndarray) -> np.ndarray:
    """Skew matrix of a vector, spn(v) w = v x w."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    a1, a2, a3 = v[..., 0], v[..., 1], v[..., 2]
    out[..., 0, 1] = -a3
    out[..., 0, 2] = a2
    out[..., 1, 0] = a3
    out[..., 1, 2] = -a1
    out[..., 2, 0] = -a2
    out[..., 2, 1] = a1
    return out


def spn_inv(m: np.ndarray, tol: float = TAU_ALG) -> np.ndarray:
    """Vector behind a skew matrix; raises NotSkew if sym(m) is too large."""
    m = np.asarray(m, dtype=float)
    s = sym(m)
    norm_m = np.linalg.norm(m)
    if norm_m > 0 and np.linalg.norm(s) > tol * norm_m:
        raise NotSkew(
            f"relative symmetric part {np.linalg.norm(s) / norm_m:.3e} exceeds {tol:.1e}"
        )
    return np.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], axis=-1)


def skw_part_vector(m: np.ndarray) -> np.ndarray:
    """spn_inv(skw(m)) without the skewness check."""
    m = np.asarray(m, dtype=float)
    k = skw(m)
    return np.stack([k[..., 2, 1], k[..., 0, 2], k[..., 1, 0]], axis=-1)


def sym(m: np.ndarray) -> np.ndarray:
    """Symmetric part (m + m^T) / 2."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def skw(m: np.ndarray) -> np.ndarray:
    """Skew part (m - m^T) / 2."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m - np.swapaxes(m, -1, -2))


def tr(m: np.ndarray) -> np.ndarray:
    """Trace."""
    m = np.asarray(m, dtype=float)
    return np.trace(m, axis1=-2, axis2=-1)


def dev(m: np.ndarray) -> np.ndarray:
    """Deviatoric (trace-free) part m - tr(m)/3 * id."""
    m = np.asarray(m, dtype=float)
    out = m.copy()
    t = tr(m) / 3.0
    for i in range(3):
        out[..., i, i] -= t
    return out


def iota_s(x: np.ndarray) -> np.ndarray:
    """Embed 6 symmetric components into a full 3x3 tensor."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1] + (3, 3))
    for c, (i, j) in enumerate(SYM_COMPONENTS):
        out[..., i, j] = x[..., c]
        out[..., j, i] = x[..., c]
    return out


def iota_s_adj(m: np.ndarray) -> np.ndarray:
    """Gram adjoint of iota_s; iota_s(iota_s_adj(m)) == sym(m)."""
    m = np.asarray(m, dtype=float)
    pull = np.stack(
        [m[..., i, j] + m[..., j, i] if i != j else m[..., i, i] for (i, j) in SYM_COMPONENTS],
        axis=-1,
    )
    return pull @ _SYM_GRAM_INV.T


def iota_t(x: np.ndarray) -> np.ndarray:
    """Embed 8 deviatoric components into a trace-free 3x3 tensor."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1] + (3, 3))
    for c, (i, j) in enumerate(DEV_COMPONENTS):
        out[..., i, j] = x[..., c]
    out[..., 2, 2] = -(x[..., 0] + x[..., 4])
    return out


def iota_t_adj(m: np.ndarray) -> np.ndarray:
    """Gram adjoint of iota_t; iota_t(iota_t_adj(m)) == dev(m)."""
    m = np.asarray(m, dtype=float)
    pull = np.stack(
        [
            m[..., i, j] - m[..., 2, 2] if (i, j) in ((0, 0), (1, 1)) else m[..., i, j]
            for (i, j) in DEV_COMPONENTS
        ],
        axis=-1,
    )
    return pull @ _DEV_GRAM_INV.T


def dev_chart(m: np.ndarray) -> np.ndarray:
    """Read the 8 chart components off an (assumed) trace-free tensor."""
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., i, j] for (i, j) in DEV_COMPONENTS], axis=-1)


def sym_chart(m: np.ndarray) -> np.ndarray:
    """Read the 6 chart components off an (assumed) symmetric tensor."""
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., i, j] for (i, j) in SYM_COMPONENTS], axis=-1)
