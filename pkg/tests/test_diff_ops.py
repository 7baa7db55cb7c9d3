import io

import numpy as np
import pytest
import scipy.sparse as sp

import bihlab as bl
from bihlab.diff_ops import (
    BlockDiagMass,
    assemble_biharmonic_ops,
    assemble_vector_ops,
    chain_bounds,
    lattice_masks,
    partial,
    read_sparseop,
    write_sparseop,
)

GRID = bl.GridSpec((5, 4, 6), 0.5)


def coords(grid):
    return grid.coordinates()


def test_partial_exact_on_linear():
    p1 = partial(1, GRID)
    x = coords(GRID)[:, 0]
    out = p1.matrix @ x
    nx = GRID.dims[0]
    has_neighbor = (np.arange(GRID.n_nodes) % nx) < nx - 1
    assert np.abs(out[has_neighbor] - 1.0).max() < 1e-13
    assert np.abs(out[~has_neighbor]).max() == 0.0  # zero rows past the face


def test_partial_of_constant_is_zero():
    p3 = partial(3, GRID)
    assert np.abs(p3.matrix @ np.ones(GRID.n_nodes)).max() == 0.0


def test_partials_commute_exactly():
    ps = [partial(a, GRID) for a in (1, 2, 3)]
    for i in range(3):
        for j in range(3):
            assert (ps[i] @ ps[j] - ps[j] @ ps[i]).is_zero()


def test_vector_ops_identities():
    v = assemble_vector_ops(GRID)
    # rot grad = 0 and div rot = 0 exactly as matrices
    assert (v["rot"] @ v["grad"]).is_zero()
    assert (v["div"] @ v["rot"]).is_zero()
    # tr Grad v = div v as operators
    tr = bl.diff_ops.tr9_op(GRID)
    assert (tr @ v["Grad"] - v["div"]).is_zero()


def test_div_of_position_field():
    v = assemble_vector_ops(GRID)
    pos = coords(GRID).T.ravel()  # component-major
    out = v["div"].matrix @ pos
    # exact value 3 on rows whose full stencil fits
    nx, ny, nz = GRID.dims
    idx = np.indices(GRID.dims)
    clean = (idx[0] < nx - 1) & (idx[1] < ny - 1) & (idx[2] < nz - 1)
    clean = GRID.flatten(clean)
    assert np.abs(out[clean] - 3.0).max() < 1e-12


@pytest.mark.parametrize("which,h", [("first", 1.0), ("second", 1.0), ("first", 0.3), ("second", 0.7)])
def test_biharmonic_composites_exactly_zero(which, h):
    grid = bl.GridSpec((5, 5, 5), h)
    ops = assemble_biharmonic_ops(grid)
    names = bl.diff_ops.COMPLEX_OPS[which]
    c1 = ops[names[1]] @ ops[names[0]]
    c2 = ops[names[2]] @ ops[names[1]]
    assert c1.is_zero() and c1.max_abs() == 0.0
    assert c2.is_zero() and c2.max_abs() == 0.0


def test_p1_kernel_exact_on_lattice_rows():
    grid = bl.GridSpec((6, 6, 6), 1.0)
    ops = assemble_biharmonic_ops(grid)
    lat = lattice_masks("first", grid)[1]
    u = 2.0 * coords(grid)[:, 0] - 3.0 * coords(grid)[:, 1] + 0.5 * coords(grid)[:, 2] + 1.0
    out = ops["gradgrad"].matrix @ u
    n = grid.n_nodes
    for c in range(6):
        assert np.abs(out[c * n : (c + 1) * n][lat[c]]).max() < 1e-13


def test_rt_kernel_exact_on_lattice_rows():
    grid = bl.GridSpec((6, 6, 6), 1.0)
    ops = assemble_biharmonic_ops(grid)
    lat = lattice_masks("second", grid)[1]
    a, q = 1.5, np.array([0.25, -1.0, 2.0])
    v = (a * coords(grid) + q).T.ravel()
    out = ops["dev_grad"].matrix @ v
    n = grid.n_nodes
    for c in range(8):
        assert np.abs(out[c * n : (c + 1) * n][lat[c]]).max() < 1e-13


def test_chain_bounds_structure():
    bounds = chain_bounds("first", (8, 8, 8))
    assert bounds[0] == [(7, 7, 7)]
    # second derivatives reach 2 along their own axis
    assert bounds[1][0] == (5, 7, 7)
    assert bounds[1][3] == (6, 6, 7)
    # total depth of the chain is 4 in each axis
    assert all(min(b) >= 3 for b in bounds[3])


def test_restrict_all_keep_is_identity_action(first_natural):
    g = bl.GridSpec((5, 5, 5), 1.0)
    ops = assemble_biharmonic_ops(g)
    dom = bl.build_domain(g, "full-box")
    part = bl.partition_boundary(dom, "all-n")
    masks = bl.build_masks(dom, part, {"scalar": 0, "sym": 0})
    r = bl.restrict(ops["gradgrad"], masks["scalar"], masks["sym"])
    assert r.shape == ops["gradgrad"].shape
    assert (r - ops["gradgrad"]).is_zero()


def test_restricted_composites_zero(first_natural):
    assert first_natural.composite_max_abs(0) == 0.0
    assert first_natural.composite_max_abs(1) == 0.0


def test_weighted_adjoint_involution(first_natural):
    c = first_natural
    op = c.ops[0]
    adj = bl.weighted_adjoint(op, c.levels[0].mass, c.levels[1].mass)
    back = bl.weighted_adjoint(adj, c.levels[1].mass, c.levels[0].mass)
    diff = (back - op.matrix)
    scale = max(abs(op.matrix).max(), 1.0)
    assert abs(diff).max() <= 1e-12 * scale


def test_adjointness_random_pairs(first_natural):
    c = first_natural
    rng = np.random.default_rng(5)
    for k in range(3):
        for _ in range(20):
            u = rng.standard_normal(c.levels[k].n_dofs)
            v = rng.standard_normal(c.levels[k + 1].n_dofs)
            lhs = c.levels[k + 1].mass.inner(c.d(k) @ u, v)
            rhs = c.levels[k].mass.inner(u, c.d_adj(k) @ v)
            assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1.0)


def test_adjoint_of_div_is_minus_backward_devgrad():
    # identity weights, no masks: the weighted adjoint of div_t equals
    # -dev_grad assembled with backward differences, exactly, on rows whose
    # backward stencil stays off the low faces
    grid = bl.GridSpec((6, 6, 6), 1.0)
    n = grid.n_nodes
    fwd = assemble_biharmonic_ops(grid, "forward")
    bwd = assemble_biharmonic_ops(grid, "backward")
    gram_t = sp.kron(sp.csr_matrix(bl.tensor_algebra.DEV_GRAM), sp.identity(n, format="csr"))
    m_dev = BlockDiagMass(
        np.broadcast_to(bl.tensor_algebra.DEV_GRAM, (n, 8, 8)).copy(),
        np.ones((8, n), dtype=bool),
        1.0,
    )
    m_vec = BlockDiagMass(
        np.broadcast_to(np.eye(3), (n, 3, 3)).copy(), np.ones((3, n), dtype=bool), 1.0
    )
    adj = bl.weighted_adjoint(fwd["div_t"], m_dev, m_vec)
    target = -bwd["dev_grad"].matrix
    idx = np.indices(grid.dims)
    interior = (idx[0] >= 1) & (idx[1] >= 1) & (idx[2] >= 1)
    rows = np.concatenate(
        [c * n + np.flatnonzero(grid.flatten(interior)) for c in range(8)]
    )
    diff = (adj - target).tocsr()[rows]
    val = abs(diff).max() if diff.nnz else 0.0
    assert val == 0.0


def test_sparseop_text_roundtrip():
    op = partial(2, GRID)
    buf = io.StringIO()
    write_sparseop(buf, op)
    buf.seek(0)
    m = read_sparseop(buf)
    assert (m != op.matrix).nnz == 0
    header = buf.getvalue().splitlines()[0].split()
    assert header[0] == "sparseop"
    assert int(header[3]) == op.matrix.nnz
