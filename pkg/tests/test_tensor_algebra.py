import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bihlab import tensor_algebra as ta
from bihlab.errors import NotSkew

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
mat3 = st.lists(finite, min_size=9, max_size=9).map(lambda v: np.array(v).reshape(3, 3))


def test_spn_basis_vector():
    # displayed matrix for the first basis vector
    expected = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0.0]])
    assert np.array_equal(ta.spn([1.0, 0.0, 0.0]), expected)


def test_spn_zero():
    assert np.array_equal(ta.spn(np.zeros(3)), np.zeros((3, 3)))


def test_spn_cross_product_value():
    # spn((1,2,3)) (4,5,6) = (1,2,3) x (4,5,6) = (-3, 6, -3), by direct evaluation
    out = ta.spn([1.0, 2.0, 3.0]) @ np.array([4.0, 5.0, 6.0])
    assert np.array_equal(out, np.array([-3.0, 6.0, -3.0]))


@settings(max_examples=50, deadline=None)
@given(vec3, vec3)
def test_spn_antisymmetry(v, w):
    assert np.array_equal(ta.spn(v) @ w, np.cross(v, w))
    assert np.array_equal(ta.spn(v) @ w, -(ta.spn(w) @ v))


def test_spn_inv_roundtrip():
    v = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(ta.spn_inv(ta.spn(v)), v)
    assert np.array_equal(ta.spn_inv(np.zeros((3, 3))), np.zeros(3))


def test_spn_inv_rejects_symmetric_part():
    m = ta.spn([1.0, 2.0, 3.0]) + 1e-3 * np.eye(3)
    with pytest.raises(NotSkew):
        ta.spn_inv(m)


@settings(max_examples=50, deadline=None)
@given(mat3)
def test_sym_skw_decomposition(m):
    assert np.allclose(ta.sym(m) + ta.skw(m), m, rtol=0, atol=1e-9)
    assert np.array_equal(ta.sym(ta.skw(m)), np.zeros((3, 3)))


@settings(max_examples=50, deadline=None)
@given(mat3)
def test_dev_is_trace_free(m):
    assert abs(ta.tr(ta.dev(m))) <= 1e-12 * max(abs(ta.tr(m)), 1.0)
    assert np.allclose(ta.dev(ta.sym(m)), ta.sym(ta.dev(m)), rtol=0, atol=1e-12)


def test_lemma_algebraic_facts():
    rng = np.random.default_rng(0)
    v = rng.standard_normal(3)
    u = rng.standard_normal()
    assert np.array_equal(ta.sym(ta.spn(v)), np.zeros((3, 3)))
    assert np.abs(ta.dev(u * np.eye(3))).max() == 0.0
    assert ta.tr(np.eye(3)) == 3.0


def test_embeddings_are_sections():
    rng = np.random.default_rng(1)
    x6 = rng.standard_normal((10, 6))
    x8 = rng.standard_normal((10, 8))
    assert np.abs(ta.iota_s_adj(ta.iota_s(x6)) - x6).max() == 0.0
    assert np.abs(ta.iota_t_adj(ta.iota_t(x8)) - x8).max() < 1e-15
    assert np.abs(ta.tr(ta.iota_t(x8))).max() == 0.0


def test_projections_via_embeddings():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((10, 3, 3))
    assert np.allclose(ta.iota_s(ta.iota_s_adj(m)), ta.sym(m), rtol=0, atol=1e-14)
    assert np.allclose(ta.iota_t(ta.iota_t_adj(m)), ta.dev(m), rtol=0, atol=1e-14)


def test_adjoint_on_orthogonal_parts():
    v = np.array([0.3, -1.2, 0.7])
    assert np.abs(ta.iota_s_adj(ta.spn(v))).max() == 0.0  # skew-only input
    assert np.abs(ta.iota_t_adj(np.eye(3))).max() == 0.0  # pure trace input


@settings(max_examples=50, deadline=None)
@given(mat3)
def test_frobenius_adjointness(m):
    rng = np.random.default_rng(3)
    x6 = rng.standard_normal(6)
    x8 = rng.standard_normal(8)
    lhs_s = np.sum(ta.iota_s(x6) * m)
    rhs_s = ta.iota_s_adj(m) @ ta.SYM_GRAM @ x6
    assert abs(lhs_s - rhs_s) <= 1e-9 * max(abs(lhs_s), 1.0)
    lhs_t = np.sum(ta.iota_t(x8) * m)
    rhs_t = ta.iota_t_adj(m) @ ta.DEV_GRAM @ x8
    assert abs(lhs_t - rhs_t) <= 1e-9 * max(abs(lhs_t), 1.0)


def test_gram_matrices_match_embeddings():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(6)
    y = rng.standard_normal(6)
    assert np.isclose(np.sum(ta.iota_s(x) * ta.iota_s(y)), x @ ta.SYM_GRAM @ y, rtol=1e-14)
    a = rng.standard_normal(8)
    b = rng.standard_normal(8)
    assert np.isclose(np.sum(ta.iota_t(a) * ta.iota_t(b)), a @ ta.DEV_GRAM @ b, rtol=1e-14)
