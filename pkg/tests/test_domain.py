import numpy as np
import pytest

import bihlab as bl
from bihlab.domain import (
    chebyshev_distance_to,
    face_owner_nodes,
    load_mask,
    save_mask,
    validate_chain,
)
from bihlab.errors import Disconnected, Empty, IncompatibleWidths


def test_full_box_counts():
    g = bl.GridSpec((8, 8, 8), 1.0)
    dom = bl.build_domain(g, "full-box")
    assert dom.n_active == 512
    assert dom.extendable is True


def test_box_minus_box_counts():
    g = bl.GridSpec((9, 9, 9), 1.0)
    dom = bl.build_domain(g, "box-minus-box:3")
    assert dom.n_active == 729 - 27
    assert dom.extendable is False


def test_disconnected_mask_rejected(tmp_path):
    g = bl.GridSpec((7, 4, 4), 1.0)
    mask = np.zeros(g.dims, dtype=bool)
    mask[:2] = True
    mask[5:] = True  # two separated boxes
    path = tmp_path / "two.mask"
    save_mask(path, mask)
    with pytest.raises(Disconnected):
        bl.build_domain(g, f"mask-file:{path}")


def test_empty_rejected():
    g = bl.GridSpec((4, 4, 4), 1.0)
    with pytest.raises(Empty):
        bl.build_domain(g, np.zeros(g.dims, dtype=bool))


def test_grid_validation():
    with pytest.raises(ValueError):
        bl.GridSpec((1, 4, 4), 1.0)
    with pytest.raises(ValueError):
        bl.GridSpec((4, 4, 4), -1.0)


def test_mask_file_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    mask = np.ones((4, 5, 6), dtype=bool)
    path = tmp_path / "m.mask"
    save_mask(path, mask)
    assert np.array_equal(load_mask(path), mask)
    text = path.read_text()
    assert text.startswith("voxmask 4 5 6")


def test_partition_all_t_all_n():
    g = bl.GridSpec((8, 8, 8), 1.0)
    dom = bl.build_domain(g, "full-box")
    total = int(dom.boundary_faces().sum())
    assert total == 6 * 64
    all_t = bl.partition_boundary(dom, "all-t")
    assert all_t.face_counts() == (total, 0)
    all_n = bl.partition_boundary(dom, "all-n")
    assert all_n.face_counts() == (0, total)


def test_partition_half_split_counts():
    g = bl.GridSpec((8, 8, 8), 1.0)
    dom = bl.build_domain(g, "full-box")
    part = bl.partition_boundary(dom, "half-x")
    nt, nn = part.face_counts()
    assert nt + nn == 6 * 64
    # every -x face owner is below the midplane, every +x face owner above
    assert part.gamma_t[..., 0].sum() == 64
    assert part.gamma_t[..., 1].sum() == 0


def test_partition_callable_selector():
    g = bl.GridSpec((4, 4, 4), 1.0)
    dom = bl.build_domain(g, "full-box")
    part = bl.partition_boundary(dom, lambda node, d: d == 0)
    assert part.face_counts()[0] == 16


def test_chebyshev_band_enumeration():
    # brute-force distance agreement on an 6^3 all-essential cube
    g = bl.GridSpec((6, 6, 6), 1.0)
    dom = bl.build_domain(g, "full-box")
    part = bl.partition_boundary(dom, "all-t")
    owners = face_owner_nodes(part.gamma_t)
    dist = chebyshev_distance_to(owners, 4)
    pts = np.argwhere(np.ones(g.dims, dtype=bool))
    own = np.argwhere(owners)
    for p in pts[:: 7]:
        d_brute = np.abs(own - p).max(axis=1).min()
        assert min(dist[tuple(p)], 5) == min(d_brute, 5)
    # width-2 band keeps the inner 2^3 block
    masks = bl.build_masks(dom, part, {"scalar": 2})
    keep = masks["scalar"].keep[0].reshape(g.dims, order="F")
    assert keep.sum() == 8
    assert keep[2:4, 2:4, 2:4].all()


def test_masks_keep_everything_without_gamma_t():
    g = bl.GridSpec((5, 5, 5), 1.0)
    dom = bl.build_domain(g, "full-box")
    part = bl.partition_boundary(dom, "all-n")
    masks = bl.build_masks(dom, part, {"scalar": 3, "dev": 2})
    assert masks["scalar"].n_kept == 125
    assert masks["dev"].n_kept == 8 * 125


def test_chain_validation():
    chain = (("scalar", 2), ("sym", 1), ("dev", 1), ("vector", 0))
    validate_chain({"scalar": 4, "sym": 2, "dev": 1, "vector": 0}, chain)
    with pytest.raises(IncompatibleWidths):
        validate_chain({"scalar": 0, "sym": 1, "dev": 1, "vector": 0}, chain)
    with pytest.raises(IncompatibleWidths):
        validate_chain({"scalar": 2, "sym": 1, "dev": 1, "vector": 0}, chain)


def test_interior_wall_faces_only_on_cavity():
    g = bl.GridSpec((7, 7, 7), 1.0)
    box = bl.build_domain(g, "full-box")
    assert not box.interior_wall_faces().any()
    cav = bl.build_domain(g, "box-minus-box:3")
    walls = cav.interior_wall_faces()
    assert walls.any()
    # wall faces are exactly the boundary faces not on the hull
    hull = cav.boundary_faces() & ~walls
    assert int(hull.sum()) == 6 * 49
