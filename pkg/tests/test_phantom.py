import math

import numpy as np
import pytest

from oracles import brute_force_sq_edt
from vessel_audit.masks import MaskError
from vessel_audit.phantom import (
    PhantomSpec,
    bresenham,
    expected_peak,
    generate,
    standard_suite,
    suite_specs,
)
from vessel_audit.stratify import Stratum, stratify_mask, stratum_counts


@pytest.mark.parametrize("width", [1, 2, 3, 4, 5, 8, 9, 15, 16])
def test_band_peak_is_exact(width):
    spec = PhantomSpec("band", (3 * width + 20, 3 * width + 4), width=width)
    mask, half = generate(spec)
    sq = brute_force_sq_edt(mask)
    assert math.sqrt(sq.max()) == expected_peak(spec) == math.ceil(width / 2)
    assert (half[mask] == width / 2).all() and (half[~mask] == 0).all()


def test_band_height5_centre_is_medium():
    mask, _ = generate(PhantomSpec("band", (30, 15), width=5))
    labels = stratify_mask(mask)
    assert labels[5:10, 15].tolist() == [1, 1, 2, 1, 1]


def test_band_height1_all_thin():
    mask, _ = generate(PhantomSpec("band", (20, 10), width=1, count=2))
    assert stratum_counts(stratify_mask(mask)) == {"thin": int(mask.sum()), "medium": 0, "thick": 0}


@pytest.mark.parametrize("radius", [3, 6, 10, 14])
def test_disk_peak_within_one(radius):
    spec = PhantomSpec("disk", (4 * radius + 3, 4 * radius + 3), radius=radius)
    mask, _ = generate(spec)
    peak = math.sqrt(brute_force_sq_edt(mask).max())
    assert abs(peak - expected_peak(spec)) <= 1


def test_tree_deterministic():
    spec = suite_specs()["tree_s42"]
    a, _ = generate(spec)
    b, _ = generate(spec)
    assert a.tobytes() == b.tobytes()
    assert a.any()
    other, _ = generate(PhantomSpec("branching-tree", spec.canvas, width=9, length=60, depth=4, taper=0.6, seed=7))
    assert other.tobytes() != a.tobytes()


def test_bresenham_endpoints():
    pts = bresenham(0, 0, 5, 2)
    assert pts[0] == (0, 0) and pts[-1] == (5, 2) and len(pts) == 6


def test_spec_errors():
    with pytest.raises(MaskError):
        PhantomSpec("blob", (10, 10))
    with pytest.raises(MaskError):
        PhantomSpec("disk", (10, 10))
    with pytest.raises(MaskError, match="exceeds canvas"):
        generate(PhantomSpec("disk", (10, 10), radius=8))
    with pytest.raises(MaskError, match="exceeds canvas"):
        generate(PhantomSpec("band", (20, 10), width=5, count=3))


def test_suite_is_stable():
    names = [n for n, _, _ in standard_suite()]
    assert names == [
        "band_w01", "band_w02", "band_w05", "band_w09", "band_w15",
        "disk_r10", "ring_r20_w6", "tree_s42",
    ]
    a = [m.tobytes() for _, m, _ in standard_suite()]
    b = [m.tobytes() for _, m, _ in standard_suite()]
    assert a == b


def test_suite_partition_and_strata():
    suite = {n: (m, l) for n, m, l in standard_suite()}
    for mask, labels in suite.values():
        assert sum(stratum_counts(labels).values()) == int(mask.sum())
    # half-width 5 stays medium; the 15 px band reaches 8 > 7 and holds thick centre rows
    assert stratum_counts(suite["band_w09"][1])["thick"] == 0
    assert stratum_counts(suite["band_w09"][1])["medium"] > 0
    assert (suite["band_w15"][1] == Stratum.THICK).any()
    assert stratum_counts(suite["band_w02"][1])["medium"] == 0
