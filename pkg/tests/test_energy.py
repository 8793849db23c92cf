import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nncv.dataio import generate_dataset, rasterize, CircleSpec
from nncv.energy import (
    EnergyBreakdown, area_inclusion_exclusion, area_union_brute, energy_levelset,
    energy_region_form, heaviside_masks, interface_length, smoothed_length,
    union_area_inclusion_exclusion,
    write_energy_csv,
)
from nncv.errors import NonPartition
from nncv.multiphase import GrayImage, MultiphaseModel, region_means
from nncv.networks import LayerParams

from helpers import expanded_m1, expanded_m2, image, random_margin_model, random_model


@pytest.mark.parametrize("seed", range(5))
def test_matches_expanded_m1(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, 1, 6)
    f = image(seed)
    got = energy_levelset(model, f, 0.5, 0.3).total
    assert got == pytest.approx(expanded_m1(model, f, 0.5, 0.3), abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_matches_expanded_m2(seed):
    rng = np.random.default_rng(100 + seed)
    model = random_model(rng, 2, 6)
    f = image(seed)
    got = energy_levelset(model, f, 0.5, 0.3).total
    assert got == pytest.approx(expanded_m2(model, f, 0.5, 0.3), abs=1e-12)


def test_breakdown_total():
    e = EnergyBreakdown(0.25, 3.0, 0.5, 0.5, 0.1)
    assert e.total == 0.25 + 0.5 * 3.0 + 0.1 * 0.5
    row = e.row(3)
    assert row["iteration"] == 3 and float(row["total"]) == e.total


def test_length_scale_multiplies_length_only(rng):
    model = random_model(rng, 2, 5)
    f = image()
    a = energy_levelset(model, f, 0.5, 0.2, 1.0)
    b = energy_levelset(model, f, 0.5, 0.2, 0.25)
    assert b.length_term == 0.25 * a.length_term
    assert (a.data_term, a.area_term) == (b.data_term, b.area_term)


def test_restricted_pixels_weighting(rng):
    model = random_model(rng, 2, 5)
    f = image()
    full = energy_levelset(model, f, 0.5, 0.2)
    every = energy_levelset(model, f, 0.5, 0.2, pixels=np.arange(f.size))
    assert full.total == pytest.approx(every.total, abs=1e-15)


def test_region_form_trivial_cases():
    f = GrayImage(np.full((10, 10), 0.4))
    e = energy_region_form({(1,): np.ones((10, 10), bool), (-1,): np.zeros((10, 10), bool)},
                           {(1,): 0.4, (-1,): 0.0}, f, 0.5, 0.0)
    assert e.data_term == 0.0 and e.length_term == 0.0 and e.area_term == 1.0


def test_region_form_exact_fit():
    img = np.zeros((20, 20))
    img[:, :8] = 0.9
    left = np.zeros((20, 20), bool)
    left[:, :8] = True
    e = energy_region_form({"+": left, "-": ~left}, {"+": 0.9, "-": 0.0}, GrayImage(img), 0.5, 0.0)
    assert e.data_term == 0.0
    # one vertical interface crossing the whole image
    assert e.length_term == pytest.approx(1.0)


def test_region_form_variance():
    f = image(3)
    mask = np.ones(f.pixels.shape, bool)
    e = energy_region_form({(1,): mask, (-1,): ~mask}, {(1,): f.pixels.mean(), (-1,): 0.0}, f, 0, 0)
    assert e.data_term == pytest.approx(np.var(f.pixels), abs=1e-15)


def test_region_form_rejects_non_partition():
    f = GrayImage(np.zeros((4, 4)))
    a = np.zeros((4, 4), bool)
    a[0, 0] = True
    with pytest.raises(NonPartition):
        energy_region_form({(1,): a, (-1,): a}, {(1,): 0, (-1,): 0}, f, 0, 0)
    with pytest.raises(NonPartition):
        energy_region_form({(1,): a, (-1,): np.ones((4, 4), bool)}, {(1,): 0, (-1,): 0}, f, 0, 0)


def test_interface_length_disk_perimeter():
    n = 400
    _, lab = rasterize([CircleSpec((0.5, 0.5), 0.3, 1.0, 0.0)], 0.0, n, n)
    # 4-neighbour counting over-estimates a circle by the factor 4/pi
    assert interface_length(lab) == pytest.approx(4 / np.pi * 2 * np.pi * 0.3, rel=0.01)


def test_union_area_examples():
    f = GrayImage(np.zeros((30, 30)))
    left = LayerParams([1.0, -0.5], [[-1.0, 0.0], [0.0, 0.0]], [0.3, 1.0])
    right = LayerParams([1.0, -0.5], [[1.0, 0.0], [0.0, 0.0]], [-0.7, 1.0])
    disjoint = MultiphaseModel([left, right])
    assert area_union_brute(disjoint, f) == pytest.approx(0.6)
    same = MultiphaseModel([left, left])
    assert area_union_brute(same, f) == area_union_brute(MultiphaseModel([left]), f)
    assert area_inclusion_exclusion(same, f) == area_union_brute(same, f)


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_inclusion_exclusion_equals_brute(m):
    rng = np.random.default_rng(m)
    f = GrayImage(np.zeros((40, 40)))
    for _ in range(20):
        model = random_margin_model(rng, m, 4, margin=1e-6, resolution=40)
        assert area_inclusion_exclusion(model, f) == area_union_brute(model, f)


@given(st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
def test_union_formula_pointwise(m, seed):
    pos = np.random.default_rng(seed).uniform(0, 1, (50, m))
    assert np.allclose(union_area_inclusion_exclusion(pos), 1 - np.prod(1 - pos, axis=1), atol=1e-12)


def test_eps_to_zero_matches_region_form():
    rng = np.random.default_rng(7)
    f = generate_dataset(1, 200, 200, seed=2).images[0]
    model = random_margin_model(rng, 2, 4, eps=0.02, resolution=200)
    masks = heaviside_masks(model, f)
    model.constants = region_means(model, f, smooth=False)
    consts = dict(zip(masks, model.constants))
    ref = energy_region_form(masks, consts, f, 0.5, 0.5)
    got = energy_levelset(model, f, 0.5, 0.5)
    assert got.data_term == pytest.approx(ref.data_term, rel=0.02)
    assert got.area_term == pytest.approx(ref.area_term, rel=0.02)


@given(st.integers(1, 3), st.integers(0, 2 ** 31 - 1), st.integers(0, 7), st.sampled_from([-0.01, 0.01]))
def test_region_means_minimize_data(m, seed, k, delta):
    rng = np.random.default_rng(seed)
    model = random_model(rng, m, 4)
    f = image(seed % 5, 16)
    model.constants = region_means(model, f)
    base = energy_levelset(model, f, 0, 0).data_term
    model.constants[k % 2 ** m] += delta
    assert energy_levelset(model, f, 0, 0).data_term >= base


def test_chord_length_convergence():
    # affine level set x + y - 0.8 cuts the unit square along a chord of length 0.8*sqrt(2)
    n = 400
    xs = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(xs, xs)
    levels = (X + Y - 0.8).reshape(-1, 1)
    grads = np.broadcast_to([[1.0, 1.0]], (n * n, 1, 2))
    lengths = [np.mean(smoothed_length(levels, grads, e)) for e in (0.05, 0.02, 0.01)]
    assert lengths[-1] == pytest.approx(0.8 * np.sqrt(2), rel=0.02)
    errs = [abs(v - 0.8 * np.sqrt(2)) for v in lengths]
    assert errs[0] > errs[2]


def test_energy_deterministic(rng):
    model = random_model(rng, 3, 6)
    f = image()
    a = energy_levelset(model, f, 0.5, 0.1)
    b = energy_levelset(model.copy(), f, 0.5, 0.1)
    assert a == b


def test_write_energy_csv(tmp_path):
    rows = [EnergyBreakdown(0.1, 2.0, 0.3, 0.5, 0.0), EnergyBreakdown(0.05, 1.0, 0.3, 0.5, 0.0)]
    path = tmp_path / "e.csv"
    write_energy_csv(path, rows, {"grad_norm": [1.5, 0.25]})
    raw = path.read_bytes()
    assert b"\r" not in raw
    data = list(csv.DictReader(raw.decode().splitlines()))
    assert [r["iteration"] for r in data] == ["1", "2"]
    assert float(data[1]["total"]) == rows[1].total
    assert float(data[0]["grad_norm"]) == 1.5
