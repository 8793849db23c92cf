import numpy as np
import pytest
from hypothesis import given, strategies as st

from nncv.dataio import generate_dataset
from nncv.errors import EmptyBatch
from nncv.gradients import finite_difference_check, grad_energy, numeric_gradient
from nncv.multiphase import GrayImage, MultiphaseModel, region_means
from nncv.networks import LayerParams

from helpers import random_model


def circles(size=12, seed=0):
    return generate_dataset(1, size, size, seed=seed).images[0]


def fitted(rng, m, n1, f, scale=3.0):
    model = random_model(rng, m, n1, scale=scale)
    model.constants = region_means(model, f)
    return model


def test_gradient_zero_at_exact_fit():
    img = np.zeros((10, 10))
    img[:, :5] = 1.0
    # steep split between columns 4 and 5; memberships saturate to 0/1 in double precision
    p = LayerParams([100.0, -50.0], [[-2000.0, 0.0], [0.0, 0.0]], [1000.0, 1.0])
    model = MultiphaseModel([p], np.array([1.0, 0.0]), 0.5)
    grads = grad_energy(model, GrayImage(img), 0.0, 0.0)
    assert max(g.norm() for g in grads) < 1e-8


def test_constant_image_gradient_vanishes(rng):
    model = random_model(rng, 2, 5)
    model.constants[:] = 0.3
    grads = grad_energy(model, GrayImage(np.full((8, 8), 0.3)), 0.0, 0.0)
    assert all(g.norm() == 0.0 for g in grads)


def test_fd_random_m2():
    rng = np.random.default_rng(3)
    f = circles()
    model = fitted(rng, 2, 6, f)
    assert finite_difference_check(model, f, 0.5, 0.1, 1e-5) < 1e-4


def test_fd_length_term_single_neuron():
    rng = np.random.default_rng(4)
    p = LayerParams([1.5], rng.normal(0, 3, (1, 2)), [0.1], None)
    # zero image and zero constants isolate the length term
    zero = MultiphaseModel([p], np.zeros(2), 0.5)
    data_only = grad_energy(zero, GrayImage(np.zeros((12, 12))), 0.0, 0.0)
    assert data_only[0].norm() == 0.0
    assert finite_difference_check(zero, GrayImage(np.zeros((12, 12))), 1.0, 0.0, 1e-5) < 1e-4


def test_fd_zero_everything():
    p = LayerParams(np.zeros(3), np.zeros((3, 2)), np.zeros(3))
    model = MultiphaseModel([p], np.zeros(2), 0.5)
    assert finite_difference_check(model, GrayImage(np.zeros((6, 6))), 0.0, 0.0) == 0.0


def test_fd_desk_scale():
    f = generate_dataset(1, 50, 50, seed=1).images[0]
    model = fitted(np.random.default_rng(0), 2, 16, f)
    assert finite_difference_check(model, f, 0.5, 0.0, 1e-5, 1 / 50) < 1e-4


def test_fd_step_convergence():
    f = circles()
    model = fitted(np.random.default_rng(8), 1, 4, f)
    errs = [finite_difference_check(model, f, 0.5, 0.1, h) for h in (1e-2, 1e-3, 1e-5)]
    assert errs[0] > errs[1]
    assert errs[2] < 1e-4


def test_fd_rejects_bad_step(rng):
    f = circles()
    with pytest.raises(ValueError):
        finite_difference_check(fitted(rng, 1, 3, f), f, 0, 0, 0.0)


def test_empty_batch(rng):
    f = circles()
    with pytest.raises(EmptyBatch):
        grad_energy(fitted(rng, 1, 3, f), f, 0.5, 0.0, [])


def test_batch_additivity(rng):
    f = circles()
    model = fitted(rng, 2, 5, f)
    idx = rng.permutation(f.size)
    A, B = idx[:50], idx[50:]
    ga = grad_energy(model, f, 0.5, 0.2, A)
    gb = grad_energy(model, f, 0.5, 0.2, B)
    gu = grad_energy(model, f, 0.5, 0.2, idx)
    for a, b, u in zip(ga, gb, gu):
        mix = (len(A) * a.flat() + len(B) * b.flat()) / f.size
        np.testing.assert_allclose(u.flat(), mix, rtol=0, atol=1e-12)


def test_shift_invariance(rng):
    img = circles().pixels * 0.5
    model = fitted(rng, 2, 5, GrayImage(img))
    g1 = grad_energy(model, GrayImage(img), 0.0, 0.0)
    shifted = model.copy()
    shifted.constants = shifted.constants + 0.3
    g2 = grad_energy(shifted, GrayImage(img + 0.3), 0.0, 0.0)
    for a, b in zip(g1, g2):
        np.testing.assert_allclose(a.flat(), b.flat(), rtol=0, atol=1e-12)


def test_nu_zero_no_area_coupling(rng):
    f = circles()
    model = fitted(rng, 3, 4, f)
    base = grad_energy(model, f, 0.5, 0.0)
    # the area gradient alone, obtained by differencing two nu values
    g1 = grad_energy(model, f, 0.5, 1.0)
    for a, b in zip(base, g1):
        assert not np.allclose(a.flat(), b.flat())
    again = grad_energy(model, f, 0.5, 0.0)
    for a, b in zip(base, again):
        assert np.array_equal(a.flat(), b.flat())


def test_gradient_does_not_mutate(rng):
    f = circles()
    model = fitted(rng, 2, 4, f)
    before = [p.flat().copy() for p in model.levelsets]
    grad_energy(model, f, 0.5, 0.1)
    numeric_gradient(model, f, 0.5, 0.1, 1e-5)
    assert all(np.array_equal(b, p.flat()) for b, p in zip(before, model.levelsets))


@given(st.integers(1, 2), st.sampled_from([0.0, 0.1]), st.integers(0, 2 ** 31 - 1))
def test_fd_property(m, nu, seed):
    rng = np.random.default_rng(seed)
    f = circles(8, seed % 7)
    model = fitted(rng, m, 3, f)
    assert finite_difference_check(model, f, 0.5, nu, 1e-5) < 1e-4
