import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldsdict import (
    LdsModel,
    Sequence,
    canonicalize,
    identify,
    make_two_fold,
    martin_distance,
    principal_angles,
    simulate,
    stabilize_sn,
)
from ldsdict.errors import BadDims, NotStabilized, NotStructured, RankDeficient
from ldsdict.kernels import gram_cross
from ldsdict.model import SKEW, SYMMETRIC

from helpers import rand_model, rand_orth, rand_structured

seeds = st.integers(0, 2**32 - 1)


def test_sequence_validation():
    with pytest.raises(BadDims):
        Sequence(np.ones((3, 1)))
    with pytest.raises(BadDims):
        Sequence(np.array([[1.0, np.nan]]))


def test_identify_hand_example():
    y = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0]])
    model = identify(Sequence(y), 1, nv=1)
    np.testing.assert_allclose(model.ybar, [2.0, 0.0])
    np.testing.assert_allclose(model.c, [[1.0], [0.0]])
    np.testing.assert_allclose(model.a, [[0.0]], atol=1e-14)
    assert not model.stable


def test_identify_reconstruction_at_full_rank():
    rng = np.random.default_rng(0)
    y = rng.standard_normal((4, 12))
    model = identify(Sequence(y), 4, nv=2)
    yc = y - model.ybar[:, None]
    x = model.c.T @ yc
    np.testing.assert_allclose(model.c @ x + model.ybar[:, None], y, atol=1e-12)
    np.testing.assert_allclose(model.c.T @ model.c, np.eye(4), atol=1e-12)
    # largest-magnitude entry of each column is positive
    idx = np.argmax(np.abs(model.c), axis=0)
    assert np.all(model.c[idx, range(4)] > 0)


def test_identify_errors():
    y = np.outer([1.0, 2.0, 3.0], np.arange(6.0))
    with pytest.raises(RankDeficient):
        identify(Sequence(y), 2, nv=1)
    with pytest.raises(BadDims):
        identify(Sequence(np.ones((2, 3))), 3)
    with pytest.raises(BadDims):
        identify(Sequence(np.random.default_rng(0).standard_normal((5, 10))), 2, nv=3)


def test_identify_noise_factor_shape():
    rng = np.random.default_rng(1)
    model = identify(Sequence(rng.standard_normal((6, 30))), 4, nv=2)
    assert model.b.shape == (4, 2) and model.nv == 2


def test_identify_simulate_round_trip():
    rng = np.random.default_rng(5)
    gen = LdsModel(
        a=rand_structured(3, "general", rng, (0.7, 0.9)),
        c=rand_orth(8, 3, rng),
        b=rand_orth(3, 2, rng),
        ybar=rng.standard_normal(8),
        stable=True,
    )
    seq = simulate(gen, 40, seed=2)
    model = identify(seq, 3)
    assert principal_angles((np.zeros((3, 3)), gen.c), (np.zeros((3, 3)), model.c)).max() < 0.2


def test_identify_is_similarity_at_zero_noise():
    rng = np.random.default_rng(6)
    gen = LdsModel(rand_structured(3, "general", rng, (0.5, 0.8)), rand_orth(7, 3, rng),
                   rand_orth(3, 2, rng), np.zeros(7), True)
    # mean removal biases A for short decaying runs; the bias vanishes with tau
    model = identify(simulate(gen, 300, seed=1), 3)
    assert martin_distance(gen, model) < 1e-3


def test_stabilize_examples():
    model = LdsModel(np.diag([1.2, 0.0]), np.eye(2), np.eye(2), np.zeros(2))
    s = np.linalg.svd(stabilize_sn(model, 2.5).a, compute_uv=False)
    np.testing.assert_allclose(s, [0.905148253644866, 0.0], atol=1e-12)
    assert stabilize_sn(model).stable and stabilize_sn(model).sn_scale == 4.0
    with pytest.raises(ValueError):
        stabilize_sn(model, 0.0)


@settings(max_examples=100, deadline=None)
@given(seeds, st.floats(1e-3, 1e3))
def test_stabilize_bounds_and_order(seed, scale):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((4, 4)) * scale
    model = LdsModel(a, rand_orth(6, 4, rng), np.ones((4, 1)), np.zeros(6))
    out = stabilize_sn(model)
    s_in = np.linalg.svd(a, compute_uv=False)
    s_out = np.linalg.svd(out.a, compute_uv=False)
    assert s_out.max() < 1.0
    assert np.all(np.diff(s_out) <= 1e-12)
    np.testing.assert_allclose(s_out, np.minimum(np.tanh(2.0 * s_in), 1 - 1e-9), atol=1e-12)
    assert out.c is model.c and out.b is model.b


def test_two_fold_requires_stable():
    model = LdsModel(np.eye(2) * 0.5, np.eye(2), np.eye(2), np.zeros(2))
    with pytest.raises(NotStabilized):
        make_two_fold(model)


def test_two_fold_symmetric_source():
    rng = np.random.default_rng(2)
    model = rand_model(6, 4, rng)
    sym = 0.5 * (model.a + model.a.T)
    tf = make_two_fold(LdsModel(sym, model.c, model.b, model.ybar, stable=True))
    np.testing.assert_array_equal(tf.a_skew, 0.0)
    np.testing.assert_array_equal(tf.skew_canon.theta, 0.0)


def test_two_fold_skew_source():
    a = np.array([[0.0, 0.6], [-0.6, 0.0]])
    tf = make_two_fold(LdsModel(a, np.eye(2), np.eye(2), np.zeros(2), stable=True))
    np.testing.assert_array_equal(tf.a_sym, 0.0)
    np.testing.assert_allclose(tf.skew_canon.theta, [0.6])


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_two_fold_properties(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    model = rand_model(int(rng.integers(n, 12)), n, rng, nv=int(rng.integers(1, n + 1)), scale=10.0)
    tf = make_two_fold(model)
    assert np.linalg.norm(tf.a_sym + tf.a_skew - model.a) <= 1e-15 * np.linalg.norm(model.a)
    assert np.linalg.norm(tf.a_sym, 2) < 1 and np.linalg.norm(tf.a_skew, 2) < 1
    np.testing.assert_allclose(tf.h.T @ tf.h, np.eye(model.nv), atol=1e-8)
    for atom in (tf.sym_canon, tf.skew_canon):
        np.testing.assert_allclose(atom.basis.T @ atom.basis, np.eye(n), atol=1e-8)
        assert np.all(np.abs(atom.eigenvalues()) < 1)


def test_canonicalize_examples():
    c = rand_orth(5, 2, np.random.default_rng(0))
    atom = canonicalize(np.diag([0.5, -0.3]), c)
    assert atom.kind == SYMMETRIC
    np.testing.assert_allclose(atom.lam, [0.5, -0.3])
    np.testing.assert_array_equal(atom.basis, c)
    zero = canonicalize(np.zeros((2, 2)), c)
    np.testing.assert_array_equal(zero.lam, 0.0)
    np.testing.assert_allclose(zero.basis.T @ zero.basis, np.eye(2), atol=1e-12)
    with pytest.raises(NotStructured):
        canonicalize(np.array([[0.1, 0.2], [0.0, 0.1]]), c)


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from([SYMMETRIC, SKEW]))
def test_canonical_gram_is_diagonal(seed, kind):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 7))
    a = rand_structured(n, kind, rng, (0.05, 0.9))
    c = rand_orth(int(rng.integers(n, 12)), n, rng)
    atom = canonicalize(a, c)
    lam = atom.eigenvalues()
    u = atom.complex_basis()
    expected = np.diag(1.0 / (1.0 - np.abs(lam) ** 2))
    # Gram of the diagonal tuple (Lambda, U) from the Sylvester solver
    g = gram_cross((np.diag(lam), u), (np.diag(lam), u))
    assert np.linalg.norm(g - expected) <= 1e-8 * np.linalg.norm(expected)
    # and the original pair has the same Gram up to the change of basis
    g0 = gram_cross((a, c), (a, c))
    np.testing.assert_allclose(
        np.sort(np.linalg.eigvalsh(g0)), np.sort(np.diag(expected).real), rtol=1e-8
    )


def test_simulate_zero_dynamics_and_determinism():
    rng = np.random.default_rng(0)
    model = LdsModel(np.zeros((2, 2)), rand_orth(3, 2, rng), np.eye(2), np.array([1.0, 2.0, 3.0]))
    seq = simulate(model, 5, seed=7)
    x1 = np.random.default_rng(7).standard_normal(2)
    np.testing.assert_allclose(seq.y[:, 0], model.c @ x1 + model.ybar)
    np.testing.assert_allclose(seq.y[:, 1:], np.repeat(model.ybar[:, None], 4, axis=1))
    np.testing.assert_array_equal(simulate(model, 5, 0.3, 0.2, seed=7).y, simulate(model, 5, 0.3, 0.2, seed=7).y)


def test_simulate_unrolled():
    rng = np.random.default_rng(1)
    model = rand_model(5, 3, rng)
    seq = simulate(model, 6, seed=3)
    x = np.random.default_rng(3).standard_normal(3)
    for t in range(6):
        np.testing.assert_allclose(seq.y[:, t] - model.ybar, model.c @ np.linalg.matrix_power(model.a, t) @ x, atol=1e-12)
