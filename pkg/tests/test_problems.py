import numpy as np
import pytest

from curvadion import problems as pb
from curvadion.exceptions import DimensionError


def test_quadratic_identity_example():
    problem = pb.quadratic_problem(np.eye(3))
    params = problem.unflatten(np.array([1.0, 0.0, 0.0]))
    assert problem.loss(params) == pytest.approx(0.5)
    assert np.array_equal(problem.flatten(problem.gradient(params)), [1.0, 0.0, 0.0])


def test_quadratic_hvp_matches_finite_difference(clean_quadratic, rng):
    x = rng.standard_normal(clean_quadratic.dim)
    v = rng.standard_normal(clean_quadratic.dim)
    eps = 1e-5
    fd = (clean_quadratic.flat_gradient(x + eps * v) - clean_quadratic.flat_gradient(x - eps * v)) / (2 * eps)
    assert np.allclose(clean_quadratic.hvp(clean_quadratic.unflatten(x), v), fd, atol=1e-6)


def test_noise_free_workers_agree(clean_quadratic):
    params = clean_quadratic.initial_params(0)
    g0 = clean_quadratic.gradient(params, pb.Batch(step=3, worker=0, n_workers=2))
    g1 = clean_quadratic.gradient(params, pb.Batch(step=3, worker=1, n_workers=2))
    assert np.array_equal(g0[0], g1[0])


def test_noisy_workers_differ_but_are_reproducible(noisy_quadratic):
    params = noisy_quadratic.initial_params(0)
    b0 = pb.Batch(step=3, worker=0, n_workers=2, seed=5)
    b1 = pb.Batch(step=3, worker=1, n_workers=2, seed=5)
    assert not np.array_equal(noisy_quadratic.gradient(params, b0)[0], noisy_quadratic.gradient(params, b1)[0])
    assert np.array_equal(noisy_quadratic.gradient(params, b0)[0], noisy_quadratic.gradient(params, b0)[0])


def test_quadratic_layer_shape_and_bound(clean_quadratic):
    assert clean_quadratic.layer_shapes == [(8, 6)]
    assert clean_quadratic.curvature_bound == pytest.approx(1.0)


def test_quadratic_minimizer():
    A = np.diag([2.0, 4.0])
    problem = pb.quadratic_problem(A, b=[2.0, -4.0])
    assert np.allclose(problem.minimizer(), [-1.0, 1.0])
    assert problem.minimum_value() == pytest.approx(-3.0)


def test_quadratic_rejects_bad_matrices():
    with pytest.raises(ValueError):
        pb.quadratic_problem(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        pb.quadratic_problem(np.diag([1.0, -1.0]))
    with pytest.raises(DimensionError):
        pb.quadratic_problem(np.eye(6), shape=(4, 2))


def test_check_params_shape(clean_quadratic):
    with pytest.raises(DimensionError):
        clean_quadratic.loss([np.zeros((6, 8))])


def test_spd_from_spectrum():
    A = pb.spd_from_spectrum([1.0, 2.0, 5.0], seed=3)
    assert np.allclose(A, A.T)
    assert np.allclose(np.linalg.eigvalsh(A), [1.0, 2.0, 5.0])


def test_switch_without_switches_equals_flat_quadratic():
    spec = pb.CurvatureSwitchSpec.default(6, [], seed=0)
    switch = pb.curvature_switch_problem(spec, shape=(3, 2))
    flat = pb.quadratic_problem(spec.A_flat, shape=(3, 2))
    params = flat.initial_params(1)
    for step in (1, 50, 500):
        batch = pb.Batch(step=step)
        assert np.array_equal(switch.gradient(params, batch)[0], flat.gradient(params, batch)[0])


def test_switch_schedule(switch_problem):
    spec = switch_problem.spec
    assert switch_problem.matrix_for(pb.Batch(step=40)) is spec.A_flat
    assert switch_problem.matrix_for(pb.Batch(step=41)) is spec.A_sharp
    assert switch_problem.matrix_for(pb.Batch(step=80)) is spec.A_sharp
    assert switch_problem.matrix_for(pb.Batch(step=81)) is spec.A_flat
    assert switch_problem.matrix_for(pb.Batch(step=121)) is spec.A_sharp


def test_switch_curvature_along_fixed_direction(switch_problem, rng):
    v = rng.standard_normal(12)
    v /= np.linalg.norm(v)
    spec = switch_problem.spec
    params = switch_problem.initial_params(0)
    assert v @ switch_problem.hvp(params, v, pb.Batch(step=10)) == pytest.approx(v @ (spec.A_flat @ v), rel=1e-14)
    assert v @ switch_problem.hvp(params, v, pb.Batch(step=45)) == pytest.approx(v @ (spec.A_sharp @ v), rel=1e-14)


def test_switch_spec_validation():
    with pytest.raises(ValueError):
        pb.CurvatureSwitchSpec(np.eye(2), np.eye(2), (5, 3))
    with pytest.raises(ValueError):
        pb.CurvatureSwitchSpec(np.zeros((2, 2)), np.eye(2), ())


def test_shard_bias_averages_out_across_workers():
    spec = pb.CurvatureSwitchSpec.default(12, [40, 41], seed=0)
    b = pb.tilt_vector(12, 1.0, seed=0)
    problem = pb.curvature_switch_problem(spec, shape=(4, 3), b=b, shard_bias=0.05)
    plain = pb.curvature_switch_problem(spec, shape=(4, 3), b=b)
    params = problem.initial_params(0)
    for step in (10, 41):
        batches = [pb.Batch(step=step, worker=w, n_workers=4) for w in range(4)]
        grads = [problem.gradient(params, bt)[0] for bt in batches]
        exact = plain.gradient(params, batches[0])[0]
        assert np.allclose(sum(grads) / 4, exact, atol=1e-12)
        assert not np.allclose(grads[0], grads[1])
        assert all(problem.loss(params, bt) == plain.loss(params, bt) for bt in batches)


def test_shard_bias_scales_with_active_curvature():
    spec = pb.CurvatureSwitchSpec.default(12, [40, 41], seed=0)
    problem = pb.curvature_switch_problem(spec, shape=(4, 3), shard_bias=0.05)
    params = problem.initial_params(0)

    def spread(step):
        grads = [problem.gradient(params, pb.Batch(step=step, worker=w, n_workers=4))[0] for w in range(4)]
        return np.linalg.norm(grads[0] - grads[1])

    assert spread(41) > 5 * spread(10)


def test_single_worker_has_no_shard_shift():
    spec = pb.CurvatureSwitchSpec.default(12, [40], seed=0)
    problem = pb.curvature_switch_problem(spec, shape=(4, 3), shard_bias=0.3)
    assert np.array_equal(problem.shard_offsets(1), np.zeros((1, 12)))
    with pytest.raises(ValueError):
        pb.curvature_switch_problem(spec, shape=(4, 3), shard_bias=-1.0)


def test_tilt_vector_and_sharp_minimizer():
    b = pb.tilt_vector(12, 2.5, seed=3)
    assert np.linalg.norm(b) == pytest.approx(2.5, rel=1e-14)
    assert np.array_equal(b, pb.tilt_vector(12, 2.5, seed=3))
    spec = pb.CurvatureSwitchSpec.default(12, [40], seed=0)
    problem = pb.curvature_switch_problem(spec, shape=(4, 3), b=b)
    x = problem.sharp_minimizer()
    g = problem.gradient(problem.unflatten(x), pb.Batch(step=41))[0]
    assert np.abs(g).max() <= 1e-10


def _fd_check(problem, params, batch, coords, h=1e-6):
    x = problem.flatten(params)
    g = problem.flat_gradient(x, batch)
    for i in coords:
        e = np.zeros_like(x)
        e[i] = h
        fd = (problem.flat_loss(x + e, batch) - problem.flat_loss(x - e, batch)) / (2 * h)
        assert abs(fd - g[i]) <= 1e-5 * max(abs(g[i]), 1e-3)


def test_tiny_mlp_gradient_matches_finite_differences():
    problem = pb.tiny_mlp_problem(dataset_seed=0)
    params = problem.initial_params(0)
    batch = pb.Batch(step=1, worker=0, n_workers=4, seed=0)
    coords = np.random.default_rng(0).choice(problem.dim, size=20, replace=False)
    _fd_check(problem, params, batch, coords)


def test_tiny_mlp_zero_case():
    problem = pb.TinyMlpProblem(in_dim=3, hidden=4, out_dim=2,
                                inputs=np.zeros((3, 10)), targets=np.zeros((2, 10)))
    params = [np.zeros((4, 3)), np.zeros((2, 4))]
    assert problem.loss(params) == 0.0
    assert all(np.all(g == 0.0) for g in problem.gradient(params))


def test_tiny_mlp_dataset_and_batches_reproducible():
    a = pb.tiny_mlp_problem(dataset_seed=4)
    b = pb.tiny_mlp_problem(dataset_seed=4)
    assert np.array_equal(a.inputs, b.inputs)
    batch = pb.Batch(step=7, worker=2, n_workers=4, seed=1)
    idx = a.batch_indices(batch)
    assert np.array_equal(idx, b.batch_indices(batch))
    assert np.all(idx % 4 == 2)
    assert idx.size == 32


def test_tiny_mlp_layer_shapes():
    assert pb.tiny_mlp_problem().layer_shapes == [(16, 8), (4, 16)]


def test_lab_problems():
    iso = pb.isotropic_quadratic(dim=4, lam=2.0)
    assert iso.curvature_bound == pytest.approx(2.0)
    diag = pb.diagonal_quadratic([1.0, 100.0], scale=1e-5)
    g = diag.flat_gradient(diag.flatten(diag.initial_params()))
    assert g[0] == pytest.approx(g[1], rel=1e-12)
    lin = pb.linear_problem(np.ones(3))
    assert lin.curvature_bound == 0.0
    assert np.array_equal(lin.flat_gradient(np.arange(3.0)), np.ones(3))


def test_hvp_is_symmetric(clean_quadratic, rng):
    params = clean_quadratic.initial_params(0)
    u = rng.standard_normal(clean_quadratic.dim)
    v = rng.standard_normal(clean_quadratic.dim)
    assert u @ clean_quadratic.hvp(params, v) == pytest.approx(v @ clean_quadratic.hvp(params, u), abs=1e-8)


def test_gradient_vanishes_at_minimizer():
    A = pb.spd_from_spectrum([0.5, 1.0, 2.0, 4.0], seed=1)
    problem = pb.quadratic_problem(A, b=[1.0, -2.0, 0.5, 3.0])
    x_star = problem.minimizer()
    assert np.linalg.norm(problem.flat_gradient(x_star)) <= 1e-8
    assert problem.loss(problem.unflatten(x_star)) == pytest.approx(problem.minimum_value())
