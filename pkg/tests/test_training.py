import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qgan.discriminator import Discriminator
from qgan.generator import AnsatzShape, GeneratorModel, InputStateSpec, batched_probabilities
from qgan.training import (
    AmsgradState,
    TrainingConfig,
    TrainingError,
    TrainingTrace,
    amsgrad_step,
    expected_generator_loss,
    generator_gradient,
    grid_inputs,
    loss_discriminator,
    loss_generator,
    probability_gradient,
    train,
)


def fd_generator_gradient(model, disc, h=1e-5):
    flat = model.theta.ravel()
    out = np.zeros_like(flat)
    for i in range(flat.size):
        e = np.zeros_like(flat)
        e[i] = h
        out[i] = (expected_generator_loss(model, disc, flat + e) - expected_generator_loss(model, disc, flat - e)) / (2 * h)
    return out.reshape(model.theta.shape)


def test_losses_at_half():
    assert loss_generator([0.5, 0.5]) == pytest.approx(np.log(2))
    assert loss_discriminator([0.5], [0.5]) == pytest.approx(2 * np.log(0.5))


def test_losses_clamped():
    assert np.isfinite(loss_generator([0.0]))
    assert np.isfinite(loss_discriminator([0.0], [1.0]))
    with pytest.raises(ValueError):
        loss_generator([])


def test_amsgrad_first_step():
    g = np.array([2.0, -0.5])
    new, state = amsgrad_step(AmsgradState.zeros(2), np.zeros(2), g, lr=1e-3)
    # m = 0.1 g, v = 0.001 g^2, no bias correction
    assert np.allclose(new, -1e-3 * 0.1 * g / (np.sqrt(0.001) * np.abs(g) + 1e-8))
    assert np.allclose(state.vhat, 0.001 * g**2)


def test_amsgrad_zero_gradient_keeps_params():
    params = np.array([1.0, 2.0])
    new, _ = amsgrad_step(AmsgradState.zeros(2), params, np.zeros(2), lr=0.1)
    assert np.array_equal(new, params)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.lists(st.floats(-10, 10), min_size=3, max_size=3), min_size=1, max_size=15))
def test_amsgrad_vhat_never_decreases(grads):
    state = AmsgradState.zeros(3)
    params = np.zeros(3)
    for g in grads:
        prev = state.vhat.copy()
        params, state = amsgrad_step(state, params, np.array(g), lr=1e-2)
        assert np.all(state.vhat >= prev)


def test_grid_inputs():
    assert np.allclose(grid_inputs((3,))[:, 0], np.arange(8) / 7)
    two = grid_inputs((1, 2))
    assert two.shape == (8, 2)
    assert np.allclose(two[5], [1, 2 / 3])


@pytest.mark.parametrize("n,k", [(1, 0), (2, 1), (3, 2)])
def test_generator_gradient_matches_finite_differences(n, k):
    rng = np.random.default_rng(n + 10 * k)
    model = GeneratorModel.initialise(AnsatzShape(n, k), InputStateSpec.uniform(), seed=k)
    model.theta = rng.uniform(-np.pi, np.pi, model.theta.shape)
    disc = Discriminator(1, (6, 4), seed=n)
    assert np.allclose(generator_gradient(model, disc, "exact"), fd_generator_gradient(model, disc), atol=1e-6)


def test_probability_gradient_conserves_normalisation():
    rng = np.random.default_rng(0)
    shape = AnsatzShape(3, 2)
    amp = np.full(8, 1 / np.sqrt(8))
    dp = probability_gradient(shape, rng.uniform(-3, 3, shape.num_params), amp)
    assert np.all(np.abs(dp.sum(axis=1)) < 1e-10)


def test_constant_discriminator_gives_zero_gradient():
    shape = AnsatzShape(3, 1)
    model = GeneratorModel.initialise(shape, InputStateSpec.uniform(), seed=2)
    model.theta = np.random.default_rng(1).uniform(-2, 2, model.theta.shape)
    disc = Discriminator(1, (4,), seed=0)
    disc.params[:] = 0
    assert np.all(np.abs(generator_gradient(model, disc, "exact")) < 1e-10)


def test_shot_gradient_is_unbiased():
    shape = AnsatzShape(2, 1)
    model = GeneratorModel.initialise(shape, InputStateSpec.uniform(), seed=3)
    model.theta = np.array([[0.4, -1.0], [1.3, 0.2]])
    disc = Discriminator(1, (5,), seed=4)
    exact = generator_gradient(model, disc, "exact")
    rng = np.random.default_rng(0)
    est = np.mean([generator_gradient(model, disc, "shots", 8000, rng) for _ in range(200)], axis=0)
    assert np.allclose(est, exact, atol=2e-3)


def small_setup(seed=0):
    data = np.random.default_rng(seed).integers(0, 4, 200)
    gen = GeneratorModel.initialise(AnsatzShape(2, 1), InputStateSpec.uniform(), seed=seed)
    disc = Discriminator(1, (6, 4), seed=seed)
    cfg = TrainingConfig(epochs=3, batch_size=50, shots=50, gradient_shots=200, ks_samples=100, seed=seed)
    return cfg, data, gen, disc


def test_training_is_reproducible():
    a = train(*small_setup())
    b = train(*small_setup())
    assert a.trace.loss_g == b.trace.loss_g
    assert np.array_equal(a.generator.theta, b.generator.theta)
    assert a.final_ks == b.final_ks


def test_training_does_not_mutate_inputs():
    cfg, data, gen, disc = small_setup()
    theta0, params0 = gen.theta.copy(), disc.params.copy()
    train(cfg, data, gen, disc)
    assert np.array_equal(gen.theta, theta0) and np.array_equal(disc.params, params0)


def test_zero_epochs_returns_initial_models():
    cfg, data, gen, disc = small_setup()
    cfg.epochs = 0
    res = train(cfg, data, gen, disc)
    assert np.array_equal(res.generator.theta, gen.theta)
    assert len(res.trace) == 0


def test_training_rejects_bad_input():
    cfg, data, gen, disc = small_setup()
    cfg.batch_size = 500
    with pytest.raises(TrainingError):
        train(cfg, data, gen, disc)
    cfg.batch_size = 50
    with pytest.raises(TrainingError):
        train(cfg, data, gen, Discriminator(2, (4,), seed=0))
    with pytest.raises(TrainingError):
        train(cfg, np.array([0.5, 1.0]), gen, disc)
    with pytest.raises(ValueError):
        TrainingConfig(lr_generator=0)
    with pytest.raises(ValueError):
        TrainingConfig(gradient_mode="magic")


def test_callback_can_stop_early():
    cfg, data, gen, disc = small_setup()
    cfg.epochs = 10
    res = train(cfg, data, gen, disc, callback=lambda epoch, *_: epoch == 1)
    assert len(res.trace) == 2


def test_trace_csv_roundtrip(tmp_path):
    res = train(*small_setup())
    res.trace.write_csv(tmp_path / "trace.csv")
    back = TrainingTrace.read_csv(tmp_path / "trace.csv")
    assert back.loss_g == res.trace.loss_g
    assert back.rel_entropy == res.trace.rel_entropy


def test_multivariate_training_runs():
    data = np.random.default_rng(0).integers(0, 4, (100, 2))
    gen = GeneratorModel.initialise(AnsatzShape(4, 1, (2, 2)), InputStateSpec.uniform(), seed=0)
    disc = Discriminator(2, (8, 4), seed=0)
    cfg = TrainingConfig(epochs=2, batch_size=50, shots=50, gradient_mode="exact", ks_samples=0)
    res = train(cfg, data, gen, disc)
    assert len(res.trace) == 2 and res.final_ks is None


def test_training_moves_towards_target():
    # a point mass on grid value 3 is easy to learn in exact mode
    data = np.full(400, 3)
    gen = GeneratorModel.initialise(AnsatzShape(2, 1), InputStateSpec.uniform(), seed=1)
    disc = Discriminator(1, (10, 5), seed=1)
    cfg = TrainingConfig(epochs=150, batch_size=400, shots=400, lr_generator=1e-2, lr_discriminator=1e-2,
                         gradient_mode="exact", ks_samples=0)
    res = train(cfg, data, gen, disc)
    p = batched_probabilities(res.generator.shape, res.generator.theta, res.generator.input_amplitudes())[0]
    assert p[3] > 0.5
    assert res.trace.rel_entropy[-1] < res.initial_rel_entropy
