"""Adversarial training of the quantum generator against the discriminator.

Per batch the discriminator takes one AMSGRAD step on ``-L_D`` plus the
gradient penalty, then the generator takes one AMSGRAD step on ``L_G``
using parameter-shift gradients.  Everything is driven by a single seeded
``numpy.random.Generator`` consumed in a fixed order, so runs are
bit-reproducible.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .discriminator import Discriminator, sigmoid
from .generator import AnsatzShape, GeneratorModel, batched_probabilities, tuple_to_index
from .metrics import ks_statistic, relative_entropy
from .statevector import as_generator, sample_counts

log = logging.getLogger(__name__)

CLAMP = 1e-7


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainingConfig:
    epochs: int = 2000
    batch_size: int = 2000
    shots: int = 2000
    lr_generator: float = 1e-4
    lr_discriminator: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    gradient_mode: str = "shots"
    gradient_shots: int = 8000
    penalty: float = 1.0
    penalty_std: float = 0.1
    ks_samples: int = 500
    ks_alpha: float = 0.05
    ks_every: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.lr_generator <= 0 or self.lr_discriminator <= 0:
            raise ValueError("learning rates must be positive")
        if self.gradient_mode not in ("shots", "exact"):
            raise ValueError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.epochs < 0 or self.batch_size < 1 or self.shots < 1:
            raise ValueError("epochs, batch_size and shots must be non-negative / positive")


def clamp(d):
    return np.clip(d, CLAMP, 1 - CLAMP)


def loss_generator(scores_generated) -> float:
    """``-(1/m) sum log D(g_l)`` given the scores of a generated batch."""
    d = np.asarray(scores_generated, dtype=float)
    if d.size == 0:
        raise ValueError("empty batch")
    return float(-np.mean(np.log(clamp(d))))


def loss_discriminator(scores_real, scores_generated) -> float:
    """``(1/m) sum [log D(x_l) + log(1 - D(g_l))]``; the discriminator maximises it."""
    dr = np.asarray(scores_real, dtype=float)
    dg = np.asarray(scores_generated, dtype=float)
    if dr.size == 0 or dg.size == 0:
        raise ValueError("empty batch")
    return float(np.mean(np.log(clamp(dr))) + np.mean(np.log(1 - clamp(dg))))


@dataclass
class AmsgradState:
    m: np.ndarray
    v: np.ndarray
    vhat: np.ndarray

    @classmethod
    def zeros(cls, size) -> "AmsgradState":
        return cls(np.zeros(size), np.zeros(size), np.zeros(size))


def amsgrad_step(state: AmsgradState, params, grad, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One AMSGRAD update; returns ``(new_params, new_state)``.

    No bias correction is applied.  With ``vhat`` replaced by ``v`` this is
    the uncorrected Adam step.
    """
    grad = np.asarray(grad, dtype=float)
    m = beta1 * state.m + (1 - beta1) * grad
    v = beta2 * state.v + (1 - beta2) * grad * grad
    vhat = np.maximum(state.vhat, v)
    new = np.asarray(params, dtype=float) - lr * m / (np.sqrt(vhat) + eps)
    return new, AmsgradState(m, v, vhat)


def grid_inputs(registers) -> np.ndarray:
    """Normalised discriminator input for every flat grid index, shape ``(2**n, d)``.

    Each register value is divided by ``2**n_i - 1`` so inputs lie in ``[0, 1]``.
    """
    registers = tuple(registers)
    idx = np.arange(2 ** sum(registers))
    cols = []
    shift = 0
    for width in registers:
        cols.append(((idx >> shift) & ((1 << width) - 1)) / ((1 << width) - 1))
        shift += width
    return np.stack(cols, axis=1)


def shifted_thetas(theta) -> np.ndarray:
    """Stack of ``theta + pi/2 e_i`` followed by ``theta - pi/2 e_i`` for every parameter."""
    flat = np.asarray(theta, dtype=float).ravel()
    eye = np.eye(flat.size) * (np.pi / 2)
    return np.concatenate([flat + eye, flat - eye])


def probability_gradient(shape: AnsatzShape, theta, input_amplitudes, shots: int | None = None,
                         rng=None) -> np.ndarray:
    """``dp_j / dtheta_i`` by the parameter-shift rule, shape ``(P, 2**n)``.

    With ``shots`` each shifted distribution is replaced by the empirical
    frequencies of that many measurements.
    """
    num = shape.num_params
    probs = batched_probabilities(shape, shifted_thetas(theta), input_amplitudes)
    if shots is not None:
        rng = as_generator(rng)
        probs = np.array([sample_counts(p, shots, rng) for p in probs]) / shots
    return 0.5 * (probs[:num] - probs[num:])


def generator_gradient(model: GeneratorModel, discriminator: Discriminator, mode: str = "exact",
                       shots: int = 8000, rng=None, grid=None) -> np.ndarray:
    """``dL_G/dtheta = -sum_j dp_j/dtheta log D(j)``, shaped like ``model.theta``."""
    if grid is None:
        grid = grid_inputs(model.shape.registers)
    log_d = np.log(clamp(discriminator.forward(grid)))
    dp = probability_gradient(model.shape, model.theta, model.input_amplitudes(),
                              shots if mode == "shots" else None, rng)
    return (-(dp @ log_d)).reshape(model.shape.param_shape)


def expected_generator_loss(model: GeneratorModel, discriminator: Discriminator, theta=None) -> float:
    """``-sum_j p_j log D(j)``, the expectation form of the generator loss."""
    theta = model.theta if theta is None else theta
    p = batched_probabilities(model.shape, theta, model.input_amplitudes())[0]
    grid = grid_inputs(model.shape.registers)
    return float(-p @ np.log(clamp(discriminator.forward(grid))))


@dataclass
class TrainingTrace:
    epoch: list = field(default_factory=list)
    loss_g: list = field(default_factory=list)
    loss_d: list = field(default_factory=list)
    rel_entropy: list = field(default_factory=list)
    ks: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.epoch)

    def append(self, epoch, loss_g, loss_d, rel_entropy, ks=float("nan")):
        self.epoch.append(epoch)
        self.loss_g.append(loss_g)
        self.loss_d.append(loss_d)
        self.rel_entropy.append(rel_entropy)
        self.ks.append(ks)

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "loss_g", "loss_d", "rel_entropy", "ks"])
            for row in zip(self.epoch, self.loss_g, self.loss_d, self.rel_entropy, self.ks):
                w.writerow([row[0], *(repr(float(v)) for v in row[1:])])

    @classmethod
    def read_csv(cls, path) -> "TrainingTrace":
        trace = cls()
        with open(Path(path), newline="") as fh:
            for row in csv.DictReader(fh):
                trace.append(int(row["epoch"]), float(row["loss_g"]), float(row["loss_d"]),
                             float(row["rel_entropy"]), float(row["ks"]))
        return trace


@dataclass
class TrainingResult:
    generator: GeneratorModel
    discriminator: Discriminator
    trace: TrainingTrace
    initial_rel_entropy: float
    final_ks: object = None

    def metrics(self) -> dict:
        out = {
            "epochs": len(self.trace),
            "initial_rel_entropy": self.initial_rel_entropy,
            "final_rel_entropy": self.trace.rel_entropy[-1] if len(self.trace) else self.initial_rel_entropy,
        }
        if self.final_ks is not None:
            out.update(ks=self.final_ks.statistic, ks_bound=self.final_ks.bound, ks_accepted=self.final_ks.accepted)
        return out


def _flat_indices(data, registers) -> np.ndarray:
    data = np.asarray(data)
    if data.ndim == 2:
        return tuple_to_index(data, registers)
    idx = data.astype(np.int64)
    if np.any(idx != data) or np.any((idx < 0) | (idx >= 2 ** sum(registers))):
        raise TrainingError("training data must be grid indices")
    return idx


def ks_against_data(model: GeneratorModel, data_idx, config: TrainingConfig, rng):
    """KS statistic between ``ks_samples`` generator measurements and as many
    randomly chosen training samples.  Multi-register data is compared on
    flat grid indices."""
    s = config.ks_samples
    gen = np.repeat(np.arange(model.shape.dim), sample_counts(model.probabilities(), s, rng))
    real = rng.choice(data_idx, size=s, replace=s > data_idx.size)
    return ks_statistic(gen, real, config.ks_alpha)


def train(config: TrainingConfig, data, generator: GeneratorModel, discriminator: Discriminator,
          callback=None) -> TrainingResult:
    """Alternating qGAN optimisation on grid data.

    ``data`` holds flat grid indices (or per-register index tuples for
    multivariate generators).  The models passed in are not modified.
    ``callback(epoch, generator, discriminator, trace)`` runs after every
    epoch; a truthy return value stops training early.
    """
    registers = generator.shape.registers
    data_idx = _flat_indices(data, registers)
    if data_idx.size == 0:
        raise TrainingError("empty training set")
    if config.batch_size > data_idx.size:
        raise TrainingError("batch_size exceeds the training-set size")
    if discriminator.input_dim != len(registers):
        raise TrainingError("discriminator input dimension does not match the number of registers")

    rng = np.random.default_rng(config.seed)
    gen = GeneratorModel(generator.shape, generator.theta, generator.input_spec, generator.affine)
    disc = discriminator.copy()
    shape = gen.shape
    dim = shape.dim
    grid = grid_inputs(registers)
    amp_in = gen.input_amplitudes()
    target = np.bincount(data_idx, minlength=dim) / data_idx.size
    opt_g = AmsgradState.zeros(shape.num_params)
    opt_d = AmsgradState.zeros(disc.num_params)
    grad_shots = config.gradient_shots if config.gradient_mode == "shots" else None
    trace = TrainingTrace()

    def gen_probs(theta):
        return batched_probabilities(shape, theta, amp_in)[0]

    initial_re = relative_entropy(target, gen_probs(gen.theta))
    n_batches = -(-data_idx.size // config.batch_size)

    for epoch in range(config.epochs):
        order = rng.permutation(data_idx.size)
        lg_sum = ld_sum = 0.0
        for b in range(n_batches):
            real = data_idx[order[b * config.batch_size:(b + 1) * config.batch_size]]
            real_w = np.bincount(real, minlength=dim) / real.size
            fake_counts = sample_counts(gen_probs(gen.theta), config.shots, rng)
            fake_w = fake_counts / config.shots

            # discriminator: descend -L_D + penalty; batches are weighted grid points
            logit, acts, slopes = disc._forward(grid)
            d = sigmoid(logit)
            dc = clamp(d)
            ld = float(real_w @ np.log(dc) + fake_w @ np.log(1 - dc))
            inside = (d > CLAMP) & (d < 1 - CLAMP)
            # d(-log D)/dlogit = -(1 - D); d(-log(1 - D))/dlogit = D
            grad_logit = np.where(inside, -real_w * (1 - d) + fake_w * d, 0.0)
            grad_d = disc._backprop_logit(acts, slopes, grad_logit)
            if config.penalty > 0:
                perturbed = grid[real] + rng.normal(0.0, config.penalty_std, size=(real.size, grid.shape[1]))
                _, gp_grad = disc.gradient_penalty(perturbed, config.penalty)
                grad_d = grad_d + gp_grad
            disc.params, opt_d = amsgrad_step(opt_d, disc.params, grad_d, config.lr_discriminator,
                                              config.beta1, config.beta2, config.eps)

            # generator: parameter-shift gradient against the updated discriminator
            log_d = np.log(clamp(disc.forward(grid)))
            lg = float(-fake_w @ log_d)
            dp = probability_gradient(shape, gen.theta, amp_in, grad_shots, rng)
            grad_g = -(dp @ log_d)
            theta, opt_g = amsgrad_step(opt_g, gen.theta.ravel(), grad_g, config.lr_generator,
                                        config.beta1, config.beta2, config.eps)
            gen.theta = theta.reshape(shape.param_shape)

            if not (np.isfinite(ld) and np.isfinite(lg)):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {b}: L_D={ld}, L_G={lg}")
            lg_sum += lg
            ld_sum += ld

        re = relative_entropy(target, gen_probs(gen.theta))
        ks = float("nan")
        if config.ks_every and (epoch + 1) % config.ks_every == 0:
            ks = ks_against_data(gen, data_idx, config, rng).statistic
        trace.append(epoch, lg_sum / n_batches, ld_sum / n_batches, re, ks)
        if callback is not None and callback(epoch, gen, disc, trace):
            break

    final_ks = ks_against_data(gen, data_idx, config, rng) if config.ks_samples else None
    return TrainingResult(gen, disc, trace, initial_re, final_ks)


def config_to_dict(config: TrainingConfig) -> dict:
    return asdict(config)
