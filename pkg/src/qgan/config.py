"""Run configurations and shipped presets.

A :class:`RunConfig` holds everything needed to reproduce a training or
pricing run.  It serialises to plain JSON; ``RunConfig.from_dict`` rejects
unknown keys so typos in config files fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .distributions import KINDS, TRUNCATIONS, TargetSpec
from .training import TrainingConfig

INITS = ("uniform", "normal", "random")


QUICK_LR = 1e-3


class ConfigError(ValueError):
    pass


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass
class TargetConfig:
    kind: str = "lognormal"
    params: dict = field(default_factory=lambda: {"mu": 1.0, "sigma": 1.0})
    low: float = 0.0
    high: float = 7.0
    num_qubits: int = 3
    truncation: str = "continuous"
    samples: int = 20000
    path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.truncation not in TRUNCATIONS:
            raise ValueError(f"unknown truncation {self.truncation!r}")
        if self.kind == "file" and not self.path:
            raise ValueError("file targets need a path")
        if self.samples < 1:
            raise ValueError("samples must be positive")

    def spec(self) -> TargetSpec:
        return TargetSpec(self.kind, dict(self.params), self.low, self.high, self.num_qubits, self.truncation)


@dataclass
class GeneratorConfig:
    k: int = 2
    registers: list = field(default_factory=lambda: [3])
    entangler: str = "ring"
    init: str = "uniform"
    delta: float = 0.1
    fit_angles: list | None = None

    def __post_init__(self):
        self.registers = [int(r) for r in self.registers]
        if self.init not in INITS:
            raise ValueError(f"unknown init {self.init!r}; choose from {INITS}")
        if self.k < 0 or not self.registers or min(self.registers) < 1:
            raise ValueError("need k >= 0 and positive register widths")


@dataclass
class DiscriminatorConfig:
    hidden: list = field(default_factory=lambda: [50, 20])
    leaky_slope: float = 0.2

    def __post_init__(self):
        self.hidden = [int(h) for h in self.hidden]
        if not self.hidden or min(self.hidden) < 1:
            raise ValueError("hidden layer sizes must be positive")


@dataclass
class PricingConfig:
    strike: float = 2.0
    eval_qubits: int = 8
    mc_samples: int = 1024
    methods: list = field(default_factory=lambda: ["analytic", "mc", "qae"])

    def __post_init__(self):
        bad = set(self.methods) - {"analytic", "mc", "qae"}
        if bad:
            raise ValueError(f"unknown pricing method(s) {sorted(bad)}")


@dataclass
class RunConfig:
    name: str = "run"
    target: TargetConfig = field(default_factory=TargetConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    pricing: PricingConfig = field(default_factory=PricingConfig)
    seeds: list = field(default_factory=lambda: list(range(10)))
    out: str = "runs"

    def __post_init__(self):
        self.seeds = [int(s) for s in self.seeds]
        if sum(self.generator.registers) != self.target.num_qubits:
            raise ValueError("generator registers must cover the target's qubits")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config: expected an object")
        parts = {"target": TargetConfig, "generator": GeneratorConfig, "discriminator": DiscriminatorConfig,
                 "training": TrainingConfig, "pricing": PricingConfig}
        data = dict(data)
        for key, sub in parts.items():
            if key in data:
                data[key] = _build(sub, data[key], key)
        return _build(cls, data, "config")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_json(Path(path).read_text())

    def quick(self) -> "RunConfig":
        """Reduced variant: two seeds, at most 300 epochs.

        Learning rates are raised to at least ``QUICK_LR`` so the short
        schedule still converges.
        """
        t = self.training
        training = replace(t, epochs=min(t.epochs, 300), lr_generator=max(t.lr_generator, QUICK_LR),
                           lr_discriminator=max(t.lr_discriminator, QUICK_LR))
        return replace(self, name=self.name + "-quick", seeds=self.seeds[:2], training=training)


def derived_seeds(seed: int) -> dict:
    """Independent integer seeds for data, generator init, discriminator
    init and the training loop, all derived from one run seed."""
    data, gen, disc, loop = np.random.SeedSequence(seed).generate_state(4)
    return {"data": int(data), "generator": int(gen), "discriminator": int(disc), "training": int(loop)}


_TARGETS = {
    "lognormal": TargetConfig("lognormal", {"mu": 1.0, "sigma": 1.0}),
    "triangular": TargetConfig("triangular", {"lower": 0.0, "upper": 7.0, "mode": 2.0}),
    "bimodal": TargetConfig("bimodal", {"mu1": 0.5, "sigma1": 1.0, "mu2": 3.5, "sigma2": 0.5, "weight": 0.5}),
}


BENCHMARK_PENALTY = 1e-3


def benchmark_preset(target: str, init: str, k: int) -> RunConfig:
    """One cell of the 3-qubit benchmark grid (target x init x depth).

    The gradient penalty is kept weak: with inputs scaled to ``[0, 1]`` a
    weight near 1 flattens the 50-20 discriminator and stalls training.
    """
    if target not in _TARGETS:
        raise ConfigError(f"unknown benchmark target {target!r}")
    return RunConfig(
        name=f"{target}-{init}-k{k}",
        target=replace(_TARGETS[target]),
        generator=GeneratorConfig(k=k, init=init),
        training=TrainingConfig(penalty=BENCHMARK_PENALTY),
    )


def multivariate_preset(k: int = 2) -> RunConfig:
    spec = TargetSpec.gaussian2d()
    return RunConfig(
        name=f"gaussian2d-uniform-k{k}",
        target=TargetConfig("gaussian2d", spec.params, num_qubits=6, samples=5000),
        generator=GeneratorConfig(k=k, registers=[3, 3]),
        discriminator=DiscriminatorConfig(hidden=[512, 256]),
        training=TrainingConfig(epochs=5000, batch_size=1200, shots=1200, lr_generator=1e-3,
                                lr_discriminator=1e-3, penalty=0.1, ks_samples=0),
        seeds=[0],
    )


def pricing_preset() -> RunConfig:
    """Log-normal pricing pipeline; full rounding cells at both grid ends."""
    cfg = benchmark_preset("lognormal", "uniform", 2)
    cfg.name = "pricing-lognormal"
    cfg.target.truncation = "rounded"
    cfg.seeds = [0]
    return cfg


def presets() -> dict:
    out = {}
    for target in _TARGETS:
        for init in INITS:
            for k in (1, 2, 3):
                cfg = benchmark_preset(target, init, k)
                out[cfg.name] = cfg
    for cfg in (multivariate_preset(), pricing_preset()):
        out[cfg.name] = cfg
    return out
