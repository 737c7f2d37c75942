"""Command-line front end.

    qgan train    --config cfg.json | --preset NAME  [--seed S] [--out DIR] [--quick]
    qgan sweep    [--config ...] [--preset ...]      [--out DIR] [--quick]
    qgan price    [--checkpoint gen.json] [--config cfg.json | --preset NAME] [--method ...]
    qgan plotdata --checkpoint gen.json [--trace trace.csv] [--target target.csv] [--out DIR]
    qgan presets

The number of sweep worker processes is read from ``QGAN_WORKERS``
(default 1).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, derived_seeds, presets
from .discriminator import Discriminator
from .distributions import (
    analytic_discretized,
    empirical,
    expected_payoff,
    ingest_samples,
    sample_target,
    write_distribution_csv,
)
from .generator import AnsatzShape, GeneratorModel, InputStateSpec
from .init_fit import FitProblem, fit_normal_init
from .qae import QaeProblem, monte_carlo_payoff, run_qae
from .training import TrainingTrace, train

log = logging.getLogger("qgan")

WORKERS_ENV = "QGAN_WORKERS"


class CliError(Exception):
    pass


def load_run_config(path=None, preset=None, quick=False) -> RunConfig:
    if (path is None) == (preset is None):
        raise CliError("give exactly one of --config or --preset")
    if path is not None:
        try:
            cfg = RunConfig.load(path)
        except OSError as exc:
            raise CliError(f"cannot read config: {exc}") from None
    else:
        table = presets()
        if preset not in table:
            raise CliError(f"unknown preset {preset!r}; run 'qgan presets' for the list")
        cfg = table[preset]
    return cfg.quick() if quick else cfg


def training_data(cfg: RunConfig, seed: int) -> tuple[np.ndarray, list]:
    """Grid samples for one run and the per-register affine maps."""
    t = cfg.target
    if t.kind == "file":
        res = ingest_samples(t.path, cfg.generator.registers)
        return res.samples, res.affine
    spec = t.spec()
    data = sample_target(spec, t.samples, derived_seeds(seed)["data"])
    if t.kind == "gaussian2d":
        p = spec.params
        regs = np.array(p["registers"])
        step = (np.array(p["high"]) - np.array(p["low"])) / (2**regs - 1)
        return data, [(float(s), float(lo)) for s, lo in zip(step, p["low"])]
    return data, [spec.affine]


def input_spec(cfg: RunConfig, data) -> InputStateSpec:
    g = cfg.generator
    if g.init == "uniform":
        return InputStateSpec.uniform(g.delta)
    if g.init == "random":
        return InputStateSpec.random()
    if len(g.registers) != 1:
        raise CliError("normal initialisation is only available for a single register")
    mu, sigma = float(np.mean(data)), float(np.std(data))
    angles = g.fit_angles
    if angles is None:
        fit = fit_normal_init(FitProblem.from_samples(data, g.registers[0]))
        angles = fit.angles.ravel().tolist()
    return InputStateSpec.fitted_normal(angles, mu, sigma, g.delta)


def build_models(cfg: RunConfig, seed: int):
    """Training data and freshly initialised generator and discriminator."""
    seeds = derived_seeds(seed)
    data, affine = training_data(cfg, seed)
    g = cfg.generator
    shape = AnsatzShape(sum(g.registers), g.k, tuple(g.registers), g.entangler)
    gen = GeneratorModel.initialise(shape, input_spec(cfg, data), seeds["generator"], affine)
    disc = Discriminator(len(g.registers), cfg.discriminator.hidden, cfg.discriminator.leaky_slope,
                         seed=seeds["discriminator"])
    return data, gen, disc


def run_one(cfg: RunConfig, seed: int, out_dir) -> dict:
    """Train one seed and write its artifacts into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data, gen, disc = build_models(cfg, seed)
    tcfg = replace(cfg.training, seed=derived_seeds(seed)["training"])
    result = train(tcfg, data, gen, disc)
    result.generator.save(out / "generator.json")
    result.discriminator.save(out / "discriminator.json")
    result.trace.write_csv(out / "trace.csv")
    write_distribution_csv(out / "target.csv", empirical(data, cfg.generator.registers).probabilities)
    metrics = {"name": cfg.name, "seed": seed, **result.metrics()}
    (out / "metrics.json").write_text(json.dumps(metrics, indent=2))
    cfg.save(out / "config.json")
    return metrics


def _run_job(args):
    cfg_dict, seed, out_dir = args
    return run_one(RunConfig.from_dict(cfg_dict), seed, out_dir)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise CliError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def run_jobs(jobs, workers: int):
    if workers == 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


def aggregate(metrics: list[dict]) -> dict:
    ks = np.array([m["ks"] for m in metrics if "ks" in m])
    re = np.array([m["final_rel_entropy"] for m in metrics])
    return {
        "runs": len(metrics),
        "mu_ks": float(ks.mean()) if ks.size else float("nan"),
        "sigma_ks": float(ks.std()) if ks.size else float("nan"),
        "n_accepted": int(sum(m.get("ks_accepted", False) for m in metrics)),
        "mu_re": float(re.mean()),
        "sigma_re": float(re.std()),
    }


def write_aggregate_csv(path, rows: list[dict]) -> None:
    cols = ["cell", "runs", "mu_ks", "sigma_ks", "n_accepted", "mu_re", "sigma_re"]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for row in rows:
            w.writerow({c: row[c] for c in cols})


def cmd_train(args) -> int:
    cfg = load_run_config(args.config, args.preset, args.quick)
    seeds = [args.seed] if args.seed is not None else cfg.seeds
    root = Path(args.out or cfg.out) / cfg.name
    jobs = [(cfg.to_dict(), s, root / f"seed{s}") for s in seeds]
    results = run_jobs(jobs, worker_count())
    for m in results:
        log.info("seed %d: %s", m["seed"], {k: v for k, v in m.items() if k not in ("name", "seed")})
    if len(results) > 1:
        write_aggregate_csv(root / "aggregate.csv", [{"cell": cfg.name, **aggregate(results)}])
    return 0


def cmd_sweep(args) -> int:
    configs = [load_run_config(path=p, quick=args.quick) for p in args.config or []]
    configs += [load_run_config(preset=p, quick=args.quick) for p in args.preset or []]
    if not configs:
        configs = [cfg.quick() if args.quick else cfg for name, cfg in presets().items()
                   if cfg.target.kind != "gaussian2d" and not name.startswith("pricing")]
    root = Path(args.out or "runs") / "sweep"
    jobs, owner = [], []
    for cfg in configs:
        seeds = [args.seed] if args.seed is not None else cfg.seeds
        for s in seeds:
            jobs.append((cfg.to_dict(), s, root / cfg.name / f"seed{s}"))
            owner.append(cfg.name)
    results = run_jobs(jobs, worker_count())
    rows = []
    for cfg in configs:
        mine = [m for m, o in zip(results, owner) if o == cfg.name]
        row = {"cell": cfg.name, **aggregate(mine)}
        rows.append(row)
        log.info("%s: %s", cfg.name, row)
    root.mkdir(parents=True, exist_ok=True)
    write_aggregate_csv(root / "aggregate.csv", rows)
    return 0


def price_reports(cfg: RunConfig | None, generator: GeneratorModel | None, strike: float,
                  eval_qubits: int, mc_samples: int, methods, seed: int = 0) -> dict:
    """Pricing reports keyed by method.

    Without a generator checkpoint the exact discretised target law is used
    for every method.
    """
    if generator is None and cfg is None:
        raise CliError("need a generator checkpoint or a target config")
    analytic = None
    if cfg is not None and cfg.target.kind in ("lognormal", "triangular", "bimodal"):
        analytic = analytic_discretized(cfg.target.spec())
    if generator is not None:
        probs, source = generator.probabilities(), "generator"
    elif analytic is not None:
        probs, source = analytic, "analytic"
    else:
        raise CliError("no closed-form law for this target; pass a generator checkpoint")
    if generator is not None and len(generator.shape.registers) != 1:
        raise CliError("pricing needs a univariate generator")
    out = {}
    reference = expected_payoff(analytic, strike) if analytic is not None else None
    for method in methods:
        if method == "analytic":
            if analytic is None:
                raise CliError("analytic pricing needs a known target law")
            out["analytic"] = {"method": "analytic", "estimate": reference, "ci": [reference, reference],
                               "samples_or_m": None, "distribution_source": "analytic"}
        elif method == "mc":
            rng = np.random.default_rng(seed)
            draws = rng.choice(probs.size, size=mc_samples, p=probs / probs.sum())
            out["mc"] = monte_carlo_payoff(draws, strike).report(source)
        elif method == "qae":
            if float(strike) != int(strike):
                raise CliError("QAE needs an integer grid strike")
            loader = generator if generator is not None else probs
            res = run_qae(QaeProblem(loader, int(strike), eval_qubits))
            out["qae"] = res.report(source)
        else:
            raise CliError(f"unknown pricing method {method!r}")
        if reference is not None:
            out[method]["analytic_reference"] = reference
    return out


def cmd_price(args) -> int:
    cfg = None
    if args.config or args.preset:
        cfg = load_run_config(args.config, args.preset)
    generator = None
    if args.checkpoint:
        try:
            generator = GeneratorModel.load(args.checkpoint)
        except (OSError, ValueError, KeyError) as exc:
            raise CliError(f"cannot load checkpoint {args.checkpoint}: {exc}") from None
    pricing = cfg.pricing if cfg is not None else None
    strike = args.strike if args.strike is not None else (pricing.strike if pricing else 2.0)
    m = args.eval_qubits if args.eval_qubits is not None else (pricing.eval_qubits if pricing else 8)
    n_mc = args.mc_samples if args.mc_samples is not None else (pricing.mc_samples if pricing else 1024)
    methods = args.method or (pricing.methods if pricing else ["mc", "qae"])
    if generator is not None and "analytic" in methods and cfg is None:
        methods = [x for x in methods if x != "analytic"]
    reports = price_reports(cfg, generator, strike, m, n_mc, methods, args.seed or 0)
    text = json.dumps(reports, indent=2)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "pricing.json").write_text(text)
    print(text)
    return 0


def read_distribution_csv(path) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return np.array([float(r["probability"]) for r in rows])
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise CliError(f"cannot read distribution {path}: {exc}") from None


def write_plotdata(out_dir, generator: GeneratorModel, target=None, trace: TrainingTrace | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    probs = generator.probabilities()
    if target is not None and len(target) != probs.size:
        raise CliError("target and generator grids differ in size")
    regs = generator.shape.registers
    with open(out / "pdf.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        if len(regs) == 1:
            w.writerow(["grid_value", "trained_probability", "target_probability"])
            values = generator.values(np.arange(probs.size))[:, 0]
            for j, p in enumerate(probs):
                w.writerow([float(values[j]), repr(float(p)), "" if target is None else repr(float(target[j]))])
        else:
            from .generator import index_to_tuple

            w.writerow([f"x{i}" for i in range(len(regs))] + ["trained_probability", "target_probability"])
            for j, p in enumerate(probs):
                w.writerow([*index_to_tuple(j, regs).tolist(), repr(float(p)),
                            "" if target is None else repr(float(target[j]))])
    if trace is not None:
        with open(out / "loss.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "loss_g", "loss_d", "rel_entropy"])
            for row in zip(trace.epoch, trace.loss_g, trace.loss_d, trace.rel_entropy):
                w.writerow(row)


def cmd_plotdata(args) -> int:
    try:
        generator = GeneratorModel.load(args.checkpoint)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(f"cannot load checkpoint {args.checkpoint}: {exc}") from None
    target = read_distribution_csv(args.target) if args.target else None
    trace = None
    if args.trace:
        try:
            trace = TrainingTrace.read_csv(args.trace)
        except (OSError, KeyError, ValueError, TypeError) as exc:
            raise CliError(f"cannot read trace {args.trace}: {exc}") from None
    out = args.out or str(Path(args.checkpoint).parent)
    write_plotdata(out, generator, target, trace)
    return 0


def cmd_presets(args) -> int:
    for name in presets():
        print(name)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qgan", description="Quantum GAN training and option pricing.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, multi=False):
        action = "append" if multi else "store"
        p.add_argument("--config", action=action, help="run config JSON")
        p.add_argument("--preset", action=action, help="named preset (see 'qgan presets')")
        p.add_argument("--seed", type=int, help="run a single seed instead of the config's list")
        p.add_argument("--out", help="output directory")
        p.add_argument("--quick", action="store_true", help="2 seeds, at most 300 epochs, learning rates at least 1e-3")

    p = sub.add_parser("train", help="train one configuration")
    common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="train several configurations and aggregate")
    common(p, multi=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("price", help="price a European call")
    common(p)
    p.add_argument("--checkpoint", help="generator checkpoint JSON")
    p.add_argument("--strike", type=float)
    p.add_argument("--eval-qubits", type=int)
    p.add_argument("--mc-samples", type=int)
    p.add_argument("--method", action="append", choices=["analytic", "mc", "qae"])
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("plotdata", help="CSV tables for distribution and loss plots")
    p.add_argument("--checkpoint", required=True, help="generator checkpoint JSON")
    p.add_argument("--trace", help="trace CSV written by 'train'")
    p.add_argument("--target", help="target distribution CSV written by 'train'")
    p.add_argument("--out", help="output directory (default: next to the checkpoint)")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("presets", help="list shipped presets")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (CliError, ConfigError) as exc:
        print(f"qgan: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"qgan: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
