"""Command-line pipeline: traces -> dataset -> balancing -> detectors -> reports.

Every stage reads and writes plain files. Parameters come from a flat
``key=value`` config file (``--config``), overridden by ``--set key=value``
and by the per-command flags. Stage seeds default to the global ``seed``;
the fully resolved config is echoed to stderr on every run.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from .adasyn import AdasynParams, balance_dataset
from .dataset import LabeledDataset, build_honest, build_malicious, read_csv, split, write_csv
from .detector import checkpoint
from .detector.training import Architecture, TrainConfig, predict_labels, train
from .evaluation import METRICS_HEADER, confusion, metrics_row, roc_auc, roc_csv, safe_metrics
from .evolution import GaConfig, Objectives, archive_csv, evolve
from .impact_sim import SWEEP_HEADER, ImpactConfig, run_impact, sweep_row
from .trace_ingest import generate_synthetic_trace, parse_trace, serialize_trace

log = logging.getLogger("lyingev")

# key -> (type, default). A default of None on a *_seed key means "use seed".
CONFIG_SPEC: dict[str, tuple[type, object]] = {
    "seed": (int, 0),
    # fleet and traces
    "evs": (int, 64),
    "days": (int, 24),
    "trace_seed": (int, None),
    "max_speed_mph": (float, 80.0),
    # dataset
    "soc_seed": (int, None),
    "attack_seed": (int, None),
    "split_seed": (int, None),
    "train_fraction": (float, 0.7),
    # adasyn
    "adasyn_k": (int, 5),
    "adasyn_xi": (float, 1.0),
    "adasyn_threshold": (float, 0.75),
    "adasyn_seed": (int, None),
    # detector
    "model": (str, "gru"),
    "layers": (int, 2),
    "units": (int, 128),
    "activation": (str, "softsign"),
    "learning_rate": (float, 1e-3),
    "batch_size": (int, 64),
    "epochs": (int, 15),
    "loss": (str, "cross_entropy"),
    "dropout": (float, 0.0),
    "max_norm": (float, 3.0),
    "init": (str, "glorot"),
    "optimizer": (str, "adam"),
    "valid_fraction": (float, 0.15),
    "train_seed": (int, None),
    # evolution
    "ga_population": (int, 12),
    "ga_generations": (int, 8),
    "ga_crossover": (float, 0.9),
    "ga_mutation": (float, 0.1),
    "ga_epochs": (int, 3),
    "ga_seed": (int, None),
    # impact simulation; liars and beta accept comma lists or a:b ranges
    "fleet": (int, 100),
    "liars": (str, "0"),
    "beta": (str, "0.2"),
    "capacity": (float, 2160.0),
    "slots": (int, 30),
    "epsilon": (float, 0.5),
    "impact_seed": (int, None),
}


class ConfigError(ValueError):
    pass


def _coerce(key: str, raw):
    if key not in CONFIG_SPEC:
        raise ConfigError(f"unknown config key {key!r}")
    typ = CONFIG_SPEC[key][0]
    try:
        return typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r}: cannot read {raw!r} as {typ.__name__}") from None


def read_config_file(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = _coerce(key, value)
    return out


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then file values, then overrides; stage seeds fall back to ``seed``."""
    cfg = {k: default for k, (_, default) in CONFIG_SPEC.items()}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            cfg[key] = _coerce(key, value)
    for key in cfg:
        if key.endswith("_seed") and cfg[key] is None:
            cfg[key] = cfg["seed"]
    return cfg


def format_config(cfg: dict) -> str:
    return "".join(f"{k}={cfg[k]}\n" for k in sorted(cfg))


def parse_values(spec: str, typ=float) -> list:
    """``"1,2,5"`` or an inclusive ``"start:stop[:step]"`` range."""
    spec = spec.strip()
    if ":" in spec:
        parts = [typ(p) for p in spec.split(":")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad range {spec!r}")
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) == 3 else typ(1)
        if step <= 0:
            raise ConfigError(f"range step must be positive in {spec!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [typ(start + i * step) for i in range(max(count, 0))]
    return [typ(p) for p in spec.split(",") if p.strip()]


# ---------------------------------------------------------------- helpers


def _synthetic_traces(cfg):
    for i in range(cfg["evs"]):
        yield generate_synthetic_trace([cfg["trace_seed"], i], cfg["days"], vehicle_id=f"ev{i:04d}")


def _read_traces(directory):
    files = sorted(Path(directory).glob("*.txt"))
    if not files:
        raise FileNotFoundError(f"no *.txt trace files in {directory}")
    for f in files:
        with open(f, encoding="utf-8") as fh:
            yield parse_trace(fh, vehicle_id=f.stem)


def _honest(cfg, traces_dir=None) -> LabeledDataset:
    traces = _read_traces(traces_dir) if traces_dir else _synthetic_traces(cfg)
    return build_honest(traces, cfg["days"], seed=cfg["soc_seed"], max_speed_mph=cfg["max_speed_mph"])


def _train_config(cfg, epochs=None) -> TrainConfig:
    return TrainConfig(
        learning_rate=cfg["learning_rate"], batch_size=cfg["batch_size"],
        epochs=cfg["epochs"] if epochs is None else epochs, loss=cfg["loss"],
        dropout_rate=cfg["dropout"], max_norm=cfg["max_norm"], init=cfg["init"],
        optimizer=cfg["optimizer"], seed=cfg["train_seed"],
    )


def _fit_valid(cfg, data: LabeledDataset):
    """Carve the validation slice used for epoch selection off a training set."""
    return split(data, 1.0 - cfg["valid_fraction"], seed=cfg["train_seed"])


def _write_text(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _counts(data: LabeledDataset) -> str:
    lying = int(data.is_lying.sum())
    return f"{len(data)} rows ({len(data) - lying} honest, {lying} lying)"


# ---------------------------------------------------------------- commands


def cmd_gen_traces(cfg, args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for trace in _synthetic_traces(cfg):
        (out / f"{trace.vehicle_id}.txt").write_text(serialize_trace(trace), encoding="utf-8")
    log.info("wrote %d traces of %d days to %s", cfg["evs"], cfg["days"], out)


def cmd_ingest(cfg, args):
    honest = _honest(cfg, args.traces)
    write_csv(honest, args.out)
    log.info("honest set: %s; %d depleted days", _counts(honest),
             honest.provenance.get("depleted_days", 0))


def cmd_build_dataset(cfg, args):
    honest = read_csv(args.honest) if args.honest else _honest(cfg, args.traces)
    if honest.is_lying.any():
        raise ValueError(f"{args.honest}: build-dataset expects honest rows only")
    malicious = build_malicious(honest, seed=cfg["attack_seed"])
    write_csv(LabeledDataset.concat([honest, malicious]), args.out)
    log.info("honest %d, malicious %d", len(honest), len(malicious))


def cmd_balance(cfg, args):
    data = read_csv(args.input)
    params = AdasynParams(k=cfg["adasyn_k"], xi=cfg["adasyn_xi"],
                          ratio_threshold=cfg["adasyn_threshold"], seed=cfg["adasyn_seed"])
    balanced, report = balance_dataset(data, params)
    write_csv(balanced, args.out)
    log.info("imbalance ratio %.4f, G=%g, %d synthetic rows%s; result %s", report.ratio,
             report.G, len(report.synthetic), " (degenerate)" if report.degenerate else "",
             _counts(balanced))


def cmd_split(cfg, args):
    data = read_csv(args.input)
    tr, te = split(data, cfg["train_fraction"], seed=cfg["split_seed"])
    write_csv(tr, args.train)
    write_csv(te, args.test)
    log.info("train %s; test %s", _counts(tr), _counts(te))


def cmd_train(cfg, args):
    data = read_csv(args.train)
    fit, valid = _fit_valid(cfg, data)
    arch = Architecture(cfg["model"], cfg["layers"], cfg["units"], cfg["activation"])
    model, history = train(arch, fit, valid, _train_config(cfg))
    checkpoint.save(model, args.out)
    if args.history:
        lines = ["epoch,train_loss,dr,fa,acc,hd"]
        lines += [f"{r.epoch},{r.train_loss:.6f},{r.dr:.6f},{r.fa:.6f},{r.acc:.6f},{r.hd:.6f}"
                  for r in history.epochs]
        _write_text(args.history, "\n".join(lines) + "\n")
    log.info("best validation epoch %d", history.best_epoch)


def cmd_evaluate(cfg, args):
    model = checkpoint.load(args.model)
    data = read_csv(args.test)
    scores = model.predict_proba(data.features)[:, 0]
    points, auc = roc_auc(scores, data.is_lying)
    m = safe_metrics(confusion(data.is_lying, predict_labels(model, data.features)), auc)
    name = args.name or Path(args.model).stem
    _write_text(args.out, METRICS_HEADER + "\n" + metrics_row(name, m) + "\n")
    if args.roc:
        _write_text(args.roc, roc_csv(points))


def cmd_tune(cfg, args):
    data = read_csv(args.train)
    fit, valid = _fit_valid(cfg, data)
    base = _train_config(cfg, epochs=cfg["ga_epochs"])

    def fitness(chromosome) -> Objectives:
        model, _ = train(chromosome, fit, valid, base, kind=cfg["model"])
        m = safe_metrics(confusion(valid.is_lying, predict_labels(model, valid.features)))
        # a detector that never flags anything has no defined DR; score it as useless
        dr = 0.0 if math.isnan(m.dr) else m.dr
        fa = 1.0 if math.isnan(m.fa) else m.fa
        log.info("%s -> DR %.4f FA %.4f", chromosome, dr, fa)
        return Objectives(dr, fa)

    ga = GaConfig(population_size=cfg["ga_population"], generations=cfg["ga_generations"],
                  crossover_rate=cfg["ga_crossover"], mutation_rate=cfg["ga_mutation"],
                  seed=cfg["ga_seed"])
    result = evolve(ga, None, fitness)
    _write_text(args.out, archive_csv(result.archive))
    log.info("%d distinct chromosomes evaluated", result.evaluations)


def cmd_simulate_impact(cfg, args):
    base = ImpactConfig(n_evs=cfg["fleet"], capacity=cfg["capacity"], n_slots=cfg["slots"],
                        epsilon=cfg["epsilon"], seed=cfg["impact_seed"])
    lines = [SWEEP_HEADER]
    for beta in parse_values(cfg["beta"], float):
        for n_liars in parse_values(cfg["liars"], int):
            c = replace(base, n_liars=n_liars, beta=beta)
            lines.append(sweep_row(c, run_impact(c)))
    _write_text(args.out, "\n".join(lines) + "\n")


def cmd_report(cfg, args):
    rows = ["source,name,metric,value"]
    for path in args.impact or []:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != SWEEP_HEADER.split(","):
                raise ValueError(f"{path}: not an impact sweep CSV")
            for rec in reader:
                name = f"liars={rec['n_liars']};beta={rec['beta']};capacity={rec['capacity']}"
                for key in ("p_honest", "p_liar", "avg_unused"):
                    rows.append(f"impact,{name},{key},{rec[key]}")
    for path in args.metrics or []:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != METRICS_HEADER.split(","):
                raise ValueError(f"{path}: not a metrics CSV")
            for rec in reader:
                for key in METRICS_HEADER.split(",")[1:]:
                    rows.append(f"detector,{rec['model']},{key},{rec[key]}")
    if len(rows) == 1:
        raise ValueError("report needs at least one --impact or --metrics file")
    _write_text(args.out, "\n".join(rows) + "\n")


# ---------------------------------------------------------------- parser

COMMANDS = {
    "gen-traces": (cmd_gen_traces, "write synthetic GPS traces, one file per vehicle"),
    "ingest": (cmd_ingest, "turn a trace directory into the honest SoC dataset"),
    "build-dataset": (cmd_build_dataset, "honest rows plus four attacked copies of each"),
    "balance": (cmd_balance, "ADASYN-oversample the minority class"),
    "split": (cmd_split, "stratified train/test split"),
    "train": (cmd_train, "train an MLP or GRU detector"),
    "evaluate": (cmd_evaluate, "metrics and ROC of a checkpoint on a dataset"),
    "tune": (cmd_tune, "NSGA-II hyperparameter search"),
    "simulate-impact": (cmd_simulate_impact, "coordinator simulation with lying EVs"),
    "report": (cmd_report, "join impact and detector CSVs into one summary"),
}

# convenience flags: flag -> config key
SHORTCUTS = {
    "gen-traces": ("evs", "days", "seed"),
    "ingest": ("days", "seed"),
    "build-dataset": ("evs", "days", "seed"),
    "balance": ("seed",),
    "split": ("seed", "train_fraction"),
    "train": ("seed", "model", "layers", "units", "activation", "epochs"),
    "evaluate": ("seed",),
    "tune": ("seed", "model", "ga_population", "ga_generations", "ga_epochs"),
    "simulate-impact": ("liars", "beta", "capacity", "seed", "fleet", "slots"),
    "report": ("seed",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lyingev", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        for key in SHORTCUTS[name]:
            p.add_argument("--" + key.replace("_", "-"), dest="cfg_" + key, metavar=key.upper())
        if name == "gen-traces":
            p.add_argument("--out", required=True, help="output directory")
        elif name == "ingest":
            p.add_argument("--traces", required=True, help="directory of *.txt traces")
            p.add_argument("--out", required=True)
        elif name == "build-dataset":
            src = p.add_mutually_exclusive_group()
            src.add_argument("--traces", help="trace directory (default: synthesise traces)")
            src.add_argument("--honest", help="honest dataset CSV from ingest")
            p.add_argument("--out", required=True)
        elif name in ("balance", "split"):
            p.add_argument("--in", dest="input", required=True)
            if name == "balance":
                p.add_argument("--out", required=True)
            else:
                p.add_argument("--train", required=True)
                p.add_argument("--test", required=True)
        elif name == "train":
            p.add_argument("--train", required=True, help="training CSV")
            p.add_argument("--out", required=True, help="checkpoint path")
            p.add_argument("--history", help="per-epoch history CSV")
        elif name == "evaluate":
            p.add_argument("--model", required=True)
            p.add_argument("--test", required=True)
            p.add_argument("--out", help="metrics CSV (default stdout)")
            p.add_argument("--roc", help="ROC curve CSV")
            p.add_argument("--name", help="model name in the metrics row")
        elif name == "tune":
            p.add_argument("--train", required=True)
            p.add_argument("--out", help="Pareto archive CSV (default stdout)")
        elif name == "simulate-impact":
            p.add_argument("--out", help="sweep CSV (default stdout)")
        elif name == "report":
            p.add_argument("--impact", action="append", help="impact sweep CSV")
            p.add_argument("--metrics", action="append", help="metrics CSV")
            p.add_argument("--out", help="summary CSV (default stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        file_values = read_config_file(args.config) if args.config else {}
        overrides = {}
        for item in args.set:
            if "=" not in item:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides[k.strip()] = v.strip()
        for key, value in vars(args).items():
            if key.startswith("cfg_") and value is not None:
                overrides[key[4:]] = value
        cfg = resolve_config(file_values, overrides)
        sys.stderr.write(f"# lyingev {args.command} resolved config\n" + format_config(cfg))
        COMMANDS[args.command][0](cfg, args)
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"lyingev {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
