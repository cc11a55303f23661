"""Command-line entry point: ``egp partition|simulate|sigma-report``."""
import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from egp import _accel
from egp import io as egp_io
from egp.estimation import Design, EstimationError, monte_carlo_bias, rescale_factor, format_rescaled
from egp.graph import GraphLoadError, load_graph
from egp.outcomes import ModelError, OutcomeModel
from egp.partition import (
    ALGORITHMS,
    DesignError,
    DesignMeta,
    Partition,
    assign_alters_convex,
    assign_alters_linear,
    assign_alters_snc,
    build_partition,
    exposure_summary,
    randomize_egos,
)

log = logging.getLogger("egp")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    graph: str = None
    format: str = "edgelist"
    algorithm: str = "linear"
    q: float = 0.025
    theta: float = 0.0
    model: dict = field(default_factory=lambda: {"kind": "linear", "params": [1.0, 1.0, 1.0], "noise_sd": 1.0})
    reps: int = 1000
    seed: int = 0
    out: str = "egp_out"
    threads: int = 1
    max_iters: int = 20
    rescale_ci: bool = False
    per_rep_csv: bool = False

    def validate(self):
        if not self.graph:
            raise ConfigError("no graph path given")
        if not Path(self.graph).is_file():
            raise ConfigError(f"graph file {self.graph} does not exist")
        if self.format not in ("edgelist", "mtx"):
            raise ConfigError(f"format must be edgelist or mtx, got {self.format!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if not 0.0 < self.q < 1.0:
            raise ConfigError(f"q must lie in (0, 1), got {self.q}")
        if not self.theta >= 0.0:
            raise ConfigError(f"theta must be >= 0, got {self.theta}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        OutcomeModel.from_dict(self.model)
        return self

    def echo(self):
        """Configuration fields that determine results (excludes output dir and thread cap)."""
        d = asdict(self)
        d.pop("out")
        d.pop("threads")
        d["model"] = OutcomeModel.from_dict(self.model).to_dict()
        return d


def parse_model(text):
    """``kind:p1,p2,...`` or a JSON object."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    kind, _, rest = text.partition(":")
    params = [float(v) for v in rest.split(",") if v.strip()] if rest else []
    return {"kind": kind, "params": params}


def _id_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser():
    ap = argparse.ArgumentParser(prog="egp", description="Ego group partition experiment design.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("partition", "simulate", "sigma-report"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run config; flags override its fields")
        sp.add_argument("--graph")
        sp.add_argument("--format", choices=("edgelist", "mtx"))
        sp.add_argument("--algo", "--algorithm", dest="algorithm", choices=ALGORITHMS)
        sp.add_argument("--q", type=float)
        sp.add_argument("--theta", type=float)
        sp.add_argument("--model", type=parse_model, help="e.g. linear:1,1,1 or convex_exp:2,1,3")
        sp.add_argument("--noise-sd", type=float)
        sp.add_argument("--reps", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--max-iters", type=int)
        sp.add_argument("--rescale-ci", action="store_true", default=None)
        sp.add_argument("--per-rep-csv", action="store_true", default=None)
        sp.add_argument("--egos", type=_id_list, help="debug: comma-separated external ego ids")
        sp.add_argument("--ego-arms", type=_id_list, help="debug: 1/0 arm per --egos entry")
        sp.add_argument("--partition", help="partition.json for sigma-report")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args):
    cfg = RunConfig()
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if "report" in data:
            data.update(data.pop("report"))
        known = {f.name for f in fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, v)
    for name in ("graph", "format", "algorithm", "q", "theta", "model", "reps", "seed",
                 "out", "threads", "max_iters", "rescale_ci", "per_rep_csv"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    if args.noise_sd is not None:
        cfg.model = dict(cfg.model, noise_sd=args.noise_sd)
    cfg.q, cfg.theta = float(cfg.q), float(cfg.theta)
    cfg.reps, cfg.seed, cfg.threads = int(cfg.reps), int(cfg.seed), int(cfg.threads)
    try:
        return cfg.validate()
    except ModelError as exc:
        raise ConfigError(str(exc)) from None


def _load(cfg):
    g = load_graph(cfg.graph, cfg.format)
    for w in g.summary.warnings():
        log.warning("%s: %s", cfg.graph, w)
    return g


def _write(out_dir, name, text):
    path = out_dir / name
    path.write_text(text)
    log.info("wrote %s", path)
    return path


def _forced_partition(g, cfg, egos, arms):
    ids = g.index_of(egos)
    meta = DesignMeta(algorithm=cfg.algorithm, q=cfg.q, theta=cfg.theta, seed=cfg.seed)
    if arms is None:
        flags = np.zeros(g.n, dtype=bool)
        flags[ids] = True
        if cfg.algorithm == "snc":
            return assign_alters_snc(g, flags, cfg.seed, max_iters=cfg.max_iters, meta=meta)
        p = randomize_egos(flags, cfg.seed, meta)
    else:
        if len(arms) != len(ids):
            raise ConfigError("--ego-arms needs one entry per --egos id")
        if cfg.algorithm == "snc":
            raise ConfigError("--ego-arms cannot be combined with snc, which randomizes clusters")
        p = Partition.from_egos(g.n, ids, [a not in ("0", "C", "c") for a in arms], meta)
    if cfg.algorithm == "linear":
        return assign_alters_linear(g, p)
    return assign_alters_convex(g, p, cfg.theta)


def cmd_partition(cfg, egos=None, arms=None):
    g = _load(cfg)
    if egos:
        p = _forced_partition(g, cfg, egos, arms)
    else:
        p = build_partition(g, cfg.algorithm, cfg.q, cfg.seed, cfg.theta, cfg.max_iters)
    sig = exposure_summary(g, p)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return _write(out, "partition.json", egp_io.dumps(egp_io.partition_to_dict(g, p, sig)))


def cmd_simulate(cfg):
    g = _load(cfg)
    model = OutcomeModel.from_dict(cfg.model)
    design = Design(cfg.algorithm, cfg.q, cfg.theta, cfg.max_iters)
    _accel.set_threads(cfg.threads)
    t0 = time.perf_counter()
    rep = monte_carlo_bias(g, design, model, cfg.reps, cfg.seed, threads=cfg.threads)
    wall = time.perf_counter() - t0

    body = {"config": cfg.echo()}
    body.update(rep.to_dict())
    body["load_warnings"] = g.summary.warnings()
    if cfg.rescale_ci:
        widths = np.array([r.ci_high - r.ci_low for r in rep.per_rep])
        widths = widths[np.isfinite(widths)]
        if widths.size == 0:
            raise EstimationError("no finite confidence intervals to rescale by")
        mean_tau = float(np.mean([r.tau_hat for r in rep.per_rep]))
        factor = 1.0 / float(widths.mean())
        body["rescaled"] = {
            "factor": factor,
            "mean_tau_hat": mean_tau * factor,
            "true_tau": rep.true_tau * factor,
            "mean_bias": rep.mean_bias * factor,
            "bias_sd": rep.bias_sd * factor,
            "ci_half_width": 0.5,
            "formatted": format_rescaled(mean_tau * factor, 0.5),
        }
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = _write(out, "report.json", egp_io.dumps(body))
    if cfg.per_rep_csv:
        _write(out, "per_rep.csv", egp_io.records_csv(rep.per_rep))
    # timing and thread cap vary run to run, so they stay out of report.json
    _write(out, "run_meta.json", egp_io.dumps(
        {"wall_time": wall, "threads": cfg.threads, "backend": _accel.backend()}))
    return path


def cmd_sigma_report(cfg, partition_path=None):
    g = _load(cfg)
    out = Path(cfg.out)
    src = Path(partition_path) if partition_path else out / "partition.json"
    d = json.loads(src.read_text())
    if d["n"] != g.n or [str(x) for x in d["id_remap"]] != [str(x) for x in g.ids]:
        raise ConfigError(f"{src} was not built from {cfg.graph}")
    p = egp_io.partition_from_dict(d)
    sig = exposure_summary(g, p)
    out.mkdir(parents=True, exist_ok=True)
    _write(out, "sigma.csv", egp_io.sigma_csv(g, sig))
    return _write(out, "sigma.svg", egp_io.sigma_svg(sig, title=f"exposure by arm: {p.meta.tag}"))


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "partition":
            cmd_partition(cfg, args.egos, args.ego_arms)
        elif args.command == "simulate":
            cmd_simulate(cfg)
        else:
            cmd_sigma_report(cfg, args.partition)
    except (ConfigError, GraphLoadError, DesignError, EstimationError, ModelError, KeyError, OSError) as exc:
        print(f"egp {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
