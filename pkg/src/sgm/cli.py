"""Command-line interface: ``sgm <command> [options]``.

Exit codes: 0 success, 2 bad input, 3 no convergence, 4 internal error.
Every JSON report echoes the effective configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import io
from .distribution import JointTable, sample
from .errors import NotConverged, SGMError
from .estimation import DEFAULT_EPS, DEFAULT_MAX_CYCLES, check_restrictions, cyclical_mle
from .model import StratifiedGraph, derive_restrictions, dimension, graph_dimension, is_hierarchical, validate
from .scoring import ScoreCache, bic_score
from .search import exhaustive_strata, full_search, posterior_estimate, strata_search

log = logging.getLogger("sgm")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_INTERNAL = 0, 2, 3, 4


@dataclass
class RunConfig:
    command: str
    data: str | None = None
    model: str | None = None
    table: str | None = None
    eps: float = DEFAULT_EPS
    max_cycles: int = DEFAULT_MAX_CYCLES
    seed: int | None = None
    outer_iters: int = 200
    inner_iters: int | None = None
    revisit_iters: int = 0
    exhaustive: bool = False
    n: int = 1000
    smooth: float = 0.0
    prior: str = "graph"
    top: int = 10
    out: str | None = None

    def validate(self) -> None:
        if self.eps <= 0:
            raise ValueError("--eps must be positive")
        if self.command in ("search", "search-strata", "gen") and self.seed is None:
            raise ValueError(f"{self.command} needs --seed")
        if self.smooth < 0:
            raise ValueError("--smooth must be non-negative")


class InputError(Exception):
    pass


def _need(cfg: RunConfig, *fields: str) -> None:
    missing = [f"--{f.replace('_', '-')}" for f in fields if getattr(cfg, f) is None]
    if missing:
        raise InputError(f"{cfg.command} needs {', '.join(missing)}")


def _emit(cfg: RunConfig, payload: dict) -> None:
    payload = {"config": asdict(cfg), **payload}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_model(cfg: RunConfig) -> StratifiedGraph:
    sg = io.load_model(cfg.model)
    validate(sg)
    return sg


def _names(data) -> list[str]:
    return list(data.names)


def cmd_validate(cfg: RunConfig) -> int:
    _need(cfg, "model")
    sg = _load_model(cfg)
    rs = derive_restrictions(sg)
    _emit(cfg, {
        "valid": True,
        "dimension": dimension(sg),
        "graph_dimension": graph_dimension(sg.graph),
        "hierarchical": is_hierarchical(sg),
        "linear_restrictions": [
            [[v + 1 for v in subset] for subset in r.subsets()] for r in rs.linear
        ],
    })
    return EXIT_OK


def cmd_fit(cfg: RunConfig) -> int:
    _need(cfg, "data", "model")
    sg = _load_model(cfg)
    data = io.load_csv(cfg.data)
    p0 = data.empirical(cfg.smooth)
    try:
        fitted, report = cyclical_mle(p0, sg, cfg.eps, cfg.max_cycles, record_kl=False)
        status = EXIT_OK
    except NotConverged as exc:
        fitted, report, status = exc.table, exc.report, EXIT_NOT_CONVERGED
    payload = {"converged": report.converged, "report": report.as_dict(), "table": io.table_to_dict(fitted)}
    if fitted.is_positive():
        payload["restrictions"] = check_restrictions(fitted, sg, tol=1e-6).as_dict()
    else:
        payload["restrictions"] = None
    _emit(cfg, payload)
    return status


def cmd_score(cfg: RunConfig) -> int:
    _need(cfg, "data", "model")
    sg = _load_model(cfg)
    data = io.load_csv(cfg.data)
    score = bic_score(data, sg, cfg.eps, cfg.max_cycles, cfg.prior, cfg.smooth)
    _emit(cfg, {"n": data.n, "score": score.as_dict()})
    return EXIT_OK


def _write_search_outputs(cfg: RunConfig, trace, names) -> dict:
    posterior = posterior_estimate(trace)
    top = [
        {
            "model": io.model_to_dict(s.model),
            "score": s.score.as_dict(),
            "posterior": posterior[s.model.key()],
        }
        for s in trace.top(cfg.top)
    ]
    if cfg.out:
        stem = Path(cfg.out).with_suffix("")
        io.save_model(trace.best.model, f"{stem}.model.json")
        Path(f"{stem}.dot").write_text(io.export_dot(trace.best.model, names))
        with open(f"{stem}.trace.jsonl", "w") as fh:
            for rec in trace.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
    return {
        "iterations": trace.iterations,
        "distinct_states": len(trace.visited),
        "best": {"model": io.model_to_dict(trace.best.model), "score": trace.best.score.as_dict()},
        "top": top,
    }


def _cache(cfg: RunConfig, data) -> ScoreCache:
    return ScoreCache(data, cfg.eps, cfg.max_cycles, cfg.prior, cfg.smooth)


def cmd_search(cfg: RunConfig) -> int:
    _need(cfg, "data")
    data = io.load_csv(cfg.data)
    trace = full_search(_cache(cfg, data), cfg.outer_iters, cfg.inner_iters, cfg.seed, cfg.revisit_iters)
    _emit(cfg, _write_search_outputs(cfg, trace, _names(data)))
    return EXIT_OK


def cmd_search_strata(cfg: RunConfig) -> int:
    _need(cfg, "data", "model")
    graph = _load_model(cfg).graph
    data = io.load_csv(cfg.data)
    cache = _cache(cfg, data)
    if cfg.exhaustive:
        trace = exhaustive_strata(graph, cache)
    else:
        iters = cfg.inner_iters if cfg.inner_iters is not None else 200 * len(graph.edges)
        trace = strata_search(graph, cache, iters, cfg.seed)
    _emit(cfg, _write_search_outputs(cfg, trace, _names(data)))
    return EXIT_OK


def cmd_gen(cfg: RunConfig) -> int:
    _need(cfg, "table")
    table = io.load_table(cfg.table)
    payload = {}
    if cfg.model:
        sg = _load_model(cfg)
        if sg.d != table.d:
            raise InputError("model and table disagree on the number of variables")
        table, report = cyclical_mle(table, sg, cfg.eps, cfg.max_cycles, record_kl=False)
        payload["projection"] = report.as_dict()
    rows = sample(JointTable(table.d, table.probs / table.total), cfg.n, cfg.seed)
    names = [f"X{i + 1}" for i in range(table.d)]
    if cfg.out:
        io.write_csv(cfg.out, rows, names)
        stem = Path(cfg.out).with_suffix("")
        params = {"config": asdict(cfg), **payload, "table": io.table_to_dict(table)}
        Path(f"{stem}.params.json").write_text(json.dumps(params, indent=2, sort_keys=True) + "\n")
    else:
        io.write_csv("/dev/stdout", rows, names)
    return EXIT_OK


def cmd_export_dot(cfg: RunConfig) -> int:
    _need(cfg, "model")
    sg = _load_model(cfg)
    text = io.export_dot(sg)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "score": cmd_score,
    "search": cmd_search,
    "search-strata": cmd_search_strata,
    "gen": cmd_gen,
    "export-dot": cmd_export_dot,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgm", description="Stratified graphical log-linear models.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    # defaults are None so that a config file can fill the gaps
    parser.add_argument("--config", help="JSON file with option values; flags override it")
    parser.add_argument("--data", help="CSV file of 0/1 observations")
    parser.add_argument("--model", help="model JSON file")
    parser.add_argument("--table", help="probability or log-linear table JSON (for gen)")
    parser.add_argument("--eps", type=float)
    parser.add_argument("--max-cycles", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--outer-iters", type=int)
    parser.add_argument("--inner-iters", type=int)
    parser.add_argument("--revisit-iters", type=int)
    parser.add_argument("--exhaustive", action="store_true", default=None,
                        help="enumerate every strata set (search-strata)")
    parser.add_argument("-n", "--n", type=int, help="sample size (gen)")
    parser.add_argument("--smooth", type=float, help="pseudo-count added to every cell")
    parser.add_argument("--prior", choices=["graph", "strata"])
    parser.add_argument("--top", type=int)
    parser.add_argument("--out")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        loaded = json.loads(Path(args.config).read_text())
        known = set(RunConfig.__dataclass_fields__) - {"command"}
        unknown = set(loaded) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        values.update(loaded)
    for key in RunConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None and key != "command":
            values[key] = value
    cfg = RunConfig(command=args.command, **values)
    cfg.validate()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except NotConverged as exc:
        print(f"sgm: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (SGMError, InputError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"sgm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
