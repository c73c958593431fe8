"""Command-line front end: configuration, layout runs, benchmarking.

Exit codes: 0 success, 1 usage, 2 I/O, 3 input format, 4 internal.
Reported timings cover the layout phase only, not parsing or metrics.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import tempfile
import time
import tracemalloc
from dataclasses import dataclass

from .graph import Graph, ParseError, parse_edge_list, parse_matrix_market
from .metrics import compute_metrics
from .optimizer import OptimizerParams, layout_graph
from .output import SvgStyle, write_coords, write_svg
from .similarity import SimilarityParams

logger = logging.getLogger("drgraph")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_FORMAT = 3
EXIT_INTERNAL = 4


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Everything one layout run needs; round-trips through a plain-text
    "key = value" file. Command-line flags override file values."""

    input: str = ""
    format: str = "auto"          # auto | edgelist | mtx
    output: str = ""              # empty: coords go to stdout
    out_format: str = "coords"    # coords | svg | both
    k: int = 1
    perplexity: float | str = "auto"
    neg_samples: int = 5
    gamma: float = 0.1
    b: int = 2
    iters: int = 400
    rho: float = 0.8
    min_size: int = 16
    lr: float = 1.0
    seed: int = 0
    threads: int = 1
    metrics: bool = False
    k_eval: int = 2
    svg_edge_cap: int = 600_000

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cfg = cls()
        valid = {f.name: f for f in dataclasses.fields(cls)}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"config line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in valid:
                raise UsageError(f"config line {lineno}: unknown key {key!r}")
            setattr(cfg, key, _coerce(key, value))
        return cfg


def _coerce(key: str, value: str):
    if key in ("input", "format", "output", "out_format"):
        return value
    if key == "metrics":
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise UsageError(f"boolean expected for {key}, got {value!r}")
    if key == "perplexity":
        if value == "auto":
            return "auto"
        return float(value)
    if key in ("gamma", "rho", "lr"):
        return float(value)
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"integer expected for {key}, got {value!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_arg_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="drgraph",
                description="Multi-level sampled-gradient graph layout. "
                            "Benchmark timings cover the layout phase only, "
                            "excluding parsing and metrics.")
    p.add_argument("--input", help="graph file (edge list or MatrixMarket)")
    p.add_argument("--format", choices=["auto", "edgelist", "mtx"])
    p.add_argument("--output", help="output path; omit to print coordinates")
    p.add_argument("--out-format", dest="out_format",
                   choices=["coords", "svg", "both"])
    p.add_argument("--k", type=int, help="neighborhood hop bound (default 1)")
    p.add_argument("--perplexity", help="target perplexity or 'auto'")
    p.add_argument("--neg-samples", dest="neg_samples", type=int,
                   help="negative samples per step (default 5)")
    p.add_argument("--gamma", type=float, help="repulsion weight (default 0.1)")
    p.add_argument("--b", type=int, choices=[1, 2, 3],
                   help="kernel shape: 1 favors tight clusters, 3 uniform "
                        "edge lengths (grids), 2 in between (default)")
    p.add_argument("--iters", type=int, help="epochs per level (default 400)")
    p.add_argument("--rho", type=float, help="coarsening stop ratio (default 0.8)")
    p.add_argument("--min-size", dest="min_size", type=int,
                   help="coarsest graph size floor (default 16)")
    p.add_argument("--lr", type=float, help="initial learning rate (default 1.0)")
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--threads", type=int,
                   help="optimizer threads; falls back to DRGRAPH_THREADS")
    p.add_argument("--metrics", action="store_const", const=True,
                   help="print the layout quality report")
    p.add_argument("--k-eval", dest="k_eval", type=int,
                   help="hop bound of the neighborhood metric (default 2)")
    p.add_argument("--svg-edge-cap", dest="svg_edge_cap", type=int,
                   help="sample edges above this count in SVG (default 600000)")
    p.add_argument("--config", help="read settings from a config file")
    p.add_argument("--bench", nargs="+", metavar="CONFIG",
                   help="benchmark the graphs of the given config files, "
                        "emit CSV")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """defaults < config file < DRGRAPH_THREADS < explicit flags."""
    cfg = RunConfig()
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = RunConfig.from_text(fh.read())
        except OSError as exc:
            raise _IOFailure(str(exc)) from exc
    env_threads = os.environ.get("DRGRAPH_THREADS")
    if env_threads is not None:
        try:
            cfg.threads = int(env_threads)
        except ValueError:
            raise UsageError(f"DRGRAPH_THREADS={env_threads!r} is not an integer")
    for f in dataclasses.fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            if f.name == "perplexity" and value != "auto":
                try:
                    value = float(value)
                except ValueError:
                    raise UsageError(
                        f"--perplexity must be a number or 'auto', got {value!r}"
                    ) from None
            setattr(cfg, f.name, value)
    return cfg


class _IOFailure(Exception):
    pass


def _sniff_format(path: str, text_head: str) -> str:
    if path.endswith(".mtx") or text_head.lstrip().startswith("%%MatrixMarket"):
        return "mtx"
    return "edgelist"


def load_graph(cfg: RunConfig) -> Graph:
    try:
        with open(cfg.input, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _IOFailure(str(exc)) from exc
    fmt = cfg.format
    if fmt == "auto":
        fmt = _sniff_format(cfg.input, text[:128])
    if fmt == "mtx":
        return parse_matrix_market(text)
    return parse_edge_list(text)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".drgraph-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def run(cfg: RunConfig) -> int:
    """Parse, lay out, write outputs, optionally report metrics."""
    if not cfg.input:
        raise UsageError("--input is required")
    if cfg.out_format in ("svg", "both") and not cfg.output:
        raise UsageError("--output is required for SVG output")

    g = load_graph(cfg)
    logger.info("loaded %s", g)

    try:
        sim = SimilarityParams(k=cfg.k, perplexity=cfg.perplexity)
        opt = OptimizerParams(neg_samples=cfg.neg_samples, gamma=cfg.gamma,
                              iters=cfg.iters, b=cfg.b, lr0=cfg.lr,
                              seed=cfg.seed, threads=cfg.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    t0 = time.perf_counter()
    layout = layout_graph(g, sim, opt, rho=cfg.rho, min_size=cfg.min_size)
    logger.info("layout finished in %.3f s", time.perf_counter() - t0)

    coords_text = write_coords(layout.positions)
    if cfg.out_format in ("coords", "both"):
        if cfg.output:
            _atomic_write(cfg.output, coords_text)
        else:
            sys.stdout.write(coords_text)
    if cfg.out_format in ("svg", "both"):
        style = SvgStyle(edge_cap=cfg.svg_edge_cap)
        svg_path = cfg.output if cfg.out_format == "svg" else cfg.output + ".svg"
        _atomic_write(svg_path, write_svg(g, layout.positions, style, cfg.seed))

    if cfg.metrics:
        report = compute_metrics(g, layout.positions, k_eval=cfg.k_eval)
        sys.stdout.write(report.to_text())
        if cfg.output:
            _atomic_write(cfg.output + ".metrics.json",
                          json.dumps(report.to_dict(), indent=2) + "\n")
    return EXIT_OK


def bench(configs: list[RunConfig]) -> str:
    """CSV of layout wall time and peak traced memory per config."""
    rows = ["input,nodes,edges,layout_seconds,peak_mb"]
    for cfg in configs:
        g = load_graph(cfg)
        sim = SimilarityParams(k=cfg.k, perplexity=cfg.perplexity)
        opt = OptimizerParams(neg_samples=cfg.neg_samples, gamma=cfg.gamma,
                              iters=cfg.iters, b=cfg.b, lr0=cfg.lr,
                              seed=cfg.seed, threads=cfg.threads)
        tracemalloc.start()
        t0 = time.perf_counter()
        layout_graph(g, sim, opt, rho=cfg.rho, min_size=cfg.min_size)
        elapsed = time.perf_counter() - t0
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        rows.append(f"{cfg.input},{g.node_count},{g.edge_count},"
                    f"{elapsed:.6f},{peak / 1e6:.3f}")
    return "\n".join(rows) + "\n"


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="drgraph: %(message)s")
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
        if args.bench:
            configs = []
            for path in args.bench:
                try:
                    with open(path, "r", encoding="utf-8") as fh:
                        configs.append(RunConfig.from_text(fh.read()))
                except OSError as exc:
                    raise _IOFailure(str(exc)) from exc
            sys.stdout.write(bench(configs))
            return EXIT_OK
        return run(resolve_config(args))
    except UsageError as exc:
        print(f"drgraph: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _IOFailure as exc:
        print(f"drgraph: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ParseError as exc:
        print(f"drgraph: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"drgraph: io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - defensive
        print(f"drgraph: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
