"""
Config Parser Node

Turns argv (plus an optional JSON config file) into a fully resolved,
validated RunConfig. Every downstream domain constraint is checked here so
that bad input fails before any computation starts.
"""

import argparse
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from app.core.cone import ConeElement, Partition
from app.core.errors import DomainError, WishartRiskError
from app.core.montecarlo import McConfig
from app.core.priors import PriorKind, canonical_hyperparams, check_proper, hyper_s_from_matrix
from app.core.regions import GridSpec
from app.core.specfun import ConeSpec
from app.utils.matrix_io import encode_matrix, load_matrix
from app.utils.settings import get_settings

logger = logging.getLogger(__name__)

COMMANDS = ("priors", "partitions", "risk", "asympt", "scan", "vregion", "mc", "sample")

DEFAULT_ASYMPT_MUS = "10,20,50,100,200,500,1000"
DEFAULT_N_OUTER = 200_000
DEFAULT_N_INNER = 4
DEFAULT_N_DRAWS = 1000

# Flags whose values may start with a minus sign.
VECTOR_FLAGS = ("--t", "--grid", "--mu-list")
_NUMERIC = re.compile(r"^[-−]\.?\d")


# --- CONFIG ---
@dataclass
class RunConfig:
    """Resolved run configuration; `to_dict` is echoed into every artifact."""

    command: str
    cone: ConeSpec
    partition: Optional[Partition] = None
    k: Optional[int] = None
    mu: Optional[float] = None
    nu: Optional[float] = None
    mu_list: tuple = ()
    t: Optional[tuple] = None
    t_source: Optional[str] = None
    xi: Optional[ConeElement] = None
    s: Optional[tuple] = None
    grid: Optional[GridSpec] = None
    mc: Optional[McConfig] = None
    n_draws: Optional[int] = None
    threads: int = 1
    output: Optional[str] = None
    fmt: str = "json"

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "d": self.cone.d,
            "r": self.cone.r,
            "n": self.cone.n,
        }
        if self.partition is not None:
            out["partition"] = list(self.partition.blocks)
        if self.k is not None:
            out["k"] = self.k
        for name in ("mu", "nu", "t_source", "n_draws"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.mu_list:
            out["mu_list"] = list(self.mu_list)
        if self.t is not None:
            out["t"] = list(self.t)
        if self.xi is not None:
            out["xi"] = encode_matrix(self.xi)
        if self.s is not None:
            out["s"] = [encode_matrix(block) for block in self.s]
        if self.grid is not None:
            out["grid"] = self.grid.to_dict()
        if self.mc is not None:
            out["seed"] = self.mc.seed
            out["n_outer"] = self.mc.n_outer
            out["n_inner"] = self.mc.n_inner
            out["chunk_size"] = self.mc.chunk_size
        return out


# --- ARGPARSE ---
class _Parser(argparse.ArgumentParser):
    """ArgumentParser that raises DomainError instead of exiting."""

    def error(self, message):
        raise DomainError(message)


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file supplying defaults for long flags")
    sub.add_argument("--d", type=int, default=1, help="Peirce invariant: 1 real, 2 complex")
    sub.add_argument("--r", type=int, help="rank of the cone")
    sub.add_argument("--threads", type=int, help="worker threads (default from WISHART_RISK_THREADS)")
    sub.add_argument("-o", "--output", help="output file (default stdout)")
    sub.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wishart_risk", description="Exact and Monte Carlo KL prediction risks for Wishart models")
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)
    parser.commands = {}

    priors = subs.add_parser("priors", help="canonical hyperparameters t_J, t_C, t_R")
    _common(priors)
    parser.commands["priors"] = priors
    priors.add_argument("--partition")
    priors.add_argument("--format", dest="fmt", choices=("table", "json"), default="table")

    partitions = subs.add_parser("partitions", help="canonical risks for every partition of r")
    _common(partitions)
    parser.commands["partitions"] = partitions
    partitions.add_argument("--mu", type=float)
    partitions.add_argument("--nu", type=float)
    partitions.add_argument("--format", dest="fmt", choices=("table", "csv"), default="table")

    risk = subs.add_parser("risk", help="exact risk report (JSON)")
    _common(risk)
    parser.commands["risk"] = risk
    risk.add_argument("--partition")
    risk.add_argument("--mu", type=float)
    risk.add_argument("--nu", type=float)
    risk.add_argument("--t", default="jeffreys", help="prior kind or comma-separated vector")

    asympt = subs.add_parser("asympt", help="exact vs expanded normalized risk over a mu sweep (CSV)")
    _common(asympt)
    parser.commands["asympt"] = asympt
    asympt.add_argument("--partition")
    asympt.add_argument("--nu", type=float)
    asympt.add_argument("--mu-list", default=DEFAULT_ASYMPT_MUS)
    asympt.add_argument("--t", help="prior kind or vector (default: all three kinds)")

    scan = subs.add_parser("scan", help="NRD grid for a two-block partition (CSV)")
    _common(scan)
    parser.commands["scan"] = scan
    scan.add_argument("--k", type=int)
    scan.add_argument("--mu", type=float)
    scan.add_argument("--nu", type=float)
    scan.add_argument("--grid")

    vregion = subs.add_parser("vregion", help="intersection of dominance regions over a mu list (CSV)")
    _common(vregion)
    parser.commands["vregion"] = vregion
    vregion.add_argument("--k", type=int)
    vregion.add_argument("--nu", type=float)
    vregion.add_argument("--mu-list")
    vregion.add_argument("--grid")

    mc = subs.add_parser("mc", help="Monte Carlo risk estimate vs exact value (JSON)")
    _common(mc)
    parser.commands["mc"] = mc
    mc.add_argument("--partition")
    mc.add_argument("--mu", type=float)
    mc.add_argument("--nu", type=float)
    mc.add_argument("--t", default="jeffreys")
    mc.add_argument("--xi", help="JSON matrix file for the true parameter (default identity)")
    mc.add_argument("--s", help="JSON matrix file; s^(i) are its principal blocks (default 0)")
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--n-outer", type=int, default=DEFAULT_N_OUTER)
    mc.add_argument("--n-inner", type=int, default=DEFAULT_N_INNER)

    sample = subs.add_parser("sample", help="Wishart draws (CSV)")
    _common(sample)
    parser.commands["sample"] = sample
    sample.add_argument("--mu", type=float)
    sample.add_argument("--xi")
    sample.add_argument("--seed", type=int, default=0)
    sample.add_argument("--n-draws", type=int, default=DEFAULT_N_DRAWS)

    return parser


def _load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        values = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise DomainError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise DomainError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(values, dict):
        raise DomainError("config file must hold a JSON object")
    return values


def _apply_file_defaults(parser: argparse.ArgumentParser, command: str, values: dict) -> None:
    sub = parser.commands[command]
    known = set(vars(sub.parse_args([])))
    unknown = sorted(set(values) - known - {"config", "command"})
    if unknown:
        raise DomainError(f"unknown keys in config file: {', '.join(unknown)}")
    sub.set_defaults(**{key: value for key, value in values.items() if key in known})


# --- RESOLUTION HELPERS ---
def _floats(text, name: str) -> tuple:
    if isinstance(text, (list, tuple)):
        items = text
    else:
        items = [item for item in str(text).replace("−", "-").split(",") if item.strip()]
    try:
        values = tuple(float(item) for item in items)
    except ValueError:
        raise DomainError(f"{name} must be comma-separated numbers (got {text!r})")
    if not values:
        raise DomainError(f"{name} must not be empty")
    return values


def join_vector_values(argv: list) -> list:
    """Rewrite `--grid -2.5:0:9,...` as `--grid=-2.5:0:9,...` so argparse does not read the value as a flag."""
    out = []
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg in VECTOR_FLAGS and i + 1 < len(argv) and _NUMERIC.match(argv[i + 1]):
            out.append(f"{arg}={argv[i + 1]}")
            i += 2
            continue
        out.append(arg)
        i += 1
    return out


def _require(args, *names: str) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise DomainError(f"--{name.replace('_', '-')} is required for {args.command}")


def _partition(args, cone: ConeSpec) -> Partition:
    if args.partition is None:
        return Partition(cone, (1,) * cone.r)
    if isinstance(args.partition, (list, tuple)):
        return Partition(cone, tuple(args.partition))
    return Partition.parse(cone, str(args.partition))


def _hyper_t(text, p: Partition) -> tuple:
    """Named prior kind or explicit vector; returns (t, source)."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text), "explicit"
    try:
        values = _floats(text, "--t")
    except DomainError:
        kind = PriorKind.parse(str(text))
        return tuple(canonical_hyperparams(p, kind).tolist()), kind.value
    if len(values) != p.h:
        raise DomainError(f"--t needs {p.h} components for partition {p.label()} (got {len(values)})")
    return values, "explicit"


def _shape(cone: ConeSpec, value: float, name: str) -> float:
    cone.check_shape(value, name)
    return float(value)


# --- NODE ---
def parse_and_validate(argv: list, config_path: Optional[str] = None) -> RunConfig:
    """
    Parse command-line arguments into a validated RunConfig.

    Args:
        argv: Arguments without the program name
        config_path: Optional JSON defaults file (also accepted as --config)

    Returns:
        Fully resolved RunConfig

    Raises:
        DomainError: on any invalid flag or violated constraint
    """
    parser = build_parser()
    argv = join_vector_values(list(argv))
    if not argv or argv[0] not in COMMANDS:
        raise DomainError(f"first argument must be a subcommand: {', '.join(COMMANDS)}")

    pre = _Parser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[1:])
    _apply_file_defaults(parser, argv[0], _load_config_file(known.config or config_path))
    args = parser.parse_args(argv)

    settings = get_settings()
    _require(args, "r")
    cone = ConeSpec(d=args.d, r=args.r)
    threads = args.threads if args.threads is not None else settings.threads
    if threads < 1:
        raise DomainError(f"--threads must be positive (got {threads})")
    cfg = RunConfig(command=args.command, cone=cone, threads=threads, output=args.output)
    if getattr(args, "mu", None) is not None:
        _shape(cone, args.mu, "mu")

    if args.command == "priors":
        cfg.partition = _partition(args, cone)
        cfg.fmt = args.fmt

    elif args.command == "partitions":
        _require(args, "mu", "nu")
        cfg.mu = _shape(cone, args.mu, "mu")
        cfg.nu = _shape(cone, args.nu, "nu")
        cfg.fmt = args.fmt

    elif args.command == "risk":
        _require(args, "mu", "nu")
        cfg.partition = _partition(args, cone)
        cfg.mu = _shape(cone, args.mu, "mu")
        cfg.nu = _shape(cone, args.nu, "nu")
        cfg.t, cfg.t_source = _hyper_t(args.t, cfg.partition)
        check_proper(cfg.partition, cfg.t, cfg.mu)

    elif args.command == "asympt":
        _require(args, "nu")
        cfg.partition = _partition(args, cone)
        cfg.nu = _shape(cone, args.nu, "nu")
        cfg.mu_list = tuple(_shape(cone, m, "mu") for m in _floats(args.mu_list, "--mu-list"))
        if args.t is not None:
            cfg.t, cfg.t_source = _hyper_t(args.t, cfg.partition)
            for m in cfg.mu_list:
                check_proper(cfg.partition, cfg.t, m)
        cfg.fmt = "csv"

    elif args.command in ("scan", "vregion"):
        _require(args, "k", "nu", "grid")
        cfg.partition = Partition.split(cone, args.k)
        cfg.k = args.k
        cfg.nu = _shape(cone, args.nu, "nu")
        cfg.grid = GridSpec.parse(args.grid) if isinstance(args.grid, str) else GridSpec(*args.grid)
        if args.command == "scan":
            _require(args, "mu")
            cfg.mu = _shape(cone, args.mu, "mu")
        else:
            _require(args, "mu_list")
            cfg.mu_list = tuple(_shape(cone, m, "mu") for m in _floats(args.mu_list, "--mu-list"))
        cfg.fmt = "csv"

    elif args.command == "mc":
        _require(args, "mu", "nu")
        cfg.partition = _partition(args, cone)
        cfg.mu = _shape(cone, args.mu, "mu")
        cfg.nu = _shape(cone, args.nu, "nu")
        cfg.t, cfg.t_source = _hyper_t(args.t, cfg.partition)
        check_proper(cfg.partition, cfg.t, cfg.mu)
        cfg.xi = _matrix_or_identity(args.xi, cone)
        cfg.xi.cholesky()
        if args.s is not None:
            cfg.s = hyper_s_from_matrix(cfg.partition, load_matrix(args.s, cone.d))
        cfg.mc = McConfig(args.seed, args.n_outer, args.n_inner, settings.chunk_size)

    elif args.command == "sample":
        _require(args, "mu")
        cfg.mu = _shape(cone, args.mu, "mu")
        cfg.xi = _matrix_or_identity(args.xi, cone)
        cfg.xi.cholesky()
        cfg.mc = McConfig(args.seed, 1, 1, settings.chunk_size)
        if int(args.n_draws) != args.n_draws or args.n_draws < 1:
            raise DomainError(f"--n-draws must be a positive integer (got {args.n_draws})")
        cfg.n_draws = int(args.n_draws)
        cfg.fmt = "csv"

    logger.debug("resolved config: %s", cfg.to_dict())
    return cfg


def _matrix_or_identity(path: Optional[str], cone: ConeSpec) -> ConeElement:
    if path is None:
        return ConeElement.identity(cone)
    xi = load_matrix(path, cone.d)
    if xi.rank != cone.r:
        raise DomainError(f"matrix in {path} has rank {xi.rank}, expected r = {cone.r}")
    return xi


def parse_config(state: dict) -> dict:
    """
    Parse argv held in the state.

    Args:
        state: Pipeline state with 'argv' (or an already resolved 'config')

    Returns:
        Updated state with 'config', or 'error' and 'exit_code' on failure
    """
    if state.get("config") is not None:
        return state
    try:
        state["config"] = parse_and_validate(state.get("argv", []))
    except WishartRiskError as exc:
        state["error"] = str(exc)
        state["exit_code"] = exc.exit_code
    return state


def verbosity(argv: list) -> int:
    """Number of -v flags in argv (needed before parsing to set up logging)."""
    count = 0
    for arg in argv:
        if arg in ("-v", "--verbose"):
            count += 1
        elif arg.startswith("-v") and set(arg[1:]) == {"v"}:
            count += len(arg) - 1
    return count


# Test independently
if __name__ == "__main__":
    cfg = parse_and_validate(["risk", "--d", "1", "--r", "2", "--partition", "1,1", "--mu", "1", "--nu", "1", "--t", "reference"])
    print(json.dumps(cfg.to_dict(), indent=2))
    try:
        parse_and_validate(["mc", "--mu", "0.4", "--r", "2", "--d", "1"])
    except DomainError as exc:
        print(f"❌ {exc}")
