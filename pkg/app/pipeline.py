"""
WishartRisk - Prediction Risk Pipeline
======================================

Command-line runs flow through a small graph:

1. Parse and validate the arguments into a RunConfig
2. Route to the node of the chosen subcommand
3. Compute the payload (exact risks, scans, Monte Carlo, ...)
4. Emit the artifact, or report the failure with its exit code
"""

from typing import Literal, Optional, TypedDict

from langgraph.graph import END, START, StateGraph

from app.nodes import (
    build_partitions_table,
    build_priors_table,
    compute_asympt,
    compute_risk,
    draw_samples,
    emit_artifact,
    estimate_v_region,
    parse_config,
    report_failure,
    run_monte_carlo,
    scan_region,
)
from app.nodes.config_parser import RunConfig

COMPUTE_NODES = {
    "priors": build_priors_table,
    "partitions": build_partitions_table,
    "risk": compute_risk,
    "asympt": compute_asympt,
    "scan": scan_region,
    "vregion": estimate_v_region,
    "mc": run_monte_carlo,
    "sample": draw_samples,
}


# --- STATE DEFINITION ---
class RunState(TypedDict, total=False):
    """State passed between the nodes of one run."""

    # Input
    argv: list                  # Arguments without the program name
    config: Optional[RunConfig]  # Resolved configuration

    # Compute output
    payload: object             # dict (json), DataFrame (csv) or str (table)
    fmt: str                    # "json", "csv" or "table"
    metadata: Optional[dict]    # Sidecar metadata for CSV artifacts

    # Final output
    artifact: str               # Rendered artifact text
    error: str                  # Captured error message
    exit_code: int              # 0 ok, 2 domain/config, 3 numerical


# --- ROUTING FUNCTIONS ---
def route_command(state: RunState) -> str:
    """Send a parsed config to its compute node, a parse failure to the failure report."""
    if state.get("error") or state.get("config") is None:
        return "fail"
    return state["config"].command


def should_report(state: RunState) -> Literal["emit", "fail"]:
    return "fail" if state.get("error") else "emit"


# --- BUILD THE GRAPH ---
def create_pipeline():
    """
    Create the run graph.

    Flow:
    START -> parse -> (subcommand) -> compute -> emit -> END
               |                         |
               +---------> fail <--------+
    """
    workflow = StateGraph(RunState)

    workflow.add_node("parse", parse_config)
    for name, node in COMPUTE_NODES.items():
        workflow.add_node(name, node)
    workflow.add_node("emit", emit_artifact)
    workflow.add_node("fail", report_failure)

    workflow.add_edge(START, "parse")
    workflow.add_conditional_edges(
        "parse",
        route_command,
        {**{name: name for name in COMPUTE_NODES}, "fail": "fail"},
    )
    for name in COMPUTE_NODES:
        workflow.add_conditional_edges(name, should_report, {"emit": "emit", "fail": "fail"})

    workflow.add_edge("emit", END)
    workflow.add_edge("fail", END)

    return workflow.compile()


def _initial_state(argv: Optional[list] = None, config: Optional[RunConfig] = None) -> RunState:
    return {
        "argv": list(argv or []),
        "config": config,
        "payload": None,
        "fmt": "json",
        "metadata": None,
        "artifact": "",
        "error": "",
        "exit_code": 0,
    }


def run(argv: list) -> RunState:
    """
    Parse argv and execute the run.

    Args:
        argv: Arguments without the program name

    Returns:
        Final state; 'exit_code' is the process exit status
    """
    return create_pipeline().invoke(_initial_state(argv=argv))


def execute(cfg: RunConfig) -> RunState:
    """Execute an already validated configuration."""
    return create_pipeline().invoke(_initial_state(config=cfg))
