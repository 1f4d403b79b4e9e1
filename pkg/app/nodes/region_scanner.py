"""
Region Scanner Node

NRD grids (`scan`) and finite-intersection dominance regions (`vregion`)
for two-block partitions.
"""

import logging

from app.core.regions import conjecture_diagnostic, dominance_summary, scan_nrd, v_estimate
from app.nodes.common import banner, guarded

logger = logging.getLogger(__name__)


@guarded
def scan_region(state: dict) -> dict:
    """
    Evaluate NRD on the configured grid.

    Args:
        state: Pipeline state with 'config'

    Returns:
        Updated state with a CSV payload and metadata for the sidecar
    """
    cfg = state["config"]
    banner(f"🗺️ SCAN k={cfg.k} mu={cfg.mu:g} nu={cfg.nu:g}")
    result = scan_nrd(cfg.cone, cfg.k, cfg.mu, cfg.nu, cfg.grid, workers=cfg.threads)
    logger.info("✅ %d members on %d points", result.member_count, result.nrd_values.size)

    state["payload"] = result.to_frame()
    state["metadata"] = {
        "config": cfg.to_dict(),
        "summary": dominance_summary(cfg.cone, cfg.k, cfg.mu, cfg.nu),
    }
    state["fmt"] = "csv"
    return state


@guarded
def estimate_v_region(state: dict) -> dict:
    """Intersect dominance regions over the configured mu list."""
    cfg = state["config"]
    banner(f"🗺️ V-REGION k={cfg.k} nu={cfg.nu:g} mu={list(cfg.mu_list)}")
    result = v_estimate(cfg.cone, cfg.k, cfg.nu, cfg.mu_list, cfg.grid, workers=cfg.threads)
    diagnostic = conjecture_diagnostic(cfg.cone, cfg.k, result)
    logger.info(
        "✅ %d members; %d only in estimate, %d only in rectangle ∩ oval",
        result.member_count, diagnostic["only_in_estimate"], diagnostic["only_in_reference"],
    )

    state["payload"] = result.to_frame()
    state["metadata"] = {"config": cfg.to_dict(), "diagnostic": diagnostic}
    state["fmt"] = "csv"
    return state
