"""
Risk Report Node

Exact risk report for one hyperparameter (`risk`) and the exact vs expanded
normalized-risk sweep (`asympt`).
"""

import logging

import pandas as pd

from app.core.priors import PriorKind, canonical_hyperparams
from app.core.risk import asympt_normalized_risk, exact_risk, lb_eigenvalue, minimize_risk
from app.nodes.common import banner, guarded

logger = logging.getLogger(__name__)


@guarded
def compute_risk(state: dict) -> dict:
    """
    Exact risk of the configured t.

    Args:
        state: Pipeline state with 'config'

    Returns:
        Updated state with a JSON payload holding the RiskReport
    """
    cfg = state["config"]
    p = cfg.partition
    banner(f"📊 RISK t={list(cfg.t)} ({cfg.t_source}) mu={cfg.mu:g} nu={cfg.nu:g}")

    report = exact_risk(p, cfg.t, cfg.mu, cfg.nu)
    payload = {"config": cfg.to_dict(), "report": report.to_dict()}
    payload["lb_eigenvalue"] = lb_eigenvalue(p, cfg.t)
    payload["nr_asympt"] = asympt_normalized_risk(p, cfg.t, cfg.mu, cfg.nu)
    payload["argmin"] = minimize_risk(p, cfg.mu, cfg.nu).tolist()
    payload["t_R"] = canonical_hyperparams(p, PriorKind.RIGHT_INVARIANT).tolist()
    logger.info("✅ total=%.10g nr=%.6g nrd=%.6g", report.total, report.nr, report.nrd)

    state["payload"] = payload
    state["fmt"] = "json"
    return state


def asympt_frame(p, nu: float, mu_list, hypers: dict) -> pd.DataFrame:
    """Exact NR, expanded NR and their gap for each (mu, prior) pair."""
    rows = []
    for mu in mu_list:
        for name, t in hypers.items():
            nr = exact_risk(p, t, mu, nu).nr
            approx = asympt_normalized_risk(p, t, mu, nu)
            rows.append({"mu": mu, "prior": name, "nr_exact": nr, "nr_asympt": approx, "gap": nr - approx})
    return pd.DataFrame(rows)


@guarded
def compute_asympt(state: dict) -> dict:
    """Sweep mu and compare exact and expanded normalized risks."""
    cfg = state["config"]
    p = cfg.partition
    banner(f"📈 ASYMPT partition={p.label()} nu={cfg.nu:g} over {len(cfg.mu_list)} mu values")

    if cfg.t is not None:
        hypers = {cfg.t_source: cfg.t}
    else:
        hypers = {kind.value: canonical_hyperparams(p, kind) for kind in PriorKind}
    state["payload"] = asympt_frame(p, cfg.nu, cfg.mu_list, hypers)
    state["metadata"] = cfg.to_dict()
    state["fmt"] = "csv"
    return state
