"""
Priors Table Node

Canonical hyperparameters per block (`priors`) and canonical risks for every
ordered partition of r (`partitions`).
"""

import logging

import pandas as pd
from tabulate import tabulate

from app.core.cone import Partition
from app.core.priors import PriorKind, canonical_hyperparams, enumerate_partitions
from app.core.risk import exact_risk, minimize_risk
from app.nodes.common import banner, guarded

logger = logging.getLogger(__name__)


def priors_frame(p: Partition) -> pd.DataFrame:
    """One row per block: sizes, dimensions and t_J, t_C, t_R."""
    t = {kind: canonical_hyperparams(p, kind) for kind in PriorKind}
    rows = []
    for i in range(1, p.h + 1):
        rows.append(
            {
                "i": i,
                "k": p.k(i),
                "r_i": p.rank(i),
                "n_i": p.dim(i),
                "m_i": p.block_dim(i),
                "t_J": t[PriorKind.JEFFREYS][i - 1],
                "t_C": t[PriorKind.REFERENCE][i - 1],
                "t_R": t[PriorKind.RIGHT_INVARIANT][i - 1],
            }
        )
    return pd.DataFrame(rows)


def partitions_frame(cone, mu: float, nu: float) -> pd.DataFrame:
    """Canonical risks for each ordered partition of r."""
    rows = []
    for blocks in enumerate_partitions(cone.r):
        p = Partition(cone, blocks)
        totals = {kind: exact_risk(p, canonical_hyperparams(p, kind), mu, nu).total for kind in PriorKind}
        argmin = minimize_risk(p, mu, nu)
        rows.append(
            {
                "partition": p.label(),
                "R_J": totals[PriorKind.JEFFREYS],
                "R_C": totals[PriorKind.REFERENCE],
                "R_R": totals[PriorKind.RIGHT_INVARIANT],
                "NR_R": mu / nu * totals[PriorKind.RIGHT_INVARIANT],
                "argmin_gap": float(abs(argmin - canonical_hyperparams(p, PriorKind.RIGHT_INVARIANT)).max()),
            }
        )
    return pd.DataFrame(rows)


@guarded
def build_priors_table(state: dict) -> dict:
    """
    Tabulate the canonical hyperparameters of the configured partition.

    Args:
        state: Pipeline state with 'config'

    Returns:
        Updated state with 'payload' and 'fmt'
    """
    cfg = state["config"]
    banner(f"📐 PRIORS d={cfg.cone.d} r={cfg.cone.r} partition={cfg.partition.label()}")
    frame = priors_frame(cfg.partition)

    if cfg.fmt == "json":
        state["payload"] = {
            "config": cfg.to_dict(),
            "blocks": frame[["i", "k", "r_i", "n_i", "m_i"]].to_dict(orient="records"),
            "t_J": frame["t_J"].tolist(),
            "t_C": frame["t_C"].tolist(),
            "t_R": frame["t_R"].tolist(),
        }
    else:
        state["payload"] = tabulate(frame, headers="keys", tablefmt="pipe", showindex=False, floatfmt="g")
    state["fmt"] = cfg.fmt
    return state


@guarded
def build_partitions_table(state: dict) -> dict:
    """Canonical risks for every partition of r at the configured (mu, nu)."""
    cfg = state["config"]
    banner(f"🧩 PARTITIONS of r={cfg.cone.r} at mu={cfg.mu:g} nu={cfg.nu:g}")
    frame = partitions_frame(cfg.cone, cfg.mu, cfg.nu)
    logger.info("✅ %d partitions evaluated", len(frame))

    if cfg.fmt == "csv":
        state["payload"] = frame
        state["metadata"] = cfg.to_dict()
    else:
        state["payload"] = tabulate(frame, headers="keys", tablefmt="pipe", showindex=False, floatfmt=".10g")
    state["fmt"] = cfg.fmt
    return state


# Test independently
if __name__ == "__main__":
    from app.core.specfun import ConeSpec

    print(tabulate(priors_frame(Partition(ConeSpec(d=1, r=3), (1, 2))), headers="keys", tablefmt="pipe", showindex=False))
    print()
    print(tabulate(partitions_frame(ConeSpec(d=1, r=3), 2.0, 1.0), headers="keys", tablefmt="pipe", showindex=False))
