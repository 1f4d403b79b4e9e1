"""
Monte Carlo Runner Node

Seeded Monte Carlo risk estimates checked against the exact risk (`mc`)
and raw Wishart draws for external checks (`sample`).
"""

import logging
import math
from dataclasses import replace

import numpy as np
import pandas as pd

from app.core.montecarlo import chunk_rng, mc_conjugate_risk, mc_risk, sample_wishart_batch
from app.core.risk import exact_risk
from app.nodes.common import banner, guarded

logger = logging.getLogger(__name__)

REFERENCE_STREAM = 1


@guarded
def run_monte_carlo(state: dict) -> dict:
    """
    Estimate the risk by simulation and compare with its reference value.

    With s = 0 the reference is the exact risk. With a proper prior (s
    given) the reference is the conjugate-identity estimate drawn from an
    independent stream (stream 1 under the same seed) and the z-score uses
    both errors.

    Args:
        state: Pipeline state with 'config'

    Returns:
        Updated state with a JSON payload
    """
    cfg = state["config"]
    p = cfg.partition
    banner(f"🎲 MONTE CARLO seed={cfg.mc.seed} n_outer={cfg.mc.n_outer} n_inner={cfg.mc.n_inner}")

    estimate = mc_risk(p, cfg.s, cfg.t, cfg.mu, cfg.nu, cfg.xi, cfg.mc, workers=cfg.threads)
    payload = {
        "config": cfg.to_dict(),
        "estimate": estimate.mean,
        "std_error": estimate.std_error,
        "n_total": estimate.n_total,
    }
    if cfg.s is None:
        target = exact_risk(p, cfg.t, cfg.mu, cfg.nu).total
        payload.update(target=target, target_kind="exact", z_score=estimate.z_score(target))
    else:
        ref_cfg = replace(cfg.mc, stream=REFERENCE_STREAM)
        ref = mc_conjugate_risk(p, cfg.s, cfg.t, cfg.mu, cfg.nu, cfg.xi, ref_cfg, workers=cfg.threads)
        combined = math.hypot(estimate.std_error, ref.std_error)
        payload.update(
            target=ref.mean,
            target_std_error=ref.std_error,
            target_stream=REFERENCE_STREAM,
            target_kind="conjugate-identity",
            z_score=(estimate.mean - ref.mean) / combined if combined > 0 else 0.0,
        )
    logger.info("✅ estimate=%.6g ± %.3g target=%.6g z=%.2f", estimate.mean, estimate.std_error, payload["target"], payload["z_score"])

    state["payload"] = payload
    state["fmt"] = "json"
    return state


def draws_frame(draws: np.ndarray) -> pd.DataFrame:
    """Long format: draw,row,col,re,im."""
    n, r, _ = draws.shape
    idx_draw, idx_row, idx_col = np.meshgrid(np.arange(n), np.arange(r), np.arange(r), indexing="ij")
    return pd.DataFrame(
        {
            "draw": idx_draw.ravel(),
            "row": idx_row.ravel(),
            "col": idx_col.ravel(),
            "re": np.real(draws).ravel(),
            "im": np.imag(draws).ravel(),
        }
    )


@guarded
def draw_samples(state: dict) -> dict:
    """Draw Wishart matrices from the seeded stream of chunk 0."""
    cfg = state["config"]
    banner(f"🎲 SAMPLE {cfg.n_draws} draws mu={cfg.mu:g} seed={cfg.mc.seed}")
    draws = sample_wishart_batch(cfg.cone, cfg.mu, cfg.xi, cfg.n_draws, chunk_rng(cfg.mc.seed, 0))
    state["payload"] = draws_frame(draws)
    state["metadata"] = cfg.to_dict()
    state["fmt"] = "csv"
    return state
