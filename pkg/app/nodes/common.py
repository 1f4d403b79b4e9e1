"""
Node Helpers

Banner logging and error capture shared by the compute nodes.
"""

import functools
import logging

from app.core.errors import WishartRiskError

logger = logging.getLogger("app.nodes")


def banner(title: str) -> None:
    logger.info("=" * 50)
    logger.info(title)
    logger.info("=" * 50)


def guarded(node):
    """
    Run a compute node, capturing package errors into the state.

    The failure lands in 'error' / 'exit_code' so the pipeline can route to
    the failure report instead of emitting an artifact.
    """

    @functools.wraps(node)
    def wrapper(state: dict) -> dict:
        try:
            return node(state)
        except WishartRiskError as exc:
            logger.info("❌ %s failed: %s", node.__name__, exc)
            state["error"] = str(exc)
            state["exit_code"] = exc.exit_code
            return state

    return wrapper
