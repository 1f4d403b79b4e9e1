"""
Reporter Node

Renders the computed payload as JSON, CSV or a text table and writes it to
the configured output (stdout by default). CSV files get a
`<output>.meta.json` sidecar carrying the resolved configuration; CSV on
stdout prints the same metadata as one `# metadata:` line on stderr.
"""

import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)


def _plain(value):
    """json.dumps fallback for numpy scalars and arrays."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def to_json(payload) -> str:
    return json.dumps(payload, indent=2, default=_plain) + "\n"


def render(payload, fmt: str) -> str:
    """Render a payload in its artifact format."""
    if fmt == "json":
        return to_json(payload)
    if fmt == "csv":
        if not isinstance(payload, pd.DataFrame):
            raise TypeError("csv payload must be a DataFrame")
        return payload.to_csv(index=False, na_rep="nan", lineterminator="\n")
    return str(payload).rstrip("\n") + "\n"


def emit_artifact(state: dict) -> dict:
    """
    Write the artifact.

    Args:
        state: Pipeline state with 'config', 'payload', 'fmt' and optional 'metadata'

    Returns:
        Updated state with 'artifact' text and exit_code 0
    """
    cfg = state["config"]
    fmt = state.get("fmt", "json")
    text = render(state["payload"], fmt)
    metadata = state.get("metadata")

    if cfg.output and cfg.output != "-":
        path = Path(cfg.output)
        path.write_text(text)
        logger.info("✅ wrote %s (%d bytes)", path, len(text))
        if fmt == "csv":
            sidecar = path.with_name(path.name + ".meta.json")
            sidecar.write_text(to_json(metadata if metadata is not None else cfg.to_dict()))
            logger.info("✅ wrote %s", sidecar)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()
        if fmt == "csv":
            # CSV on stdout has no sidecar; its metadata (seed, mu list) goes to stderr
            meta = metadata if metadata is not None else cfg.to_dict()
            sys.stderr.write("# metadata: " + json.dumps(meta, default=_plain, sort_keys=True) + "\n")
            sys.stderr.flush()

    state["artifact"] = text
    state["exit_code"] = 0
    return state


def report_failure(state: dict) -> dict:
    """Log the captured error; the exit code was set where the error was caught."""
    error = state.get("error") or "unknown failure"
    logger.error("❌ %s", error)
    state["exit_code"] = state.get("exit_code") or 1
    return state
