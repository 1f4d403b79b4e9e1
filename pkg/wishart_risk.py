"""
WishartRisk - command-line entry point
======================================

    python wishart_risk.py priors --d 1 --r 2 --partition 1,1
    python wishart_risk.py risk --d 1 --r 2 --partition 1,1 --mu 100 --nu 1 --t jeffreys
    python wishart_risk.py scan --d 1 --r 2 --k 1 --mu 100 --nu 1 --grid -2.5:0:200,-3:-0.5:200

Exit status: 0 success, 2 invalid arguments or domain violation, 3 numerical failure.
"""

import sys

from app.core.errors import WishartRiskError
from app.nodes.config_parser import verbosity
from app.pipeline import run
from app.utils.settings import configure_logging


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        configure_logging(verbosity(argv))
    except WishartRiskError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code
    return run(argv)["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
