"""Run every experiment config in configs/ and re-draw the plots.

    python scripts/reproduce.py [--only fig2 fig5] [--workers 4]
"""
import argparse
import sys
import time
from pathlib import Path

from lattice_homog.cli import main as cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
ORDER = ("constant", "fig1", "fig3", "fig4", "fig5", "fig2_smoke", "fig2")


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--only", nargs="*", default=list(ORDER))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    status = 0
    for name in args.only:
        start = time.perf_counter()
        code = cli(["run", "--config", str(CONFIGS / f"{name}.yaml"), "--workers", str(args.workers)])
        print(f"{name}: exit {code} in {time.perf_counter() - start:.0f}s")
        status |= code
    return status


if __name__ == "__main__":
    sys.exit(main())
