"""Command line entry point; a thin shell over the pipeline."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .pipeline import PipelineConfig, run_pipeline


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imagined-goals",
        description="Imagine a goal image for a scene, localize it, and place the object.")
    parser.add_argument("--scene", required=True, help="scene JSON file")
    parser.add_argument("--out", required=True, help="output directory for artifacts")
    parser.add_argument("--backend", choices=("mock", "http"), default="mock",
                        help="goal image generator")
    parser.add_argument("--backend-url", default=None, help="generator base URL (http backend)")
    parser.add_argument("--detector", choices=("mock", "http"), default="mock",
                        help="object detector")
    parser.add_argument("--detector-url", default=None, help="detector base URL (http detector)")
    parser.add_argument("--seed", type=int, default=0, help="generation seed")
    parser.add_argument("--batch", type=int, default=4, help="candidates per round")
    parser.add_argument("--max-rounds", type=int, default=1,
                        help="generation rounds before giving up")
    parser.add_argument("--timeout-secs", type=float, default=120.0,
                        help="HTTP backend timeout")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = PipelineConfig(
            scene_path=args.scene, out_dir=args.out,
            backend=args.backend, backend_url=args.backend_url,
            detector=args.detector, detector_url=args.detector_url,
            seed=args.seed, batch=args.batch, max_rounds=args.max_rounds,
            timeout_secs=args.timeout_secs)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    manifest = run_pipeline(config)
    if manifest.exit_code == 0:
        goal = manifest.goal["position"]
        print(f"placed {manifest.task} goal at "
              f"({goal[0]:.4f}, {goal[1]:.4f}, {goal[2]:.4f}); artifacts in {args.out}")
    elif manifest.exit_code == 2:
        print("no valid goal candidate; see manifest.json for verdicts", file=sys.stderr)
    else:
        for err in manifest.errors:
            print(f"error in {err['stage']}: {err['error']}", file=sys.stderr)
    return manifest.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
