"""Entry point: ``python -m fwadapter --framework torch [--ops A,B,...]``."""

from __future__ import annotations

import argparse
import sys

from . import SUPPORTED_FRAMEWORKS
from .serve import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fw-adapter", description=__doc__)
    parser.add_argument("--framework", required=True, choices=SUPPORTED_FRAMEWORKS)
    parser.add_argument(
        "--ops",
        default=None,
        help="Comma-separated operator subset to advertise (testing hook).",
    )
    args = parser.parse_args(argv)

    from . import torch_ops

    capabilities = tuple(torch_ops.ALL_OPS)
    if args.ops:
        requested = tuple(t.strip() for t in args.ops.split(",") if t.strip())
        unknown = [t for t in requested if t not in torch_ops.ALL_OPS]
        if unknown:
            parser.error(f"unknown operators: {unknown}")
        capabilities = requested
    return serve(sys.stdin.buffer, sys.stdout.buffer, args.framework, capabilities)


if __name__ == "__main__":
    sys.exit(main())
