#!/usr/bin/env python3
"""Emit a seeded random instance as a JSON file for the CLI.

Example:

    python scripts/make_instance.py --seed 4 --out inst4.json --kinds attraction,table
"""

import argparse

from choicealloc import random_instance
from choicealloc.cli import dump_instance


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--kinds", default="attraction,mixture")
    ap.add_argument("--max-resources", type=int, default=3)
    ap.add_argument("--max-products", type=int, default=6)
    ap.add_argument("--max-types", type=int, default=3)
    args = ap.parse_args()

    inst = random_instance(
        args.seed,
        max_resources=args.max_resources,
        max_products=args.max_products,
        max_types=args.max_types,
        model_kinds=tuple(args.kinds.split(",")),
    )
    dump_instance(inst, args.out)
    print(f"wrote {args.out}: {inst.num_resources} resources, "
          f"{inst.num_products} products, {inst.num_types} types")


if __name__ == "__main__":
    main()
