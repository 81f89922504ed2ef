#!/usr/bin/env python3
"""Generate a seeded planted-slot corpus for pipeline experiments.

Writes candidates.jsonl, vectors.jsonl, gold.json, and labels.json into
--out-dir.  Only this generation step consumes the seed; the pipeline
itself is deterministic.
"""

import argparse
from pathlib import Path

from ssikit.synth import make_planted_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", required=True)
    parser.add_argument("--seed", type=int, default=20240901)
    parser.add_argument("--n-slots", type=int, default=8)
    parser.add_argument("--per-slot", type=int, default=40)
    parser.add_argument("--n-outliers", type=int, default=40)
    parser.add_argument("--dim", type=int, default=12)
    parser.add_argument("--sigma", type=float, default=0.02)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus = make_planted_corpus(
        n_slots=args.n_slots,
        per_slot=args.per_slot,
        n_outliers=args.n_outliers,
        dim=args.dim,
        sigma=args.sigma,
        seed=args.seed,
    )
    corpus.write(
        out / "candidates.jsonl",
        out / "vectors.jsonl",
        out / "gold.json",
        out / "labels.json",
    )
    print(f"wrote {len(corpus.records)} candidates to {out}")


if __name__ == "__main__":
    main()
