#!/usr/bin/env python3
"""Masked-word predictor for `nludiag probe --predictor cmd:...`.

Reads one query per line containing a single `[MASK]`, writes the model's
top-1 whole-word answer per line. Needs `torch` and `transformers`.
"""

import argparse
import sys


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="roberta-base")
    args = ap.parse_args()

    from transformers import pipeline

    fill = pipeline("fill-mask", model=args.model, top_k=1)
    mask = fill.tokenizer.mask_token
    for line in sys.stdin:
        query = line.rstrip("\n").replace("[MASK]", mask)
        best = fill(query)[0]
        print(best["token_str"].strip())
        sys.stdout.flush()


if __name__ == "__main__":
    main()
