#!/usr/bin/env python3
"""Convert NLTK averaged-perceptron tagger weights to nludiag's JSON format.

Accepts either the JSON directory layout used by recent NLTK releases
(`<prefix>.weights.json`, `<prefix>.tagdict.json`, `<prefix>.classes.json`)
or the older single pickle holding `(weights, tagdict, classes)`.

    python scripts/convert_nltk_tagger.py ~/nltk_data/taggers/averaged_perceptron_tagger_eng tagger.json
"""

import argparse
import json
import pickle
from pathlib import Path

FORMAT_VERSION = "nludiag-averaged-perceptron/1"


def load_json_dir(path):
    def one(suffix):
        matches = sorted(path.glob(f"*{suffix}"))
        if not matches:
            raise SystemExit(f"no *{suffix} in {path}")
        return json.loads(matches[0].read_text())

    return one(".weights.json"), one(".tagdict.json"), one(".classes.json")


def load_pickle(path):
    with path.open("rb") as f:
        weights, tagdict, classes = pickle.load(f)
    return weights, tagdict, classes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("source", type=Path, help="NLTK tagger directory or pickle")
    ap.add_argument("output", type=Path)
    ap.add_argument("--model-id", default="nltk-averaged-perceptron")
    args = ap.parse_args()

    if args.source.is_dir():
        weights, tagdict, classes = load_json_dir(args.source)
    else:
        weights, tagdict, classes = load_pickle(args.source)

    model = {
        "format_version": FORMAT_VERSION,
        "model_id": args.model_id,
        "tagset": "penn",
        "classes": sorted(classes),
        "tagdict": dict(sorted(tagdict.items())),
        "weights": {feat: {c: float(w) for c, w in ws.items()} for feat, ws in sorted(weights.items())},
    }
    args.output.write_text(json.dumps(model))
    print(f"{len(model['weights'])} features, {len(model['classes'])} classes -> {args.output}")


if __name__ == "__main__":
    main()
