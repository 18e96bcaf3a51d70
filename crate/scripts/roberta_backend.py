#!/usr/bin/env python3
"""Transformer fine-tuning backend speaking the `nludiag-backend/1` protocol.

Reads the header, training records and label-free evaluation records from
stdin, fine-tunes a sequence classifier, and writes one prediction per
evaluation record to stdout. Needs `torch` and `transformers`.

    nludiag run --backend "cmd:python3 scripts/roberta_backend.py"
"""

import argparse
import json
import random
import sys

PROTOCOL = "nludiag-backend/1"


def read_input():
    lines = iter(sys.stdin)
    header = json.loads(next(lines))
    if header.get("protocol") != PROTOCOL:
        raise SystemExit(f"unsupported protocol {header.get('protocol')!r}")
    train = [json.loads(next(lines)) for _ in range(header["train_count"])]
    evals = [json.loads(next(lines)) for _ in range(header["eval_count"])]
    return header, train, evals


def texts(records, fields):
    cols = [[r.get(f) or "" for r in records] for f in fields]
    return cols if len(cols) == 2 else [cols[0], None]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--model", default="roberta-base")
    ap.add_argument("--max-length", type=int, default=128)
    args = ap.parse_args()

    import numpy as np
    import torch
    from torch.utils.data import DataLoader
    from transformers import AutoModelForSequenceClassification, AutoTokenizer, get_linear_schedule_with_warmup

    header, train, evals = read_input()
    hp = header["hyperparams"]
    kind = header["label_kind"]
    regression = kind == "REGRESSION_0_5"
    num_labels = 1 if regression else {"BINARY": 2, "MULTICLASS_3": 3}[kind]

    random.seed(hp["seed"])
    np.random.seed(hp["seed"])
    torch.manual_seed(hp["seed"])
    device = "cuda" if torch.cuda.is_available() else "cpu"

    tok = AutoTokenizer.from_pretrained(args.model)
    model = AutoModelForSequenceClassification.from_pretrained(args.model, num_labels=num_labels).to(device)

    def encode(records):
        a, b = texts(records, header["text_fields"])
        return tok(a, b, truncation=True, max_length=args.max_length, padding="max_length", return_tensors="pt")

    enc = encode(train)
    labels = torch.tensor([float(r[header["label_field"]]) for r in train])
    if not regression:
        labels = labels.long()
    rows = list(range(len(train)))
    loader = DataLoader(rows, batch_size=hp["batch_size"], shuffle=True)
    opt = torch.optim.AdamW(model.parameters(), lr=hp["learning_rate"])
    sched = get_linear_schedule_with_warmup(opt, 0, hp["epochs"] * len(loader))

    model.train()
    for _ in range(hp["epochs"]):
        for idx in loader:
            batch = {k: v[idx].to(device) for k, v in enc.items()}
            out = model(**batch, labels=labels[idx].to(device))
            out.loss.backward()
            opt.step()
            sched.step()
            opt.zero_grad()

    model.eval()
    enc = encode(evals)
    preds = []
    with torch.no_grad():
        for start in range(0, len(evals), 128):
            batch = {k: v[start : start + 128].to(device) for k, v in enc.items()}
            logits = model(**batch).logits
            if regression:
                preds.extend(logits.squeeze(-1).clamp(0, 5).tolist())
            else:
                preds.extend(logits.argmax(-1).tolist())
    for p in preds:
        print(json.dumps({"prediction": p}))


if __name__ == "__main__":
    main()
