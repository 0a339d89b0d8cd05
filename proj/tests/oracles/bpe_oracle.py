#!/usr/bin/env python3
"""Naive byte-level BPE: scan every adjacent pair, merge the single
lowest-rank leftmost pair, repeat. Writes random (table, text) cases with
their expected ids to tests/fixtures/golden/bpe_cases.json (pieces and texts
hex-encoded so arbitrary bytes survive JSON)."""
import json
import pathlib
import random


def encode(pieces, merges, text, unk):
    ids = {p: i for i, p in enumerate(pieces)}
    rank = {pair: r for r, pair in enumerate(merges)}
    seq = [bytes([b]) for b in text]
    while True:
        best = None
        for k in range(len(seq) - 1):
            r = rank.get((seq[k], seq[k + 1]))
            if r is not None and (best is None or r < best[0]):
                best = (r, k)
        if best is None:
            break
        k = best[1]
        seq[k:k + 2] = [seq[k] + seq[k + 1]]
    return [ids.get(p, unk) for p in seq]


def random_table(rng):
    alphabet = rng.sample([b"a", b"b", b"c", b"d", b" ", b"\xc3", b"\xa9"], rng.randint(2, 6))
    pieces = list(alphabet)
    merges = []
    for _ in range(rng.randint(0, 12)):
        left, right = rng.choice(pieces), rng.choice(pieces)
        if (left, right) in merges or len(left + right) > 8:
            continue
        merges.append((left, right))
        if left + right not in pieces:
            pieces.append(left + right)
    rng.shuffle(pieces)
    return pieces, merges


def main():
    rng = random.Random(20240601)
    cases = []
    # The hand example: vocab {a:0,b:1,ab:2}, merges [(a,b)].
    for text in (b"abab", b"aba"):
        cases.append(([b"a", b"b", b"ab"], [(b"a", b"b")], text))
    while len(cases) < 300:
        pieces, merges = random_table(rng)
        letters = [b"a", b"b", b"c", b"d", b"e", b" ", b"\xc3", b"\xa9"]
        text = b"".join(rng.choice(letters) for _ in range(rng.randint(0, 64)))
        cases.append((pieces, merges, text))
    out = []
    for pieces, merges, text in cases:
        unk = len(pieces)  # implicit "<unk>" appended after the table
        out.append({
            "pieces": [p.hex() for p in pieces],
            "merges": [[l.hex(), r.hex()] for l, r in merges],
            "text": text.hex(),
            "ids": encode(pieces, merges, text, unk),
        })
    assert out[0]["ids"] == [2, 2] and out[1]["ids"] == [2, 0]
    path = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "golden" / "bpe_cases.json"
    path.write_text(json.dumps(out) + "\n")
    print(f"{len(out)} cases")


if __name__ == "__main__":
    main()
