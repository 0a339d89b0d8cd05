#!/usr/bin/env python3
"""Reference SplitMix64 and Fisher-Yates shuffle, written from the algorithm
description only. Writes tests/fixtures/golden/shuffle.json."""
import json
import pathlib

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def bounded(self, bound):
        limit = ((1 << 64) // bound) * bound
        while True:
            x = self.next()
            if x < limit:
                return x % bound


def permutation(n, seed):
    order = list(range(n))
    rng = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = rng.bounded(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def main():
    rng = SplitMix64(0)
    first = [rng.next() for _ in range(5)]
    assert first[0] == 0xE220A8397B1DCDAF
    cases = [(4, 42), (0, 1), (1, 9), (2, 0), (10, 7), (16, 1), (16, 2), (100, 123456789), (33, MASK)]
    golden = {
        "splitmix64_seed0_first5": [f"{v:016x}" for v in first],
        "splitmix64_seed42_first3": [f"{v:016x}" for v in (lambda r: [r.next() for _ in range(3)])(SplitMix64(42))],
        "permutations": [{"n": n, "seed": f"{s:016x}", "order": permutation(n, s)} for n, s in cases],
    }
    out = pathlib.Path(__file__).resolve().parents[1] / "fixtures" / "golden" / "shuffle.json"
    out.write_text(json.dumps(golden, indent=1) + "\n")
    print("n=4 seed=42 ->", permutation(4, 42))


if __name__ == "__main__":
    main()
