"""Whole-video train/val/test partitioning at a fixed ratio."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MIN_SOURCES = 5


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    ratio: tuple[int, int, int]
    seed: int

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(
                {
                    "train": list(self.train),
                    "val": list(self.val),
                    "test": list(self.test),
                    "ratio": list(self.ratio),
                    "seed": self.seed,
                },
                indent=2,
            )
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "DatasetSplit":
        d = json.loads(Path(path).read_text())
        return cls(
            tuple(d["train"]), tuple(d["val"]), tuple(d["test"]),
            tuple(d["ratio"]), int(d["seed"]),
        )


def _largest_remainder(n: int, ratio: tuple[int, ...]) -> list[int]:
    total = sum(ratio)
    exact = [n * r / total for r in ratio]
    counts = [int(e) for e in exact]
    # hand out leftovers by descending fractional part; ties to earlier parts
    remainders = sorted(
        range(len(ratio)), key=lambda i: (-(exact[i] - counts[i]), i)
    )
    for i in range(n - sum(counts)):
        counts[remainders[i % len(ratio)]] += 1
    return counts


def split_dataset(
    source_ids,
    ratio: tuple[int, int, int] = (6, 2, 2),
    seed: int = 0,
) -> DatasetSplit:
    """Partition source ids into train/val/test by whole video, never by frame.

    Counts follow largest-remainder rounding of the ratio; the shuffle is
    deterministic in the seed and independent of input order.
    """
    ids = sorted(str(s) for s in source_ids)
    if len(ids) != len(set(ids)):
        raise SplitError("duplicate source ids")
    if len(ids) < MIN_SOURCES:
        raise SplitError(f"need at least {MIN_SOURCES} sources, got {len(ids)}")
    counts = _largest_remainder(len(ids), ratio)
    if any(c == 0 for c in counts):
        raise SplitError(
            f"ratio {ratio} allocates zero sources to a split for n={len(ids)}; "
            "use a smaller ratio denominator"
        )
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(ids))
    shuffled = [ids[i] for i in order]
    train = tuple(shuffled[: counts[0]])
    val = tuple(shuffled[counts[0] : counts[0] + counts[1]])
    test = tuple(shuffled[counts[0] + counts[1] :])
    return DatasetSplit(train=train, val=val, test=test, ratio=tuple(ratio), seed=seed)
