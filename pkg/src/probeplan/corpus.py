"""Instance corpora: the shipped 38-instance set and seeded random generation."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from math import comb
from pathlib import Path
from typing import Optional, Sequence

from .catalog import data_path, load_catalog
from .errors import GenerationExhausted


def containment_pairs(instances: Sequence[Sequence[str]]) -> list[tuple[int, int]]:
    """Pairs (i, j), i != j, where instance i's name set is a subset of instance j's."""
    sets = [frozenset(x) for x in instances]
    return [(i, j) for i, a in enumerate(sets) for j, b in enumerate(sets) if i != j and a <= b]


@dataclass(frozen=True)
class InstanceCorpus:
    instances: tuple[tuple[str, ...], ...]

    def containment_pairs(self) -> list[tuple[int, int]]:
        return containment_pairs(self.instances)

    def validate(self) -> None:
        """Raise if any instance's names are a subset of another's."""
        bad = self.containment_pairs()
        if bad:
            i, j = bad[0]
            raise ValueError(f"instance {i + 1} is contained in instance {j + 1}")

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def to_json(self) -> dict:
        return {"instances": [list(x) for x in self.instances]}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")


def load_corpus(path: Optional[str | Path] = None, *, strict: bool = False) -> InstanceCorpus:
    """Read a corpus file; ``None`` gives the shipped 38 instances.

    The shipped set is kept verbatim, which includes three
    contained pairs (33 in 17, 34 and 38 in 30); ``strict`` rejects such files.
    """
    p = data_path("corpus.json") if path is None else Path(path)
    doc = json.loads(Path(p).read_text(encoding="utf-8"))
    rows = doc["instances"] if isinstance(doc, dict) else doc
    if not isinstance(rows, list) or not all(isinstance(r, list) and all(isinstance(n, str) for n in r) for r in rows):
        raise ValueError("a corpus is a list of name lists")
    corpus = InstanceCorpus(tuple(tuple(r) for r in rows))
    if strict:
        corpus.validate()
    return corpus


def antichain_capacity(vocabulary_size: int, min_objs: int, max_objs: int) -> int:
    """Upper bound on how many pairwise non-containing sets exist.

    Sperner's theorem bounds any antichain by the middle binomial; with a
    single allowed size the bound is that size's binomial.
    """
    if min_objs == max_objs:
        return comb(vocabulary_size, min_objs)
    return max(comb(vocabulary_size, k) for k in range(min_objs, max_objs + 1))


def gen_instances(count: int, min_objs: int = 3, max_objs: int = 7, seed: int = 0,
                  vocabulary: Optional[Sequence[str]] = None, max_rejections: int = 20000) -> InstanceCorpus:
    """Sample ``count`` name sets, rejecting any that contains or is contained in an earlier one."""
    if count < 1:
        raise ValueError("count must be >= 1")
    vocab = list(vocabulary) if vocabulary is not None else load_catalog().names
    if not 1 <= min_objs <= max_objs <= len(vocab):
        raise ValueError(f"need 1 <= min_objs <= max_objs <= {len(vocab)}")
    cap = antichain_capacity(len(vocab), min_objs, max_objs)
    if count > cap:
        raise GenerationExhausted(f"at most {cap} pairwise non-containing instances exist, {count} requested")
    rng = random.Random(seed)
    chosen: list[frozenset[str]] = []
    out: list[tuple[str, ...]] = []
    rejections = 0
    while len(out) < count:
        k = rng.randint(min_objs, max_objs)
        names = rng.sample(vocab, k)
        s = frozenset(names)
        if any(s <= c or c <= s for c in chosen):
            rejections += 1
            if rejections > max_rejections:
                raise GenerationExhausted(f"gave up after {max_rejections} rejections with {len(out)} instances")
            continue
        chosen.append(s)
        out.append(tuple(names))
    corpus = InstanceCorpus(tuple(out))
    corpus.validate()
    return corpus
