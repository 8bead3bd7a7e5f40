"""Deterministic word enumeration over a generating list.

Candidate conjugators are drawn from words in the ambient generators, shortest
first and lexicographic by generator index within a length.  Labels are
dot-separated generator indices ("" is the empty word), so a certificate can
be replayed against the generator list it was built from.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .exact import RationalMatrix


@dataclass(frozen=True)
class Word:
    label: str
    matrix: RationalMatrix

    def indices(self):
        return [] if not self.label else [int(t) for t in self.label.split(".")]


def evaluate_label(label: str, omega: Sequence[RationalMatrix], n: int) -> RationalMatrix:
    out = RationalMatrix.identity(n)
    if label:
        for t in label.split("."):
            out = out @ omega[int(t)]
    return out


def word_stream(
    omega: Sequence[RationalMatrix],
    max_len: int,
    include_identity: bool = True,
    dedupe: bool = True,
    max_words: int | None = None,
) -> Iterator[Word]:
    """Breadth-first words over omega.

    With dedupe on, a word whose matrix already appeared is dropped along
    with its whole subtree; extensions of the earlier witness cover them.
    """
    n = omega[0].n
    ident = RationalMatrix.identity(n)
    seen = {ident}
    emitted = 0
    if include_identity:
        yield Word("", ident)
        emitted += 1
        if max_words is not None and emitted >= max_words:
            return
    level = [("", ident)]
    for _ in range(max_len):
        nxt = []
        for lab, mat in level:
            for idx, g in enumerate(omega):
                m2 = mat @ g
                if dedupe:
                    if m2 in seen:
                        continue
                    seen.add(m2)
                lab2 = f"{lab}.{idx}" if lab else str(idx)
                nxt.append((lab2, m2))
                yield Word(lab2, m2)
                emitted += 1
                if max_words is not None and emitted >= max_words:
                    return
        if not nxt:
            return
        level = nxt
