"""Anti-degeneration phrase sampling for lore fallback lines.

Repeating one fixed phrase across a prompt invites degenerate output, so each
fallback line draws 2-4 distinct words from a small fixed set, in random
order.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

PHRASE_SET = ("folklore", "common sense", "mythology", "culture")


def render_word_list(words: tuple[str, ...]) -> str:
    """English list with a serial comma: "a and b", "a, b, and c"."""
    if len(words) == 1:
        return words[0]
    if len(words) == 2:
        return f"{words[0]} and {words[1]}"
    return ", ".join(words[:-1]) + f", and {words[-1]}"


@dataclass(frozen=True)
class PhraseSample:
    chosen: tuple[str, ...]

    def render(self) -> str:
        return render_word_list(self.chosen)


def sample_phrases(rng: random.Random) -> PhraseSample:
    """Draw a sample: size uniform over {2, 3, 4}, elements without
    replacement, order random."""
    size = rng.randint(2, 4)
    return PhraseSample(chosen=tuple(rng.sample(PHRASE_SET, size)))
