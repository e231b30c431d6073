"""Dice-notation quantity expressions: parse, render, roll.

Grammar is deliberately small: `N`, `NdM`, `NdM+K`, `NdM-K` with a
case-insensitive `d`. Surrounding whitespace is ignored; internal whitespace
is a syntax error. Expressions whose minimum value would be negative are
rejected at parse time because quantities cannot be negative.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ParseError


@dataclass(frozen=True)
class DiceExpr:
    count: int = 0
    sides: int = 0
    modifier: int = 0
    constant: int | None = None

    @classmethod
    def dice(cls, count: int, sides: int, modifier: int = 0) -> "DiceExpr":
        return cls(count=count, sides=sides, modifier=modifier)

    @classmethod
    def const(cls, value: int) -> "DiceExpr":
        return cls(constant=value)

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    @property
    def min_value(self) -> int:
        if self.constant is not None:
            return self.constant
        return self.count + self.modifier

    @property
    def max_value(self) -> int:
        if self.constant is not None:
            return self.constant
        return self.count * self.sides + self.modifier

    def render(self) -> str:
        """Canonical text form; parse(render(e)) == e."""
        if self.constant is not None:
            return str(self.constant)
        text = f"{self.count}d{self.sides}"
        if self.modifier > 0:
            text += f"+{self.modifier}"
        elif self.modifier < 0:
            text += str(self.modifier)
        return text


def _scan_int(text: str, pos: int, expected: str) -> tuple[int, int]:
    start = pos
    while pos < len(text) and text[pos].isdigit():
        pos += 1
    if pos == start:
        found = repr(text[start]) if start < len(text) else "end of input"
        raise ParseError(f"found {found}", start, expected)
    return int(text[start:pos]), pos


def parse_dice(text: str) -> DiceExpr:
    """Parse a quantity expression, reporting errors with their byte offset."""
    if not text:
        raise ParseError("empty input", 0, "a number")

    end = len(text)
    pos = 0
    while pos < end and text[pos].isspace():
        pos += 1
    while end > pos and text[end - 1].isspace():
        end -= 1
    if pos == end:
        raise ParseError("blank input", pos, "a number")

    first, pos = _scan_int(text, pos, "a number")

    if pos == end:
        return DiceExpr.const(first)

    if text[pos] not in "dD":
        raise ParseError(f"found {text[pos]!r}", pos, "'d' or end of input")
    pos += 1
    sides, pos = _scan_int(text, pos, "die size after 'd'")

    modifier = 0
    if pos < end:
        sign = text[pos]
        if sign not in "+-":
            raise ParseError(f"found {sign!r}", pos, "'+', '-' or end of input")
        pos += 1
        magnitude, pos = _scan_int(text, pos, "modifier after sign")
        modifier = magnitude if sign == "+" else -magnitude

    if pos != end:
        raise ParseError(f"found {text[pos]!r}", pos, "end of input")

    if first < 1:
        raise ParseError("dice count must be >= 1", 0, "a positive count")
    if sides < 1:
        raise ParseError("die size must be >= 1", 0, "a positive die size")
    expr = DiceExpr.dice(first, sides, modifier)
    if expr.min_value < 0:
        raise ParseError(
            f"minimum value {expr.min_value} violates the non-negative quantity rule",
            0,
            "an expression whose minimum is >= 0",
        )
    return expr


def roll_dice(expr: DiceExpr, rng: random.Random) -> int:
    """Roll the expression; result is always within [min_value, max_value]."""
    if expr.constant is not None:
        return expr.constant
    return sum(rng.randint(1, expr.sides) for _ in range(expr.count)) + expr.modifier
