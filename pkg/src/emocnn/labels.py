"""Canonical emotion classes and label parsing."""
from __future__ import annotations

from enum import IntEnum


class EmotionLabel(IntEnum):
    """The five dialogue emotion classes, in fixed index order."""

    POSITIVE = 0
    NEGATIVE = 1
    WONDERING = 2
    NEUTRAL = 3
    MEANINGLESS = 4


LABEL_NAMES = tuple(label.name.lower() for label in EmotionLabel)
N_CLASSES = len(LABEL_NAMES)

_BY_NAME = {name: EmotionLabel(i) for i, name in enumerate(LABEL_NAMES)}


def parse_label(token: str) -> EmotionLabel:
    """Map a canonical lowercase label string to its EmotionLabel."""
    try:
        return _BY_NAME[token]
    except KeyError:
        raise ValueError(
            f"unknown label {token!r}; expected one of: {', '.join(LABEL_NAMES)}"
        ) from None
