"""Bounded merit-history window for nonmonotone (GLL-style) acceptance tests.

The window retains the merit values of the last ``m + 1`` iterates.  The
acceptance rule compares a candidate against the window maximum minus a
forcing decrement; the recorded argmax index breaks ties toward the largest
iteration index so it is a single-valued function of the history.
"""

from __future__ import annotations

import math
from collections import deque

from .errors import InvalidInputError, LogicError

__all__ = ["MemoryWindow"]


class MemoryWindow:
    """Sliding window over ``(iteration index, merit value)`` pairs.

    Single-owner mutable structure: push indices must be contiguous
    (0, 1, 2, ...) and entries older than ``m`` iterations are evicted.
    """

    def __init__(self, m: int):
        if not isinstance(m, int) or m < 0:
            raise InvalidInputError(f"memory depth m must be a nonnegative integer, got {m!r}")
        self.m = m
        self._entries: deque[tuple[int, float]] = deque(maxlen=m + 1)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def latest_index(self) -> int | None:
        return self._entries[-1][0] if self._entries else None

    def push(self, k: int, value: float) -> None:
        """Record merit ``value`` for iterate ``k``; ``k`` must follow the last index."""
        if self._entries and k != self._entries[-1][0] + 1:
            raise LogicError(
                f"non-contiguous push: got index {k} after {self._entries[-1][0]}"
            )
        if not self._entries and k != 0:
            raise LogicError(f"first push must use index 0, got {k}")
        self._entries.append((k, float(value)))

    def window_max(self) -> tuple[float, int]:
        """Return ``(max merit, argmax index)``, ties broken toward the largest index."""
        if not self._entries:
            raise LogicError("window_max on an empty window")
        best_val, best_idx = self._entries[0][1], self._entries[0][0]
        for idx, val in self._entries:
            if val >= best_val:
                best_val, best_idx = val, idx
        return best_val, best_idx

    def accept(self, candidate: float, decrement: float) -> bool:
        """Plain floating-point test ``candidate <= window max - decrement``."""
        candidate = float(candidate)
        decrement = float(decrement)
        if math.isnan(candidate) or math.isnan(decrement):
            raise InvalidInputError("accept called with NaN candidate or decrement")
        max_val, _ = self.window_max()
        return candidate <= max_val - decrement
