"""Teaching signals, chiefly the discrete Mackey-Glass series.

The recurrence is used as exact discrete dynamics::

    f(k+1) = f(k) + 0.1 * (0.2 * f(k-tau) / (1 + f(k-tau)**10) - 0.1 * f(k))

with ``tau`` counted in steps and a constant pre-history f(k) = f0 for
k <= 0.
"""

from __future__ import annotations

from collections import deque
from typing import Protocol

import numpy as np


class InvalidDelayError(ValueError):
    pass


class NumericOverflowError(ArithmeticError):
    pass


class SignalSource(Protocol):
    def next(self) -> float: ...

    def reset(self) -> None: ...


class MgsState:
    """Mackey-Glass generator holding the last ``tau + 1`` values.

    ``next()`` emits f(0), f(1), ... in order; ``step()`` advances and
    returns the new value f(k+1).
    """

    def __init__(self, tau: int, f0: float):
        if int(tau) != tau or tau < 1:
            raise InvalidDelayError(f"tau must be a positive integer, got {tau}")
        self.tau = int(tau)
        self.f0 = float(f0)
        self.reset()

    def reset(self) -> None:
        self.history = deque([self.f0] * (self.tau + 1), maxlen=self.tau + 1)
        self.k = 0
        self._emitted_current = False

    @property
    def current(self) -> float:
        return self.history[-1]

    def step(self) -> float:
        fk = self.history[-1]
        fd = self.history[0]
        new = fk + 0.1 * (0.2 * fd / (1.0 + fd ** 10) - 0.1 * fk)
        if not np.isfinite(new):
            raise NumericOverflowError(f"Mackey-Glass value overflowed at step {self.k + 1}")
        self.history.append(new)
        self.k += 1
        return new

    def next(self) -> float:
        if not self._emitted_current:
            self._emitted_current = True
            return self.current
        return self.step()


def mgs_new(tau: int = 17, f0: float = 1.2) -> MgsState:
    return MgsState(tau, f0)


def mgs_step(state: MgsState) -> float:
    return state.step()


def mackey_glass(n: int, tau: int = 17, f0: float = 1.2, skip: int = 0) -> np.ndarray:
    """First ``n`` values f(skip), ..., f(skip+n-1) as an array."""
    src = MgsState(tau, f0)
    for _ in range(skip):
        src.next()
    return np.fromiter((src.next() for _ in range(n)), dtype=np.float64, count=n)
