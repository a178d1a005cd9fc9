"""Reward functions f(L) and the single/multiple reward modes."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np


class RewardMode(str, enum.Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


@dataclass(frozen=True)
class PowerLaw:
    """f(L) = L ** -phi."""

    phi: float

    def __post_init__(self):
        if not self.phi > 0:
            raise ValueError("phi must be positive")

    def __call__(self, L):
        return np.asarray(L, dtype=float) ** -self.phi

    @property
    def strictly_decreasing(self) -> bool:
        return True


@dataclass(frozen=True)
class InverseLinear:
    """f(L) = 1 / L."""

    def __call__(self, L):
        return 1.0 / np.asarray(L, dtype=float)

    @property
    def strictly_decreasing(self) -> bool:
        return True


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("constant reward must be positive")

    def __call__(self, L):
        return np.full(np.shape(L), self.value, dtype=float)[()]

    @property
    def strictly_decreasing(self) -> bool:
        return False


@dataclass(frozen=True)
class Tabled:
    """Explicit values f(1), ..., f(K); f(L) = f(K) for every L > K."""

    values: tuple[float, ...]

    def __init__(self, values: Sequence[float] | Mapping[int, float]):
        if isinstance(values, Mapping):
            keys = sorted(values)
            if keys != list(range(1, len(keys) + 1)):
                raise ValueError("tabled reward keys must be 1..K without gaps")
            values = [values[k] for k in keys]
        vals = tuple(float(v) for v in values)
        if not vals or not all(v > 0 and np.isfinite(v) for v in vals):
            raise ValueError("tabled rewards must be a non-empty list of positive reals")
        object.__setattr__(self, "values", vals)

    def __call__(self, L):
        L = np.asarray(L, dtype=np.int64)
        idx = np.clip(L, 1, len(self.values)) - 1
        return np.asarray(self.values)[idx][()]

    @property
    def strictly_decreasing(self) -> bool:
        # over the tabled range; the constant tail only relaxes it to non-increasing beyond K
        return len(self.values) > 1 and all(a > b for a, b in zip(self.values, self.values[1:]))

    @property
    def non_increasing(self) -> bool:
        return all(a >= b for a, b in zip(self.values, self.values[1:]))

    @classmethod
    def from_function(cls, f, depth: int) -> "Tabled":
        """Table ``f`` on 1..depth; constant afterwards."""
        return cls([float(f(L)) for L in range(1, depth + 1)])


RewardFunction = Union[PowerLaw, InverseLinear, Constant, Tabled]


@dataclass(frozen=True)
class RewardModel:
    reward_fn: RewardFunction
    mode: RewardMode = RewardMode.MULTIPLE

    def __post_init__(self):
        object.__setattr__(self, "mode", RewardMode(self.mode))

    def f(self, L):
        return self.reward_fn(L)

    @property
    def strictly_decreasing(self) -> bool:
        return self.reward_fn.strictly_decreasing

    def table(self, max_length: int) -> np.ndarray:
        """Array ``t`` with ``t[L] = f(L)`` for 1 <= L <= max_length; ``t[0]`` unused."""
        t = np.zeros(max_length + 1)
        t[1:] = self.reward_fn(np.arange(1, max_length + 1))
        return t

    def to_dict(self) -> dict:
        fn = self.reward_fn
        if isinstance(fn, PowerLaw):
            d = {"kind": "power_law", "phi": fn.phi}
        elif isinstance(fn, InverseLinear):
            d = {"kind": "inverse_linear"}
        elif isinstance(fn, Constant):
            d = {"kind": "constant", "value": fn.value}
        else:
            d = {"kind": "tabled", "values": list(fn.values)}
        d["mode"] = self.mode.value
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "RewardModel":
        kind = d.get("kind", "inverse_linear")
        if kind == "power_law":
            fn = PowerLaw(float(d["phi"]))
        elif kind == "inverse_linear":
            fn = InverseLinear()
        elif kind == "constant":
            fn = Constant(float(d.get("value", 1.0)))
        elif kind == "tabled":
            fn = Tabled(d["values"])
        else:
            raise ValueError(f"unknown reward kind {kind!r}")
        return cls(fn, RewardMode(d.get("mode", "multiple")))
