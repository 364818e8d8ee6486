"""Mixed search space with a unit-cube encoding for the surrogate.

Real and integer parameters map to one coordinate each, ordinals to their
rank position, categoricals to a one-hot block. Integers and ordinals are
rounded after optimization, i.e. at decode time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SpaceError(Exception):
    pass


@dataclass(frozen=True)
class Parameter:
    name: str
    ptype: str = "real"  # real | integer | ordinal | categorical
    bounds: tuple[float, float] | None = None
    values: tuple | None = None

    def __post_init__(self):
        if self.ptype in ("real", "integer"):
            if self.bounds is None:
                raise SpaceError(f"{self.name}: {self.ptype} parameter needs bounds")
            lo, hi = self.bounds
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
                raise SpaceError(f"{self.name}: bounds must be finite with lower < upper")
        elif self.ptype in ("ordinal", "categorical"):
            if not self.values:
                raise SpaceError(f"{self.name}: {self.ptype} parameter needs a value list")
        else:
            raise SpaceError(f"{self.name}: unknown parameter type {self.ptype!r}")

    @property
    def encoded_width(self) -> int:
        return len(self.values) if self.ptype == "categorical" else 1


class ParamSpace:
    def __init__(self, parameters):
        self.parameters: list[Parameter] = list(parameters)
        if not self.parameters:
            raise SpaceError("empty parameter space")
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate parameter names")
        self.dim = sum(p.encoded_width for p in self.parameters)

    @classmethod
    def from_learnables(cls, learnables) -> "ParamSpace":
        return cls(
            [Parameter(name=lp.name, ptype=lp.param_type, bounds=lp.bounds) for lp in learnables]
        )

    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    def sample(self, rng: np.random.Generator) -> dict:
        out = {}
        for p in self.parameters:
            if p.ptype == "real":
                out[p.name] = float(rng.uniform(p.bounds[0], p.bounds[1]))
            elif p.ptype == "integer":
                out[p.name] = int(rng.integers(int(p.bounds[0]), int(p.bounds[1]) + 1))
            else:
                out[p.name] = p.values[int(rng.integers(0, len(p.values)))]
        return out

    def encode(self, config: dict) -> np.ndarray:
        u = np.empty(self.dim)
        i = 0
        for p in self.parameters:
            v = config[p.name]
            if p.ptype in ("real", "integer"):
                lo, hi = p.bounds
                u[i] = (float(v) - lo) / (hi - lo)
                i += 1
            elif p.ptype == "ordinal":
                idx = p.values.index(v)
                u[i] = idx / (len(p.values) - 1) if len(p.values) > 1 else 0.5
                i += 1
            else:
                block = np.zeros(len(p.values))
                block[p.values.index(v)] = 1.0
                u[i : i + len(p.values)] = block
                i += len(p.values)
        return u

    def decode(self, u) -> dict:
        u = np.asarray(u, dtype=float)
        out = {}
        i = 0
        for p in self.parameters:
            if p.ptype == "real":
                lo, hi = p.bounds
                out[p.name] = float(np.clip(lo + u[i] * (hi - lo), lo, hi))
                i += 1
            elif p.ptype == "integer":
                lo, hi = p.bounds
                out[p.name] = int(np.clip(round(lo + u[i] * (hi - lo)), int(lo), int(hi)))
                i += 1
            elif p.ptype == "ordinal":
                n = len(p.values)
                idx = int(np.clip(round(u[i] * (n - 1)), 0, n - 1))
                out[p.name] = p.values[idx]
                i += 1
            else:
                n = len(p.values)
                out[p.name] = p.values[int(np.argmax(u[i : i + n]))]
                i += n
        return out

    def contains(self, config: dict) -> bool:
        for p in self.parameters:
            if p.name not in config:
                return False
            v = config[p.name]
            if p.ptype == "real":
                if not isinstance(v, (int, float)) or not (p.bounds[0] <= v <= p.bounds[1]):
                    return False
            elif p.ptype == "integer":
                if not isinstance(v, int) or not (p.bounds[0] <= v <= p.bounds[1]):
                    return False
            elif v not in p.values:
                return False
        return True
