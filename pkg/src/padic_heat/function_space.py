"""Locally constant functions on the ball, stored as value vectors.

A ``GridFunction`` holds one value per coset of the sub-ball of radius
p**(-M), i.e. a vector of length S = p**(N+M).  Each coset carries Haar
measure p**(-M), so the integral over the ball is p**(-M) times the
plain sum and the total measure is p**N.  Convolution is taken with
respect to the same measure:

    (u * v)[n] = p**(-M) * sum_m u[(n - m) mod S] * v[m].

Values are float64, or complex128 where a routine needs them; arrays
are copied on construction and frozen, so grid functions behave as
immutable values.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .ball_model import BallModel, valuation_table


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(eq=False)
class GridFunction:
    """A function on the ball resolved at level M, one value per coset."""

    model: BallModel
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values)
        if v.shape != (self.model.S,):
            raise ValueError(
                f"values must have shape ({self.model.S},), got {v.shape}"
            )
        if np.iscomplexobj(v):
            v = v.astype(np.complex128)
        else:
            v = v.astype(np.float64)
        self.values = _freeze(v.copy())

    # -- measure-aware reductions ------------------------------------

    def integral(self) -> float | complex:
        """Haar integral over the ball, p**(-M) times the value sum."""
        total = self.values.sum() * float(self.model.p) ** (-self.model.M)
        return total if np.iscomplexobj(self.values) else float(total)

    def lp_norm(self, gamma: float) -> float:
        """L^gamma norm for gamma in [1, inf]; gamma = math.inf gives the sup norm."""
        if gamma == math.inf:
            return float(np.abs(self.values).max())
        if gamma < 1:
            raise ValueError(f"gamma must be >= 1 or inf, got {gamma}")
        meas = float(self.model.p) ** (-self.model.M)
        return float((meas * (np.abs(self.values) ** gamma).sum()) ** (1.0 / gamma))

    # -- algebra -------------------------------------------------------

    def _require_same_model(self, other: "GridFunction") -> None:
        if self.model != other.model:
            raise ValueError("grid functions live on different models")

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self._require_same_model(other)
        return GridFunction(self.model, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self._require_same_model(other)
        return GridFunction(self.model, self.values - other.values)

    def __mul__(self, scalar) -> "GridFunction":
        return GridFunction(self.model, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(self.model, -self.values)

    def real(self) -> "GridFunction":
        return GridFunction(self.model, np.real(self.values))

    def convolve(self, other: "GridFunction") -> "GridFunction":
        """Measure-weighted circular convolution.

        Direct O(S^2) evaluation by cyclic shifts; deliberately free of
        any Fourier machinery so that convolution identities can serve
        as an independent cross-check of the transform.
        """
        self._require_same_model(other)
        S = self.model.S
        u, v = self.values, other.values
        if np.iscomplexobj(u) or np.iscomplexobj(v):
            acc = np.zeros(S, dtype=np.complex128)
        else:
            acc = np.zeros(S, dtype=np.float64)
        for m in range(S):
            if v[m] != 0.0:
                acc += v[m] * np.roll(u, m)
        return GridFunction(self.model, acc * float(self.model.p) ** (-self.model.M))

    # -- resolution changes -------------------------------------------

    def refine(self, levels: int = 1) -> "GridFunction":
        """Re-express at resolution M + levels; fine index n maps to n mod S."""
        if levels < 0:
            raise ValueError("levels must be >= 0")
        fine = BallModel(self.model.p, self.model.N, self.model.M + levels,
                         order_cap=self.model.order_cap)
        return GridFunction(fine, np.tile(self.values, self.model.p ** levels))

    def coarsen(self, levels: int = 1) -> "GridFunction":
        """Average sub-cosets down to resolution M - levels; preserves the integral."""
        if levels < 0:
            raise ValueError("levels must be >= 0")
        if self.model.N + self.model.M - levels < 0:
            raise ValueError("cannot coarsen below the one-coset model")
        coarse = BallModel(self.model.p, self.model.N, self.model.M - levels,
                           order_cap=self.model.order_cap)
        folded = self.values.reshape(self.model.p ** levels, coarse.S)
        return GridFunction(coarse, folded.mean(axis=0))

    # -- serialization --------------------------------------------------

    def to_csv(self, path) -> None:
        """Write columns index, valuation, value; doubles round-trip exactly."""
        vt = valuation_table(self.model)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "valuation", "value"])
            for n in range(self.model.S):
                val = "inf" if n == 0 else str(int(vt[n]))
                w.writerow([n, val, _format_value(self.values[n])])

    @classmethod
    def from_csv(cls, path, model: BallModel) -> "GridFunction":
        rows: list[complex | float] = []
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            if header[:3] != ["index", "valuation", "value"]:
                raise ValueError(f"unexpected CSV header {header!r}")
            for row in r:
                rows.append(_parse_value(row[2]))
        if any(isinstance(x, complex) for x in rows):
            return cls(model, np.array(rows, dtype=np.complex128))
        return cls(model, np.array(rows, dtype=np.float64))

    def to_json(self, path) -> None:
        """Write model parameters and values; doubles round-trip exactly."""
        payload = {
            "p": self.model.p,
            "N": self.model.N,
            "M": self.model.M,
            "complex": bool(np.iscomplexobj(self.values)),
        }
        if payload["complex"]:
            payload["values_re"] = [float(x) for x in self.values.real]
            payload["values_im"] = [float(x) for x in self.values.imag]
        else:
            payload["values"] = [float(x) for x in self.values]
        with open(path, "w") as fh:
            json.dump(payload, fh)

    @classmethod
    def from_json(cls, path) -> "GridFunction":
        with open(path) as fh:
            payload = json.load(fh)
        model = BallModel(payload["p"], payload["N"], payload["M"])
        if payload.get("complex"):
            vals = np.array(payload["values_re"], dtype=np.float64) + 1j * np.array(
                payload["values_im"], dtype=np.float64)
            return cls(model, vals)
        return cls(model, np.array(payload["values"], dtype=np.float64))


def _format_value(x) -> str:
    if isinstance(x, complex) or np.iscomplexobj(x):
        return repr(complex(x))
    return repr(float(x))


def _parse_value(s: str):
    if "j" in s:
        return complex(s)
    return float(s)


# -- canonical initial data -------------------------------------------


def constant(model: BallModel, c: float) -> GridFunction:
    return GridFunction(model, np.full(model.S, float(c)))


def ball_indicator(model: BallModel, center: int = 0, radius_exp: int = 0) -> GridFunction:
    """Indicator of the sub-ball of radius p**radius_exp around coset ``center``.

    radius_exp must lie in [-M, N]; the sub-ball then consists of the
    p**(M + radius_exp) cosets whose representatives are congruent to
    ``center`` modulo p**(N - radius_exp).
    """
    if not (-model.M <= radius_exp <= model.N):
        raise ValueError(
            f"radius_exp must be in [{-model.M}, {model.N}], got {radius_exp}"
        )
    model._check_index(center)
    q = model.p ** (model.N - radius_exp)
    member = ((np.arange(model.S) - center) % model.S) % q == 0
    return GridFunction(model, member.astype(np.float64))


def random_function(model: BallModel, seed: int) -> GridFunction:
    """Standard normal values, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    return GridFunction(model, rng.standard_normal(model.S))


def positive_bump(model: BallModel, center: int = 0, radius_exp: int = 0) -> GridFunction:
    """1 plus a sub-ball indicator: strictly positive data with a localized excess."""
    return constant(model, 1.0) + ball_indicator(model, center, radius_exp)


def make_initial(model: BallModel, spec: dict) -> GridFunction:
    """Build initial data from a plain dict, as used by config files.

    Kinds: {"kind": "constant", "value": c}
           {"kind": "indicator", "center": n0, "radius_exp": r}
           {"kind": "random", "seed": s}
           {"kind": "bump", "center": n0, "radius_exp": r}
    """
    if "kind" not in spec:
        raise ValueError("initial-data spec needs a 'kind'")
    kind = spec["kind"]
    extra = set(spec) - {"kind", "value", "center", "radius_exp", "seed"}
    if extra:
        raise ValueError(f"unknown initial-data keys {sorted(extra)}")
    if kind == "constant":
        return constant(model, spec.get("value", 1.0))
    if kind == "indicator":
        return ball_indicator(model, spec.get("center", 0), spec.get("radius_exp", 0))
    if kind == "random":
        return random_function(model, spec.get("seed", 0))
    if kind == "bump":
        return positive_bump(model, spec.get("center", 0), spec.get("radius_exp", 0))
    raise ValueError(f"unknown initial-data kind {kind!r}")
