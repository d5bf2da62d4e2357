"""Singular-value profiles and the annulus they induce.

A profile is the limiting law of the singular values ``s_i`` of the
isotropic matrix ``A = U diag(s) V``.  Its second moment gives the outer
radius ``b`` of the eigenvalue ring and its inverse second moment the inner
radius ``a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq

__all__ = [
    "SingularProfile",
    "ExplicitList",
    "Uniform",
    "QuarterCircle",
    "PointMass",
    "RingGeometry",
    "second_moment",
    "ring_radii",
    "realize",
    "stieltjes",
    "stieltjes_diagnostic",
    "profile_from_json",
    "profile_to_json",
    "parse_profile",
]

_QUANTILE_TOL = 1e-12


class SingularProfile:
    """Base class for the supported singular-value laws."""

    kind: str = ""

    def second_moment(self) -> float:
        raise NotImplementedError

    def inverse_second_moment(self) -> float:
        """Return the integral of ``x**-2``; ``math.inf`` when it diverges."""
        raise NotImplementedError

    def quantile(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        raise NotImplementedError

    @property
    def upper_bound(self) -> float:
        raise NotImplementedError

    def to_json(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class ExplicitList(SingularProfile):
    values: tuple[float, ...]
    kind = "explicit"

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValueError("explicit profile needs at least one value")
        if any(not (v > 0.0 and math.isfinite(v)) for v in vals):
            raise ValueError("explicit profile values must be finite and > 0")
        object.__setattr__(self, "values", vals)

    def second_moment(self) -> float:
        return float(np.mean(np.square(self.values)))

    def inverse_second_moment(self) -> float:
        return float(np.mean(np.reciprocal(np.square(self.values))))

    def quantile(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        ordered = np.sort(np.asarray(self.values))
        m = ordered.size
        # generalized inverse of the step CDF: smallest v with F(v) >= u
        idx = np.clip(np.ceil(np.asarray(u) * m - 1e-12).astype(int) - 1, 0, m - 1)
        return ordered[idx]

    @property
    def upper_bound(self) -> float:
        return max(self.values)

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "values": list(self.values)}


@dataclass(frozen=True)
class Uniform(SingularProfile):
    lo: float
    hi: float
    kind = "uniform"

    def __post_init__(self) -> None:
        if not (0.0 < self.lo < self.hi) or not math.isfinite(self.hi):
            raise ValueError(f"uniform profile requires 0 < lo < hi, got ({self.lo}, {self.hi})")

    def second_moment(self) -> float:
        lo, hi = self.lo, self.hi
        return (hi**3 - lo**3) / (3.0 * (hi - lo))

    def inverse_second_moment(self) -> float:
        lo, hi = self.lo, self.hi
        return (1.0 / lo - 1.0 / hi) / (hi - lo)

    def quantile(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    @property
    def upper_bound(self) -> float:
        return self.hi

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class QuarterCircle(SingularProfile):
    """Density ``sqrt(4 - x**2) / pi`` on ``[0, 2]``."""

    kind = "quarter_circle"

    @staticmethod
    def cdf(x: float) -> float:
        x = min(max(x, 0.0), 2.0)
        return (0.5 * x * math.sqrt(max(4.0 - x * x, 0.0)) + 2.0 * math.asin(x / 2.0)) / math.pi

    def second_moment(self) -> float:
        return 1.0

    def inverse_second_moment(self) -> float:
        # density is 2/pi > 0 at the origin
        return math.inf

    def quantile(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.empty_like(u)
        for i, ui in enumerate(u):
            if ui <= 0.0:
                out[i] = 0.0
            elif ui >= 1.0:
                out[i] = 2.0
            else:
                out[i] = brentq(lambda x: self.cdf(x) - ui, 0.0, 2.0, xtol=_QUANTILE_TOL, rtol=4 * np.finfo(float).eps)
        return out

    @property
    def upper_bound(self) -> float:
        return 2.0

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind}


@dataclass(frozen=True)
class PointMass(SingularProfile):
    c: float
    kind = "point_mass"

    def __post_init__(self) -> None:
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise ValueError("point mass location must be finite and > 0")

    def second_moment(self) -> float:
        return self.c * self.c

    def inverse_second_moment(self) -> float:
        return 1.0 / (self.c * self.c)

    def quantile(self, u: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.full(np.shape(u), self.c, dtype=float)

    @property
    def upper_bound(self) -> float:
        return self.c

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class RingGeometry:
    """Inner radius ``a`` and outer radius ``b`` of the limiting annulus."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.a <= self.b) or self.b <= 0.0:
            raise ValueError(f"need 0 <= a <= b and b > 0, got a={self.a}, b={self.b}")


def second_moment(profile: SingularProfile) -> float:
    return profile.second_moment()


def ring_radii(profile: SingularProfile) -> RingGeometry:
    """Inner and outer ring radii of the single-ring limit law.

    ``a`` is exactly ``0.0`` when the inverse second moment diverges.
    """
    b = math.sqrt(profile.second_moment())
    inv = profile.inverse_second_moment()
    a = 0.0 if math.isinf(inv) else 1.0 / math.sqrt(inv)
    # a <= b holds mathematically; guard against a rounding inversion
    return RingGeometry(a=min(a, b), b=b)


def realize(profile: SingularProfile, n: int) -> NDArray[np.float64]:
    """Deterministic midpoint quantiles ``F^-1((i - 1/2) / n)``, ascending."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = (np.arange(1, n + 1) - 0.5) / n
    return np.sort(np.asarray(profile.quantile(u), dtype=float))


def stieltjes(values: Sequence[float] | NDArray[np.float64], z: complex) -> complex:
    """Stieltjes transform ``(1/n) sum 1 / (z - s_i)`` of the empirical law."""
    if not complex(z).imag > 0.0:
        raise ValueError("stieltjes transform evaluated off the upper half-plane")
    s = np.asarray(values, dtype=float)
    return complex(np.mean(1.0 / (z - s)))


def stieltjes_diagnostic(
    values: Sequence[float] | NDArray[np.float64],
    real_grid: Iterable[float],
    imag_part: float,
) -> NDArray[np.float64]:
    """``|Im G|`` along ``x + i*imag_part`` for each ``x`` of ``real_grid``.

    No threshold is applied; the caller decides what bound to enforce.
    """
    s = np.asarray(values, dtype=float)
    xs = np.asarray(list(real_grid), dtype=float)
    z = xs[:, None] + 1j * imag_part
    return np.abs(np.mean(1.0 / (z - s[None, :]), axis=1).imag)


def profile_to_json(profile: SingularProfile) -> dict[str, Any]:
    return profile.to_json()


def profile_from_json(obj: dict[str, Any]) -> SingularProfile:
    kind = obj.get("kind")
    if kind == "uniform":
        return Uniform(float(obj["lo"]), float(obj["hi"]))
    if kind == "quarter_circle":
        return QuarterCircle()
    if kind == "point_mass":
        return PointMass(float(obj["c"]))
    if kind == "explicit":
        return ExplicitList(tuple(obj["values"]))
    raise ValueError(f"unknown profile kind {kind!r}")


def parse_profile(text: str) -> SingularProfile:
    """Parse the ``kind:params`` shorthand, e.g. ``uniform:0.5,4``."""
    kind, _, params = text.partition(":")
    kind = kind.strip().replace("-", "_")
    args = [float(p) for p in params.split(",") if p.strip()] if params else []
    if kind == "uniform" and len(args) == 2:
        return Uniform(*args)
    if kind == "quarter_circle" and not args:
        return QuarterCircle()
    if kind == "point_mass" and len(args) == 1:
        return PointMass(args[0])
    if kind == "explicit" and args:
        return ExplicitList(tuple(args))
    raise ValueError(f"cannot parse profile {text!r}")
