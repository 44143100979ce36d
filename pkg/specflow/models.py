"""
Data models shared by the services.

These are the serialisable value types of the package: symmetric norm descriptors,
compact sets (finite unions of closed intervals / arcs), based metric spaces and
finite-rank multisets. Geometry lives in `services.quotient_spaces`, multiset
algebra in `services.multisets`; the models only validate and normalise.
"""

import math
from enum import Enum
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .exceptions import ParameterError

TWO_PI = 2.0 * math.pi


class NormKind(str, Enum):
    SCHATTEN = "schatten"
    KYFAN = "kyfan"


class NormSpec(BaseModel):
    """Symmetric norm descriptor: Phi_p (1 <= p <= inf) or Ky-Fan-k."""

    model_config = ConfigDict(frozen=True)

    kind: NormKind
    p: float = 2.0
    k: int = 1

    @classmethod
    def schatten(cls, p: float) -> "NormSpec":
        p = float(p)
        if math.isnan(p) or p < 1.0:
            raise ParameterError(f"Schatten exponent must satisfy p >= 1, got {p}")
        return cls(kind=NormKind.SCHATTEN, p=p)

    @classmethod
    def kyfan(cls, k: int) -> "NormSpec":
        if int(k) != k or k < 1:
            raise ParameterError(f"Ky-Fan order must be a positive integer, got {k}")
        return cls(kind=NormKind.KYFAN, k=int(k))

    @property
    def is_schatten(self) -> bool:
        return self.kind == NormKind.SCHATTEN

    @property
    def is_sup(self) -> bool:
        return self.is_schatten and math.isinf(self.p)

    @property
    def token(self) -> str:
        if self.kind == NormKind.KYFAN:
            return f"kyfan{self.k}"
        if math.isinf(self.p):
            return "pinf"
        if float(self.p).is_integer():
            return f"p{int(self.p)}"
        return f"p{self.p:g}"

    def __str__(self) -> str:
        return self.token


class CompactSet(BaseModel):
    """
    Finite union of closed intervals (line) or closed arcs (circle).

    Arcs are stored as (start, end) with start in [0, 2pi) and end - start in [0, 2pi];
    the arc runs anticlockwise from start to end, a zero-length piece is a single point
    and an extent of 2pi is the full circle. An empty set is allowed here (regions may
    be empty); quotient constructions reject it.
    """

    model_config = ConfigDict(frozen=True)

    space: Literal["line", "circle"]
    pieces: Tuple[Tuple[float, float], ...] = ()

    @field_validator("pieces", mode="before")
    @classmethod
    def _coerce_pieces(cls, value):
        return tuple(tuple(float(x) for x in piece) for piece in value)

    @classmethod
    def build(cls, space: str, pieces) -> "CompactSet":
        if space not in ("line", "circle"):
            raise ParameterError(f"Unknown compact set space: {space}")
        normalised = []
        for piece in pieces:
            if len(piece) != 2:
                raise ParameterError(f"Piece must be a pair, got {piece}")
            a, b = float(piece[0]), float(piece[1])
            if space == "line":
                if b < a:
                    raise ParameterError(f"Interval end precedes start: [{a}, {b}]")
                normalised.append((a, b))
            else:
                extent = b - a
                if extent < 0 or extent > TWO_PI + 1e-12:
                    raise ParameterError(f"Arc extent must lie in [0, 2pi]: ({a}, {b})")
                start = a % TWO_PI
                normalised.append((start, start + min(extent, TWO_PI)))
        normalised.sort()
        for (a0, b0), (a1, b1) in zip(normalised, normalised[1:]):
            if a1 <= b0:
                raise ParameterError(f"Pieces must be pairwise disjoint: {(a0, b0)} and {(a1, b1)}")
        if space == "circle" and len(normalised) > 1:
            a0, _ = normalised[0]
            _, b_last = normalised[-1]
            if b_last >= a0 + TWO_PI:
                raise ParameterError("Arcs overlap across the angle 0")
        return cls(space=space, pieces=tuple(normalised))

    @classmethod
    def point(cls, space: str, x: float) -> "CompactSet":
        return cls.build(space, [(x, x)])

    @property
    def is_empty(self) -> bool:
        return len(self.pieces) == 0

    @property
    def is_single_point(self) -> bool:
        return len(self.pieces) == 1 and self.pieces[0][0] == self.pieces[0][1]

    @property
    def is_full_circle(self) -> bool:
        return self.space == "circle" and any(b - a >= TWO_PI for a, b in self.pieces)


class SpaceKind(str, Enum):
    LINE = "line"
    CIRCLE = "circle"
    PLANE = "plane"
    QUOTIENT_LINE = "quotient_line"
    QUOTIENT_CIRCLE = "quotient_circle"


class BasedSpace(BaseModel):
    """
    Metric space with a distinguished basepoint.

    Line and Circle carry a coordinate basepoint (a real / an angle), Plane a complex one
    (basepoint + i*basepoint_im); the quotient variants use the class of `essential` as
    basepoint.
    """

    model_config = ConfigDict(frozen=True)

    kind: SpaceKind
    basepoint: float = 0.0
    basepoint_im: float = 0.0
    essential: Optional[CompactSet] = None

    @classmethod
    def line(cls, basepoint: float = 0.0) -> "BasedSpace":
        return cls(kind=SpaceKind.LINE, basepoint=float(basepoint))

    @classmethod
    def circle(cls, basepoint: float = 0.0) -> "BasedSpace":
        return cls(kind=SpaceKind.CIRCLE, basepoint=float(basepoint) % TWO_PI)

    @classmethod
    def plane(cls, basepoint: complex = 0j) -> "BasedSpace":
        basepoint = complex(basepoint)
        return cls(kind=SpaceKind.PLANE, basepoint=basepoint.real, basepoint_im=basepoint.imag)

    @classmethod
    def quotient(cls, essential: CompactSet) -> "BasedSpace":
        """Quotient by K; a single-point K yields the plain space based at that point."""
        if essential.is_empty:
            raise ParameterError("Quotient by an empty set is undefined")
        if essential.is_single_point:
            x = essential.pieces[0][0]
            return cls.line(x) if essential.space == "line" else cls.circle(x)
        kind = SpaceKind.QUOTIENT_LINE if essential.space == "line" else SpaceKind.QUOTIENT_CIRCLE
        return cls(kind=kind, essential=essential)

    @property
    def is_quotient(self) -> bool:
        return self.kind in (SpaceKind.QUOTIENT_LINE, SpaceKind.QUOTIENT_CIRCLE)

    @property
    def is_circular(self) -> bool:
        return self.kind in (SpaceKind.CIRCLE, SpaceKind.QUOTIENT_CIRCLE)

    @property
    def is_complex(self) -> bool:
        return self.kind == SpaceKind.PLANE

    @property
    def base(self):
        """Coordinate of the basepoint, NaN for quotient spaces (the class has no single coordinate)."""
        if self.is_quotient:
            return math.nan
        if self.is_complex:
            return complex(self.basepoint, self.basepoint_im)
        return self.basepoint

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    def canonical(self, x):
        """Normalise a coordinate (angles into [0, 2pi))."""
        if self.is_circular:
            return float(x) % TWO_PI
        if self.is_complex:
            return complex(x)
        return float(x)


class MultisetPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    loc: float
    im: float = 0.0
    mult: int = Field(ge=1)


class Multiset(BaseModel):
    """
    Finite-rank countable multiset: listed (location, multiplicity) pairs plus the implicit
    infinite basepoint tail. Build instances through `services.multisets.build_multiset`,
    which merges nearby locations and absorbs points at the basepoint class.
    """

    model_config = ConfigDict(frozen=True)

    space: BasedSpace
    points: Tuple[MultisetPoint, ...] = ()

    @property
    def rank(self) -> int:
        return sum(point.mult for point in self.points)

    @property
    def is_trivial(self) -> bool:
        return not self.points

    def locations(self) -> np.ndarray:
        if self.space.is_complex:
            return np.array([complex(pt.loc, pt.im) for pt in self.points], dtype=np.complex128)
        return np.array([pt.loc for pt in self.points], dtype=np.float64)

    def multiplicities(self) -> np.ndarray:
        return np.array([pt.mult for pt in self.points], dtype=np.int64)

    def expand(self) -> np.ndarray:
        """Locations repeated by multiplicity, in stored (ascending) order."""
        return np.repeat(self.locations(), self.multiplicities())
