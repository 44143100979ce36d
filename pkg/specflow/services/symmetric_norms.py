"""
Symmetric norms on finite real sequences.

Every evaluation sorts the absolute values non-increasingly first, so the result does not
depend on the order of the input.
"""

import math
import re
from typing import Sequence

import numpy as np

from ..exceptions import ParameterError
from ..models import NormKind, NormSpec

_TOKEN = re.compile(r"^(?:p(?P<p>inf|\d+(?:\.\d+)?)|kyfan(?P<k>\d+))$")


def parse_norm(token: str) -> NormSpec:
    """Parse "p1", "p2", "p1.5", "pinf" or "kyfan3"."""
    match = _TOKEN.match(token.strip().lower())
    if not match:
        raise ParameterError(f"Unknown norm token: {token!r}")
    if match.group("k") is not None:
        return NormSpec.kyfan(int(match.group("k")))
    p = match.group("p")
    return NormSpec.schatten(math.inf if p == "inf" else float(p))


def rearrange_desc(seq: Sequence[float]) -> np.ndarray:
    """Non-increasing rearrangement of a nonnegative sequence."""
    arr = np.asarray(seq, dtype=np.float64).ravel()
    if np.any(arr < 0):
        raise ParameterError("Rearrangement expects nonnegative entries")
    return -np.sort(-arr)


def _abs_desc(seq) -> np.ndarray:
    return -np.sort(-np.abs(np.asarray(seq, dtype=np.float64).ravel()))


def _eval_sorted(spec: NormSpec, a: np.ndarray) -> float:
    if a.size == 0 or a[0] == 0.0:
        return 0.0
    if spec.kind == NormKind.KYFAN:
        return float(a[: spec.k].sum())
    p = spec.p
    if math.isinf(p):
        return float(a[0])
    if p == 1.0:
        return float(a.sum())
    # scaled by the largest entry to keep large exponents finite
    top = a[0]
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def eval_norm(spec: NormSpec, seq: Sequence[float]) -> float:
    if spec.kind == NormKind.SCHATTEN and not spec.p >= 1.0:
        raise ParameterError(f"Schatten exponent must satisfy p >= 1, got {spec.p}")
    return _eval_sorted(spec, _abs_desc(seq))


def tail_norm(spec: NormSpec, seq: Sequence[float], n: int) -> float:
    """Norm of the sequence with its n largest absolute entries removed."""
    return _eval_sorted(spec, _abs_desc(seq)[n:])


def partial_sums(seq: Sequence[float]) -> np.ndarray:
    return np.cumsum(rearrange_desc(seq))


def weakly_majorizes(eta: Sequence[float], xi: Sequence[float], tol: float = 0.0) -> bool:
    """True iff xi is weakly majorized by eta (partial sums of the rearrangements)."""
    eta_arr = np.asarray(eta, dtype=np.float64).ravel()
    xi_arr = np.asarray(xi, dtype=np.float64).ravel()
    size = max(eta_arr.size, xi_arr.size)
    eta_arr = np.pad(eta_arr, (0, size - eta_arr.size))
    xi_arr = np.pad(xi_arr, (0, size - xi_arr.size))
    return bool(np.all(partial_sums(xi_arr) <= partial_sums(eta_arr) + tol))
