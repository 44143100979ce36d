"""
JSON / CSV readers and writers.

Formats:
  CompactSet    {"space": "line"|"circle", "pieces": [[a, b], ...]}   (radians for arcs)
  BasedSpace    {"kind": "circle", "basepoint": 0.0} | {"kind": "plane", "basepoint": [re, im]}
                | {"kind": "quotient_circle", "essential": <CompactSet>}
  Multiset      {"space": <BasedSpace>, "points": [{"loc": x | [re, im], "mult": k}, ...]}
  Matrix        row-major complex entries [[re, im], ...] (nested rows are accepted too)
  Operator path {"model": {"kind", "dimension", "reference", "essential_set"},
                 "params": [...], "matrices": [<Matrix>, ...], "meta": {...}}
  Multiset path {"space": <BasedSpace>, "params": [...], "samples": [[{"loc", "mult"}, ...], ...]}
"""

import functools
import json
import logging
import math
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ..config import settings
from ..exceptions import ParseError, SpecflowError
from ..models import BasedSpace, CompactSet, Multiset, SpaceKind
from .enumeration import TrackSet
from .multisets import build_multiset
from .spectra import OperatorKind, OperatorModel, SampledOperatorPath
from .spectral_flow import FlowResult

logger = logging.getLogger(__name__)


def _load(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise ParseError(f"File not found: {path}")
    except json.JSONDecodeError as e:
        raise ParseError(f"Invalid JSON in {path}: {e}")


def _dump(data: Any, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(data, handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.info(f"Wrote {path}")
    return path


def _parsing(what: str):
    """Decorator turning malformed-input exceptions into ParseError."""
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except SpecflowError:
                raise
            except (KeyError, TypeError, ValueError, IndexError, ValidationError) as e:
                raise ParseError(f"Malformed {what}: {e}")
        return inner
    return wrap


# ---------------------------------------------------------------------------------------
# compact sets, spaces, multisets
# ---------------------------------------------------------------------------------------

def compact_set_to_dict(K: CompactSet) -> Dict:
    return {"space": K.space, "pieces": [[a, b] for a, b in K.pieces]}


@_parsing("compact set")
def compact_set_from_dict(data: Dict) -> CompactSet:
    return CompactSet.build(data["space"], data["pieces"])


def space_to_dict(space: BasedSpace) -> Dict:
    if space.is_quotient:
        return {"kind": space.kind.value, "essential": compact_set_to_dict(space.essential)}
    if space.is_complex:
        return {"kind": space.kind.value, "basepoint": [space.basepoint, space.basepoint_im]}
    return {"kind": space.kind.value, "basepoint": space.basepoint}


@_parsing("space")
def space_from_dict(data: Dict) -> BasedSpace:
    kind = SpaceKind(data["kind"])
    if kind == SpaceKind.LINE:
        return BasedSpace.line(data.get("basepoint", 0.0))
    if kind == SpaceKind.CIRCLE:
        return BasedSpace.circle(data.get("basepoint", 0.0))
    if kind == SpaceKind.PLANE:
        re, im = data.get("basepoint", [0.0, 0.0])
        return BasedSpace.plane(complex(re, im))
    return BasedSpace.quotient(compact_set_from_dict(data["essential"]))


def _points_to_list(S: Multiset) -> List[Dict]:
    if S.space.is_complex:
        return [{"loc": [pt.loc, pt.im], "mult": pt.mult} for pt in S.points]
    return [{"loc": pt.loc, "mult": pt.mult} for pt in S.points]


def _points_from_list(space: BasedSpace, points: List[Dict]) -> Multiset:
    entries = []
    for point in points:
        loc = point["loc"]
        if space.is_complex:
            loc = complex(loc[0], loc[1])
        entries.append((loc, int(point.get("mult", 1))))
    return build_multiset(space, entries)


def multiset_to_dict(S: Multiset) -> Dict:
    return {"space": space_to_dict(S.space), "points": _points_to_list(S)}


@_parsing("multiset")
def multiset_from_dict(data: Dict) -> Multiset:
    return _points_from_list(space_from_dict(data["space"]), data["points"])


def read_multiset(path: str) -> Multiset:
    return multiset_from_dict(_load(path))


def write_multiset(S: Multiset, path: str) -> str:
    return _dump(multiset_to_dict(S), path)


# ---------------------------------------------------------------------------------------
# matrices and operator paths
# ---------------------------------------------------------------------------------------

def matrix_to_list(A: np.ndarray) -> List[List[float]]:
    A = np.asarray(A, dtype=np.complex128)
    return [[float(z.real), float(z.imag)] for z in A.ravel()]


@_parsing("matrix")
def matrix_from_list(data: List) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 3:
        return arr[..., 0] + 1j * arr[..., 1]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected [[re, im], ...], got shape {arr.shape}")
    d = math.isqrt(arr.shape[0])
    if d * d != arr.shape[0]:
        raise ValueError(f"{arr.shape[0]} entries do not form a square matrix")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(d, d)


def model_to_dict(model: OperatorModel) -> Dict:
    return {
        "kind": model.kind.value,
        "dimension": model.dimension,
        "reference": matrix_to_list(model.reference),
        "essential_set": compact_set_to_dict(model.essential_set),
    }


@_parsing("operator model")
def model_from_dict(data: Dict) -> OperatorModel:
    return OperatorModel(
        dimension=int(data["dimension"]),
        kind=OperatorKind(data["kind"]),
        reference=matrix_from_list(data["reference"]),
        essential_set=compact_set_from_dict(data["essential_set"]),
    )


def operator_path_to_dict(path: SampledOperatorPath) -> Dict:
    return {
        "model": model_to_dict(path.model),
        "params": [float(t) for t in path.params],
        "matrices": [matrix_to_list(A) for A in path.matrices],
        "meta": path.meta,
    }


@_parsing("operator path")
def operator_path_from_dict(data: Dict) -> SampledOperatorPath:
    return SampledOperatorPath(
        model=model_from_dict(data["model"]),
        params=data["params"],
        matrices=[matrix_from_list(m) for m in data["matrices"]],
        meta=data.get("meta", {}),
    )


def read_operator_path(path: str) -> SampledOperatorPath:
    return operator_path_from_dict(_load(path))


def write_operator_path(path: SampledOperatorPath, filename: str) -> str:
    return _dump(operator_path_to_dict(path), filename)


def multiset_path_to_dict(samples: List[Multiset], params) -> Dict:
    return {
        "space": space_to_dict(samples[0].space),
        "params": [float(t) for t in params],
        "samples": [_points_to_list(S) for S in samples],
    }


@_parsing("multiset path")
def multiset_path_from_dict(data: Dict) -> Tuple[List[Multiset], np.ndarray]:
    space = space_from_dict(data["space"])
    samples = [_points_from_list(space, points) for points in data["samples"]]
    return samples, np.asarray(data["params"], dtype=np.float64)


def write_multiset_path(samples: List[Multiset], params, path: str) -> str:
    return _dump(multiset_path_to_dict(samples, params), path)


def read_path_samples(path: str) -> Tuple[List[Multiset], np.ndarray, Optional[SampledOperatorPath]]:
    """Samples of either file kind; the operator path is returned too when the file holds one."""
    data = _load(path)
    if isinstance(data, dict) and "matrices" in data:
        op_path = operator_path_from_dict(data)
        return op_path.spectra(), op_path.params, op_path
    samples, params = multiset_path_from_dict(data)
    return samples, params, None


# ---------------------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------------------

def _float_format(digits: Optional[int]) -> str:
    return f"%.{digits or settings.SIG_DIGITS}g"


def write_tracks_csv(ts: TrackSet, path: str, digits: Optional[int] = None) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    ts.to_frame().to_csv(path, index=False, float_format=_float_format(digits))
    logger.info(f"Wrote {path}")
    return path


def write_tracks_json(ts: TrackSet, path: str) -> str:
    return _dump(ts.to_dict(), path)


def write_flow_csv(result: FlowResult, path: str, digits: Optional[int] = None) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    result.to_frame().to_csv(path, index=False, float_format=_float_format(digits))
    logger.info(f"Wrote {path}")
    return path


def write_flow_diagnostics(result: FlowResult, path: str) -> str:
    return _dump({"method": result.method.value, **result.diagnostics}, path)
