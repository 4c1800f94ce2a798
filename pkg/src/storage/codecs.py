"""
Plain JSON documents for models, points, descriptor systems and spectra.
Complex numbers are stored as [re, im] pairs.
"""
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from src.core.errors import DimensionError, ModelFormatError
from src.core.types import Cpn1Model, SignalPartition, SignalVector
from src.linearize.jacobian import OperatingPoint
from src.linearize.ldss import DescriptorSystem
from src.stability.gep import GepSolution, StabilityVerdict


def _require(doc: Mapping[str, Any], *keys: str) -> None:
    if not isinstance(doc, Mapping):
        raise ModelFormatError("expected a JSON object")
    missing = [key for key in keys if key not in doc]
    if missing:
        raise ModelFormatError(f"missing fields: {', '.join(missing)}")


def _matrix(data: Any, rows: int, name: str) -> np.ndarray:
    try:
        array = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise ModelFormatError(f"{name} is not a numeric matrix") from None
    if rows == 0 or array.size == 0:
        cols = array.shape[1] if array.ndim == 2 else 0
        return np.zeros((rows, cols))
    if array.ndim != 2 or array.shape[0] != rows:
        raise DimensionError(f"{name} must have {rows} rows, got shape {array.shape}")
    return array


def partition_to_json(part: SignalPartition) -> dict:
    return {"n": part.n, "m": part.m, "p": part.p, "q": part.q, "names": list(part.names)}


def partition_from_json(doc: Mapping[str, Any]) -> SignalPartition:
    _require(doc, "n", "m", "p", "q", "names")
    return SignalPartition(int(doc["n"]), int(doc["m"]), int(doc["p"]), int(doc["q"]), tuple(doc["names"]))


def model_to_json(model: Cpn1Model) -> dict:
    return {
        "partition": partition_to_json(model.partition),
        "phi": model.phi.tolist(),
        "s": model.s_struct.tolist(),
        "lifts": [list(pair) for pair in model.lifts],
        "equations": list(model.equations),
    }


def model_from_json(doc: Mapping[str, Any]) -> Cpn1Model:
    _require(doc, "partition", "phi", "s")
    part = partition_from_json(doc["partition"])
    s = _matrix(doc["s"], part.n_v, "s")
    phi = np.array(doc["phi"], dtype=float)
    if phi.ndim != 2 or phi.shape[1] != s.shape[1]:
        raise DimensionError(f"phi must have {s.shape[1]} columns, got shape {phi.shape}")
    lifts = tuple(tuple(pair) for pair in doc.get("lifts", []))
    return Cpn1Model(part, phi, s, lifts, tuple(doc.get("equations", ())))


def point_to_json(point: OperatingPoint) -> dict:
    return {"values": point.v_bar.as_dict()}


def point_from_json(doc: Mapping[str, Any], partition: SignalPartition) -> OperatingPoint:
    """Accepts {"values": {...}} or a bare name -> value mapping; missing signals are zero."""
    values = doc.get("values", doc) if isinstance(doc, Mapping) else None
    if not isinstance(values, Mapping):
        raise ModelFormatError("operating point must map signal names to numbers")
    return OperatingPoint(SignalVector.from_mapping(partition, {k: float(v) for k, v in values.items()}))


def ldss_to_json(sys: DescriptorSystem) -> dict:
    return {
        "partition": partition_to_json(sys.partition),
        "names": list(sys.names),
        "inputs": list(sys.inputs),
        "e": sys.e.tolist(),
        "a": sys.a.tolist(),
        "b": sys.b.tolist(),
        "c": sys.c.tolist(),
        "point": sys.point.v_bar.as_dict() if sys.point is not None else None,
    }


def ldss_from_json(doc: Mapping[str, Any]) -> DescriptorSystem:
    _require(doc, "partition", "e", "a", "b")
    part = partition_from_json(doc["partition"])
    dim = part.n + part.p + part.q
    point = None
    if doc.get("point") is not None:
        point = point_from_json(doc["point"], part)
    return DescriptorSystem(
        _matrix(doc["e"], dim, "e"),
        _matrix(doc["a"], dim, "a"),
        _matrix(doc["b"], dim, "b"),
        part,
        point,
        doc.get("c"),
    )


def complex_to_json(values) -> List[List[float]]:
    return [[float(np.real(v)), float(np.imag(v))] for v in values]


def complex_from_json(data) -> np.ndarray:
    try:
        return np.array([complex(re, im) for re, im in data], dtype=complex)
    except (TypeError, ValueError):
        raise ModelFormatError("complex values must be [re, im] pairs") from None


def eigs_to_json(sol: GepSolution, verdict: Optional[StabilityVerdict] = None) -> dict:
    doc: Dict[str, Any] = {
        "finite": complex_to_json(sol.finite),
        "infinite_count": int(sol.infinite_count),
        "dim": sol.dim,
    }
    if verdict is not None:
        doc.update({
            "status": verdict.status,
            "margin": verdict.margin if np.isfinite(verdict.margin) else None,
            "zero_eigs": verdict.zero_eigs,
            "unstable_count": verdict.unstable_count,
            "dominant": complex_to_json(verdict.dominant),
        })
    return doc


def eigs_from_json(doc: Mapping[str, Any]) -> np.ndarray:
    """Finite eigenvalues of an eigs document, or of a bare list of [re, im] pairs."""
    if isinstance(doc, Mapping):
        _require(doc, "finite")
        return complex_from_json(doc["finite"])
    return complex_from_json(doc)
