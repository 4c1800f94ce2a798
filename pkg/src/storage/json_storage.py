import json
import math
from pathlib import Path
from typing import Any, Union

from src.core.errors import ModelFormatError

PathLike = Union[str, Path]


def _reject_constant(name: str) -> float:
    raise ModelFormatError(f"JSON contains non-finite number {name}")


def _check_finite(data: Any, where: str = "$") -> None:
    if isinstance(data, float) and not math.isfinite(data):
        raise ModelFormatError(f"non-finite number at {where}")
    if isinstance(data, dict):
        for key, value in data.items():
            _check_finite(value, f"{where}.{key}")
    elif isinstance(data, (list, tuple)):
        for k, value in enumerate(data):
            _check_finite(value, f"{where}[{k}]")


def load_json(path: PathLike, default: Any = None) -> Any:
    file_path = Path(path)
    if not file_path.exists():
        if default is not None:
            return default
        raise FileNotFoundError(f"no such file: {file_path}")
    with open(file_path, "r") as f:
        try:
            return json.load(f, parse_constant=_reject_constant)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{file_path}: invalid JSON ({exc})") from None


def save_json(path: PathLike, data: Any) -> None:
    _check_finite(data)
    file_path = Path(path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    with open(file_path, "w") as f:
        json.dump(data, f, indent=2, allow_nan=False)
        f.write("\n")
