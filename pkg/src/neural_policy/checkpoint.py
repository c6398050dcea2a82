"""
Binary checkpoint files for policy parameters

Layout:
    8 bytes   magic b"MCDPARAM"
    uint32    format version (little-endian)
    uint32    header length in bytes (little-endian)
    header    UTF-8 JSON {"architecture": {...}, "layers": [{"name", "shape"}, ...],
              "environment": {...} or null}
    payload   float64 little-endian values of every layer, in header order
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from .models import Architecture, CheckpointError, PolicyParams

MAGIC = b"MCDPARAM"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sII")


def save_params(params: PolicyParams, path: Path, environment: Optional[Dict[str, Any]] = None) -> None:
    """``environment`` records the episode settings the policy was trained under."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = json.dumps({
        "architecture": params.architecture.model_dump(),
        "layers": [
            {"name": name, "shape": list(shape)}
            for name, shape in params.architecture.layer_shapes()
        ],
        "environment": environment,
    }).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(tensor, dtype="<f8").tobytes()
        for tensor in params.tensors.values()
    )
    path.write_bytes(_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)) + header + payload)


def _read_header(path: Path, data: bytes) -> Tuple[Dict[str, Any], int]:
    if len(data) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated header")
    magic, version, header_len = _PREFIX.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a policy checkpoint")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    start = _PREFIX.size
    try:
        header = json.loads(data[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupted header ({e})") from e
    if not isinstance(header, dict):
        raise CheckpointError(f"{path}: corrupted header")
    return header, start + header_len


def read_environment(path: Path) -> Optional[Dict[str, Any]]:
    """Episode settings stored with a checkpoint, or None if it has none."""
    header, _ = _read_header(path, Path(path).read_bytes())
    environment = header.get("environment")
    if environment is not None and not isinstance(environment, dict):
        raise CheckpointError(f"{path}: corrupted environment settings")
    return environment


def load_params(path: Path, expected: Optional[Architecture] = None) -> PolicyParams:
    """Read a checkpoint; ``expected`` enforces a specific architecture."""
    data = Path(path).read_bytes()
    header, offset = _read_header(path, data)
    try:
        arch = Architecture.model_validate(header["architecture"])
        layers = [(entry["name"], tuple(entry["shape"])) for entry in header["layers"]]
    except (KeyError, TypeError, ValidationError) as e:
        raise CheckpointError(f"{path}: corrupted header ({e})") from e

    if layers != arch.layer_shapes():
        raise CheckpointError(f"{path}: layer table does not match the stored architecture")
    if expected is not None and arch != expected:
        raise CheckpointError(
            f"{path}: architecture mismatch (file {arch.model_dump()}, expected {expected.model_dump()})"
        )

    payload = data[offset:]
    total = sum(int(np.prod(shape)) for _, shape in layers)
    if len(payload) != 8 * total:
        raise CheckpointError(f"{path}: payload has {len(payload)} bytes, expected {8 * total}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)

    tensors = {}
    offset = 0
    for name, shape in layers:
        size = int(np.prod(shape))
        tensors[name] = values[offset:offset + size].reshape(shape).copy()
        offset += size
    return PolicyParams(architecture=arch, tensors=tensors)
