"""
JSON-lines SCM files:
{"n": int, "edges": [[p, c], ...], "weights": [[p, c, w], ...], "sigmas": [s0, ...]}
"""

import json
from pathlib import Path
from typing import Iterable, List

from pydantic import ValidationError

from .models import NoiseSpec, Scm, ScmError, StructuralEq


def scm_to_record(scm: Scm) -> dict:
    edges = []
    weights = []
    for child, eq in enumerate(scm.equations):
        for parent, weight in zip(eq.parents, eq.weights):
            edges.append([parent, child])
            weights.append([parent, child, weight])
    order = sorted(range(len(edges)), key=lambda k: edges[k])
    return {
        "n": scm.n,
        "edges": [edges[k] for k in order],
        "weights": [weights[k] for k in order],
        "sigmas": [eq.noise.std_dev for eq in scm.equations],
    }


def scm_from_record(record: dict) -> Scm:
    n = record["n"]
    parents = {child: [] for child in range(n)}
    for parent, child, weight in record["weights"]:
        parents[int(child)].append((int(parent), float(weight)))

    declared = sorted((int(p), int(c)) for p, c in record["edges"])
    weighted = sorted((p, c) for c, ps in parents.items() for p, _ in ps)
    if declared != weighted:
        raise ScmError(f"Edge list {declared} disagrees with weighted edges {weighted}")
    if len(record["sigmas"]) != n:
        raise ScmError(f"{len(record['sigmas'])} sigmas for n={n}")

    equations = []
    for child in range(n):
        entries = sorted(parents[child])
        equations.append(StructuralEq(
            parents=[p for p, _ in entries],
            weights=[w for _, w in entries],
            noise=NoiseSpec(mean=0.0, std_dev=float(record["sigmas"][child])),
        ))
    return Scm(n=n, equations=equations)


def write_scms(path: Path, scms: Iterable[Scm]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for scm in scms:
            handle.write(json.dumps(scm_to_record(scm)) + "\n")


def read_scms(path: Path) -> List[Scm]:
    scms = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                scms.append(scm_from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ScmError(f"{path}:{line_number}: invalid SCM record ({e})") from e
    return scms
