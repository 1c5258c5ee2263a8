"""JSON form of a filtered space together with processes living on it.

    {"outcomes": [...], "probs": [...], "horizon": T,
     "partitions": [[[atom, ...], ...], ...],
     "processes": [{"name": ..., "dim": d, "values": [[[...]]]}, ...]}

``values`` is indexed ``[time][atom][coordinate]``.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import StructuralError
from .prob_space import ADAPTED, FilteredSpace, Process


def space_to_dict(space: FilteredSpace, processes: dict[str, Process] | None = None) -> dict:
    out = {
        "outcomes": list(space.outcomes) if space.outcomes else list(range(space.n_atoms)),
        "probs": space.probs.tolist(),
        "horizon": space.horizon,
        "partitions": space.partitions,
        "processes": [],
    }
    for name, X in (processes or {}).items():
        if X.space is not space:
            raise StructuralError(f"process {name!r} lives on another space")
        out["processes"].append({"name": name, "dim": X.dim, "values": X.values.tolist()})
    return out


def space_from_dict(data: dict, check: bool = True) -> tuple[FilteredSpace, dict[str, Process]]:
    try:
        partitions = data["partitions"]
        probs = np.asarray(data["probs"], dtype=float)
        horizon = int(data["horizon"])
        outcomes = data.get("outcomes")
        entries = data.get("processes", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralError(f"malformed space document: {exc}") from exc
    if len(partitions) != horizon + 1:
        raise StructuralError(f"horizon {horizon} needs {horizon + 1} partitions, got {len(partitions)}")
    space = FilteredSpace.from_partitions(partitions, probs, outcomes)
    if space.n_atoms != len(probs):
        raise StructuralError("documents with zero-probability atoms cannot carry processes")
    processes = {}
    for entry in entries:
        values = np.asarray(entry["values"], dtype=float)
        if values.ndim != 3 or values.shape[2] != entry["dim"]:
            raise StructuralError(f"process {entry['name']!r}: values do not match dim {entry['dim']}")
        processes[entry["name"]] = Process(space, values, ADAPTED, check=check)
    return space, processes


def dump(path, space: FilteredSpace, processes: dict[str, Process] | None = None, extra: dict | None = None) -> None:
    doc = space_to_dict(space, processes)
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))


def load(path, check: bool = True) -> tuple[FilteredSpace, dict[str, Process]]:
    return space_from_dict(json.loads(Path(path).read_text()), check=check)
