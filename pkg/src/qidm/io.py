"""JSON schemas for spaces, measures, bimeasures, pmfs, models and integrands."""
from __future__ import annotations

import csv
import io
import json
from typing import Any, Iterable

from .bimeasure import Bimeasure
from .errors import InconclusiveError, ValidationError
from .integral import StepFunction
from .lattice import CharacteristicTriplet, LatticePmf, QuasiLevyMeasure
from .measure import FiniteSignedMeasure, GroundSpace, RingMember
from .numeric import dump_scalar, fmt, to_scalar
from .random_measure import RandomMeasureModel


def _require(doc: dict, *keys):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ValidationError(f"missing keys {missing}")


def space_from_json(atoms, levels=None) -> GroundSpace:
    atoms = [str(a) for a in atoms]
    if levels is None:
        return GroundSpace(atoms)
    try:
        return GroundSpace.from_indices(atoms, levels)
    except IndexError as exc:
        raise ValidationError("level index out of range") from exc


def space_to_json(space: GroundSpace) -> dict:
    index = {a: i for i, a in enumerate(space.atoms)}
    return {
        "atoms": list(space.atoms),
        "levels": [sorted(index[a] for a in level) for level in space.levels],
    }


def measure_from_json(space: GroundSpace, weights: dict, backend: str) -> FiniteSignedMeasure:
    return FiniteSignedMeasure(space, {str(t): to_scalar(w, backend) for t, w in weights.items()})


def measure_to_json(mu: FiniteSignedMeasure) -> dict:
    return {t: dump_scalar(mu.weight(t)) for t in mu.space.atoms if t in mu.weights}


def load_measures(doc: dict, backend: str = "rational"):
    _require(doc, "atoms", "measures")
    space = space_from_json(doc["atoms"], doc.get("levels"))
    measures = {name: measure_from_json(space, w, backend) for name, w in doc["measures"].items()}
    return space, measures


def dump_measures(space: GroundSpace, measures: dict) -> dict:
    out = space_to_json(space)
    out["measures"] = {name: measure_to_json(mu) for name, mu in measures.items()}
    return out


def load_bimeasure(doc: dict, backend: str = "rational") -> Bimeasure:
    _require(doc, "t_atoms", "x_atoms", "matrix")
    space = space_from_json(doc["t_atoms"], doc.get("t_levels"))
    matrix = [[to_scalar(w, backend) for w in row] for row in doc["matrix"]]
    return Bimeasure.from_matrix(space, [str(x) for x in doc["x_atoms"]], matrix)


def dump_bimeasure(bm: Bimeasure) -> dict:
    sj = space_to_json(bm.t_space)
    return {
        "t_atoms": sj["atoms"],
        "t_levels": sj["levels"],
        "x_atoms": list(bm.x_atoms),
        "matrix": [[dump_scalar(w) for w in row] for row in bm.matrix()],
    }


def load_pmf(doc: dict) -> LatticePmf:
    _require(doc, "offsets", "probs")
    if any(float(k) != int(float(k)) for k in doc["offsets"]):
        # only the integer-lattice criterion is implemented
        raise InconclusiveError(float("nan"), float("nan"), "offsets are not integers; no QID criterion off the lattice")
    probs = [to_scalar(p, "float") for p in doc["probs"]]
    return LatticePmf(tuple(int(k) for k in doc["offsets"]), tuple(probs))


def dump_pmf(pmf: LatticePmf) -> dict:
    return {"offsets": list(pmf.offsets), "probs": [dump_scalar(p) for p in pmf.probs]}


def levy_from_json(pairs, backend: str) -> QuasiLevyMeasure:
    return QuasiLevyMeasure(tuple((to_scalar(x, backend), to_scalar(m, backend)) for x, m in pairs))


def levy_to_json(levy: QuasiLevyMeasure) -> list:
    return [[dump_scalar(x), dump_scalar(m)] for x, m in levy.atoms]


def triplet_to_json(trip: CharacteristicTriplet) -> dict:
    return {"gamma": dump_scalar(trip.gamma), "a": dump_scalar(trip.a), "levy": levy_to_json(trip.levy)}


def triplet_from_json(doc: dict, backend: str = "float") -> CharacteristicTriplet:
    _require(doc, "gamma", "a", "levy")
    return CharacteristicTriplet(
        to_scalar(doc["gamma"], backend), to_scalar(doc["a"], backend), levy_from_json(doc["levy"], backend)
    )


def load_model(doc: dict, backend: str = "rational") -> RandomMeasureModel:
    _require(doc, "space")
    sp = doc["space"]
    _require(sp, "atoms")
    space = space_from_json(sp["atoms"], sp.get("levels"))
    nu0 = measure_from_json(space, doc.get("nu0", {}), backend)
    nu1 = measure_from_json(space, doc.get("nu1", {}), backend)
    F = {str(t): levy_from_json(pairs, backend) for t, pairs in doc.get("F", {}).items()}
    return RandomMeasureModel(space, nu0, nu1, F)


def dump_model(m: RandomMeasureModel) -> dict:
    return {
        "space": space_to_json(m.space),
        "nu0": measure_to_json(m.nu0),
        "nu1": measure_to_json(m.nu1),
        "F": {t: levy_to_json(m.F[t]) for t in m.space.atoms if t in m.F},
    }


def load_step_function(doc: dict, space: GroundSpace, backend: str = "rational") -> StepFunction:
    if "values" in doc:
        return StepFunction.from_values(space, {str(t): to_scalar(v, backend) for t, v in doc["values"].items()})
    if "pieces" in doc:
        return StepFunction(
            tuple((to_scalar(v, backend), RingMember(space, [str(a) for a in atoms])) for v, atoms in doc["pieces"])
        )
    raise ValidationError("integrand needs 'values' or 'pieces'")


def dump_step_function(f: StepFunction) -> dict:
    return {"pieces": [[dump_scalar(v), list(A)] for v, A in f.pieces]}


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def to_csv(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (int, float)) or hasattr(v, "denominator") else v for v in row])
    return buf.getvalue()
