"""Quasi-infinitely divisible random measures on finite ground spaces."""

__version__ = "0.1.0"

from .bimeasure import Bimeasure, disintegrate, variation, variation_bruteforce, variation_measure
from .errors import (
    BranchTrackingError,
    InconclusiveError,
    NotQidError,
    QidmError,
    ValidationError,
)
from .integral import StepFunction, integrate_step, orlicz_norm, step_cf
from .lattice import (
    CharacteristicTriplet,
    LatticePmf,
    QuasiLevyMeasure,
    cf_eval,
    extract_triplet_lattice,
    qid_check_lattice,
)
from .measure import FiniteSignedMeasure, GroundSpace, RingMember, jordan_decompose, total_variation
from .random_measure import RandomMeasureModel, cf_of_set, local_characteristics, validate_model

__all__ = [
    "Bimeasure",
    "BranchTrackingError",
    "CharacteristicTriplet",
    "FiniteSignedMeasure",
    "GroundSpace",
    "InconclusiveError",
    "LatticePmf",
    "NotQidError",
    "QidmError",
    "QuasiLevyMeasure",
    "RandomMeasureModel",
    "RingMember",
    "StepFunction",
    "ValidationError",
    "__version__",
    "cf_eval",
    "cf_of_set",
    "disintegrate",
    "extract_triplet_lattice",
    "integrate_step",
    "jordan_decompose",
    "local_characteristics",
    "orlicz_norm",
    "qid_check_lattice",
    "step_cf",
    "total_variation",
    "validate_model",
    "variation",
    "variation_bruteforce",
    "variation_measure",
]
