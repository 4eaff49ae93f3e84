"""Surface heuristics that guess the participle's number from the prefix.

Each heuristic looks only at the tokens before the target and predicts
"Sing", "Plur" or None (no basis for a guess).  A None prediction counts
as incorrect.  Instances are grouped by how many of the four heuristics
get them right, giving difficulty strata 0 through 4.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .extraction import NOMINAL_UPOS, AgreementInstance

HEURISTIC_NAMES = ("h1", "h2", "h3", "h4")

# Accuracy of each heuristic over the full 68,497-instance corpus the
# strata were designed on.  Recorded for reference; at fixture scale the
# measured values have no reason to match these.
REFERENCE_ACCURACY = {"h1": 0.695, "h2": 0.886, "h3": 0.603, "h4": 0.700}


def h1_first_noun(instance: AgreementInstance) -> str | None:
    """Number of the first noun in the prefix."""
    for tok in instance.prefix:
        if tok.upos in NOMINAL_UPOS and tok.number is not None:
            return tok.number
    return None


def h2_last_noun(instance: AgreementInstance) -> str | None:
    """Number of the last noun in the prefix."""
    for tok in reversed(instance.prefix):
        if tok.upos in NOMINAL_UPOS and tok.number is not None:
            return tok.number
    return None


def h3_last_numbered(instance: AgreementInstance) -> str | None:
    """Number of the last prefix token carrying a Number feature,
    whatever its part of speech."""
    for tok in reversed(instance.prefix):
        if tok.number is not None:
            return tok.number
    return None


def h4_majority(instance: AgreementInstance, tie_break: str | None = "Sing") -> str | None:
    """Majority vote over every Number-marked prefix token.  Ties go to
    `tie_break` (pass None to abstain instead)."""
    sing = plur = 0
    for tok in instance.prefix:
        if tok.number == "Sing":
            sing += 1
        elif tok.number == "Plur":
            plur += 1
    if sing > plur:
        return "Sing"
    if plur > sing:
        return "Plur"
    return tie_break


HEURISTICS = {
    "h1": h1_first_noun,
    "h2": h2_last_noun,
    "h3": h3_last_numbered,
    "h4": h4_majority,
}


@dataclass(frozen=True)
class HeuristicProfile:
    predictions: tuple[str | None, str | None, str | None, str | None]
    correct: tuple[bool, bool, bool, bool]

    @property
    def group(self) -> int:
        return sum(self.correct)

    def as_dict(self) -> dict[str, str | None]:
        return dict(zip(HEURISTIC_NAMES, self.predictions))


def profile(instance: AgreementInstance, tie_break: str | None = "Sing") -> HeuristicProfile:
    predictions = (
        h1_first_noun(instance),
        h2_last_noun(instance),
        h3_last_numbered(instance),
        h4_majority(instance, tie_break),
    )
    correct = tuple(p == instance.target_number for p in predictions)
    return HeuristicProfile(predictions, correct)


def heuristic_accuracy(instances: Sequence[AgreementInstance],
                       tie_break: str | None = "Sing") -> dict[str, Fraction]:
    """Exact per-heuristic accuracy over a non-empty instance list."""
    if not instances:
        raise ValueError("no instances to score")
    hits = [0, 0, 0, 0]
    for inst in instances:
        for i, flag in enumerate(profile(inst, tie_break).correct):
            hits[i] += flag
    n = len(instances)
    return {name: Fraction(hits[i], n) for i, name in enumerate(HEURISTIC_NAMES)}


def group_sizes(profiles: Iterable[HeuristicProfile]) -> dict[int, int]:
    sizes = {g: 0 for g in range(5)}
    for prof in profiles:
        sizes[prof.group] += 1
    return sizes
