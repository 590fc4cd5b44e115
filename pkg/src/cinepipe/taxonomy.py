"""Cinematic control-signal taxonomy: genres, camera movements, shot structure.

The taxonomy is the closed vocabulary every other stage draws labels from.
Movement labels group into nine families (a family is the movement without
its direction variant), which is also the granularity the storyboard router
scores models at.
"""
from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_GENRES = [
    "documentary",
    "drama",
    "action",
    "comedy",
    "horror",
    "romance",
    "fantasy",
    "western",
    "classic",
    "animals",
    "sports",
    "science fiction",
    "war",
]

# movement label -> family
DEFAULT_MOVEMENTS = {
    "static": "static",
    "pan left": "pan",
    "pan right": "pan",
    "tilt up": "tilt",
    "tilt down": "tilt",
    "dolly in": "dolly",
    "dolly out": "dolly",
    "truck left": "truck",
    "truck right": "truck",
    "pedestal up": "pedestal",
    "pedestal down": "pedestal",
    "zoom in": "zoom",
    "zoom out": "zoom",
    "crane up": "crane",
    "crane down": "crane",
    "arc left": "arc",
    "arc right": "arc",
}

MOVEMENT_FAMILIES = frozenset(
    {"static", "pan", "tilt", "dolly", "truck", "pedestal", "zoom", "crane", "arc"}
)

DEFAULT_SHOT_COUNTS = [1, 2, 3]
DEFAULT_SUBJECT_COUNTS = ["zero", "single", "multiple"]
DEFAULT_DYNAMICITY = ["static", "dynamic"]

MOVEMENT_COUNT = 17


class TaxonomyError(ValueError):
    """Raised for an invalid or incomplete taxonomy document."""


@dataclass(frozen=True)
class Taxonomy:
    """The closed label vocabulary for one dataset build."""

    genres: tuple[str, ...]
    movements: tuple[str, ...]
    movement_families: dict[str, str]
    shot_counts: tuple[int, ...] = (1, 2, 3)
    subject_counts: tuple[str, ...] = ("zero", "single", "multiple")
    dynamicity: tuple[str, ...] = ("static", "dynamic")

    def family_of(self, movement: str) -> str:
        """Family for a movement label (e.g. "pan left" -> "pan")."""
        try:
            return self.movement_families[movement]
        except KeyError:
            raise TaxonomyError(f"unknown movement: {movement!r}") from None

    @property
    def families(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for m in self.movements:
            seen.setdefault(self.movement_families[m], None)
        return tuple(seen)

    def dimensions(self) -> dict[str, tuple]:
        """Category lists per balanced-sampling dimension."""
        return {
            "genre": self.genres,
            "shot_count": self.shot_counts,
            "movement": self.movements,
            "subject_count": self.subject_counts,
            "dynamicity": self.dynamicity,
        }


def _check_distinct(labels: list, dimension: str) -> None:
    seen = set()
    for label in labels:
        if label in seen:
            raise TaxonomyError(f"duplicate label in {dimension}: {label!r}")
        seen.add(label)


def load_taxonomy(config: dict | None = None) -> Taxonomy:
    """Build and validate a Taxonomy from a config mapping.

    Omitted dimensions fall back to the defaults (13 genres, the 17 standard
    movements over 9 families, shot counts 1-3). The `movements` key, when
    present, maps movement label -> family.
    """
    config = config or {}

    genres = list(config.get("genres", DEFAULT_GENRES))
    movements_map = dict(config.get("movements", DEFAULT_MOVEMENTS))
    shot_counts = list(config.get("shot_counts", DEFAULT_SHOT_COUNTS))
    subject_counts = list(config.get("subject_counts", DEFAULT_SUBJECT_COUNTS))
    dynamicity = list(config.get("dynamicity", DEFAULT_DYNAMICITY))

    # "movements" may arrive as a list of {label, family} records (file form)
    if isinstance(config.get("movements"), list):
        movements_map = {}
        for entry in config["movements"]:
            label = entry["label"]
            if label in movements_map:
                raise TaxonomyError(f"duplicate label in movements: {label!r}")
            movements_map[label] = entry.get("family", "")

    for dim_name, labels in [
        ("genres", genres),
        ("shot_counts", shot_counts),
        ("subject_counts", subject_counts),
        ("dynamicity", dynamicity),
    ]:
        if not labels:
            raise TaxonomyError(f"empty dimension: {dim_name}")
        _check_distinct(labels, dim_name)

    if not movements_map:
        raise TaxonomyError("empty dimension: movements")

    for movement, fam in movements_map.items():
        if not fam:
            raise TaxonomyError(f"movement with no family: {movement!r}")
        if fam not in MOVEMENT_FAMILIES:
            raise TaxonomyError(
                f"movement {movement!r} maps to unknown family {fam!r}"
            )

    if len(movements_map) != MOVEMENT_COUNT:
        raise TaxonomyError(
            f"movement vocabulary must have exactly {MOVEMENT_COUNT} entries, "
            f"got {len(movements_map)}"
        )
    missing = MOVEMENT_FAMILIES - set(movements_map.values())
    if missing:
        raise TaxonomyError(f"movement families not covered: {sorted(missing)}")

    if not set(shot_counts) <= {1, 2, 3}:
        raise TaxonomyError(f"shot_counts must be within {{1,2,3}}, got {shot_counts}")

    return Taxonomy(
        genres=tuple(genres),
        movements=tuple(movements_map),
        movement_families=movements_map,
        shot_counts=tuple(shot_counts),
        subject_counts=tuple(subject_counts),
        dynamicity=tuple(dynamicity),
    )
