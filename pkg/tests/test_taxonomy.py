import pytest

from cinepipe.taxonomy import (
    DEFAULT_GENRES,
    DEFAULT_MOVEMENTS,
    Taxonomy,
    TaxonomyError,
    load_taxonomy,
)


def test_default_taxonomy_shape():
    tax = load_taxonomy()
    assert len(tax.movements) == 17
    assert len(set(tax.movements)) == 17
    assert len(tax.families) == 9
    assert set(tax.families) == {
        "static", "pan", "tilt", "dolly", "truck", "pedestal", "zoom", "crane", "arc",
    }


def test_default_genres_are_thirteen():
    tax = load_taxonomy({"movements": DEFAULT_MOVEMENTS})
    assert len(tax.genres) == 13
    assert tax.genres == tuple(DEFAULT_GENRES)


def test_duplicate_movement_label_rejected():
    movements = [{"label": m, "family": f} for m, f in DEFAULT_MOVEMENTS.items()]
    movements.append({"label": "pan left", "family": "pan"})
    with pytest.raises(TaxonomyError, match="duplicate"):
        load_taxonomy({"movements": movements})


def test_duplicate_genre_rejected():
    with pytest.raises(TaxonomyError, match="duplicate"):
        load_taxonomy({"genres": DEFAULT_GENRES + ["drama"]})


def test_movement_without_family_rejected():
    movements = dict(DEFAULT_MOVEMENTS)
    movements["pan left"] = ""
    with pytest.raises(TaxonomyError, match="no family"):
        load_taxonomy({"movements": movements})


def test_empty_dimension_rejected():
    with pytest.raises(TaxonomyError, match="empty"):
        load_taxonomy({"genres": []})


def test_wrong_movement_count_rejected():
    movements = dict(DEFAULT_MOVEMENTS)
    del movements["arc left"]
    with pytest.raises(TaxonomyError, match="exactly 17"):
        load_taxonomy({"movements": movements})


def test_shot_counts_within_allowed_range():
    with pytest.raises(TaxonomyError, match="shot_counts"):
        load_taxonomy({"shot_counts": [1, 2, 3, 4]})


def test_genres_extendable_to_fifteen():
    tax = load_taxonomy({"genres": DEFAULT_GENRES + ["thriller", "musical"]})
    assert len(tax.genres) == 15


def test_family_of_prefix_groups():
    tax = load_taxonomy()
    assert tax.family_of("pan left") == "pan"
    assert tax.family_of("static") == "static"
    assert tax.family_of("arc right") == "arc"
    assert tax.family_of("pedestal down") == "pedestal"
    with pytest.raises(TaxonomyError):
        tax.family_of("orbit")


def test_taxonomy_is_frozen():
    tax = load_taxonomy()
    with pytest.raises(Exception):
        tax.genres = ()  # type: ignore[misc]
