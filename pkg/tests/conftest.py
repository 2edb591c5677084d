import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURE_DIR = Path(__file__).parent.parent / "fixtures"
ONTOLOGY_DIR = FIXTURE_DIR / "ontology"


def fixture_id_map():
    from ontosim.ontology import POSSIBLY_EQUIVALENT_TO, REPLACED_BY, SAME_AS, IdMap

    return IdMap(
        fsn_type_ids=frozenset({"3001"}),
        synonym_type_ids=frozenset({"3009"}),
        association_refsets={
            "5230": POSSIBLY_EQUIVALENT_TO,
            "5260": REPLACED_BY,
            "5270": SAME_AS,
        },
    )


@pytest.fixture(scope="session")
def fixture_snapshot():
    """Raw latest-state snapshot of the committed fixture release."""
    from ontosim.ontology import parse_release

    return parse_release(
        ONTOLOGY_DIR / "concepts.tsv",
        ONTOLOGY_DIR / "descriptions.tsv",
        ONTOLOGY_DIR / "associations.tsv",
        id_map=fixture_id_map(),
    )


@pytest.fixture(scope="session")
def working_snapshot(fixture_snapshot):
    """Fixture snapshot with the metadata module excluded (the usual input)."""
    from ontosim.ontology import exclude_module

    return exclude_module(fixture_snapshot, "1000002")
