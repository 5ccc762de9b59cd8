import pytest

from tauspread import io

from helpers import DESK12, DATA_DIR


@pytest.fixture(scope="session")
def clinical_full():
    return io.parse_clinical_table(DATA_DIR / "clinical_significant_rois.csv")


@pytest.fixture(scope="session")
def desk_raw():
    return io.parse_connectome(DESK12 / "nodes.csv", DESK12 / "edges.csv")


@pytest.fixture(scope="session")
def desk_atlas(desk_raw):
    return io.parse_atlas(DESK12 / "atlas.csv", desk_raw.vertex_count)


@pytest.fixture(scope="session")
def desk_clinical():
    return io.parse_clinical_table(DESK12 / "clinical.csv")
