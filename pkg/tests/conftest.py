"""Shared fixtures: a rendered atlas, a neighbor table over the
Latin + Greek + Cyrillic range, the bundled scorer and corpus, and a
trained toy victim, built once per session."""

import pytest

from legit.atlas import Atlas, load_atlas
from legit.attack import load_fixture_corpus
from legit.index import EmbeddingMatrix, NeighborTable, build_imgdot_matrix, build_neighbor_table
from legit.scorer import FeatureExtractor, LegibilityScorer, load_default_scorer
from legit.victim import ToyVictim


@pytest.fixture(scope="session")
def atlas() -> Atlas:
    return load_atlas()


@pytest.fixture(scope="session")
def cpset(atlas):
    return atlas.build_codepoint_set(0x0000, 0x04FF)


@pytest.fixture(scope="session")
def matrix(atlas, cpset) -> EmbeddingMatrix:
    return build_imgdot_matrix(atlas, cpset)


@pytest.fixture(scope="session")
def table(matrix) -> NeighborTable:
    return build_neighbor_table(matrix, top=100)


@pytest.fixture(scope="session")
def tables(table) -> dict:
    return {table.model_id: table}


@pytest.fixture(scope="session")
def extractor(matrix, table) -> FeatureExtractor:
    return FeatureExtractor(matrix, table)


@pytest.fixture(scope="session")
def default_scorer(extractor) -> LegibilityScorer:
    return load_default_scorer(extractor)


@pytest.fixture(scope="session")
def fixture_corpus() -> tuple[list[str], list[int]]:
    return load_fixture_corpus()


@pytest.fixture(scope="session")
def toy_victim(fixture_corpus) -> ToyVictim:
    texts, labels = fixture_corpus
    return ToyVictim.train(texts, labels)
