"""
Pytest configuration for thresholdkit tests.
"""

from collections.abc import Callable, Iterable, Mapping

import pytest

from thresholdkit.config import Config
from thresholdkit.models.catalog_models import CatalogEntry, SubsetKey, SubsetStats
from thresholdkit.models.index_models import (
    ImpactIndex,
    PostingList,
    QuantizationMeta,
    Query,
)
from thresholdkit.models.prefix_models import PrefixStore
from thresholdkit.services.catalog_service import (
    assign_depths,
    custom_policy,
    mine_subsets,
)
from thresholdkit.services.eval_service import read_queries
from thresholdkit.services.index_builder import build_index
from thresholdkit.services.prefix_service import build_store
from thresholdkit.services.synthetic import generate_corpus, generate_query_log

CORPUS_DOCUMENTS = 2000
VOCABULARY = 300
LOG_QUERIES = 200
K_VALUES = (10, 100)
STORE_DEPTHS = (300, 300, 150, 150)


@pytest.fixture
def test_config():
    """Create a test configuration with safe defaults."""
    return Config(
        bm25_k1=0.9,
        bm25_b=0.4,
        qld_mu=1000.0,
        quant_bits=8,
        k_values=K_VALUES,
        sample_epsilon=1e-4,
        seed=7,
        max_log_query_terms=12,
        threads=2,
        log_level="DEBUG",
    )


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory):
    """Seeded Zipfian corpus shared by the whole session."""
    path = tmp_path_factory.mktemp("corpus") / "corpus.tsv"
    generate_corpus(path, CORPUS_DOCUMENTS, VOCABULARY, mean_length=25, seed=11)
    return path


@pytest.fixture(scope="session")
def log_path(tmp_path_factory):
    """Seeded query log over the corpus vocabulary."""
    path = tmp_path_factory.mktemp("log") / "queries.txt"
    generate_query_log(path, LOG_QUERIES, VOCABULARY, seed=12)
    return path


@pytest.fixture(scope="session")
def index(corpus_path) -> ImpactIndex:
    """BM25 index of the session corpus."""
    return build_index(corpus_path)


@pytest.fixture(scope="session")
def catalog(log_path, index) -> list[CatalogEntry]:
    """Mined catalog with flat depths for sizes 1 to 4."""
    stats = mine_subsets(log_path, index, 4)
    return assign_depths(stats, custom_policy(STORE_DEPTHS), max(K_VALUES))


@pytest.fixture(scope="session")
def store(index, catalog) -> PrefixStore:
    """Prefix store built from the mined catalog."""
    return build_store(index, catalog, K_VALUES)


@pytest.fixture(scope="session")
def queries(log_path, index) -> list[tuple[int, Query]]:
    """Log queries resolved against the session index."""
    return read_queries(log_path, index)


@pytest.fixture(scope="session")
def multi_term_queries(queries) -> list[Query]:
    """Log queries with at least two indexed terms."""
    return [query for _, query in queries if len(query) >= 2]


@pytest.fixture
def make_index() -> Callable[..., ImpactIndex]:
    """Build a precomputed-impact index from {term: [(doc, impact), ...]}."""

    def factory(
        postings: Mapping[str, Iterable[tuple[int, int]]],
        document_count: int | None = None,
    ) -> ImpactIndex:
        terms = list(postings)
        lists = []
        max_doc = -1
        for term_id, term in enumerate(terms):
            pairs = list(postings[term])
            lists.append(
                PostingList(
                    term_id,
                    [doc for doc, _ in pairs],
                    [impact for _, impact in pairs],
                )
            )
            max_doc = max([max_doc] + [doc for doc, _ in pairs])
        count = document_count if document_count is not None else max_doc + 1
        return ImpactIndex(
            terms,
            lists,
            count,
            [str(doc) for doc in range(count)],
            QuantizationMeta.precomputed(),
        )

    return factory


@pytest.fixture
def make_catalog() -> Callable[..., list[CatalogEntry]]:
    """Catalog entries for explicit keys, all with one depth."""

    def factory(keys: Iterable[SubsetKey], depth: int = 1000) -> list[CatalogEntry]:
        return [
            CatalogEntry(stats=SubsetStats(key=tuple(key), frequency=1), depth=depth)
            for key in keys
        ]

    return factory
