"""
Data models for quantized impact indexes and resolved queries.
"""

from collections.abc import Iterable, Sequence
from enum import StrEnum

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import ContractViolationError, IndexFormatError
from ..utils.hashing import fingerprint64
from ..utils.text import tokenize
from ..utils.validators import is_strictly_ascending

logger = structlog.get_logger(__name__)


class ScorerKind(StrEnum):
    """Scoring model that produced the raw impacts."""

    BM25 = "bm25"
    QLD = "qld"
    PRECOMPUTED = "precomputed"


class QuantizationMeta(BaseModel):
    """How raw term scores were mapped to integer impacts."""

    scorer: ScorerKind = Field(..., description="Scoring model")
    k1: float | None = Field(None, description="BM25 term frequency saturation")
    b: float | None = Field(None, description="BM25 length normalization")
    mu: float | None = Field(None, description="QLD Dirichlet prior")
    bits: int = Field(8, ge=1, le=16, description="Quantization bit width")
    global_max_raw_score: float = Field(
        0.0, description="Largest raw score over all postings"
    )

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_parameters(self) -> "QuantizationMeta":
        if self.scorer is ScorerKind.BM25 and (self.k1 is None or self.b is None):
            raise ValueError("BM25 quantization requires k1 and b")
        if self.scorer is ScorerKind.QLD and self.mu is None:
            raise ValueError("QLD quantization requires mu")
        if self.scorer is not ScorerKind.PRECOMPUTED and self.global_max_raw_score <= 0:
            raise ValueError("global_max_raw_score must be positive")
        return self

    @classmethod
    def precomputed(cls) -> "QuantizationMeta":
        return cls(scorer=ScorerKind.PRECOMPUTED, bits=16)

    def parameters(self) -> tuple[float, float]:
        """The two scorer parameters as stored in the binary header."""
        if self.scorer is ScorerKind.BM25:
            return float(self.k1 or 0.0), float(self.b or 0.0)
        if self.scorer is ScorerKind.QLD:
            return float(self.mu or 0.0), 0.0
        return 0.0, 0.0


class Query(BaseModel):
    """A query resolved against one index dictionary."""

    terms: frozenset[int] = Field(..., description="Known term IDs, deduplicated")
    words: tuple[str, ...] = Field(
        ..., description="Distinct query words in input order, known or not"
    )
    original_length: int = Field(..., ge=0, description="Token count before dedup")
    unknown_terms: int = Field(0, ge=0, description="Distinct words not indexed")

    model_config = ConfigDict(frozen=True)

    @property
    def sorted_terms(self) -> tuple[int, ...]:
        return tuple(sorted(self.terms))

    def __len__(self) -> int:
        return len(self.terms)


class PostingList:
    """DocID-ascending postings of one term with parallel impact array."""

    __slots__ = ("term", "docs", "impacts", "max_impact", "_python_lists")

    def __init__(self, term: int, docs: np.ndarray, impacts: np.ndarray):
        self.term = term
        self.docs = np.ascontiguousarray(docs, dtype=np.uint32)
        self.impacts = np.ascontiguousarray(impacts, dtype=np.uint16)
        self.max_impact = int(self.impacts.max()) if self.impacts.size else 0
        self._python_lists: tuple[list[int], list[int]] | None = None

    def as_lists(self) -> tuple[list[int], list[int]]:
        """Docs and impacts as Python lists, cached for cursor loops."""
        if self._python_lists is None:
            self._python_lists = (self.docs.tolist(), self.impacts.tolist())
        return self._python_lists

    def __len__(self) -> int:
        return int(self.docs.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PostingList):
            return NotImplemented
        return (
            self.term == other.term
            and np.array_equal(self.docs, other.docs)
            and np.array_equal(self.impacts, other.impacts)
        )

    def pairs(self) -> list[tuple[int, int]]:
        """Postings as (doc, impact) tuples."""
        return list(zip(self.docs.tolist(), self.impacts.tolist(), strict=True))


class ImpactIndex:
    """Immutable in-memory quantized inverted index."""

    def __init__(
        self,
        terms: Sequence[str],
        lists: Sequence[PostingList],
        document_count: int,
        doc_names: Sequence[str],
        quantization: QuantizationMeta,
        sample_rate: float = 1.0,
    ):
        self.terms: list[str] = list(terms)
        self.term_dictionary: dict[str, int] = {
            term: term_id for term_id, term in enumerate(self.terms)
        }
        self.lists: list[PostingList] = list(lists)
        self.document_count = document_count
        self.doc_names: list[str] = list(doc_names)
        self.quantization = quantization
        self.sample_rate = sample_rate

    @property
    def term_count(self) -> int:
        return len(self.lists)

    @property
    def total_postings(self) -> int:
        return sum(len(plist) for plist in self.lists)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImpactIndex):
            return NotImplemented
        return (
            self.terms == other.terms
            and self.document_count == other.document_count
            and self.doc_names == other.doc_names
            and self.quantization == other.quantization
            and self.sample_rate == other.sample_rate
            and self.lists == other.lists
        )

    def term_id(self, term: str) -> int | None:
        return self.term_dictionary.get(term)

    def posting_list(self, term: int) -> PostingList:
        return self.lists[term]

    def lookup(self, term: int, doc: int) -> int | None:
        """Impact of (term, doc), or None when the document lacks the term."""
        plist = self.lists[term]
        position = int(np.searchsorted(plist.docs, doc))
        if position < plist.docs.size and int(plist.docs[position]) == doc:
            return int(plist.impacts[position])
        return None

    def batch_impacts(self, term: int, docs: np.ndarray) -> np.ndarray:
        """Impacts for ascending docs in one forward pass; 0 marks absent."""
        docs = np.asarray(docs, dtype=np.int64)
        if not is_strictly_ascending(docs):
            raise ContractViolationError("batch lookup docs must be strictly ascending")
        plist = self.lists[term]
        found = np.zeros(docs.size, dtype=np.int64)
        if docs.size == 0 or plist.docs.size == 0:
            return found
        positions = np.searchsorted(plist.docs, docs)
        in_range = positions < plist.docs.size
        hits = np.zeros(docs.size, dtype=bool)
        hits[in_range] = plist.docs[positions[in_range]] == docs[in_range]
        found[hits] = plist.impacts[positions[hits]]
        return found

    def batch_lookup(self, term: int, docs: Sequence[int]) -> list[int | None]:
        """Element-wise lookup for strictly ascending docs."""
        impacts = self.batch_impacts(term, np.asarray(docs, dtype=np.int64))
        return [value if value else None for value in impacts.tolist()]

    def max_impact(self, term: int) -> int:
        return self.lists[term].max_impact

    def resolve_query(self, query: str | Iterable[str]) -> Query:
        """Resolve raw text or words into term IDs, dropping unknown words."""
        tokens = tokenize(query) if isinstance(query, str) else list(query)
        words = tuple(dict.fromkeys(tokens))
        terms = frozenset(
            term_id
            for term_id in (self.term_dictionary.get(word) for word in words)
            if term_id is not None
        )
        unknown = len(words) - len(terms)
        if unknown:
            logger.debug("Dropped unknown query terms", unknown=unknown)
        return Query(
            terms=terms,
            words=words,
            original_length=len(tokens),
            unknown_terms=unknown,
        )

    def query_for_terms(self, terms: Iterable[int]) -> Query:
        """Build a query directly from term IDs."""
        term_set = frozenset(terms)
        words = tuple(self.terms[term] for term in sorted(term_set))
        return Query(terms=term_set, words=words, original_length=len(words))

    def fingerprint(self) -> int:
        """64-bit identity of (document_count, term_count, postings, quantization)."""
        meta = self.quantization
        first, second = meta.parameters()
        return fingerprint64(
            self.document_count,
            self.term_count,
            self.total_postings,
            meta.scorer.value,
            first,
            second,
            meta.bits,
            meta.global_max_raw_score,
        )

    def validate(self) -> None:
        """Check ordering and range invariants of every posting list."""
        if len(self.doc_names) != self.document_count:
            raise IndexFormatError("doc_names length differs from document_count")

        for term_id, plist in enumerate(self.lists):
            if plist.term != term_id:
                raise IndexFormatError(f"list {term_id} carries term id {plist.term}")
            if plist.docs.size == 0:
                raise IndexFormatError(f"term {self.terms[term_id]!r} has no postings")
            if not is_strictly_ascending(plist.docs):
                raise IndexFormatError(
                    f"postings of {self.terms[term_id]!r} are not docID-ascending"
                )
            if int(plist.docs[-1]) >= self.document_count:
                raise IndexFormatError(
                    f"postings of {self.terms[term_id]!r} exceed document_count"
                )
            if int(plist.impacts.min()) < 1:
                raise IndexFormatError(
                    f"postings of {self.terms[term_id]!r} hold zero impacts"
                )
