"""
Index construction: corpus ingestion with BM25/QLD quantization, learned
impact import and export, and hash-based document sampling.
"""

from collections import Counter
from pathlib import Path

import numpy as np
import structlog

from ..exceptions import (
    CorpusFormatError,
    EmptyCorpusError,
    ImpactFormatError,
    ImpactRangeError,
)
from ..models.index_models import ImpactIndex, PostingList, QuantizationMeta, ScorerKind
from ..utils.hashing import inclusion_mask
from ..utils.scoring import bm25_raw, qld_raw, quantize
from ..utils.text import tokenize
from ..utils.validators import (
    MAX_IMPACT,
    is_strictly_ascending,
    validate_quant_bits,
    validate_sample_rate,
)

logger = structlog.get_logger(__name__)


def _read_corpus(corpus_path: str | Path) -> tuple[list[str], list[Counter[str]]]:
    """Parse `external_docid<TAB>text` lines; repeated ids extend one document."""
    doc_names: list[str] = []
    doc_ids: dict[str, int] = {}
    counters: list[Counter[str]] = []

    with open(corpus_path, encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            line = raw_line.rstrip("\r\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise CorpusFormatError("missing tab separator", line_number)
            name, text = line.split("\t", 1)
            if not name:
                raise CorpusFormatError("empty document id", line_number)

            doc_id = doc_ids.get(name)
            if doc_id is None:
                doc_id = len(doc_names)
                doc_ids[name] = doc_id
                doc_names.append(name)
                counters.append(Counter())
            counters[doc_id].update(tokenize(text))

    if not doc_names:
        raise EmptyCorpusError(f"corpus {corpus_path} holds no documents")
    return doc_names, counters


def build_index(
    corpus_path: str | Path,
    scorer: ScorerKind = ScorerKind.BM25,
    quant_bits: int = 8,
    *,
    k1: float = 0.9,
    b: float = 0.4,
    mu: float = 1000.0,
) -> ImpactIndex:
    """Build a globally quantized impact index from a TSV corpus."""
    validate_quant_bits(quant_bits)
    if scorer is ScorerKind.PRECOMPUTED:
        raise ValueError("precomputed impacts are loaded with load_precomputed")

    doc_names, counters = _read_corpus(corpus_path)
    document_count = len(doc_names)
    doc_lengths = np.array([sum(c.values()) for c in counters], dtype=np.int64)
    collection_len = int(doc_lengths.sum())
    if collection_len == 0:
        raise EmptyCorpusError(f"corpus {corpus_path} holds no indexable terms")

    # Documents are visited in id order, so every list comes out ascending.
    postings: dict[str, tuple[list[int], list[int]]] = {}
    for doc_id, counter in enumerate(counters):
        for term, tf in counter.items():
            docs, tfs = postings.setdefault(term, ([], []))
            docs.append(doc_id)
            tfs.append(tf)

    avg_len = collection_len / document_count
    raw_scores: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for term, (docs, tfs) in postings.items():
        doc_array = np.array(docs, dtype=np.int64)
        tf_array = np.array(tfs, dtype=np.int64)
        if scorer is ScorerKind.BM25:
            raw = bm25_raw(
                tf_array,
                doc_lengths[doc_array],
                len(docs),
                document_count,
                avg_len,
                k1,
                b,
            )
        else:
            raw = qld_raw(
                tf_array,
                doc_lengths[doc_array],
                int(tf_array.sum()),
                collection_len,
                mu,
            )
        positive = raw > 0
        if positive.any():
            raw_scores[term] = (doc_array[positive], raw[positive])

    if not raw_scores:
        raise EmptyCorpusError("no posting has a positive raw score")

    global_max = max(float(raw.max()) for _, raw in raw_scores.values())
    if scorer is ScorerKind.BM25:
        meta = QuantizationMeta(
            scorer=scorer, k1=k1, b=b, bits=quant_bits, global_max_raw_score=global_max
        )
    else:
        meta = QuantizationMeta(
            scorer=scorer, mu=mu, bits=quant_bits, global_max_raw_score=global_max
        )

    terms = list(raw_scores)
    lists = [
        PostingList(term_id, docs, quantize(raw, global_max, quant_bits))
        for term_id, (docs, raw) in enumerate(raw_scores.values())
    ]
    index = ImpactIndex(terms, lists, document_count, doc_names, meta)
    index.validate()

    logger.info(
        "Index built",
        corpus=str(corpus_path),
        scorer=scorer.value,
        documents=document_count,
        terms=index.term_count,
        postings=index.total_postings,
    )
    return index


def load_precomputed(index_path: str | Path) -> ImpactIndex:
    """Load learned impacts from the impact-exchange format.

    Integer docids are taken as internal ids verbatim; any non-integer docid
    switches the file to first-mention remapping.
    """
    lines: list[tuple[int, str, list[tuple[str, str]]]] = []
    seen_terms: set[str] = set()

    with open(index_path, encoding="utf-8") as handle:
        for line_number, raw_line in enumerate(handle, start=1):
            line = raw_line.rstrip("\r\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise ImpactFormatError(f"line {line_number}: missing tab separator")
            term, payload = line.split("\t", 1)
            if not term:
                raise ImpactFormatError(f"line {line_number}: empty term")
            if term in seen_terms:
                raise ImpactFormatError(f"line {line_number}: duplicate term {term!r}")
            seen_terms.add(term)

            pairs: list[tuple[str, str]] = []
            for token in payload.split():
                doc, sep, impact = token.rpartition(":")
                if not sep or not doc or not impact:
                    raise ImpactFormatError(
                        f"line {line_number}: malformed posting {token!r}"
                    )
                pairs.append((doc, impact))
            if not pairs:
                raise ImpactFormatError(f"line {line_number}: term {term!r} has no postings")
            lines.append((line_number, term, pairs))

    if not lines:
        raise ImpactFormatError(f"impact file {index_path} holds no terms")

    numeric = all(
        doc.isascii() and doc.isdigit() for _, _, pairs in lines for doc, _ in pairs
    )
    doc_ids: dict[str, int] = {}

    def resolve(doc: str) -> int:
        if numeric:
            return int(doc)
        return doc_ids.setdefault(doc, len(doc_ids))

    terms: list[str] = []
    lists: list[PostingList] = []
    max_doc = -1
    for line_number, term, pairs in lines:
        docs = np.array([resolve(doc) for doc, _ in pairs], dtype=np.int64)
        try:
            impacts = np.array([int(impact) for _, impact in pairs], dtype=np.int64)
        except ValueError as e:
            raise ImpactFormatError(f"line {line_number}: non-integer impact") from e
        if impacts.min() < 1 or impacts.max() > MAX_IMPACT:
            raise ImpactRangeError(
                f"line {line_number}: impacts must lie in [1, {MAX_IMPACT}]"
            )
        if not is_strictly_ascending(docs):
            raise ImpactFormatError(f"line {line_number}: docids are not ascending")
        if docs.max() > np.iinfo(np.uint32).max:
            raise ImpactFormatError(f"line {line_number}: docid exceeds 32 bits")
        max_doc = max(max_doc, int(docs[-1]))
        lists.append(PostingList(len(terms), docs, impacts))
        terms.append(term)

    if numeric:
        document_count = max_doc + 1
        doc_names = [str(doc) for doc in range(document_count)]
    else:
        document_count = len(doc_ids)
        doc_names = list(doc_ids)

    index = ImpactIndex(
        terms, lists, document_count, doc_names, QuantizationMeta.precomputed()
    )
    index.validate()
    logger.info(
        "Precomputed impacts loaded",
        path=str(index_path),
        documents=document_count,
        terms=index.term_count,
        remapped=not numeric,
    )
    return index


def write_impacts(index: ImpactIndex, path: str | Path) -> None:
    """Export an index in the impact-exchange format using internal docids."""
    with open(path, "w", encoding="utf-8") as handle:
        for term, plist in zip(index.terms, index.lists, strict=True):
            postings = " ".join(f"{doc}:{impact}" for doc, impact in plist.pairs())
            handle.write(f"{term}\t{postings}\n")
    logger.info("Impacts exported", path=str(path), terms=index.term_count)


def sample_index(index: ImpactIndex, rate: float, seed: int) -> ImpactIndex:
    """Keep each document independently with probability `rate`.

    Inclusion is a pure function of (seed, docID); kept documents are
    renumbered densely in their original order and impacts are unchanged.
    The sample records its rate relative to the full collection.
    """
    validate_sample_rate(rate)
    mask = inclusion_mask(seed, index.document_count, rate)
    renumber = np.cumsum(mask, dtype=np.int64) - 1

    terms: list[str] = []
    lists: list[PostingList] = []
    for term, plist in zip(index.terms, index.lists, strict=True):
        keep = mask[plist.docs]
        if not keep.any():
            continue
        lists.append(
            PostingList(len(terms), renumber[plist.docs[keep]], plist.impacts[keep])
        )
        terms.append(term)

    doc_names = [name for name, kept in zip(index.doc_names, mask, strict=True) if kept]
    sample = ImpactIndex(
        terms,
        lists,
        len(doc_names),
        doc_names,
        index.quantization,
        sample_rate=index.sample_rate * rate,
    )
    sample.validate()
    logger.info(
        "Index sampled",
        rate=rate,
        seed=seed,
        documents=sample.document_count,
        terms=sample.term_count,
    )
    return sample
