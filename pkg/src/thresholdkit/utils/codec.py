"""
Binary containers for impact indexes (TKIX) and prefix stores (TKPS).

Both formats are little-endian, start with a 4-byte magic and a version
byte, and end with a CRC-32 of everything before it. FORMATS.md documents
the exact layouts.
"""

import struct
import zlib
from pathlib import Path
from typing import NamedTuple

import numpy as np
import structlog

from ..exceptions import (
    ChecksumMismatchError,
    IndexFormatError,
    StoreCompatibilityError,
    StoreFormatError,
    StoreOrderingError,
)
from ..models.catalog_models import SubsetKey
from ..models.index_models import ImpactIndex, PostingList, QuantizationMeta, ScorerKind
from ..models.prefix_models import Prefix, PrefixStore, QuantileRecord

logger = structlog.get_logger(__name__)

INDEX_MAGIC = b"TKIX"
INDEX_VERSION = 2
STORE_MAGIC = b"TKPS"
STORE_VERSION = 1

_INDEX_HEADER = struct.Struct("<4sBBBddddIIQ")
_STORE_HEADER = struct.Struct("<4sBQ")
_CHECKSUM = struct.Struct("<I")

_SCORER_CODES = {ScorerKind.BM25: 0, ScorerKind.QLD: 1, ScorerKind.PRECOMPUTED: 2}
_SCORERS = {code: kind for kind, code in _SCORER_CODES.items()}

FLAG_HAS_PREFIX = 0x01


class _Reader:
    """Bounds-checked cursor over a byte buffer."""

    def __init__(self, data: bytes, error: type[Exception]):
        self.data = data
        self.offset = 0
        self.error = error

    @property
    def remaining(self) -> int:
        return len(self.data) - self.offset

    def take(self, size: int) -> bytes:
        if size < 0 or self.offset + size > len(self.data):
            raise self.error(f"truncated file at byte {self.offset}")
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, layout: struct.Struct) -> tuple:
        return layout.unpack(self.take(layout.size))

    def scalar(self, fmt: str) -> int:
        return int(struct.unpack(fmt, self.take(struct.calcsize(fmt)))[0])

    def array(self, dtype: str, count: int) -> np.ndarray:
        width = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(width * count), dtype=dtype).copy()

    def text(self) -> str:
        length = self.scalar("<H")
        try:
            return self.take(length).decode("utf-8")
        except UnicodeDecodeError as e:
            raise self.error(f"invalid UTF-8 string: {e}") from e


def _short_string(value: str, error: type[Exception]) -> bytes:
    encoded = value.encode("utf-8")
    if len(encoded) > 0xFFFF:
        raise error(f"string too long to encode: {value[:40]!r}...")
    return struct.pack("<H", len(encoded)) + encoded


def _seal(body: bytes) -> bytes:
    return body + _CHECKSUM.pack(zlib.crc32(body) & 0xFFFFFFFF)


def _verify_checksum(data: bytes) -> None:
    (stored,) = _CHECKSUM.unpack(data[-_CHECKSUM.size :])
    if zlib.crc32(data[: -_CHECKSUM.size]) & 0xFFFFFFFF != stored:
        raise ChecksumMismatchError("checksum mismatch")


# Index container


def encode_index(index: ImpactIndex) -> bytes:
    """Serialize an index into the TKIX container."""
    meta = index.quantization
    first, second = meta.parameters()
    header = _INDEX_HEADER.pack(
        INDEX_MAGIC,
        INDEX_VERSION,
        _SCORER_CODES[meta.scorer],
        meta.bits,
        first,
        second,
        meta.global_max_raw_score,
        index.sample_rate,
        index.document_count,
        index.term_count,
        index.total_postings,
    )
    names = b"".join(_short_string(name, IndexFormatError) for name in index.doc_names)
    terms = b"".join(_short_string(term, IndexFormatError) for term in index.terms)

    lengths = np.array([len(plist) for plist in index.lists], dtype=np.uint64)
    offsets = np.concatenate(([0], np.cumsum(lengths))).astype("<u8")
    if index.lists:
        docs = np.concatenate([plist.docs for plist in index.lists]).astype("<u4")
        impacts = np.concatenate([plist.impacts for plist in index.lists]).astype("<u2")
    else:
        docs = np.zeros(0, dtype="<u4")
        impacts = np.zeros(0, dtype="<u2")

    body = b"".join(
        [header, names, terms, offsets.tobytes(), docs.tobytes(), impacts.tobytes()]
    )
    return _seal(body)


def decode_index(data: bytes) -> ImpactIndex:
    """Parse and validate a TKIX container."""
    if len(data) < _INDEX_HEADER.size + _CHECKSUM.size:
        raise IndexFormatError("file too short for an index header")
    if data[:4] != INDEX_MAGIC:
        raise IndexFormatError(f"bad magic {data[:4]!r}")
    _verify_checksum(data)

    reader = _Reader(data[: -_CHECKSUM.size], IndexFormatError)
    (
        _magic,
        version,
        scorer_code,
        bits,
        first,
        second,
        global_max,
        sample_rate,
        document_count,
        term_count,
        total_postings,
    ) = reader.unpack(_INDEX_HEADER)
    if version != INDEX_VERSION:
        raise IndexFormatError(f"unsupported index version {version}")
    if scorer_code not in _SCORERS:
        raise IndexFormatError(f"unknown scorer code {scorer_code}")
    if not 0.0 < sample_rate <= 1.0:
        raise IndexFormatError(f"sample rate outside (0, 1]: {sample_rate}")

    scorer = _SCORERS[scorer_code]
    try:
        if scorer is ScorerKind.BM25:
            meta = QuantizationMeta(
                scorer=scorer,
                k1=first,
                b=second,
                bits=bits,
                global_max_raw_score=global_max,
            )
        elif scorer is ScorerKind.QLD:
            meta = QuantizationMeta(
                scorer=scorer, mu=first, bits=bits, global_max_raw_score=global_max
            )
        else:
            meta = QuantizationMeta(
                scorer=scorer, bits=bits, global_max_raw_score=global_max
            )
    except ValueError as e:
        raise IndexFormatError(f"invalid quantization header: {e}") from e

    doc_names = [reader.text() for _ in range(document_count)]
    terms = [reader.text() for _ in range(term_count)]
    offsets = reader.array("<u8", term_count + 1).astype(np.int64)
    if offsets[0] != 0 or offsets[-1] != total_postings or np.any(np.diff(offsets) < 0):
        raise IndexFormatError("inconsistent list offsets")
    docs = reader.array("<u4", total_postings)
    impacts = reader.array("<u2", total_postings)
    if reader.remaining:
        raise IndexFormatError(f"{reader.remaining} trailing bytes after postings")

    lists = [
        PostingList(
            term_id,
            docs[offsets[term_id] : offsets[term_id + 1]],
            impacts[offsets[term_id] : offsets[term_id + 1]],
        )
        for term_id in range(term_count)
    ]
    index = ImpactIndex(
        terms, lists, document_count, doc_names, meta, sample_rate=sample_rate
    )
    index.validate()
    return index


def write_index(index: ImpactIndex, path: str | Path) -> int:
    """Write an index container, returning the byte count."""
    data = encode_index(index)
    Path(path).write_bytes(data)
    logger.info("Index written", path=str(path), bytes=len(data))
    return len(data)


def read_index(path: str | Path) -> ImpactIndex:
    """Read and validate an index container."""
    return decode_index(Path(path).read_bytes())


# Prefix store container


class StoreSections(NamedTuple):
    """Encoded store sections; prefix blobs grouped by subset size."""

    header: bytes
    dictionary: bytes
    quantiles: bytes
    prefixes: dict[int, bytes]


def _entry_dtype(size: int) -> np.dtype:
    return np.dtype([("doc", "<u4"), ("scores", "<u2", (size,))])


def _encode_prefix(prefix: Prefix) -> bytes:
    entries = np.zeros(len(prefix), dtype=_entry_dtype(len(prefix.subset)))
    entries["doc"] = prefix.docs
    entries["scores"] = prefix.scores
    return struct.pack("<I", len(prefix)) + entries.tobytes()


def encode_store_sections(store: PrefixStore) -> StoreSections:
    """Encode each store section separately."""
    keys = list(store.quantiles)
    header = b"".join(
        [
            _STORE_HEADER.pack(STORE_MAGIC, STORE_VERSION, store.index_fingerprint),
            _short_string(store.policy_name, StoreFormatError),
            struct.pack("<H", len(store.k_values)),
            struct.pack(f"<{len(store.k_values)}I", *store.k_values),
            struct.pack("<I", len(keys)),
        ]
    )

    dictionary = bytearray()
    quantiles = bytearray()
    prefixes: dict[int, bytearray] = {}
    blob_offset = 0
    for key in keys:
        prefix = store.prefixes.get(key)
        flags = FLAG_HAS_PREFIX if prefix is not None else 0
        dictionary += struct.pack(f"<B{len(key)}I", len(key), *key)
        dictionary += struct.pack("<BQ", flags, blob_offset if prefix is not None else 0)
        thresholds = store.quantiles[key].thresholds
        quantiles += struct.pack(
            f"<{len(store.k_values)}I", *(thresholds[k] for k in store.k_values)
        )
        if prefix is not None:
            blob = _encode_prefix(prefix)
            prefixes.setdefault(len(key), bytearray()).extend(blob)
            blob_offset += len(blob)

    return StoreSections(
        header=header,
        dictionary=bytes(dictionary),
        quantiles=bytes(quantiles),
        prefixes={size: bytes(blob) for size, blob in sorted(prefixes.items())},
    )


def encode_store(store: PrefixStore) -> bytes:
    """Serialize a prefix store into the TKPS container."""
    sections = encode_store_sections(store)
    body = b"".join(
        [sections.header, sections.dictionary, sections.quantiles]
        + list(sections.prefixes.values())
    )
    return _seal(body)


def _check_prefix_order(key: SubsetKey, prefix: Prefix) -> None:
    if prefix.scores.size and int(prefix.scores.min()) < 1:
        raise StoreOrderingError(f"prefix {key} holds a zero term score")
    if len(prefix) < 2:
        return
    totals = prefix.totals
    docs = prefix.docs.astype(np.int64)
    falling = totals[1:] < totals[:-1]
    tied = (totals[1:] == totals[:-1]) & (docs[1:] > docs[:-1])
    if not np.all(falling | tied):
        raise StoreOrderingError(f"prefix {key} violates descending-total order")


def decode_store(data: bytes, index: ImpactIndex | None = None) -> PrefixStore:
    """Parse a TKPS container, validating ordering, checksum and fingerprint."""
    if len(data) < _STORE_HEADER.size + _CHECKSUM.size:
        raise StoreFormatError("file too short for a store header")
    if data[:4] != STORE_MAGIC:
        raise StoreFormatError(f"bad magic {data[:4]!r}")

    reader = _Reader(data[: -_CHECKSUM.size], StoreFormatError)
    _magic, version, fingerprint = reader.unpack(_STORE_HEADER)
    if version != STORE_VERSION:
        raise StoreFormatError(f"unsupported store version {version}")
    policy_name = reader.text()
    k_count = reader.scalar("<H")
    k_values = tuple(int(k) for k in reader.array("<u4", k_count))
    subset_count = reader.scalar("<I")

    entries: list[tuple[SubsetKey, bool, int]] = []
    for _ in range(subset_count):
        size = reader.scalar("<B")
        if not 1 <= size <= 4:
            raise StoreFormatError(f"invalid subset size {size}")
        key = tuple(int(term) for term in reader.array("<u4", size))
        if any(b <= a for a, b in zip(key, key[1:], strict=False)):
            raise StoreFormatError(f"subset key {key} is not strictly ascending")
        flags = reader.scalar("<B")
        offset = reader.scalar("<Q")
        entries.append((key, bool(flags & FLAG_HAS_PREFIX), offset))

    quantiles: dict[SubsetKey, QuantileRecord] = {}
    for key, _, _ in entries:
        values = reader.array("<u4", k_count).astype(np.int64)
        if np.any(values[1:] > values[:-1]):
            raise StoreOrderingError(f"quantiles of {key} increase with k")
        quantiles[key] = QuantileRecord(key, dict(zip(k_values, values.tolist(), strict=True)))

    section_start = reader.offset
    prefixes: dict[SubsetKey, Prefix] = {}
    for key, has_prefix, offset in entries:
        if not has_prefix:
            continue
        if reader.offset - section_start != offset:
            raise StoreFormatError(f"prefix blob of {key} is not at its recorded offset")
        count = reader.scalar("<I")
        dtype = _entry_dtype(len(key))
        raw = np.frombuffer(reader.take(dtype.itemsize * count), dtype=dtype)
        prefix = Prefix(key, raw["doc"].copy(), raw["scores"].copy())
        _check_prefix_order(key, prefix)
        prefixes[key] = prefix
    if reader.remaining:
        raise StoreFormatError(f"{reader.remaining} trailing bytes after prefixes")

    _verify_checksum(data)

    if index is not None and index.fingerprint() != fingerprint:
        logger.error(
            "Store fingerprint mismatch",
            store=f"{fingerprint:016x}",
            index=f"{index.fingerprint():016x}",
        )
        raise StoreCompatibilityError("store was built against a different index")
    if index is not None:
        for key, _, _ in entries:
            if key[-1] >= index.term_count:
                raise StoreFormatError(
                    f"subset key {key} names a term beyond the index's {index.term_count}"
                )

    return PrefixStore(k_values, quantiles, prefixes, policy_name, fingerprint)


def write_store(store: PrefixStore, path: str | Path) -> int:
    """Write a prefix store container, returning the byte count."""
    data = encode_store(store)
    Path(path).write_bytes(data)
    logger.info("Prefix store written", path=str(path), bytes=len(data))
    return len(data)


def read_store(path: str | Path, index: ImpactIndex | None = None) -> PrefixStore:
    """Read a prefix store, optionally checking it against an index."""
    return decode_store(Path(path).read_bytes(), index)
