"""
Tests for the binary index and prefix store containers.
"""

import pytest

from thresholdkit.exceptions import (
    ChecksumMismatchError,
    IndexFormatError,
    StoreCompatibilityError,
    StoreFormatError,
    StoreOrderingError,
)
from thresholdkit.models.prefix_models import PrefixStore, QuantileRecord
from thresholdkit.services.index_builder import sample_index
from thresholdkit.services.prefix_service import build_store, store_size_report
from thresholdkit.utils.codec import (
    decode_index,
    decode_store,
    encode_index,
    encode_store,
    read_index,
    read_store,
    write_index,
    write_store,
)


@pytest.fixture
def tiny_index(make_index):
    """Two-term index with a tie in one list."""
    return make_index({"t1": [(0, 5), (1, 9), (2, 9)], "t2": [(1, 4), (3, 2)]})


@pytest.fixture
def tiny_store(tiny_index, make_catalog):
    """Store with a single-term prefix of depth 2 as its only prefix."""
    return build_store(tiny_index, make_catalog([(0,)], depth=2), (1, 2))


class TestIndexContainer:
    """Test suite for the TKIX container."""

    def test_round_trip(self, tmp_path, index):
        """Test that a written index reads back equal."""
        path = tmp_path / "index.tkix"

        written = write_index(index, path)

        assert written == path.stat().st_size
        assert read_index(path) == index

    def test_bad_magic(self, tiny_index):
        """Test that a foreign file is rejected."""
        data = b"NOPE" + encode_index(tiny_index)[4:]

        with pytest.raises(IndexFormatError):
            decode_index(data)

    def test_flipped_byte(self, tiny_index):
        """Test that a corrupted posting fails the checksum."""
        data = bytearray(encode_index(tiny_index))
        data[-6] ^= 0xFF

        with pytest.raises(ChecksumMismatchError):
            decode_index(bytes(data))

    def test_sample_rate_round_trip(self, index):
        """Test that a sample index keeps its rate through the container."""
        sample = sample_index(index, 0.25, seed=8)

        decoded = decode_index(encode_index(sample))

        assert decoded.sample_rate == 0.25
        assert decoded == sample

    def test_truncated(self, tiny_index):
        """Test that a truncated file is a format error."""
        data = encode_index(tiny_index)

        with pytest.raises(IndexFormatError):
            decode_index(data[: len(data) // 2])


class TestStoreContainer:
    """Test suite for the TKPS container."""

    def test_round_trip(self, tmp_path, index, store):
        """Test that a written store reads back equal."""
        path = tmp_path / "store.tkps"

        write_store(store, path)

        assert read_store(path, index) == store

    def test_empty_store(self, tiny_index):
        """Test that an empty store encodes to a valid minimal file."""
        empty = PrefixStore((10,), {}, {}, "custom", tiny_index.fingerprint())

        decoded = decode_store(encode_store(empty), tiny_index)

        assert decoded == empty
        assert decoded.max_subset_size == 0

    def test_flipped_score_breaks_ordering(self, tiny_store):
        """Test that a raised score in the last entry fails ordering validation."""
        data = bytearray(encode_store(tiny_store))
        # Last entry: doc u32 then one u16 score, followed by the checksum.
        data[-5] = 0xFF

        with pytest.raises(StoreOrderingError):
            decode_store(bytes(data))

    def test_zero_score_is_rejected(self, tiny_store):
        """Test that a prefix entry with a zero term score fails validation."""
        data = bytearray(encode_store(tiny_store))
        data[-6] = 0
        data[-5] = 0

        with pytest.raises(StoreOrderingError):
            decode_store(bytes(data))

    def test_flipped_policy_byte_fails_checksum(self, tiny_store):
        """Test that corruption outside the ordered sections fails the checksum."""
        data = bytearray(encode_store(tiny_store))
        # Magic (4), version (1), fingerprint (8), name length (2), then the name.
        data[15] = ord("x")

        with pytest.raises(ChecksumMismatchError):
            decode_store(bytes(data))

    def test_fingerprint_mismatch(self, tiny_store, make_index):
        """Test that a store is rejected against a different index."""
        other = make_index({"t1": [(0, 5)]})

        with pytest.raises(StoreCompatibilityError):
            decode_store(encode_store(tiny_store), other)

    def test_term_beyond_index(self, tiny_index):
        """Test that a subset naming a term id the index lacks is rejected."""
        store = PrefixStore(
            (10,),
            {(5,): QuantileRecord((5,), {10: 3})},
            {},
            "custom",
            tiny_index.fingerprint(),
        )
        data = encode_store(store)

        assert decode_store(data) == store
        with pytest.raises(StoreFormatError, match="beyond"):
            decode_store(data, tiny_index)

    def test_decodes_without_index(self, tiny_store):
        """Test that the fingerprint check is skipped when no index is given."""
        assert decode_store(encode_store(tiny_store)) == tiny_store

    def test_truncated(self, tiny_store):
        """Test that a truncated store is a format error."""
        data = encode_store(tiny_store)

        with pytest.raises(StoreFormatError):
            decode_store(data[:-9])

    def test_bad_magic(self, tiny_store):
        """Test that a foreign file is rejected."""
        with pytest.raises(StoreFormatError):
            decode_store(b"TKIX" + encode_store(tiny_store)[4:])


class TestStoreSizeReport:
    """Test suite for store_size_report."""

    def test_single_prefix(self, tiny_index, make_catalog):
        """Test byte counts of one single-term prefix of depth 3."""
        store = build_store(tiny_index, make_catalog([(0,)], depth=3), (1,))

        report = store_size_report(store)

        # Entry count (u32) plus three (u32 doc, u16 score) entries.
        assert report.prefixes_by_size == {1: 4 + 3 * 6}
        # Size byte, one term id, flags byte and blob offset.
        assert report.dictionary == 1 + 4 + 1 + 8
        assert report.quantiles == 4
        assert report.checksum == 4
        assert report.total == len(encode_store(store))

    def test_empty_store(self, tiny_index):
        """Test that an empty store has empty data sections."""
        empty = PrefixStore((10,), {}, {}, "custom", tiny_index.fingerprint())

        report = store_size_report(empty)

        assert report.dictionary == 0
        assert report.quantiles == 0
        assert report.prefixes == 0
        assert report.total == len(encode_store(empty))
