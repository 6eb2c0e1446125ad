import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linecodec.bitstream import (BitReader, BitWriter, GolombContext,
                                 StreamFormatError, StreamHeader, StreamReader,
                                 StreamTruncatedError, StreamWriter, encode_codes,
                                 golomb_decode, golomb_encode, golomb_k,
                                 unzigzag, zigzag)
from linecodec.cube import SampleOrder
from linecodec.pipeline import CubeCodes, LinePlanes


class TestZigzag:
    def test_definition(self):
        assert [zigzag(e) for e in (0, 1, -1, -2)] == [0, 2, 1, 3]

    def test_exhaustive_bijection(self):
        for e in range(-1000, 1001):
            assert unzigzag(zigzag(e)) == e

    def test_monotone_within_sign(self):
        pos = [zigzag(e) for e in range(0, 50)]
        neg = [zigzag(e) for e in range(-1, -50, -1)]
        assert pos == sorted(pos) and neg == sorted(neg)

    @given(st.integers(min_value=-(1 << 17), max_value=1 << 17))
    @settings(max_examples=200)
    def test_bijection_property(self, e):
        assert unzigzag(zigzag(e)) == e


class TestBitIO:
    def test_roundtrip_mixed_widths(self):
        rng = np.random.default_rng(0)
        writer = BitWriter()
        fields = []
        for _ in range(500):
            n = int(rng.integers(1, 25))
            v = int(rng.integers(0, 1 << n))
            fields.append((v, n))
            writer.write_bits(v, n)
        reader = BitReader(writer.getvalue())
        for v, n in fields:
            assert reader.read_bits(n) == v

    def test_truncation_raises(self):
        reader = BitReader(b"\xff")
        reader.read_bits(8)
        with pytest.raises(StreamTruncatedError):
            reader.read_bit()

    def test_msb_first(self):
        writer = BitWriter()
        writer.write_bits(0b101, 3)
        assert writer.getvalue() == bytes([0b10100000])


class TestGolombK:
    def test_zero_accumulator(self):
        assert golomb_k(GolombContext(a=0, g=1)) == 0

    def test_direct_search(self):
        ctx = GolombContext(a=10, g=2)
        # largest k with 2 * 2^k <= 10
        best = max(k for k in range(17) if 2 * (1 << k) <= 10)
        assert golomb_k(ctx) == best == 2

    def test_cap(self):
        assert golomb_k(GolombContext(a=(1 << 18) * 3, g=3)) == 16

    def test_accumulator_bound_invariant(self):
        rng = np.random.default_rng(1)
        ctx = GolombContext()
        for _ in range(5000):
            v = int(rng.integers(0, 1 << 18))
            ctx.update(v)
            assert ctx.a <= ctx.g * (1 << 18)
            assert ctx.g >= 1


class TestGolombCodec:
    def test_zero_with_k0_is_single_one_bit(self):
        writer = BitWriter()
        golomb_encode(GolombContext(a=0, g=1), 0, writer)
        assert writer.bit_count == 1
        assert writer.getvalue() == b"\x80"

    def test_known_codeword(self):
        # a=2, g=1 gives k=1; v=5 -> q=2 -> "001" + low bit "1"
        writer = BitWriter()
        golomb_encode(GolombContext(a=2, g=1), 5, writer)
        assert writer.bit_count == 4
        assert writer.getvalue() == bytes([0b00110000])

    def test_escape_bound(self):
        # worst value with k=0 escapes: 47 zeros + 1 + 18 raw bits
        writer = BitWriter()
        golomb_encode(GolombContext(a=0, g=1), (1 << 18) - 1, writer)
        assert writer.bit_count == 47 + 1 + 18

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            golomb_encode(GolombContext(), 1 << 18, BitWriter())

    def test_large_roundtrip_and_context_identity(self):
        rng = np.random.default_rng(2)
        values = np.concatenate([
            rng.integers(0, 64, 40000),
            rng.integers(0, 1 << 12, 40000),
            rng.integers(0, 1 << 18, 20000),
        ])
        rng.shuffle(values)
        enc_ctx = GolombContext()
        writer = BitWriter()
        trace = []
        for v in values:
            golomb_encode(enc_ctx, int(v), writer)
            trace.append((enc_ctx.a, enc_ctx.g))
        dec_ctx = GolombContext()
        reader = BitReader(writer.getvalue())
        for i, v in enumerate(values):
            assert golomb_decode(dec_ctx, reader) == int(v)
            assert (dec_ctx.a, dec_ctx.g) == trace[i]

    def test_rate_floor(self):
        # all-zero residuals still cost one bit each
        n = 100_000
        ctx = GolombContext()
        writer = BitWriter()
        for _ in range(n):
            golomb_encode(ctx, 0, writer)
        assert writer.bit_count >= n
        assert writer.bit_count / n < 1.01


def _header(nx=3, ny=2, nz=2):
    return StreamHeader(nx=nx, ny=ny, nz=nz, order=SampleOrder.BIP, m=0,
                        config_digest=1, weights_checksum=2, guard_tau=1e-3,
                        cube_checksum=3)


class TestHeader:
    def test_roundtrip(self):
        h = _header()
        back = StreamHeader.unpack(h.pack())
        assert back == StreamHeader.unpack(h.pack())
        assert (back.nx, back.ny, back.nz, back.order) == (3, 2, 2, SampleOrder.BIP)

    def test_bad_magic(self):
        with pytest.raises(StreamFormatError):
            StreamHeader.unpack(b"NOPE" + _header().pack()[4:])

    def test_short_stream(self):
        with pytest.raises(StreamTruncatedError):
            StreamHeader.unpack(b"LRC1\x01")


def _random_codes(rng, nx, ny, nz, eps_scale=200):
    dpcm = rng.integers(-eps_scale, eps_scale, size=(nz, nx)).astype(np.int32)
    lines = []
    for _ in range(ny - 1):
        hit = rng.random((nz, nx)) < 0.1
        side = np.logical_and(hit, rng.random((nz, nx)) < 0.5)
        lines.append(LinePlanes(
            eps=rng.integers(-eps_scale, eps_scale, size=(nz, nx)).astype(np.int32),
            guard_hit=hit, guard_side=side))
    return CubeCodes(nx=nx, ny=ny, nz=nz, dpcm=dpcm, lines=lines)


class TestStreamRoundtrip:
    def test_degenerate_single_line_cube(self):
        # ny=1 is below the codec's cube minimum but the container itself
        # handles a header plus DPCM section only
        rng = np.random.default_rng(3)
        codes = _random_codes(rng, nx=4, ny=1, nz=3)
        data = encode_codes(_header(4, 1, 3), codes)
        reader = StreamReader(data)
        assert np.array_equal(reader.read_dpcm(4, 3), codes.dpcm)

    def test_planes_roundtrip(self):
        rng = np.random.default_rng(4)
        nx, ny, nz = 5, 4, 3
        codes = _random_codes(rng, nx, ny, nz)
        data = encode_codes(_header(nx, ny, nz), codes)

        reader = StreamReader(data)
        assert np.array_equal(reader.read_dpcm(nx, nz), codes.dpcm)
        for planes in codes.lines:
            reader.begin_line()
            for z in range(nz):
                for x in range(nx):
                    if planes.guard_hit[z, x]:
                        assert reader.read_guard_bit(z) == planes.guard_side[z, x]
                    assert reader.read_eps(z) == planes.eps[z, x]

    def test_truncated_stream_raises(self):
        rng = np.random.default_rng(5)
        codes = _random_codes(rng, 4, 3, 3)
        data = encode_codes(_header(4, 3, 3), codes)
        reader = StreamReader(data[: len(data) // 2])
        with pytest.raises(StreamTruncatedError):
            reader.read_dpcm(4, 3)
            for planes in codes.lines:
                reader.begin_line()
                for z in range(3):
                    for x in range(4):
                        if planes.guard_hit[z, x]:
                            reader.read_guard_bit(z)
                        reader.read_eps(z)

    def test_writer_tracks_per_band_bits(self):
        rng = np.random.default_rng(6)
        codes = _random_codes(rng, 4, 3, 3)
        writer = StreamWriter(_header(4, 3, 3))
        writer.write_dpcm(codes.dpcm)
        for planes in codes.lines:
            writer.write_line(planes)
        data = writer.finalize()
        assert writer.band_bits.sum() == writer.payload_bits
        assert len(data) == StreamHeader.size() + (writer.payload_bits + 7) // 8
        guard_total = sum(int(p.guard_hit.sum()) for p in codes.lines)
        assert writer.guard_bits == guard_total
