"""Adaptive Golomb entropy coding and the "LRC1" bitstream container.

Stream layout:

    header   49 bytes, packed little-endian (see StreamHeader)
    payload  bit-packed, MSB first inside each byte:
               line 0:  DPCM residuals, zigzag + Golomb, one shared context,
                        column-major (all bands of column 0, then column 1, ...)
               line y>0: for z in bands, for x in columns: one raw guard bit
                        when that sample's prediction triggered the guard,
                        then the Golomb codeword of the zigzagged residual,
                        with one adaptive context per band
    padding  zero bits to the next byte boundary

Golomb parameters adapt per context from an accumulator / counter pair; the
quotient is unary-coded with an escape to a fixed-width raw value so no
codeword exceeds 66 bits.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .cube import SampleOrder

MAGIC = b"LRC1"
VERSION = 1

G_MAX = 64          # rescale bound for the context counter
UNARY_LIMIT = 47    # quotients at or past this escape to raw coding
ESCAPE_BITS = 18    # raw width; covers the zigzag of any 16-bit residual
K_CAP = 16
A_INIT = 4
MAX_VALUE = 1 << ESCAPE_BITS


class StreamFormatError(ValueError):
    pass


class StreamTruncatedError(StreamFormatError):
    pass


def zigzag(e: int) -> int:
    return 2 * e if e >= 0 else -2 * e - 1


def unzigzag(v: int) -> int:
    return v >> 1 if v % 2 == 0 else -(v + 1) // 2


class BitWriter:
    def __init__(self):
        self._bytes = bytearray()
        self._acc = 0
        self._nbits = 0
        self.bit_count = 0

    def write_bits(self, value: int, nbits: int) -> None:
        self._acc = (self._acc << nbits) | value
        self._nbits += nbits
        self.bit_count += nbits
        while self._nbits >= 8:
            self._nbits -= 8
            self._bytes.append((self._acc >> self._nbits) & 0xFF)
        self._acc &= (1 << self._nbits) - 1

    def write_bit(self, bit: int) -> None:
        self.write_bits(bit & 1, 1)

    def getvalue(self) -> bytes:
        if self._nbits:
            pad = 8 - self._nbits
            self._acc <<= pad
            self._bytes.append(self._acc & 0xFF)
            self._acc = 0
            self._nbits = 0
        return bytes(self._bytes)


class BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0  # in bits

    def read_bits(self, nbits: int) -> int:
        end = self._pos + nbits
        if end > 8 * len(self._data):
            raise StreamTruncatedError("bitstream exhausted")
        value = 0
        pos = self._pos
        while nbits > 0:
            byte = self._data[pos >> 3]
            avail = 8 - (pos & 7)
            take = min(avail, nbits)
            shift = avail - take
            value = (value << take) | ((byte >> shift) & ((1 << take) - 1))
            pos += take
            nbits -= take
        self._pos = pos
        return value

    def read_bit(self) -> int:
        return self.read_bits(1)


@dataclass
class GolombContext:
    """Sample-adaptive parameter state: accumulator a and counter g."""

    a: int = A_INIT
    g: int = 1

    def k(self) -> int:
        if self.a < self.g:
            return 0
        k = 0
        while k < K_CAP and (self.g << (k + 1)) <= self.a:
            k += 1
        return k

    def update(self, v: int) -> None:
        self.a += v
        self.g += 1
        if self.g == G_MAX:
            self.a = (self.a + 1) >> 1
            self.g >>= 1


def golomb_k(ctx: GolombContext) -> int:
    return ctx.k()


def golomb_encode(ctx: GolombContext, v: int, writer: BitWriter) -> None:
    if not 0 <= v < MAX_VALUE:
        raise ValueError(f"value {v} outside codable range")
    k = ctx.k()
    q = v >> k
    if q < UNARY_LIMIT:
        writer.write_bits(1, q + 1)          # q zeros then a one
        if k:
            writer.write_bits(v & ((1 << k) - 1), k)
    else:
        writer.write_bits(1, UNARY_LIMIT + 1)
        writer.write_bits(v, ESCAPE_BITS)
    ctx.update(v)


def golomb_decode(ctx: GolombContext, reader: BitReader) -> int:
    k = ctx.k()
    q = 0
    while reader.read_bit() == 0:
        q += 1
        if q > UNARY_LIMIT:
            raise StreamFormatError("unary run exceeds escape limit")
    if q < UNARY_LIMIT:
        v = (q << k) | (reader.read_bits(k) if k else 0)
    else:
        v = reader.read_bits(ESCAPE_BITS)
    ctx.update(v)
    return v


_HEADER_STRUCT = struct.Struct("<4sHIIIBHQQfQ")

_ORDER_CODE = {SampleOrder.BSQ: 0, SampleOrder.BIL: 1, SampleOrder.BIP: 2}
_ORDER_FROM_CODE = {v: k for k, v in _ORDER_CODE.items()}


@dataclass
class StreamHeader:
    nx: int
    ny: int
    nz: int
    order: SampleOrder
    m: int
    config_digest: int
    weights_checksum: int
    guard_tau: float
    cube_checksum: int

    def pack(self) -> bytes:
        return _HEADER_STRUCT.pack(
            MAGIC, VERSION, self.nx, self.ny, self.nz,
            _ORDER_CODE[self.order], self.m, self.config_digest,
            self.weights_checksum, self.guard_tau, self.cube_checksum,
        )

    @classmethod
    def unpack(cls, data: bytes) -> "StreamHeader":
        if len(data) < _HEADER_STRUCT.size:
            raise StreamTruncatedError("stream shorter than its header")
        magic, version, nx, ny, nz, order, m, cfg_digest, wck, tau, cck = \
            _HEADER_STRUCT.unpack_from(data)
        if magic != MAGIC:
            raise StreamFormatError(f"bad stream magic {magic!r}")
        if version != VERSION:
            raise StreamFormatError(f"unsupported stream version {version}")
        if order not in _ORDER_FROM_CODE:
            raise StreamFormatError(f"unknown order code {order}")
        return cls(nx=nx, ny=ny, nz=nz, order=_ORDER_FROM_CODE[order], m=m,
                   config_digest=cfg_digest, weights_checksum=wck,
                   guard_tau=tau, cube_checksum=cck)

    @classmethod
    def size(cls) -> int:
        return _HEADER_STRUCT.size


class StreamWriter:
    """Serializes residual planes line by line behind a fixed header."""

    def __init__(self, header: StreamHeader):
        self.header = header
        self._bits = BitWriter()
        self._dpcm_ctx = GolombContext()
        self._band_ctx = [GolombContext() for _ in range(header.nz)]
        self.band_bits = np.zeros(header.nz, dtype=np.int64)
        self.guard_bits = 0

    def write_dpcm(self, planes: np.ndarray) -> None:
        nz, nx = planes.shape
        for x in range(nx):
            for z in range(nz):
                before = self._bits.bit_count
                golomb_encode(self._dpcm_ctx, zigzag(int(planes[z, x])), self._bits)
                self.band_bits[z] += self._bits.bit_count - before

    def write_line(self, planes) -> None:
        nz, nx = planes.eps.shape
        for z in range(nz):
            ctx = self._band_ctx[z]
            eps_row = planes.eps[z]
            hit_row = planes.guard_hit[z]
            side_row = planes.guard_side[z]
            before = self._bits.bit_count
            for x in range(nx):
                if hit_row[x]:
                    self._bits.write_bit(1 if side_row[x] else 0)
                    self.guard_bits += 1
                golomb_encode(ctx, zigzag(int(eps_row[x])), self._bits)
            self.band_bits[z] += self._bits.bit_count - before

    @property
    def payload_bits(self) -> int:
        return self._bits.bit_count

    def finalize(self) -> bytes:
        return self.header.pack() + self._bits.getvalue()


class StreamReader:
    """Residual source over a serialized stream; plugs into the pipeline's
    reconstruct functions."""

    def __init__(self, data: bytes):
        self.header = StreamHeader.unpack(data)
        self._bits = BitReader(data[StreamHeader.size():])
        self._dpcm_ctx = GolombContext()
        self._band_ctx = [GolombContext() for _ in range(self.header.nz)]

    def read_dpcm(self, nx: int, nz: int) -> np.ndarray:
        planes = np.empty((nz, nx), dtype=np.int32)
        for x in range(nx):
            for z in range(nz):
                planes[z, x] = unzigzag(golomb_decode(self._dpcm_ctx, self._bits))
        return planes

    def begin_line(self) -> None:
        pass

    def read_guard_bit(self, z: int) -> bool:
        return bool(self._bits.read_bit())

    def read_eps(self, z: int) -> int:
        return unzigzag(golomb_decode(self._band_ctx[z], self._bits))


def encode_codes(header: StreamHeader, codes) -> bytes:
    """Convenience: serialize a whole CubeCodes object."""
    writer = StreamWriter(header)
    writer.write_dpcm(codes.dpcm)
    for planes in codes.lines:
        writer.write_line(planes)
    return writer.finalize()
