"""64-bit content digest used by the weight file and the bitstream."""

import hashlib


def digest64(data: bytes) -> int:
    """First 8 bytes of SHA-256, little-endian. Stable across platforms."""
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "little")
