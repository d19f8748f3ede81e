"""Fixed, platform-independent hashing used for features and seed derivation."""

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash. Pinned so feature indices never drift across platforms."""
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK
    return h


def derive_seed(seed: int, stage: str) -> int:
    """Fan a top-level seed out to a per-stage seed by labeled derivation."""
    return fnv1a64(f"{seed}:{stage}".encode("utf-8")) % (2**32)
