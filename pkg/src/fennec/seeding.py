"""Deterministic seed derivation.

Stage and task seeds are derived by hashing the master seed with a name,
so rerunning one stage never perturbs another stage's randomness.
"""

from __future__ import annotations

import hashlib

__all__ = ["derive_seed"]


def derive_seed(master: int, name: str) -> int:
    """Stable 64-bit seed from a master seed and a label."""
    digest = hashlib.blake2b(f"{int(master)}:{name}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")
