from __future__ import annotations

import hashlib

import numpy as np

PROB_CLIP = 1e-6


def mix(*parts) -> int:
    """Derive a stable 63-bit seed from an arbitrary tuple of ints and strings.

    Unlike ``hash()``, the result does not depend on the interpreter session.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little") >> 1


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def clipped_logit(p, eps: float = PROB_CLIP):
    p = np.clip(np.asarray(p, dtype=np.float64), eps, 1.0 - eps)
    return np.log(p / (1.0 - p))


def round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))
