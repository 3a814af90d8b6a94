"""2x2 complex matrix helpers.

All functions broadcast over leading axes: a stack of matrices is an array of
shape ``(..., 2, 2)`` and a stack of vectors has shape ``(..., 2)``.
"""

from __future__ import annotations

import numpy as np

B = np.array([[0.0, 1.0], [-1.0, 0.0]])
I2 = np.eye(2)


def proj(A, sign: str):
    """Commutator projector: ``(A + BAB)/2`` for ``'+'``, ``(A - BAB)/2`` for ``'-'``.

    The ``'+'`` image anticommutes with ``B`` and the ``'-'`` image commutes
    with it (``B^2 = -I`` flips the sign of ``BAB`` relative to ``A``).
    """
    A = np.asarray(A)
    BAB = B @ A @ B
    if sign == "+":
        return 0.5 * (A + BAB)
    if sign == "-":
        return 0.5 * (A - BAB)
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def frob_norm(A):
    """Frobenius norm over the last two axes."""
    A = np.asarray(A)
    return np.sqrt(np.sum(np.abs(A) ** 2, axis=(-2, -1)))


def vec_norm(v):
    return np.sqrt(np.sum(np.abs(np.asarray(v)) ** 2, axis=-1))


def potential_matrix(p, q):
    """Stack ``[[p, q], [q, -p]]`` for array-valued ``p`` and ``q``."""
    p, q = np.broadcast_arrays(np.asarray(p), np.asarray(q))
    out = np.empty(p.shape + (2, 2), dtype=np.result_type(p, q, float))
    out[..., 0, 0] = p
    out[..., 0, 1] = q
    out[..., 1, 0] = q
    out[..., 1, 1] = -p
    return out


def columns(c1, c2):
    """Matrix with the given 2-vectors as columns, broadcasting over leading axes."""
    return np.stack(np.broadcast_arrays(c1, c2), axis=-1)


def apply_B(v):
    """``B @ v`` for a stack of 2-vectors, i.e. ``(v2, -v1)``."""
    v = np.asarray(v)
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)
