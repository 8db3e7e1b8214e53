"""Dense tensor route over the full basis space.

Arrays have shape ``layout.dense_shape`` = (M, N, *slots, (N+1)^M); the flat
C-order index is the mixed-radix encoding of the canonical key.  These
functions re-derive every operator from its defining matrices and serve as the
cross-check for the sparse code paths.
"""
from __future__ import annotations

import numpy as np

from .state import RegisterLayout, _targets, check_unitary


def _apply_on_axes(arr: np.ndarray, axes, U: np.ndarray) -> np.ndarray:
    axes = list(axes)
    moved = np.moveaxis(arr, axes, range(len(axes)))
    shape = moved.shape
    d = int(np.prod(shape[: len(axes)]))
    out = (U @ moved.reshape(d, -1)).reshape(shape)
    return np.moveaxis(out, range(len(axes)), axes)


def apply_local_unitary(layout: RegisterLayout, arr: np.ndarray, target, U) -> np.ndarray:
    positions, sizes = _targets(layout, target)
    U = check_unitary(U)
    if U.shape[0] != int(np.prod(sizes)):
        raise ValueError("matrix dimension does not match target size")
    return _apply_on_axes(arr, positions, U)


def phase_matrix(N: int, p: int) -> np.ndarray:
    """diag(omega^{p*y} for y < N, 1 for the empty symbol)."""
    y = np.arange(N)
    return np.diag(np.append(np.exp(2j * np.pi * p * y / N), 1.0))


def apply_standard_oracle(layout: RegisterLayout, arr: np.ndarray) -> np.ndarray:
    M, N = layout.M, layout.N
    out = arr.copy()
    nw = len(layout.slots)
    for x in range(M):
        sub = out[x]  # axes: p, w..., f_0..f_{M-1}
        fx_axis = 1 + nw + x
        ph = np.ones((N, N + 1), dtype=complex)
        p = np.arange(N)[:, None]
        y = np.arange(N)[None, :]
        ph[:, :N] = np.exp(2j * np.pi * p * y / N)
        shape = [1] * sub.ndim
        shape[0], shape[fx_axis] = N, N + 1
        out[x] = sub * ph.reshape(shape)
    return out


def apply_recording_oracle(layout: RegisterLayout, arr: np.ndarray, family) -> np.ndarray:
    """S^dagger O S controlled on the query register, composed matrix by matrix."""
    M, N = layout.M, layout.N
    nw = len(layout.slots)
    out = arr.copy()
    for x in range(M):
        S = family.matrix(x)
        fx_axis = nw + x  # within out[x, p]
        for p in range(N):
            sub = out[x, p]
            sub = _apply_on_axes(sub, [fx_axis], S)
            sub = _apply_on_axes(sub, [fx_axis], phase_matrix(N, p))
            sub = _apply_on_axes(sub, [fx_axis], S.conj().T)
            out[x, p] = sub
    return out


def apply_translation(layout: RegisterLayout, arr: np.ndarray, family, adjoint: bool = False) -> np.ndarray:
    o = layout.f_offset
    out = arr
    for x in range(layout.M):
        S = family.matrix(x)
        out = _apply_on_axes(out, [o + x], S.conj().T if adjoint else S)
    return out


def norm(arr: np.ndarray) -> float:
    return float(np.linalg.norm(arr.ravel()))


def success_by_translation(state, relation, family) -> float:
    """||Pi_succ T phi||^2 with a dense oracle tensor per distinct (x, p, w).

    T acts on the oracle register only, so each head block is translated on
    its own full (N+1)^M tensor and the success mask is applied entrywise.
    """
    layout = state.layout
    o, M, bot = layout.f_offset, layout.M, layout.bot
    blocks: dict = {}
    for key, amp in state.amplitudes.items():
        blk = blocks.get(key[:o])
        if blk is None:
            blk = blocks[key[:o]] = np.zeros((layout.N + 1,) * M, dtype=complex)
        blk[key[o:]] += amp
    total = 0.0
    for head, blk in blocks.items():
        req = relation.required_values(head[2:], bot)
        if req is None:
            continue
        for x in range(M):
            blk = _apply_on_axes(blk, [x], family.matrix(x))
        idx = [slice(None)] * M
        for x, v in req.items():
            idx[x] = v
        total += float(np.sum(np.abs(blk[tuple(idx)]) ** 2))
    return total
