"""Cosine-sine decomposition of an even-sized unitary.

``U = diag(A1, A2) @ [[C, -S], [S, C]] @ diag(B1, B2)`` with ``C``/``S``
diagonal, non-negative and the sines in ascending order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, cossin

from ..optics import check_unitary


@dataclass
class CSD:
    a1: np.ndarray
    a2: np.ndarray
    c: np.ndarray  # cosines, shape (h,)
    s: np.ndarray  # sines, ascending
    b1: np.ndarray
    b2: np.ndarray

    def cs_matrix(self) -> np.ndarray:
        cm, sm = np.diag(self.c), np.diag(self.s)
        return np.block([[cm, -sm], [sm, cm]])

    def reconstruct(self) -> np.ndarray:
        return block_diag(self.a1, self.a2) @ self.cs_matrix() @ block_diag(self.b1, self.b2)

    def cs_blocks(self) -> list[np.ndarray]:
        """2x2 rotations [[c_j, -s_j], [s_j, c_j]], one per lower-qubit index j."""
        return [np.array([[c, -s], [s, c]], dtype=complex) for c, s in zip(self.c, self.s)]


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def csd(u) -> CSD:
    u = check_unitary(u)
    dim = u.shape[0]
    if dim < 2 or not is_power_of_two(dim):
        raise ValueError(f"CSD needs a 2^k x 2^k matrix with k >= 1, got {dim}x{dim}")
    h = dim // 2
    left, mid, right = cossin(u, p=h, q=h)
    c = np.real(np.diag(mid[:h, :h])).copy()
    s = np.real(np.diag(mid[h:, :h])).copy()
    order = np.argsort(s, kind="stable")
    a1, a2 = left[:h, :h][:, order], left[h:, h:][:, order]
    b1, b2 = right[:h, :h][order, :], right[h:, h:][order, :]
    return CSD(a1, a2, c[order], s[order], b1, b2)
