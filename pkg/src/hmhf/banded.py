"""Banded Cholesky factorization for the SPD systems of each time step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from hmhf.assembly import BandedSpdMatrix


class NotPositiveDefiniteError(LinAlgError):
    pass


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower factor L (A = L L^T), stored in the same banded layout as A."""

    bands: np.ndarray

    @property
    def n(self) -> int:
        return self.bands.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.bands.shape[0] - 1

    def to_dense(self) -> np.ndarray:
        n = self.n
        low = np.zeros((n, n))
        for d in range(self.bandwidth + 1):
            j = np.arange(n - d)
            low[j + d, j] = self.bands[d, : n - d]
        return low


def factor(a: BandedSpdMatrix) -> CholeskyFactor:
    try:
        low = cholesky_banded(a.bands, lower=True, check_finite=True)
    except LinAlgError as exc:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {exc}") from exc
    return CholeskyFactor(low)


def solve(f: CholeskyFactor, rhs) -> np.ndarray:
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != f.n:
        raise ValueError(f"rhs has length {rhs.shape[0]}, factor has dimension {f.n}")
    return cho_solve_banded((f.bands, True), rhs, check_finite=False)
