"""Hund's case (a) kets for one 2-Sigma molecule and the ordered pair basis.

The ordering (ascending J, then Omega, then M) is part of the output file
contract: eigenvector and matrix dumps index columns by it.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .angmom import AngularMomentumError, HalfInt, Number

HALF = HalfInt(1)


@dataclass(frozen=True, order=True)
class BasisKet:
    """|J, Omega, M, S, Sigma> with Omega = Sigma = +-1/2 and S = 1/2."""

    J: HalfInt
    Omega: HalfInt
    M: HalfInt
    S: HalfInt = HALF
    Sigma: HalfInt = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.Sigma is None:
            object.__setattr__(self, "Sigma", self.Omega)
        if self.Sigma != self.Omega:
            raise AngularMomentumError("Omega and Sigma coincide for a 2-Sigma state")
        if abs(self.Omega.twice_value) != 1:
            raise AngularMomentumError("|Omega| must be 1/2")
        if self.J.is_integer or self.J.twice_value < 1:
            raise AngularMomentumError("J must be a positive half-integer")
        if abs(self.M.twice_value) > self.J.twice_value or (self.J.twice_value - self.M.twice_value) % 2:
            raise AngularMomentumError(f"M={self.M} not in the ladder of J={self.J}")

    def label(self) -> tuple[int, int, int, int]:
        return (self.J.twice_value, self.Omega.twice_value, self.M.twice_value, self.Sigma.twice_value)


def _check_jmax(J_max: Number) -> HalfInt:
    jm = HalfInt.of(J_max)
    if jm.is_integer or jm.twice_value < 1:
        raise AngularMomentumError(f"J_max must be a half-integer >= 1/2, got {J_max}")
    return jm


@lru_cache(maxsize=None)
def _single_basis(tjmax: int) -> tuple[BasisKet, ...]:
    kets = []
    for tj in range(1, tjmax + 1, 2):
        for to in (-1, 1):
            for tm in range(-tj, tj + 1, 2):
                kets.append(BasisKet(HalfInt(tj), HalfInt(to), HalfInt(tm)))
    return tuple(kets)


def build_single_basis(J_max: Number) -> tuple[BasisKet, ...]:
    """Case (a) kets with J = 1/2 .. J_max, ordered by (J, Omega, M)."""
    return _single_basis(_check_jmax(J_max).twice_value)


def single_basis_size(J_max: Number) -> int:
    jm = _check_jmax(J_max)
    return 2 * sum(tj + 1 for tj in range(1, jm.twice_value + 1, 2))


@dataclass(frozen=True)
class PairBasis:
    """Ordered tensor-product basis; flat index = i1 * n_single + i2."""

    single: tuple[BasisKet, ...]
    J_max: HalfInt

    @property
    def n_single(self) -> int:
        return len(self.single)

    @property
    def size(self) -> int:
        return self.n_single**2

    def flat(self, i1: int, i2: int) -> int:
        n = self.n_single
        if not (0 <= i1 < n and 0 <= i2 < n):
            raise IndexError((i1, i2))
        return i1 * n + i2

    def split(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.size:
            raise IndexError(index)
        return divmod(index, self.n_single)

    def ket(self, index: int) -> tuple[BasisKet, BasisKet]:
        i1, i2 = self.split(index)
        return self.single[i1], self.single[i2]

    def __len__(self) -> int:
        return self.size

    def __iter__(self):
        for i1 in range(self.n_single):
            for i2 in range(self.n_single):
                yield self.single[i1], self.single[i2]


def build_pair_basis(J_max: Number) -> PairBasis:
    jm = _check_jmax(J_max)
    return PairBasis(single=build_single_basis(jm), J_max=jm)


def quantum_number_arrays(kets) -> dict[str, np.ndarray]:
    """Twice-valued J, Omega, M arrays for vectorised selection rules."""
    return {
        "J2": np.array([k.J.twice_value for k in kets]),
        "O2": np.array([k.Omega.twice_value for k in kets]),
        "M2": np.array([k.M.twice_value for k in kets]),
    }


def manifest_csv(kets) -> str:
    """Basis manifest: index, 2J, 2Omega, 2M, 2Sigma."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "2J", "2Omega", "2M", "2Sigma"])
    for i, k in enumerate(kets):
        writer.writerow([i, *k.label()])
    return buf.getvalue()


@dataclass(frozen=True, order=True)
class DecoupledKet:
    """|N, m_N> |S=1/2, m_S> with m_S stored doubled."""

    N: int
    mN: int
    twice_mS: int


def build_decoupled_basis(N_max: int) -> tuple[DecoupledKet, ...]:
    """Decoupled kets with N = 0 .. N_max, ordered by (N, m_N, m_S)."""
    if N_max < 0 or int(N_max) != N_max:
        raise AngularMomentumError(f"N_max must be a non-negative integer, got {N_max}")
    return tuple(
        DecoupledKet(N, mN, tms)
        for N in range(int(N_max) + 1)
        for mN in range(-N, N + 1)
        for tms in (-1, 1)
    )
