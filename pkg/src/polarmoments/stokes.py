"""Stokes operators on fixed photon-number manifolds.

The four Stokes operators of a two-mode field restrict to every
``n``-photon manifold, where they generate an su(2) algebra:

* ``S0 = aH*aH + aV*aV`` acts as ``n`` times the identity,
* ``S3 = aH*aH - aV*aV`` is diagonal with entries ``2m - n``,
* ``S1`` and ``S2`` are the corresponding ladder combinations with
  ``<m+1| S1 |m> = sqrt((m+1)(n-m))`` and ``<m+1| S2 |m> = -i sqrt((m+1)(n-m))``

in the ascending ``|m, n-m>`` basis.  The commutators close as
``[Sj, Sk] = 2i e_jkl Sl`` and the Casimir invariant is ``S0 (S0 + 2)``.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fock import ManifoldDensity, PolarizationState


@dataclass(frozen=True)
class Direction:
    """Measurement direction on the sphere, ``theta`` from the 3-axis."""

    theta: float
    phi: float = 0.0

    @property
    def unit_vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi),
                         st * math.sin(self.phi),
                         math.cos(self.theta)])

    @classmethod
    def from_vector(cls, v) -> "Direction":
        v = np.asarray(v, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("zero vector has no direction")
        v = v / norm
        return cls(theta=math.acos(np.clip(v[2], -1.0, 1.0)),
                   phi=math.atan2(v[1], v[0]))


@dataclass(frozen=True)
class StokesOperators:
    """The operator quadruple restricted to one manifold."""

    n: int
    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray

    @property
    def vector(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.s1, self.s2, self.s3)

    def along(self, direction: Direction) -> np.ndarray:
        """Projection ``n . S`` onto a measurement direction."""
        n1, n2, n3 = direction.unit_vector
        return n1 * self.s1 + n2 * self.s2 + n3 * self.s3

    def casimir(self) -> np.ndarray:
        return self.s1 @ self.s1 + self.s2 @ self.s2 + self.s3 @ self.s3


@lru_cache(maxsize=None)
def stokes_operators(n: int) -> StokesOperators:
    """Build (and cache) the Stokes operators of the ``n``-photon manifold."""
    if n < 1:
        raise ValueError("Stokes operators act on manifolds with n >= 1")
    dim = n + 1
    m = np.arange(dim)
    s0 = float(n) * np.eye(dim, dtype=complex)
    s3 = np.diag((2 * m - n).astype(complex))
    ladder = np.sqrt((m[:-1] + 1.0) * (n - m[:-1]))
    s1 = np.zeros((dim, dim), dtype=complex)
    s2 = np.zeros((dim, dim), dtype=complex)
    s1[m[:-1] + 1, m[:-1]] = ladder
    s1[m[:-1], m[:-1] + 1] = ladder
    s2[m[:-1] + 1, m[:-1]] = -1j * ladder
    s2[m[:-1], m[:-1] + 1] = 1j * ladder
    for arr in (s0, s1, s2, s3):
        arr.setflags(write=False)
    return StokesOperators(n=n, s0=s0, s1=s1, s2=s2, s3=s3)


@dataclass(frozen=True)
class RotationOperator:
    """Unitary representation of an SU(2) rotation on one manifold."""

    n: int
    matrix: np.ndarray

    def conjugate(self, rho: np.ndarray) -> np.ndarray:
        """Active rotation ``U rho U*`` of a density block."""
        u = self.matrix
        return u @ rho @ u.conj().T


@lru_cache(maxsize=None)
def _s2_eigensystem(n: int):
    w, v = np.linalg.eigh(stokes_operators(n).s2)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def rotation_about(n: int, axis, angle: float) -> RotationOperator:
    """Rotation ``exp(-i angle (axis . S) / 2)`` about an arbitrary axis."""
    axis = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(axis)
    if norm == 0:
        raise ValueError("rotation axis must be nonzero")
    ops = stokes_operators(n)
    gen = sum(a / norm * s for a, s in zip(axis, ops.vector))
    w, v = np.linalg.eigh(gen)
    u = (v * np.exp(-0.5j * angle * w)) @ v.conj().T
    return RotationOperator(n=n, matrix=u)


def rotation_to_direction(n: int, theta: float, phi: float = 0.0) -> RotationOperator:
    """Unitary ``U = exp(-i phi S3/2) exp(-i theta S2/2)``.

    Satisfies ``U S3 U* = n . S`` for the direction ``(theta, phi)``, so it
    carries the pole onto that direction.
    """
    ops = stokes_operators(n)
    phase3 = np.exp(-0.5j * phi * np.diag(ops.s3))
    w, v = _s2_eigensystem(n)
    u2 = (v * np.exp(-0.5j * theta * w)) @ v.conj().T
    return RotationOperator(n=n, matrix=phase3[:, None] * u2)


def rotate_state(state: PolarizationState, direction: Direction) -> PolarizationState:
    """Map a measurement along ``direction`` onto the 3-axis.

    Each block is conjugated as ``U* rho U`` with the unitary of
    :func:`rotation_to_direction`, so expectations of ``S3`` (and its
    powers) in the result equal those of ``n . S`` in the input.
    """
    pairs = []
    for w, block in state.manifolds:
        u = rotation_to_direction(block.n, direction.theta, direction.phi).matrix
        pairs.append((w, ManifoldDensity(block.n, u.conj().T @ block.rho @ u)))
    return PolarizationState(pairs, vacuum_weight=state.vacuum_weight)


def rotate_state_about(state: PolarizationState, axis, angle: float) -> PolarizationState:
    """Actively rotate a state about an axis of the sphere."""
    pairs = []
    for w, block in state.manifolds:
        u = rotation_about(block.n, axis, angle)
        pairs.append((w, ManifoldDensity(block.n, u.conjugate(block.rho))))
    return PolarizationState(pairs, vacuum_weight=state.vacuum_weight)


def _two_mode_ladders(total: int):
    """Mode annihilation operators on the two-mode space with at most
    ``total`` photons, ordered by total number then by ``m``."""
    states = [(m, n - m) for n in range(total + 1) for m in range(n + 1)]
    index = {s: i for i, s in enumerate(states)}
    dim = len(states)
    a_h = np.zeros((dim, dim))
    a_v = np.zeros((dim, dim))
    for (h, v), i in index.items():
        if h > 0:
            a_h[index[(h - 1, v)], i] = math.sqrt(h)
        if v > 0:
            a_v[index[(h, v - 1)], i] = math.sqrt(v)
    block = [i for (h, v), i in index.items() if h + v == total]
    return a_h, a_v, np.array(sorted(block))


def normal_ordering_residual(n: int) -> float:
    """Check the normally ordered expansion of ``S3**2`` on one manifold.

    Builds the two-mode ladder operators explicitly, forms

    ``aH*aH*aHaH - 2 aH*aV*aHaV + aV*aV*aVaV + aH*aH + aV*aV``

    and compares its ``n``-photon block against ``S3 @ S3``.  Returns the
    maximum absolute deviation.
    """
    a_h, a_v, block = _two_mode_ladders(n)
    ah_d, av_d = a_h.T, a_v.T
    expr = (ah_d @ ah_d @ a_h @ a_h
            - 2.0 * ah_d @ av_d @ a_h @ a_v
            + av_d @ av_d @ a_v @ a_v
            + ah_d @ a_h + av_d @ a_v)
    restricted = expr[np.ix_(block, block)]
    s3 = stokes_operators(n).s3
    return float(np.max(np.abs(restricted - s3 @ s3)))
