"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the package's own operator
construction: Stokes matrices are rebuilt from two-mode ladder algebra,
and moments are evaluated as brute-force traces of matrix powers, so a
shared bug cannot hide on both sides of an assertion.
"""

import math

import numpy as np
import pytest

import polarmoments as pm


def ladder_stokes(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stokes matrices on manifold n from a_h, a_v ladder operators.

    Basis |m, n-m> ascending in m, built inside the full two-mode Fock
    space truncated at total photon number n and projected onto the
    manifold block.
    """
    cut = n + 1
    dim = cut * cut
    a = np.zeros((cut, cut))
    for k in range(1, cut):
        a[k - 1, k] = math.sqrt(k)
    eye = np.eye(cut)
    ah = np.kron(a, eye)
    av = np.kron(eye, a)
    s0 = ah.conj().T @ ah + av.conj().T @ av
    s1 = ah.conj().T @ av + av.conj().T @ ah
    s2 = -1j * (ah.conj().T @ av - av.conj().T @ ah)
    s3 = ah.conj().T @ ah - av.conj().T @ av
    # index of |m>_h |n-m>_v in the kron ordering
    sel = np.array([m * cut + (n - m) for m in range(n + 1)])
    pick = np.ix_(sel, sel)
    return (np.asarray(s0[pick]), np.asarray(s1[pick]).astype(complex),
            np.asarray(s2[pick]), np.asarray(s3[pick]).astype(complex))


def trace_moment(rho: np.ndarray, direction, r: int,
                 mean: float | None = None) -> float:
    """tr(rho (n.S - mean)^r) by explicit matrix power."""
    n = rho.shape[0] - 1
    _, s1, s2, s3 = ladder_stokes(n)
    vec = direction.unit_vector if hasattr(direction, "unit_vector") else np.asarray(direction)
    op = vec[0] * s1 + vec[1] * s2 + vec[2] * s3
    if mean is not None:
        op = op - mean * np.eye(n + 1)
    return float(np.real(np.trace(rho @ np.linalg.matrix_power(op, r))))


def averaged_trace_moment(state, direction, r: int, central: bool) -> float:
    """Excitation-averaged brute-force moment, global-mean centering."""
    mean = None
    if central:
        mean = sum(w * trace_moment(md.rho, direction, 1)
                   for w, md in state.manifolds)
    total = 0.0
    for w, md in state.manifolds:
        total += w * trace_moment(md.rho, direction, r, mean)
    return total


def random_manifold(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random full-rank density matrix on manifold n."""
    g = rng.normal(size=(n + 1, n + 1)) + 1j * rng.normal(size=(n + 1, n + 1))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_state(rng: np.random.Generator, max_n: int = 4) -> pm.PolarizationState:
    ns = sorted(rng.choice(np.arange(1, max_n + 1),
                           size=rng.integers(1, 4), replace=False).tolist())
    weights = rng.dirichlet(np.ones(len(ns)))
    return pm.PolarizationState(
        [(float(w), pm.ManifoldDensity(int(n), random_manifold(rng, int(n))))
         for w, n in zip(weights, ns)])


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


@pytest.fixture(scope="session")
def table3_states():
    """The six three-photon exemplars, keyed by their invariance flags."""
    def diag3(w30, w21, w12, w03):
        m = np.diag([w30, w21, w12, w03]).astype(complex)
        return pm.manifold_state(3, m[::-1, ::-1].copy())

    plus = (np.array([1, 0, 0, 1]) / math.sqrt(2)).astype(complex)
    return {
        ("Y", "Y", "Y"): pm.unpolarized(3),
        ("Y", "Y", "N"): diag3(1 / 3, 0.0, 1 / 2, 1 / 6),
        ("Y", "N", "Y"): diag3(1 / 2, 0.0, 0.0, 1 / 2),
        ("Y", "N", "N"): pm.manifold_state(3, np.outer(plus, plus.conj())[::-1, ::-1].copy()),
        ("N", "Y", "N"): diag3(19 / 36, 0.0, 15 / 36, 1 / 18),
        ("N", "N", "N"): pm.fock(3, 0),
    }
