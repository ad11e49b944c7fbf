"""Photon-number-resolved polarization states of a two-mode field.

A state with no coherence between total photon numbers is stored manifold
by manifold: for each total photon number ``N >= 1`` it keeps a weight
``p_N`` together with a normalized ``(N+1) x (N+1)`` density block written
in the basis ``|m, N-m>`` with ``m`` photons in the horizontal mode,
``m = 0 .. N`` ascending.  The vacuum manifold carries no polarization
information and is stored as a bare weight.  Weights may sum to less than
one when a tail of the photon-number distribution has been truncated.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StateSpecError, StateValidationError

# residual tolerances for stored blocks and input symmetrization
HERMITICITY_TOL = 1e-8
VALIDATION_TOL = 1e-10
PSD_TOL = 1e-10
WEIGHT_TOL = 1e-12

# default photon-number tail mass allowed to be truncated
DEFAULT_TAIL_MASS = 1e-10

_MAX_CUTOFF = 100_000


@dataclass
class ManifoldDensity:
    """Normalized density block of the ``n``-photon manifold.

    Attributes
    ----------
    n : int
        Total photon number of the manifold, at least 1.
    rho : ndarray
        Complex ``(n+1, n+1)`` matrix, Hermitian with unit trace, in the
        ascending ``|m, n-m>`` basis.
    """

    n: int
    rho: np.ndarray

    @property
    def dim(self) -> int:
        return self.n + 1


@dataclass
class PolarizationState:
    """Weighted collection of photon-number manifolds.

    ``manifolds`` holds ``(weight, block)`` pairs sorted by ascending
    photon number; ``vacuum_weight`` is the probability of zero photons.
    The total weight may fall short of one by a truncated tail.
    """

    manifolds: list[tuple[float, ManifoldDensity]] = field(default_factory=list)
    vacuum_weight: float = 0.0

    @property
    def cutoff(self) -> int:
        """Largest stored photon number (0 for a bare vacuum state)."""
        return self.manifolds[-1][1].n if self.manifolds else 0

    @property
    def total_weight(self) -> float:
        return self.vacuum_weight + sum(w for w, _ in self.manifolds)

    @property
    def photon_numbers(self) -> list[int]:
        return [block.n for _, block in self.manifolds]

    def weight(self, n: int) -> float:
        if n == 0:
            return self.vacuum_weight
        for w, block in self.manifolds:
            if block.n == n:
                return w
        return 0.0

    def manifold(self, n: int) -> ManifoldDensity:
        for _, block in self.manifolds:
            if block.n == n:
                return block
        raise KeyError(f"no {n}-photon manifold stored")

    def sole_manifold(self) -> int:
        """Photon number of the only stored manifold.

        Raises
        ------
        StateValidationError
            If the state stores zero or several manifolds.
        """
        if len(self.manifolds) != 1:
            raise StateValidationError(
                f"state spans {len(self.manifolds)} manifolds; specify one explicitly"
            )
        return self.manifolds[0][1].n


@dataclass
class ManifoldDiagnostics:
    n: int
    weight: float
    hermiticity_residual: float
    trace_residual: float
    min_eigenvalue: float


@dataclass
class StateDiagnostics:
    """Per-manifold residuals gathered by :func:`validate`."""

    manifolds: list[ManifoldDiagnostics]
    vacuum_weight: float
    total_weight: float


def normalize_manifold(matrix, n: int | None = None,
                       herm_tol: float = HERMITICITY_TOL) -> ManifoldDensity:
    """Symmetrize and trace-normalize a raw manifold block.

    Parameters
    ----------
    matrix : array_like
        Square ``(n+1, n+1)`` matrix.  A Hermiticity defect up to
        ``herm_tol`` (max absolute deviation from the adjoint) is
        symmetrized away; larger defects raise.
    n : int, optional
        Expected photon number; inferred from the matrix size if omitted.

    Returns
    -------
    ManifoldDensity
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StateValidationError(f"manifold block must be square, got shape {m.shape}")
    inferred = m.shape[0] - 1
    if n is None:
        n = inferred
    elif n != inferred:
        raise StateValidationError(
            f"block of size {m.shape[0]} does not match {n} photons")
    if n < 1:
        raise StateValidationError("the vacuum manifold carries no density block")
    defect = np.max(np.abs(m - m.conj().T))
    if defect > herm_tol:
        raise StateValidationError(
            f"manifold block non-Hermitian: defect {defect:.3g} exceeds {herm_tol:g}")
    m = 0.5 * (m + m.conj().T)
    tr = np.trace(m).real
    if tr <= 0.0:
        raise StateValidationError(f"manifold block has nonpositive trace {tr:.3g}")
    return ManifoldDensity(n=n, rho=m / tr)


def validate(state: PolarizationState,
             tol: float = VALIDATION_TOL,
             psd_tol: float = PSD_TOL) -> StateDiagnostics:
    """Check a state against its storage invariants.

    Returns per-manifold diagnostics and raises
    :class:`StateValidationError` on the first violated bound.
    """
    if state.vacuum_weight < -WEIGHT_TOL:
        raise StateValidationError(f"negative vacuum weight {state.vacuum_weight:.3g}")
    seen: set[int] = set()
    diags = []
    for w, block in state.manifolds:
        if block.n < 1:
            raise StateValidationError("stored manifolds must have n >= 1")
        if block.n in seen:
            raise StateValidationError(f"duplicate {block.n}-photon manifold")
        if seen and block.n < max(seen):
            raise StateValidationError("manifolds must be sorted by photon number")
        seen.add(block.n)
        if w < -WEIGHT_TOL:
            raise StateValidationError(f"negative weight {w:.3g} on manifold {block.n}")
        rho = block.rho
        if rho.shape != (block.dim, block.dim):
            raise StateValidationError(
                f"manifold {block.n} block has shape {rho.shape}")
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        trace = abs(np.trace(rho).real - 1.0)
        min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min())
        diags.append(ManifoldDiagnostics(block.n, w, herm, trace, min_eig))
        if herm > tol:
            raise StateValidationError(
                f"manifold {block.n}: Hermiticity residual {herm:.3g} exceeds {tol:g}")
        if trace > tol:
            raise StateValidationError(
                f"manifold {block.n}: trace residual {trace:.3g} exceeds {tol:g}")
        if min_eig < -psd_tol:
            raise StateValidationError(
                f"manifold {block.n}: eigenvalue {min_eig:.3g} below -{psd_tol:g}")
    total = state.total_weight
    if total > 1.0 + WEIGHT_TOL:
        raise StateValidationError(f"weights sum to {total!r} > 1")
    return StateDiagnostics(diags, state.vacuum_weight, total)


def _single(n: int, rho: np.ndarray, weight: float = 1.0) -> PolarizationState:
    return PolarizationState([(weight, ManifoldDensity(n, rho))])


def fock(h: int, v: int) -> PolarizationState:
    """Two-mode number state ``|h, v>`` (``h`` horizontal, ``v`` vertical photons)."""
    if h < 0 or v < 0:
        raise StateSpecError("photon numbers must be nonnegative")
    n = h + v
    if n == 0:
        return PolarizationState([], vacuum_weight=1.0)
    rho = np.zeros((n + 1, n + 1), dtype=complex)
    rho[h, h] = 1.0
    return _single(n, rho)


def unpolarized(n: int) -> PolarizationState:
    """Maximally mixed ``n``-photon manifold."""
    if n < 1:
        raise StateSpecError("unpolarized manifold needs n >= 1")
    return _single(n, np.eye(n + 1, dtype=complex) / (n + 1))


def su2_coherent(n: int, theta: float, phi: float) -> PolarizationState:
    """``n``-photon state fully polarized along the direction ``(theta, phi)``.

    Built by rotating ``|n, 0>`` from the pole; every point on the sphere
    gives a pure state saturating the polarization bound of its manifold.
    """
    if n < 1:
        raise StateSpecError("coherent manifold needs n >= 1")
    from .stokes import rotation_to_direction  # local import, avoids a cycle

    u = rotation_to_direction(n, theta, phi).matrix
    amp = u[:, n]  # image of the pole state |n, 0>
    rho = np.outer(amp, amp.conj())
    return _single(n, rho)


def su2_invariant(weights: dict[int, float]) -> PolarizationState:
    """Rotation-invariant state: each manifold maximally mixed.

    ``weights`` maps photon number to probability; a key 0 assigns vacuum
    weight.  Weights must be nonnegative and sum to at most one.
    """
    vac = 0.0
    pairs = []
    for n in sorted(weights):
        w = float(weights[n])
        if w < 0:
            raise StateSpecError(f"negative weight {w!r} for manifold {n}")
        if n == 0:
            vac = w
        else:
            pairs.append((w, ManifoldDensity(n, np.eye(n + 1, dtype=complex) / (n + 1))))
    state = PolarizationState(pairs, vacuum_weight=vac)
    if state.total_weight > 1.0 + WEIGHT_TOL:
        raise StateSpecError(f"weights sum to {state.total_weight!r} > 1")
    return state


def _truncation_guard(cutoff: int | None, tail: float, discarded: float) -> None:
    if discarded > tail + WEIGHT_TOL:
        raise StateSpecError(
            f"cutoff {cutoff} discards tail mass {discarded:.3g} "
            f"exceeding the allowed {tail:g}")


def coherent(alpha: float, cutoff: int | None = None,
             tail_mass: float = DEFAULT_TAIL_MASS,
             theta: float = 0.0, phi: float = 0.0) -> PolarizationState:
    """Coherent beam of amplitude ``|alpha|`` polarized along ``(theta, phi)``.

    Photon numbers are Poisson with mean ``alpha**2``; each manifold is the
    fully polarized pure state along the given direction (the pole by
    default).  The distribution is truncated at ``cutoff``, chosen as the
    smallest value with tail mass below ``tail_mass`` when not given.
    Weights are not renormalized, so the stored total falls short of one
    by exactly the discarded tail.
    """
    mean = float(alpha) ** 2
    if mean == 0.0:
        return PolarizationState([], vacuum_weight=1.0)
    if not (0.0 < tail_mass < 1.0):
        raise StateSpecError("tail_mass must lie in (0, 1)")
    weights = [math.exp(-mean)]
    while True:
        n = len(weights)
        remaining = 1.0 - math.fsum(weights)
        if cutoff is not None and n > cutoff:
            _truncation_guard(cutoff, tail_mass, remaining)
            break
        if cutoff is None and remaining <= tail_mass:
            break
        if n > _MAX_CUTOFF:
            raise StateSpecError("requested tail mass is unreachable")
        weights.append(weights[-1] * mean / n)
    return _polarized_mixture(weights, theta, phi)


def thermal(mean_photons: float, cutoff: int | None = None,
            tail_mass: float = DEFAULT_TAIL_MASS) -> PolarizationState:
    """Unpolarized beam with geometric photon-number statistics.

    ``p_N = mean**N / (1 + mean)**(N+1)``; every manifold is maximally
    mixed.  Truncation follows the same tail-mass rule as :func:`coherent`,
    using the closed-form geometric tail ``q**(cutoff+1)``.
    """
    nbar = float(mean_photons)
    if nbar < 0:
        raise StateSpecError("mean photon number must be nonnegative")
    if nbar == 0.0:
        return PolarizationState([], vacuum_weight=1.0)
    if not (0.0 < tail_mass < 1.0):
        raise StateSpecError("tail_mass must lie in (0, 1)")
    q = nbar / (1.0 + nbar)
    if cutoff is None:
        cutoff = max(1, math.ceil(math.log(tail_mass) / math.log(q)) - 1)
        while q ** (cutoff + 1) > tail_mass:
            cutoff += 1
            if cutoff > _MAX_CUTOFF:
                raise StateSpecError("requested tail mass is unreachable")
    else:
        _truncation_guard(cutoff, tail_mass, q ** (cutoff + 1))
    ns = np.arange(cutoff + 1)
    weights = np.exp(ns * math.log(nbar) - (ns + 1) * math.log1p(nbar))
    pairs = [(float(weights[n]),
              ManifoldDensity(n, np.eye(n + 1, dtype=complex) / (n + 1)))
             for n in range(1, cutoff + 1)]
    return PolarizationState(pairs, vacuum_weight=float(weights[0]))


def _polarized_mixture(weights: list[float], theta: float, phi: float) -> PolarizationState:
    from .stokes import rotation_to_direction

    pairs = []
    for n, w in enumerate(weights):
        if n == 0:
            continue
        if theta == 0.0 and phi == 0.0:
            rho = np.zeros((n + 1, n + 1), dtype=complex)
            rho[n, n] = 1.0
        else:
            u = rotation_to_direction(n, theta, phi).matrix
            amp = u[:, n]
            rho = np.outer(amp, amp.conj())
        pairs.append((w, ManifoldDensity(n, rho)))
    return PolarizationState(pairs, vacuum_weight=weights[0])


def manifold_state(n: int, matrix, weight: float = 1.0,
                   vacuum_weight: float = 0.0) -> PolarizationState:
    """Single-manifold state from an explicit density block."""
    block = normalize_manifold(matrix, n)
    state = PolarizationState([(weight, block)], vacuum_weight=vacuum_weight)
    validate(state)
    return state


def mixture(components: list[tuple[float, PolarizationState]]) -> PolarizationState:
    """Convex mixture of states, combined manifold by manifold.

    Component weights must sum to one within ``1e-12``.
    """
    total = math.fsum(w for w, _ in components)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise StateSpecError(f"mixture weights sum to {total!r}, expected 1")
    if any(w < 0 for w, _ in components):
        raise StateSpecError("mixture weights must be nonnegative")
    vac = math.fsum(w * s.vacuum_weight for w, s in components)
    accum: dict[int, np.ndarray] = {}
    for w, s in components:
        for p, block in s.manifolds:
            contrib = w * p * block.rho
            if block.n in accum:
                accum[block.n] = accum[block.n] + contrib
            else:
                accum[block.n] = contrib
    pairs = []
    for n in sorted(accum):
        p = np.trace(accum[n]).real
        if p <= WEIGHT_TOL:
            continue
        pairs.append((p, ManifoldDensity(n, accum[n] / p)))
    return PolarizationState(pairs, vacuum_weight=vac)


def _as_complex(entry) -> complex:
    """Scalar or ``[re, im]`` pair from a parsed spec."""
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    raise StateSpecError(f"expected a number or [re, im] pair, got {entry!r}")


def _as_matrix(rows) -> np.ndarray:
    try:
        return np.array([[_as_complex(e) for e in row] for row in rows], dtype=complex)
    except (TypeError, StateSpecError) as exc:
        raise StateSpecError(f"bad matrix entry: {exc}") from exc


def _require(spec: dict, key: str, kind: str):
    if key not in spec:
        raise StateSpecError(f"'{kind}' spec is missing required field '{key}'")
    return spec[key]


def build_state(spec: dict) -> PolarizationState:
    """Build a validated state from a declarative description.

    ``spec`` is a plain mapping (typically parsed from JSON) with a
    ``kind`` field selecting the family:

    ``fock``
        ``{"kind": "fock", "h": 2, "v": 0}``
    ``coherent``
        ``{"kind": "coherent", "alpha": 1.2, "cutoff": 20, "tail_mass": 1e-12,
        "theta": 0.0, "phi": 0.0}`` (all but ``alpha`` optional)
    ``thermal``
        ``{"kind": "thermal", "mean_photons": 0.5, ...}``
    ``unpolarized``
        ``{"kind": "unpolarized", "photons": 3}``
    ``su2_coherent``
        ``{"kind": "su2_coherent", "photons": 3, "theta": t, "phi": p}``
    ``su2_invariant``
        ``{"kind": "su2_invariant", "weights": {"1": 0.5, "2": 0.5}}``
    ``mixture``
        ``{"kind": "mixture", "components": [{"weight": w, "state": {...}}, ...]}``
    ``manifolds``
        ``{"kind": "manifolds", "vacuum_weight": 0.0, "manifolds":
        [{"photons": n, "weight": p, "matrix": [[...]]}]}`` with matrix
        entries either real numbers or ``[re, im]`` pairs.
    """
    if not isinstance(spec, dict):
        raise StateSpecError(f"state spec must be a mapping, got {type(spec).__name__}")
    kind = spec.get("kind")
    if kind == "fock":
        state = fock(int(_require(spec, "h", kind)), int(_require(spec, "v", kind)))
    elif kind == "coherent":
        state = coherent(float(_require(spec, "alpha", kind)),
                         cutoff=spec.get("cutoff"),
                         tail_mass=float(spec.get("tail_mass", DEFAULT_TAIL_MASS)),
                         theta=float(spec.get("theta", 0.0)),
                         phi=float(spec.get("phi", 0.0)))
    elif kind == "thermal":
        state = thermal(float(_require(spec, "mean_photons", kind)),
                        cutoff=spec.get("cutoff"),
                        tail_mass=float(spec.get("tail_mass", DEFAULT_TAIL_MASS)))
    elif kind == "unpolarized":
        state = unpolarized(int(_require(spec, "photons", kind)))
    elif kind == "su2_coherent":
        state = su2_coherent(int(_require(spec, "photons", kind)),
                             float(_require(spec, "theta", kind)),
                             float(_require(spec, "phi", kind)))
    elif kind == "su2_invariant":
        raw = _require(spec, "weights", kind)
        try:
            weights = {int(k): float(v) for k, v in raw.items()}
        except (AttributeError, ValueError) as exc:
            raise StateSpecError(f"bad weights mapping: {exc}") from exc
        state = su2_invariant(weights)
    elif kind == "mixture":
        comps = []
        for entry in _require(spec, "components", kind):
            comps.append((float(_require(entry, "weight", "mixture component")),
                          build_state(_require(entry, "state", "mixture component"))))
        state = mixture(comps)
    elif kind == "manifolds":
        pairs = []
        for entry in _require(spec, "manifolds", kind):
            n = int(_require(entry, "photons", "manifold entry"))
            w = float(_require(entry, "weight", "manifold entry"))
            block = normalize_manifold(_as_matrix(_require(entry, "matrix", "manifold entry")), n)
            pairs.append((w, block))
        pairs.sort(key=lambda p: p[1].n)
        state = PolarizationState(pairs, vacuum_weight=float(spec.get("vacuum_weight", 0.0)))
    elif kind is None:
        raise StateSpecError("state spec has no 'kind' field")
    else:
        raise StateSpecError(f"unknown state kind {kind!r}")
    validate(state)
    return state


def state_digest(state: PolarizationState) -> str:
    """Short stable hash of a state, used to tag emitted files."""
    import hashlib

    h = hashlib.sha256()
    h.update(f"vac={state.vacuum_weight:.12e};".encode())
    for w, block in state.manifolds:
        h.update(f"n={block.n};w={w:.12e};".encode())
        h.update(np.round(block.rho, 12).tobytes())
    return h.hexdigest()[:12]
