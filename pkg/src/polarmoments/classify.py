"""Order-by-order rotational invariance of polarization structure.

A state is unpolarized at order ``r`` when its order-``r`` moment shows no
direction dependence.  At first order that is the vanishing of the Stokes
vector; at higher orders the central moment ``<d_n**r>`` must be constant
over the sphere.  Classifying the first three orders splits three-photon
states into six observable classes, including states whose mean vanishes
and whose noise is isotropic at second order yet anisotropic at third.

The module also carries the four-parameter family of three-photon states
with vanishing Stokes vector and isotropic covariance, a purity scan over
that family, and a numerical probe of the smallest isotropic variance sum.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import StateSpecError, StateValidationError
from .fock import ManifoldDensity, PolarizationState, manifold_state
from .grids import icosphere, icosphere_level_for
from .moments import direction_monomials, moment_tensors
from .tomography import CANONICAL_2, CANONICAL_3, CANONICAL_3_NESTED

DEFAULT_TOL = 1e-9


@dataclass
class IsotropyReport:
    """Direction spread of each moment order over a probe grid.

    ``invariant[r]`` holds the classification verdict: the Stokes vector
    vanishes (``r = 1``) or the central moment is constant (``r >= 2``).
    Raw-moment spreads are reported alongside; note a state with nonzero
    mean has direction-dependent raw moments even when its fluctuations
    are isotropic.
    """

    label: str
    orders: list[int]
    tol: float
    grid_points: int
    stokes_norm: float
    raw_spread: dict[int, float]
    central_spread: dict[int, float]
    raw_mean: dict[int, float]
    central_mean: dict[int, float]
    invariant: dict[int, bool]

    @property
    def flags(self) -> tuple[bool, ...]:
        return tuple(self.invariant[r] for r in self.orders)


def _probe_grid(max_order: int) -> np.ndarray:
    # quasi-uniform cover, at least 2 (r+1)^2 points, plus the canonical
    # measurement directions so grid minima cannot dodge them
    level = icosphere_level_for(2 * (max_order + 1) ** 2)
    parts = [icosphere(level), CANONICAL_2.unit_vectors]
    if max_order >= 3:
        parts += [CANONICAL_3.unit_vectors, CANONICAL_3_NESTED.unit_vectors]
    return np.vstack(parts)


def isotropy_test(state: PolarizationState, max_order: int = 3,
                  tol: float = DEFAULT_TOL, manifold: int | None = None,
                  grid: np.ndarray | None = None) -> IsotropyReport:
    """Probe rotational invariance order by order.

    Moments are evaluated from packs, so each extra grid point is one dot
    product.  ``manifold`` selects a single manifold; by default the
    excitation-averaged moments are probed.
    """
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    points = _probe_grid(max_order) if grid is None else np.atleast_2d(grid)
    tensors = moment_tensors(state, max_order, manifold)
    stokes_norm = float(np.linalg.norm(tensors.mean))
    orders = list(range(1, max_order + 1))
    raw_spread, central_spread = {}, {}
    raw_mean, central_mean = {}, {}
    invariant = {}
    for r in orders:
        rows = direction_monomials(points, r)
        raw_vals = rows @ tensors.raw[r]
        central_vals = rows @ tensors.central[r]
        raw_spread[r] = float(raw_vals.max() - raw_vals.min())
        central_spread[r] = float(central_vals.max() - central_vals.min())
        raw_mean[r] = float(raw_vals.mean())
        central_mean[r] = float(central_vals.mean())
        invariant[r] = bool(stokes_norm < tol) if r == 1 \
            else bool(central_spread[r] < tol)
    return IsotropyReport(label=tensors.label, orders=orders, tol=tol,
                          grid_points=len(points), stokes_norm=stokes_norm,
                          raw_spread=raw_spread, central_spread=central_spread,
                          raw_mean=raw_mean, central_mean=central_mean,
                          invariant=invariant)


_CLASS_LABELS = {
    (True, True, True): "isotropic through order 3",
    (True, True, False): "hidden order-3 structure",
    (True, False, True): "order-2 structure, odd orders isotropic",
    (True, False, False): "order-2 and order-3 structure",
    (False, True, False): "polarized mean, isotropic order-2 noise",
    (False, False, False): "anisotropic at every order",
}


@dataclass
class PolarizationClass:
    flags: tuple[bool, bool, bool]
    label: str
    report: IsotropyReport


def classify3(state: PolarizationState, tol: float = DEFAULT_TOL) -> PolarizationClass:
    """Assign a three-photon state to its order-1/2/3 invariance class."""
    numbers = state.photon_numbers
    if numbers != [3]:
        raise StateValidationError(
            f"classification expects support on the 3-photon manifold, got {numbers}")
    if state.weight(3) < 1.0 - 1e-9:
        raise StateValidationError("3-photon weight must be 1 for classification")
    report = isotropy_test(state, max_order=3, tol=tol, manifold=3)
    flags = report.flags
    label = _CLASS_LABELS.get(flags, "mixed invariance profile")
    return PolarizationClass(flags=flags, label=label, report=report)


# ---------------------------------------------------------------------------
# the isotropic three-photon family

_FAMILY_LOW, _FAMILY_HIGH = 1.0 / 6.0, 1.0 / 3.0


def unpol_family(rho11: float, rho12: complex = 0.0, rho13: complex = 0.0,
                 rho14: complex = 0.0) -> PolarizationState:
    """Member of the isotropic-covariance family of three-photon states.

    In the basis ``|3,0>, |2,1>, |1,2>, |0,3>`` the matrix has the fixed
    diagonal ``(r, 1 - 3r, 3r - 1/2, 1/2 - r)`` with ``1/6 <= r <= 1/3``
    and constrained off-diagonals; every positive member has vanishing
    Stokes vector and covariance ``5 I``.  Raises when the parameters
    leave the positive cone.
    """
    r = float(rho11)
    if not _FAMILY_LOW - 1e-12 <= r <= _FAMILY_HIGH + 1e-12:
        raise StateSpecError(f"rho11 = {r!r} outside [{_FAMILY_LOW}, {_FAMILY_HIGH}]")
    r12, r13, r14 = complex(rho12), complex(rho13), complex(rho14)
    s3 = math.sqrt(3.0)
    m = np.array([
        [r, r12, r13, r14],
        [r12.conjugate(), 1.0 - 3.0 * r, -s3 * r12, -r13],
        [r13.conjugate(), -s3 * r12.conjugate(), 3.0 * r - 0.5, r12],
        [r14.conjugate(), -r13.conjugate(), r12.conjugate(), 0.5 - r],
    ])
    # stored basis is ascending in horizontal photon number
    return manifold_state(3, m[::-1, ::-1])


def sample_unpol_family(count: int, rng: np.random.Generator,
                        scale: float = 0.05, max_tries: int = 200_000
                        ) -> list[PolarizationState]:
    """Rejection-sample positive family members."""
    out: list[PolarizationState] = []
    for _ in range(max_tries):
        if len(out) >= count:
            return out
        r11 = rng.uniform(_FAMILY_LOW, _FAMILY_HIGH)
        r12, r13 = (scale * (rng.normal() + 1j * rng.normal()) for _ in range(2))
        r14 = 2.0 * scale * (rng.normal() + 1j * rng.normal())
        try:
            out.append(unpol_family(r11, r12, r13, r14))
        except StateValidationError:
            continue
    raise RuntimeError(f"only {len(out)} of {count} samples accepted")


@dataclass
class PurityScanReport:
    """Feasibility scan of the family's pure-state conditions.

    A pure member would need ``|rho_jk|**2 = rho_jj rho_kk`` on three
    adjacent pairs at once; the scan tracks the best joint residual over
    the diagonal parameter and the largest purity among positive samples.
    ``feasible`` stays False: two conditions force ``rho11 = 1/3`` where
    the third misses by ``1/12``.
    """

    feasible: bool
    min_joint_residual: float
    residual_argmin: float
    max_sampled_purity: float
    center_purity: float


def purity_scan(grid_points: int = 2001, samples: int = 400,
                rng: np.random.Generator | None = None) -> PurityScanReport:
    """Scan the family for pure members (none exist) and extremal purity."""
    if rng is None:
        rng = np.random.default_rng(0)
    def joint_residual(r):
        need_12 = r * (1.0 - 3.0 * r)             # |r12|^2 from the (1,2) pair
        need_23 = (1.0 - 3.0 * r) * (3.0 * r - 0.5) / 3.0
        need_34 = (3.0 * r - 0.5) * (0.5 - r)
        return np.maximum(np.abs(need_12 - need_23), np.abs(need_12 - need_34))

    r = np.linspace(_FAMILY_LOW, _FAMILY_HIGH, grid_points)
    joint = joint_residual(r)
    best = int(np.argmin(joint))
    # golden-section polish between the neighbors of the grid minimum
    lo = r[max(best - 1, 0)]
    hi = r[min(best + 1, grid_points - 1)]
    gold = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(80):
        a = hi - gold * (hi - lo)
        b = lo + gold * (hi - lo)
        if joint_residual(np.array(a)) < joint_residual(np.array(b)):
            hi = b
        else:
            lo = a
    r_best = 0.5 * (lo + hi)
    best_val = float(joint_residual(np.array(r_best)))
    purities = [float(np.trace(s.manifold(3).rho @ s.manifold(3).rho).real)
                for s in sample_unpol_family(samples, rng)]
    center = unpol_family(0.25)
    center_purity = float(np.trace(center.manifold(3).rho @ center.manifold(3).rho).real)
    return PurityScanReport(feasible=bool(best_val <= 1e-12),
                            min_joint_residual=best_val,
                            residual_argmin=float(r_best),
                            max_sampled_purity=max(purities),
                            center_purity=center_purity)


# ---------------------------------------------------------------------------
# smallest isotropic variance sum (numerical probe)

def minimal_variance_candidate(n: int) -> PolarizationState:
    """Two-projector mixture conjectured to minimize the isotropic
    variance sum at ``3 n``: weights ``(1 +- sqrt((n-1)/n)) / 2`` on
    ``|n,0>`` and ``|0,n>``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    split = math.sqrt((n - 1.0) / n)
    rho = np.zeros((n + 1, n + 1), dtype=complex)
    rho[n, n] = 0.5 * (1.0 + split)
    rho[0, 0] = 0.5 * (1.0 - split)
    return PolarizationState([(1.0, ManifoldDensity(n, rho))])


@dataclass
class IsotropyFloorReport:
    """Outcome of random search over isotropic states of one manifold.

    ``kind`` marks this as numerical evidence, not a proof.  Sampled
    states all have vanishing Stokes vector and isotropic covariance;
    ``min_sum`` is the smallest variance sum found, to be compared with
    the candidate's ``3 n``.
    """

    kind: str
    photons: int
    samples: int
    min_sum: float
    min_weights: np.ndarray | None
    candidate_sum: float
    candidate_spread: float


def _diagonal_isotropic_sample(n: int, rng: np.random.Generator) -> np.ndarray | None:
    """Diagonal weights with isotropic covariance, by root-finding on a
    random segment of the simplex (the constraint is one scalar equation)."""
    m = np.arange(n + 1)
    vals = (2 * m - n).astype(float)
    diag_var = m * (n - m + 1.0) + (m + 1.0) * (n - m)  # <S1^2> per basis state

    def gap(w: np.ndarray) -> float:
        s = float(vals @ w)
        return float(vals ** 2 @ w - s * s - diag_var @ w)

    for _ in range(64):
        w0 = rng.dirichlet(np.ones(n + 1))
        w1 = rng.dirichlet(np.ones(n + 1))
        g0, g1 = gap(w0), gap(w1)
        if g0 == 0.0:
            return w0
        if g0 * g1 >= 0.0:
            continue
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            gm = gap((1.0 - mid) * w0 + mid * w1)
            if gm == 0.0:
                break
            if (gm > 0) == (g0 > 0):
                lo = mid
            else:
                hi = mid
        mid = 0.5 * (lo + hi)
        return (1.0 - mid) * w0 + mid * w1
    return None


def isotropy_floor_scan(n: int = 3, samples: int = 2000,
                        rng: np.random.Generator | None = None,
                        tol: float = DEFAULT_TOL) -> IsotropyFloorReport:
    """Probe the smallest variance sum among isotropic ``n``-photon states.

    Draws diagonal isotropic states (and, at ``n = 3``, members of the
    off-diagonal family) and records the smallest ``sum_j <dSj**2>``
    encountered.  Numerical evidence only.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    m = np.arange(n + 1)
    vals = (2 * m - n).astype(float)
    diag_var = m * (n - m + 1.0) + (m + 1.0) * (n - m)
    best_sum, best_weights = math.inf, None
    drawn = 0
    family_quota = samples // 2 if n == 3 else 0
    if family_quota:
        for state in sample_unpol_family(family_quota, rng):
            drawn += 1
            total = float(np.trace(moment_tensors(state, 2, 3).covariance().matrix))
            if total < best_sum:
                best_sum = total
                best_weights = np.diag(state.manifold(3).rho).real.copy()
    while drawn < samples:
        w = _diagonal_isotropic_sample(n, rng)
        if w is None:
            continue
        drawn += 1
        s = float(vals @ w)
        total = 2.0 * float(diag_var @ w) + float(vals ** 2 @ w) - s * s
        if total < best_sum:
            best_sum, best_weights = total, w
    candidate = minimal_variance_candidate(n)
    cand_tensors = moment_tensors(candidate, 2, n)
    cand_sum = float(np.trace(cand_tensors.covariance().matrix))
    cand_report = isotropy_test(candidate, max_order=2, tol=tol, manifold=n)
    return IsotropyFloorReport(kind="numerical probe (not a proof)",
                               photons=n, samples=drawn,
                               min_sum=best_sum, min_weights=best_weights,
                               candidate_sum=cand_sum,
                               candidate_spread=cand_report.central_spread[2])
