"""Moments of Stokes measurements, packed order by order.

For a direction ``n`` on the sphere the projected operator is
``S_n = n1 S1 + n2 S2 + n3 S3``.  Expanding ``S_n**r`` collects, for each
multi-index ``(a, b, c)`` with ``a + b + c = r``, the symmetrized product
of ``a`` factors ``S1``, ``b`` factors ``S2`` and ``c`` factors ``S3``.
A *pack* stores the expectations ``M_abc`` of those symmetrized products
(the Hermitian sum over distinct orderings divided by the number of
orderings), so that

    <S_n**r> = sum_abc  r!/(a! b! c!) * M_abc * n1**a n2**b n3**c.

Central packs use the shifted operators ``Sj - <Sj>``.  Quantities that
average over photon-number manifolds are formed from weighted raw packs
and centralized about the overall mean, so a beam whose mean wanders
between manifolds shows up as spread, not as zero.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import StateValidationError
from .fock import ManifoldDensity, PolarizationState
from .grids import parse_grid
from .stokes import Direction, stokes_operators

AVERAGED = "excitation-averaged"

# eigenvalue gap below which covariance axes are reported as non-unique
DEGENERACY_TOL = 1e-9


@lru_cache(maxsize=None)
def multi_indices(r: int) -> tuple[tuple[int, int, int], ...]:
    """Multi-indices ``(a, b, c)`` with ``a + b + c = r``, lexicographically
    descending so the three axes come first at ``r = 1``."""
    return tuple((a, b, r - a - b)
                 for a in range(r, -1, -1) for b in range(r - a, -1, -1))


def pack_size(r: int) -> int:
    return (r + 1) * (r + 2) // 2


def multiplicity(index: tuple[int, int, int]) -> int:
    a, b, c = index
    return math.factorial(a + b + c) // (
        math.factorial(a) * math.factorial(b) * math.factorial(c))


def _orderings(index: tuple[int, int, int]) -> list[tuple[int, ...]]:
    a, b, c = index
    seq = (0,) * a + (1,) * b + (2,) * c
    return sorted(set(itertools.permutations(seq)))


def symmetrized_expectation(rho: np.ndarray, ops, index: tuple[int, int, int]) -> float:
    """Expectation of the symmetrized operator product for one multi-index.

    ``ops`` is the triple of (possibly shifted) Stokes matrices.  The
    result is the average over all distinct orderings, which is real for
    Hermitian factors.
    """
    orderings = _orderings(index)
    total = 0.0
    for perm in orderings:
        prod = rho
        for k in perm:
            prod = prod @ ops[k]
        total += np.trace(prod).real
    return total / len(orderings)


def _pack(rho: np.ndarray, ops, r: int) -> np.ndarray:
    return np.array([symmetrized_expectation(rho, ops, idx) for idx in multi_indices(r)])


def direction_monomials(points, r: int) -> np.ndarray:
    """Evaluation rows: entry ``(k, i)`` is ``r!/(a!b!c!) n_k**(a,b,c)``.

    The dot product of a row with a pack of order ``r`` gives the moment
    along that direction.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    cols = [multiplicity(idx)
            * pts[:, 0] ** idx[0] * pts[:, 1] ** idx[1] * pts[:, 2] ** idx[2]
            for idx in multi_indices(r)]
    return np.column_stack(cols)


def evaluate_pack(pack: np.ndarray, r: int, direction) -> float:
    """Moment along one direction from a packed order-``r`` tensor."""
    vec = direction.unit_vector if isinstance(direction, Direction) else np.asarray(direction)
    return float((direction_monomials(vec, r) @ np.asarray(pack))[0])


# ---------------------------------------------------------------------------
# homogeneous polynomial arithmetic used for raw -> central conversion

def _poly_from_pack(pack: np.ndarray, r: int) -> dict[tuple[int, int, int], float]:
    return {idx: multiplicity(idx) * float(c) for idx, c in zip(multi_indices(r), pack)}


def _pack_from_poly(poly: dict, r: int) -> np.ndarray:
    return np.array([poly.get(idx, 0.0) / multiplicity(idx) for idx in multi_indices(r)])


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict[tuple[int, int, int], float] = {}
    for (a1, b1, c1), x in p.items():
        for (a2, b2, c2), y in q.items():
            key = (a1 + a2, b1 + b2, c1 + c2)
            out[key] = out.get(key, 0.0) + x * y
    return out


def _poly_pow(p: dict, k: int) -> dict:
    out = {(0, 0, 0): 1.0}
    for _ in range(k):
        out = _poly_mul(out, p)
    return out


def central_packs_from_raw(raw: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
    """Central packs from raw packs of orders ``1 .. r_max``.

    Uses the binomial expansion of ``(S_n - <S_n>)**r`` with the scalar
    mean, carried out once on packed coefficients; exact because the mean
    commutes with everything.
    """
    orders = sorted(raw)
    if orders != list(range(1, len(orders) + 1)):
        raise ValueError("raw packs must cover orders 1..r_max contiguously")
    mean_poly = _poly_from_pack(raw[1], 1)
    raw_polys = {0: {(0, 0, 0): 1.0}}
    raw_polys.update({r: _poly_from_pack(raw[r], r) for r in orders})
    central = {}
    for r in orders:
        acc: dict[tuple[int, int, int], float] = {}
        for k in range(r + 1):
            coef = math.comb(r, k) * (-1.0) ** (r - k)
            term = _poly_mul(_poly_pow(mean_poly, r - k), raw_polys[k])
            for idx, v in term.items():
                acc[idx] = acc.get(idx, 0.0) + coef * v
        central[r] = _pack_from_poly(acc, r)
    return central


# ---------------------------------------------------------------------------
# moment tensors

@dataclass
class MomentTensors:
    """Raw and central packs of one manifold or of the averaged beam."""

    label: str
    orders: list[int]
    mean: np.ndarray
    raw: dict[int, np.ndarray]
    central: dict[int, np.ndarray]

    @property
    def max_order(self) -> int:
        return max(self.orders)

    def raw_along(self, direction, r: int) -> float:
        return evaluate_pack(self.raw[r], r, direction)

    def central_along(self, direction, r: int) -> float:
        return evaluate_pack(self.central[r], r, direction)

    def symmetrized_sum(self, index: tuple[int, int, int], central: bool = True) -> float:
        """Hermitian sum over all distinct orderings (pack entry times
        the number of orderings)."""
        r = sum(index)
        pack = self.central[r] if central else self.raw[r]
        return multiplicity(index) * float(pack[multi_indices(r).index(index)])

    def covariance(self) -> "Covariance":
        return covariance_from_pack(self.central[2], self.mean)


def _conditional(state: PolarizationState, n: int) -> ManifoldDensity:
    try:
        return state.manifold(n)
    except KeyError:
        raise StateValidationError(f"state stores no {n}-photon manifold") from None


def manifold_moments(state: PolarizationState, n: int, max_order: int = 2) -> MomentTensors:
    """Packs of a single manifold, conditioned on its photon number."""
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    block = _conditional(state, n)
    ops = stokes_operators(n).vector
    rho = block.rho
    raw = {r: _pack(rho, ops, r) for r in range(1, max_order + 1)}
    mean = raw[1].copy()
    shifted = tuple(op - m * np.eye(n + 1) for op, m in zip(ops, mean))
    central = {r: _pack(rho, shifted, r) for r in range(1, max_order + 1)}
    return MomentTensors(label=f"manifold {n}", orders=list(range(1, max_order + 1)),
                         mean=mean, raw=raw, central=central)


def averaged_moments(state: PolarizationState, max_order: int = 2) -> MomentTensors:
    """Excitation-averaged packs, centralized about the overall mean.

    Raw packs are the weight-averaged manifold packs (the vacuum and any
    truncated tail contribute zero); central packs follow from them by the
    scalar-mean binomial conversion.
    """
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    orders = list(range(1, max_order + 1))
    raw = {r: np.zeros(pack_size(r)) for r in orders}
    for w, block in state.manifolds:
        ops = stokes_operators(block.n).vector
        for r in orders:
            raw[r] += w * _pack(block.rho, ops, r)
    central = central_packs_from_raw(raw)
    return MomentTensors(label=AVERAGED, orders=orders,
                         mean=raw[1].copy(), raw=raw, central=central)


def moment_tensors(state: PolarizationState, max_order: int = 2,
                   manifold: int | None = None) -> MomentTensors:
    """Packs for one manifold, or excitation-averaged when ``manifold`` is None."""
    if manifold is None:
        return averaged_moments(state, max_order)
    return manifold_moments(state, manifold, max_order)


def stokes_vector(state: PolarizationState, manifold: int | None = None) -> np.ndarray:
    return moment_tensors(state, 1, manifold).mean


def excitation_average(state: PolarizationState, fn) -> float:
    """Weighted sum ``sum_N p_N fn(N, block)`` over stored manifolds."""
    return math.fsum(w * fn(block.n, block) for w, block in state.manifolds)


def raw_moment(state: PolarizationState, direction: Direction, r: int,
               manifold: int | None = None) -> float:
    """``<S_n**r>`` by direct matrix power, per manifold or averaged."""
    if r < 1:
        raise ValueError("moment order must be at least 1")
    if manifold is not None:
        block = _conditional(state, manifold)
        s_n = stokes_operators(manifold).along(direction)
        return float(np.trace(block.rho @ np.linalg.matrix_power(s_n, r)).real)
    total = 0.0
    for w, block in state.manifolds:
        s_n = stokes_operators(block.n).along(direction)
        total += w * np.trace(block.rho @ np.linalg.matrix_power(s_n, r)).real
    return float(total)


def central_moment(state: PolarizationState, direction: Direction, r: int,
                   manifold: int | None = None) -> float:
    """``<(S_n - <S_n>)**r>`` with the per-manifold or overall mean."""
    if r < 1:
        raise ValueError("moment order must be at least 1")
    if manifold is not None:
        block = _conditional(state, manifold)
        s_n = stokes_operators(manifold).along(direction)
        mean = np.trace(block.rho @ s_n).real
        shifted = s_n - mean * np.eye(manifold + 1)
        return float(np.trace(block.rho @ np.linalg.matrix_power(shifted, r)).real)
    raws = [1.0] + [raw_moment(state, direction, k) for k in range(1, r + 1)]
    mean = raws[1]
    return float(sum(math.comb(r, k) * (-mean) ** (r - k) * raws[k] for k in range(r + 1)))


# ---------------------------------------------------------------------------
# covariance

@dataclass
class Covariance:
    """Second-order central structure with its principal axes.

    ``axes`` holds unit eigenvectors as rows, matched to ``eigenvalues``
    in descending order.  When eigenvalues are degenerate the axes are not
    unique and ``degenerate`` is set.
    """

    matrix: np.ndarray
    mean: np.ndarray
    eigenvalues: np.ndarray
    axes: np.ndarray
    degenerate: bool

    def along(self, direction) -> float:
        vec = direction.unit_vector if isinstance(direction, Direction) else np.asarray(direction)
        return float(vec @ self.matrix @ vec)


def covariance_from_pack(central2: np.ndarray, mean: np.ndarray) -> Covariance:
    m200, m110, m101, m020, m011, m002 = central2
    gamma = np.array([[m200, m110, m101],
                      [m110, m020, m011],
                      [m101, m011, m002]])
    wy, vy = np.linalg.eigh(gamma)
    order = np.argsort(wy)[::-1]
    eigenvalues = wy[order]
    axes = vy[:, order].T.copy()
    for row in axes:
        for comp in row:
            if abs(comp) > 1e-12:
                if comp < 0:
                    row *= -1.0
                break
    gap_tol = DEGENERACY_TOL * max(1.0, float(np.max(np.abs(eigenvalues))))
    degenerate = bool(np.min(np.abs(np.diff(eigenvalues))) < gap_tol)
    return Covariance(matrix=gamma, mean=np.asarray(mean, dtype=float),
                      eigenvalues=eigenvalues, axes=axes, degenerate=degenerate)


def covariance(state: PolarizationState, manifold: int | None = None) -> Covariance:
    return moment_tensors(state, 2, manifold).covariance()


# ---------------------------------------------------------------------------
# uncertainty bounds

@dataclass
class UncertaintyBounds:
    """The chain ``2 <S0>  <=  sum_j <dSj**2>  <=  <S0 (S0 + 2)>``."""

    lower: float
    total: float
    upper: float
    saturates_lower: bool
    saturates_upper: bool


def uncertainty_bounds(state: PolarizationState, manifold: int | None = None,
                       tol: float = 1e-9) -> UncertaintyBounds:
    """Evaluate the total-variance bounds; raises if either is violated."""
    tensors = moment_tensors(state, 2, manifold)
    total = float(np.trace(tensors.covariance().matrix))
    if manifold is not None:
        lower = 2.0 * manifold
        upper = float(manifold * (manifold + 2))
    else:
        lower = 2.0 * excitation_average(state, lambda n, _b: float(n))
        upper = excitation_average(state, lambda n, _b: float(n * (n + 2)))
    scale = max(1.0, upper)
    if total < lower - tol * scale or total > upper + tol * scale:
        raise StateValidationError(
            f"variance sum {total!r} escapes [{lower!r}, {upper!r}]")
    return UncertaintyBounds(lower=lower, total=total, upper=upper,
                             saturates_lower=abs(total - lower) <= tol * scale,
                             saturates_upper=abs(total - upper) <= tol * scale)


# ---------------------------------------------------------------------------
# sphere scans

@dataclass
class SphereScan:
    """Moment values over a direction grid.

    ``central`` keeps the signed values; :attr:`radii` applies the
    absolute value at odd orders, which is what surface plots use.
    """

    order: int
    points: np.ndarray
    central: np.ndarray
    raw: np.ndarray
    grid_label: str
    label: str

    @property
    def thetas(self) -> np.ndarray:
        return np.arccos(np.clip(self.points[:, 2], -1.0, 1.0))

    @property
    def phis(self) -> np.ndarray:
        return np.arctan2(self.points[:, 1], self.points[:, 0])

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.central) if self.order % 2 else self.central.copy()


def sphere_scan(state: PolarizationState, r: int, grid="icosphere:3",
                manifold: int | None = None) -> SphereScan:
    """Evaluate ``<d_n**r>`` and ``<S_n**r>`` over a grid of directions.

    ``grid`` is either a label understood by :func:`~.grids.parse_grid`
    or an explicit ``(k, 3)`` array of unit vectors.  Packs are computed
    once; each direction costs one dot product.
    """
    if isinstance(grid, str):
        points = parse_grid(grid)
        grid_label = grid
    else:
        points = np.atleast_2d(np.asarray(grid, dtype=float))
        grid_label = f"custom:{len(points)}"
    tensors = moment_tensors(state, r, manifold)
    rows = direction_monomials(points, r)
    return SphereScan(order=r, points=points,
                      central=rows @ tensors.central[r],
                      raw=rows @ tensors.raw[r],
                      grid_label=grid_label, label=tensors.label)


def scan_from_packs(raw_pack, central_pack, r: int, grid="icosphere:3",
                    label: str = "reconstructed") -> SphereScan:
    """Scan explicit order-``r`` packs (e.g. reconstructed ones) over a grid."""
    raw_pack = np.asarray(raw_pack, dtype=float)
    central_pack = np.asarray(central_pack, dtype=float)
    if raw_pack.shape != (pack_size(r),) or central_pack.shape != (pack_size(r),):
        raise ValueError(f"order-{r} packs need {pack_size(r)} entries")
    if isinstance(grid, str):
        points = parse_grid(grid)
        grid_label = grid
    else:
        points = np.atleast_2d(np.asarray(grid, dtype=float))
        grid_label = f"custom:{len(points)}"
    rows = direction_monomials(points, r)
    return SphereScan(order=r, points=points, central=rows @ central_pack,
                      raw=rows @ raw_pack, grid_label=grid_label, label=label)
