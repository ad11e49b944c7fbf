"""Reconstruction of moment packs from directional measurements.

Measuring ``<S_n**r>`` along enough directions determines every pack
entry of order ``r`` through the linear model

    y_d = sum_abc  r!/(a!b!c!) * M_abc * n_d**(a,b,c),

one independent system per order.  Canonical direction sets are provided:
six directions fix orders one and two, ten fix order three.  Measured
moments are solved order by order (exactly for square systems, by
weighted least squares otherwise), converted to central packs, and can be
compared against a reference to estimate a global axis misalignment.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import RankDeficiencyError
from .moments import (MomentTensors, central_packs_from_raw, covariance_from_pack,
                      direction_monomials, multi_indices, pack_size)
from .stokes import Direction

# rank decisions and conditioning warnings
RANK_TOL = 1e-9
CONDITION_WARNING = 1e6

_AXIS_1 = Direction(math.pi / 2, 0.0)
_AXIS_2 = Direction(math.pi / 2, math.pi / 2)
_AXIS_3 = Direction(0.0, 0.0)

# tilt putting cos(theta)**2 = 2/3, used by the order-three set
_TILT = math.acos(math.sqrt(2.0 / 3.0))


@dataclass(frozen=True)
class DirectionSet:
    """Labeled tuple of measurement directions (pairwise distinct)."""

    label: str
    directions: tuple[Direction, ...]

    def __post_init__(self):
        pts = self.unit_vectors
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if np.linalg.norm(pts[i] - pts[j]) < 1e-9:
                    raise ValueError(
                        f"directions {i} and {j} of {self.label!r} coincide")

    def __len__(self) -> int:
        return len(self.directions)

    @property
    def unit_vectors(self) -> np.ndarray:
        return np.array([d.unit_vector for d in self.directions])


CANONICAL_2 = DirectionSet("canonical-2", (
    _AXIS_1, _AXIS_2, _AXIS_3,
    Direction(math.pi / 2, math.pi / 4),
    Direction(math.pi / 4, 0.0),
    Direction(math.pi / 4, math.pi / 2),
))

CANONICAL_3 = DirectionSet("canonical-3", (
    _AXIS_3, _AXIS_1, _AXIS_2,
    Direction(math.pi / 2, _TILT),
    Direction(math.pi / 2, -_TILT),
    Direction(math.pi / 2 - _TILT, 0.0),
    Direction(math.pi / 2 + _TILT, 0.0),
    Direction(math.pi / 2 - _TILT, math.pi / 2),
    Direction(math.pi / 2 + _TILT, math.pi / 2),
    Direction(math.pi / 2 - _TILT, math.pi / 4),
))

# order-three set that reuses the six second-order directions
CANONICAL_3_NESTED = DirectionSet("canonical-3-nested", CANONICAL_2.directions + (
    Direction(math.pi / 6, math.pi / 6),
    Direction(math.pi / 6, math.pi / 3),
    Direction(math.pi / 3, math.pi / 6),
    Direction(math.pi / 3, math.pi / 3),
))

_NAMED_SETS = {s.label: s for s in (CANONICAL_2, CANONICAL_3, CANONICAL_3_NESTED)}


def canonical_directions(order: int, nested: bool = False) -> DirectionSet:
    """Smallest canonical set determining all packs up to ``order``."""
    if order < 1:
        raise ValueError("order must be at least 1")
    if order <= 2:
        return CANONICAL_2
    if order == 3:
        return CANONICAL_3_NESTED if nested else CANONICAL_3
    raise ValueError(f"no canonical set for order {order}; supply directions explicitly")


def named_direction_set(label: str) -> DirectionSet:
    try:
        return _NAMED_SETS[label]
    except KeyError:
        raise KeyError(f"unknown direction set {label!r}; "
                       f"known: {sorted(_NAMED_SETS)}") from None


@dataclass
class DesignMatrix:
    """Evaluation matrix of one order together with its diagnostics."""

    order: int
    matrix: np.ndarray
    indices: tuple[tuple[int, int, int], ...]
    rank: int
    condition: float

    @property
    def determined(self) -> bool:
        return self.rank >= len(self.indices)


def design_matrix(directions, r: int) -> DesignMatrix:
    """Build the order-``r`` design matrix for a direction set or array."""
    if isinstance(directions, DirectionSet):
        pts = directions.unit_vectors
    else:
        pts = np.atleast_2d(np.asarray(directions, dtype=float))
    mat = direction_monomials(pts, r)
    rank = int(np.linalg.matrix_rank(mat, tol=RANK_TOL * max(1.0, float(np.abs(mat).max()))))
    # condition of the least-squares problem, not of a possibly wide matrix
    sv = np.linalg.svd(mat, compute_uv=False)
    condition = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    return DesignMatrix(order=r, matrix=mat, indices=multi_indices(r),
                        rank=rank, condition=condition)


@dataclass
class MomentObservations:
    """Measured directional moments, one value per direction and order.

    ``values[r]`` aligns with ``directions``; ``stderr`` is optional and,
    when present, must align likewise.  Orders must be contiguous from 1.
    """

    directions: DirectionSet
    values: dict[int, np.ndarray]
    stderr: dict[int, np.ndarray] | None = None

    def __post_init__(self):
        orders = sorted(self.values)
        if orders != list(range(1, len(orders) + 1)):
            raise ValueError(f"observation orders {orders} not contiguous from 1")
        k = len(self.directions)
        for r, vals in self.values.items():
            if len(vals) != k:
                raise ValueError(f"order {r} has {len(vals)} values for {k} directions")
        if self.stderr is not None:
            if sorted(self.stderr) != orders:
                raise ValueError("stderr orders do not match value orders")
            for r, errs in self.stderr.items():
                if len(errs) != k:
                    raise ValueError(f"order {r} stderr length mismatch")
                if np.any(np.asarray(errs) <= 0):
                    raise ValueError("stderr entries must be positive")

    @property
    def max_order(self) -> int:
        return max(self.values)


@dataclass
class ReconstructionResult:
    """Solved packs with per-order diagnostics.

    ``raw_stderr`` propagates observation noise to pack entries to first
    order (the least-squares covariance); present only when the
    observations carried standard errors.
    """

    tensors: MomentTensors
    residuals: dict[int, float]
    conditions: dict[int, float]
    pack_sizes: dict[int, int]
    raw_stderr: dict[int, np.ndarray] | None

    def covariance(self):
        return covariance_from_pack(self.tensors.central[2], self.tensors.mean)


def reconstruct(obs: MomentObservations, max_order: int | None = None,
                label: str = "reconstructed") -> ReconstructionResult:
    """Solve for raw packs order by order and convert to central packs.

    Square systems are solved exactly; rectangular ones by least squares,
    weighted by ``1/stderr**2`` when uncertainties are given.  A design
    matrix that does not determine its order raises
    :class:`RankDeficiencyError`.
    """
    max_order = obs.max_order if max_order is None else max_order
    if max_order > obs.max_order:
        raise ValueError(f"observations stop at order {obs.max_order}")
    raw: dict[int, np.ndarray] = {}
    residuals: dict[int, float] = {}
    conditions: dict[int, float] = {}
    stderr_out: dict[int, np.ndarray] = {}
    for r in range(1, max_order + 1):
        design = design_matrix(obs.directions, r)
        n_terms = pack_size(r)
        if design.rank < n_terms:
            raise RankDeficiencyError(
                f"order {r}: rank {design.rank} < {n_terms} unknowns "
                f"({len(obs.directions)} directions)")
        a = design.matrix
        y = np.asarray(obs.values[r], dtype=float)
        sig = None if obs.stderr is None else np.asarray(obs.stderr[r], dtype=float)
        if sig is not None:
            aw, yw = a / sig[:, None], y / sig
        else:
            aw, yw = a, y
        if a.shape[0] == n_terms:
            solution = np.linalg.solve(aw, yw)
        else:
            solution, *_ = np.linalg.lstsq(aw, yw, rcond=None)
        raw[r] = solution
        residuals[r] = float(np.linalg.norm(aw @ solution - yw))
        conditions[r] = design.condition
        if sig is not None:
            stderr_out[r] = np.sqrt(np.diag(np.linalg.inv(aw.T @ aw)))
    central = central_packs_from_raw(raw)
    tensors = MomentTensors(label=label, orders=sorted(raw),
                            mean=raw[1].copy(), raw=raw, central=central)
    return ReconstructionResult(
        tensors=tensors, residuals=residuals, conditions=conditions,
        pack_sizes={r: pack_size(r) for r in raw},
        raw_stderr=stderr_out if obs.stderr is not None else None)


# ---------------------------------------------------------------------------
# parameter counting

@dataclass
class ParameterCounts:
    """How much a full moment reconstruction would determine.

    ``per_order[r-1]`` is the pack size at order ``r``; ``cumulative``
    their sum through order ``n``; ``all_manifolds`` the total over
    manifolds ``1..n`` measured through their own maximal orders; and
    ``state_parameters`` the free real parameters of one ``n``-photon
    density block.
    """

    photons: int
    per_order: list[int]
    cumulative: int
    all_manifolds: int
    state_parameters: int


def parameter_counts(n: int) -> ParameterCounts:
    if n < 1:
        raise ValueError("photon number must be at least 1")
    per_order = [pack_size(r) for r in range(1, n + 1)]
    cumulative = n * (n * n + 6 * n + 11) // 6
    assert cumulative == sum(per_order)
    all_manifolds = n * (n ** 3 + 6 * n ** 2 + 13 * n + 12) // 4
    return ParameterCounts(photons=n, per_order=per_order, cumulative=cumulative,
                           all_manifolds=all_manifolds,
                           state_parameters=n * (n + 2))


# ---------------------------------------------------------------------------
# misalignment between a measured and a reference frame

@dataclass
class MisalignmentFit:
    """Rigid rotation aligning measured moments with a reference.

    ``rotation`` maps measured-frame vectors into the reference frame.
    ``restricted`` is set when degeneracies leave part of the rotation
    unconstrained (the fit then uses the observable directions only).
    """

    rotation: np.ndarray
    angle: float
    axis: np.ndarray
    gamma_residual: float
    stokes_residual: float
    restricted: bool
    note: str = ""

    @property
    def angle_degrees(self) -> float:
        return math.degrees(self.angle)


def _eigen_clusters(values: np.ndarray, tol: float) -> list[list[int]]:
    clusters = [[0]]
    for i in range(1, len(values)):
        if abs(values[i] - values[clusters[-1][-1]]) < tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters


def _rotation_from_pairs(pairs: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Best proper rotation with ``R v_meas ~ v_ref`` (orthogonal Procrustes)."""
    b = sum(np.outer(ref, meas) for ref, meas in pairs)
    u, _s, vt = np.linalg.svd(b)
    d = np.sign(np.linalg.det(u @ vt))
    return u @ np.diag([1.0, 1.0, d]) @ vt


def _axis_angle(rotation: np.ndarray) -> tuple[float, np.ndarray]:
    angle = math.acos(np.clip((np.trace(rotation) - 1.0) / 2.0, -1.0, 1.0))
    if angle < 1e-12:
        return 0.0, np.array([0.0, 0.0, 1.0])
    w = np.array([rotation[2, 1] - rotation[1, 2],
                  rotation[0, 2] - rotation[2, 0],
                  rotation[1, 0] - rotation[0, 1]])
    norm = np.linalg.norm(w)
    if norm < 1e-9:  # angle near pi, extract axis from R + I
        sym = rotation + np.eye(3)
        col = sym[:, np.argmax(np.linalg.norm(sym, axis=0))]
        return angle, col / np.linalg.norm(col)
    return angle, w / norm


def _geodesic_rotation(v_meas: np.ndarray, v_ref: np.ndarray) -> np.ndarray:
    """Minimal rotation carrying one unit vector onto another."""
    cross = np.cross(v_meas, v_ref)
    dot = float(np.clip(v_meas @ v_ref, -1.0, 1.0))
    norm = np.linalg.norm(cross)
    if norm < 1e-12:
        if dot > 0:
            return np.eye(3)
        # antipodal: rotate by pi about any perpendicular axis
        perp = np.eye(3)[np.argmin(np.abs(v_ref))]
        perp = perp - (perp @ v_ref) * v_ref
        perp /= np.linalg.norm(perp)
        k = _skew(perp)
        return np.eye(3) + 2.0 * (k @ k)
    axis = cross / norm
    angle = math.atan2(norm, dot)
    k = _skew(axis)
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


def misalignment_fit(measured, reference: MomentTensors,
                     stokes_tol: float = 1e-9) -> MisalignmentFit:
    """Estimate the rigid rotation between measured and reference frames.

    Both arguments need orders one and two (a
    :class:`ReconstructionResult` is accepted for ``measured``).  The fit
    matches the principal axes of the covariance (only those belonging to
    nondegenerate reference eigenvalues are informative) plus the Stokes
    vector when it does not vanish, resolving eigenvector sign ambiguity
    by the alignment objective ``|R G_m R^T - G_ref|_F``.
    """
    if isinstance(measured, ReconstructionResult):
        measured = measured.tensors
    if 2 not in measured.central or 2 not in reference.central:
        raise ValueError("misalignment fit needs packs through order 2")
    cov_m = covariance_from_pack(measured.central[2], measured.mean)
    cov_r = covariance_from_pack(reference.central[2], reference.mean)
    scale = max(1.0, float(np.max(np.abs(cov_r.eigenvalues))))
    clusters = _eigen_clusters(cov_r.eigenvalues, 1e-8 * scale)

    eigen_pairs = []  # (ref axis, measured axis); measured sign ambiguous
    for cluster in clusters:
        if len(cluster) == 1:
            i = cluster[0]
            eigen_pairs.append((cov_r.axes[i], cov_m.axes[i]))
    s_m, s_r = measured.mean, reference.mean
    stokes_pair = None
    if np.linalg.norm(s_m) > stokes_tol and np.linalg.norm(s_r) > stokes_tol:
        stokes_pair = (s_r / np.linalg.norm(s_r), s_m / np.linalg.norm(s_m))

    ref_dirs = [p[0] for p in eigen_pairs]
    if stokes_pair is not None:
        ref_dirs.append(stokes_pair[0])
    if ref_dirs:
        rank = int(np.linalg.matrix_rank(np.array(ref_dirs), tol=1e-6))
    else:
        rank = 0

    def objective(rot: np.ndarray) -> float:
        val = float(np.linalg.norm(rot @ cov_m.matrix @ rot.T - cov_r.matrix))
        if stokes_pair is not None:
            val += float(np.linalg.norm(rot @ s_m - s_r))
        return val

    if rank == 0:
        rotation = np.eye(3)
        restricted, note = True, "no anisotropy to align; returning identity"
    elif rank == 1:
        if eigen_pairs:
            ref_v, meas_v = eigen_pairs[0]
        else:
            ref_v, meas_v = stokes_pair
        if meas_v @ ref_v < 0:
            meas_v = -meas_v
        rotation = _geodesic_rotation(meas_v, ref_v)
        restricted = True  # rotation about the common axis stays free
        note = "single informative axis; minimal geodesic rotation"
    else:
        best, best_val = None, math.inf
        for signs in np.ndindex(*(2,) * len(eigen_pairs)):
            pairs = [(ref, meas if s == 0 else -meas)
                     for (ref, meas), s in zip(eigen_pairs, signs)]
            if stokes_pair is not None:
                pairs.append(stokes_pair)
            rot = _rotation_from_pairs(pairs)
            val = objective(rot)
            if val < best_val:
                best, best_val = rot, val
        rotation = best
        restricted = False
        note = ""

    angle, axis = _axis_angle(rotation)
    stokes_residual = (float(np.linalg.norm(rotation @ s_m - s_r))
                       if stokes_pair is not None else float(np.linalg.norm(s_m - s_r)))
    return MisalignmentFit(
        rotation=rotation, angle=angle, axis=axis,
        gamma_residual=float(np.linalg.norm(rotation @ cov_m.matrix @ rotation.T - cov_r.matrix)),
        stokes_residual=stokes_residual, restricted=restricted, note=note)
