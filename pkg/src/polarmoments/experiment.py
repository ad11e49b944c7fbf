"""Simulation of photon-counting polarimetry.

A measurement along direction ``n`` rotates the state so that ``n . S``
becomes the number difference, then counts photons in the two output
ports.  Outcome ``(N, k)`` (total ``N``, ``k`` in the first port) occurs
with probability ``p_N <k, N-k| U* rho_N U |k, N-k>`` and contributes the
value ``2k - N``.  Detection is modeled per outcome class: a draw of
``trials`` shots is thinned binomially with one coincidence efficiency
per class, and calibration divides the efficiencies back out.

Channel efficiencies, when given instead of per-class factors, refer to
the four detectors ``(h1, h2, v1, v2)`` behind 50:50 fiber splitters on
each port; at ``N = 2`` both photons entering one splitter separate only
half the time, which is the default ``0.5`` factor on the ``k in {0, N}``
classes.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .fock import PolarizationState
from .stokes import Direction, rotation_to_direction
from .tomography import DirectionSet, MomentObservations

# measured detector ratios of the two source arrangements used in tests
PAIR_SOURCE_EFFICIENCIES = (0.91, 0.91, 0.82, 1.00)
DOUBLE_SOURCE_EFFICIENCIES = (0.75, 0.76, 1.00, 0.57)

EFFICIENCY_PRESETS = {
    "pair_source": PAIR_SOURCE_EFFICIENCIES,
    "double_source": DOUBLE_SOURCE_EFFICIENCIES,
}


@dataclass
class DetectorConfig:
    """Detection model and acquisition settings.

    Exactly one of ``channel_efficiencies`` (four detector ratios) or
    ``class_efficiencies`` (explicit ``(N, k) -> eta``) may be given;
    with neither, detection is ideal.  ``splitter_halving`` applies the
    default 0.5 coincidence factor to ``k in {0, N}`` at ``N = 2``.
    """

    channel_efficiencies: tuple[float, float, float, float] | None = None
    class_efficiencies: dict[tuple[int, int], float] | None = None
    splitter_halving: bool = True
    trials: int = 100_000
    runs: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.channel_efficiencies is not None and self.class_efficiencies is not None:
            raise ValueError("give channel or class efficiencies, not both")
        if self.channel_efficiencies is not None:
            effs = tuple(float(e) for e in self.channel_efficiencies)
            if len(effs) != 4:
                raise ValueError("channel_efficiencies needs four entries")
            if any(not 0.0 < e <= 1.0 for e in effs):
                raise ValueError("channel efficiencies must lie in (0, 1]")
            self.channel_efficiencies = effs
        if self.class_efficiencies is not None:
            for key, e in self.class_efficiencies.items():
                if not 0.0 < float(e) <= 1.0:
                    raise ValueError(f"class efficiency {key}: {e!r} outside (0, 1]")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.runs < 1:
            raise ValueError("runs must be positive")

    def class_efficiency(self, n: int, k: int) -> float:
        """Coincidence efficiency of the outcome class ``(n, k)``."""
        if self.class_efficiencies is not None:
            return float(self.class_efficiencies.get((n, k), 1.0))
        if self.channel_efficiencies is None:
            return 1.0
        h1, h2, v1, v2 = self.channel_efficiencies
        mean_h, mean_v = 0.5 * (h1 + h2), 0.5 * (v1 + v2)
        if n == 2:
            half = 0.5 if self.splitter_halving else 1.0
            if k == 2:
                return half * h1 * h2
            if k == 0:
                return half * v1 * v2
            return mean_h * mean_v
        # one detector fires per port photon; ports average their pair
        return mean_h ** k * mean_v ** (n - k)


@dataclass
class OutcomeDistribution:
    """Outcome classes and probabilities for one direction."""

    direction: Direction
    ns: np.ndarray
    ks: np.ndarray
    probs: np.ndarray

    @property
    def values(self) -> np.ndarray:
        """Measurement values ``2k - N`` per class."""
        return 2 * self.ks - self.ns

    @property
    def total(self) -> float:
        return float(self.probs.sum())


def outcome_distribution(state: PolarizationState, direction: Direction) -> OutcomeDistribution:
    """Counting statistics of a measurement along ``direction``."""
    ns, ks, probs = [], [], []
    for w, block in state.manifolds:
        u = rotation_to_direction(block.n, direction.theta, direction.phi).matrix
        rotated = u.conj().T @ block.rho @ u
        diag = np.clip(np.diag(rotated).real, 0.0, None)
        for k in range(block.n + 1):
            ns.append(block.n)
            ks.append(k)
            probs.append(w * diag[k])
    return OutcomeDistribution(direction=direction,
                               ns=np.array(ns, dtype=int),
                               ks=np.array(ks, dtype=int),
                               probs=np.array(probs, dtype=float))


@dataclass
class CountsRecord:
    """Counts of one run along one direction.

    ``raw`` holds what the detectors registered (integers when sampled,
    expectations in exact mode); ``calibrated`` divides the class
    efficiencies back out.  ``calibrated`` is None until
    :func:`calibrate` fills it.
    """

    direction: Direction
    run: int
    ns: np.ndarray
    ks: np.ndarray
    raw: np.ndarray
    trials: int
    exact: bool = False
    calibrated: np.ndarray | None = None


def sample_counts(dist: OutcomeDistribution, config: DetectorConfig,
                  rng: np.random.Generator, run: int = 0) -> CountsRecord:
    """Multinomial draw of ``trials`` shots, thinned per class.

    Shots falling outside the stored manifolds (vacuum or truncated tail)
    land in an implicit no-coincidence class and are discarded.
    """
    probs = np.append(dist.probs, max(0.0, 1.0 - dist.total))
    probs = probs / probs.sum()
    shots = rng.multinomial(config.trials, probs)[:-1]
    effs = np.array([config.class_efficiency(n, k) for n, k in zip(dist.ns, dist.ks)])
    detected = rng.binomial(shots, effs)
    return CountsRecord(direction=dist.direction, run=run, ns=dist.ns.copy(),
                        ks=dist.ks.copy(), raw=detected.astype(float),
                        trials=config.trials)


def expected_counts(dist: OutcomeDistribution, config: DetectorConfig,
                    run: int = 0) -> CountsRecord:
    """Exact-expectation record: no sampling noise."""
    effs = np.array([config.class_efficiency(n, k) for n, k in zip(dist.ns, dist.ks)])
    return CountsRecord(direction=dist.direction, run=run, ns=dist.ns.copy(),
                        ks=dist.ks.copy(), raw=config.trials * dist.probs * effs,
                        trials=config.trials, exact=True)


def calibrate(record: CountsRecord, config: DetectorConfig) -> CountsRecord:
    """Divide out the class efficiencies (unbiased under the thinning model)."""
    effs = np.array([config.class_efficiency(n, k)
                     for n, k in zip(record.ns, record.ks)])
    if np.any(effs <= 0.0):
        raise ValueError("cannot calibrate a class with zero efficiency")
    return replace(record, calibrated=record.raw / effs)


def _moments_from_counts(record: CountsRecord, config: DetectorConfig,
                         manifold: int, max_order: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-order moment estimates and their delta-method variances.

    Conditions on the requested manifold: probabilities are normalized
    within it, so vacuum shots and other manifolds drop out.
    """
    if record.calibrated is None:
        raise ValueError("record must be calibrated first")
    sel = record.ns == manifold
    if not np.any(sel):
        raise ValueError(f"no outcome classes for manifold {manifold}")
    cal = record.calibrated[sel]
    raw = record.raw[sel]
    total = cal.sum()
    if total <= 0:
        raise ValueError(f"no detected events in manifold {manifold}")
    p_hat = cal / total
    values = (2 * record.ks[sel] - manifold).astype(float)
    effs = np.array([config.class_efficiency(n, k)
                     for n, k in zip(record.ns[sel], record.ks[sel])])
    moments = np.empty(max_order)
    variances = np.empty(max_order)
    # detected-count covariance: multinomial with plug-in probabilities
    q_hat = raw / record.trials
    for r in range(1, max_order + 1):
        v_r = values ** r
        mu = float(p_hat @ v_r)
        moments[r - 1] = mu
        grad = (v_r - mu) / (effs * total)
        var = record.trials * (q_hat @ grad ** 2 - (q_hat @ grad) ** 2)
        variances[r - 1] = max(var, 0.0)
    return moments, variances


@dataclass
class EmpiricalMoments:
    """Run statistics per direction and order.

    ``mean`` averages the runs; ``spread`` is the across-run standard
    deviation; ``stderr`` is the per-direction standard error of the mean
    from the counting statistics (delta method on the multinomial).
    """

    directions: DirectionSet
    orders: list[int]
    mean: np.ndarray     # (directions, orders)
    spread: np.ndarray
    stderr: np.ndarray


@dataclass
class ProtocolResult:
    observations: MomentObservations
    empirical: EmpiricalMoments
    counts: list[CountsRecord] = field(default_factory=list)


def _run_rng(seed: int, direction_index: int, run: int) -> np.random.Generator:
    # one independent stream per (direction, run), schedule independent
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(direction_index, run)))


def run_protocol(state: PolarizationState, directions: DirectionSet,
                 config: DetectorConfig, manifold: int | None = None,
                 max_order: int = 2, exact: bool = False) -> ProtocolResult:
    """Simulate the full protocol over a direction set.

    For each direction, ``config.runs`` independent acquisitions of
    ``config.trials`` shots are drawn, calibrated, and reduced to moments
    of the requested manifold (the only stored one by default).  The
    returned observations carry the across-run mean and the counting
    standard error of that mean, ready for :func:`~.tomography.reconstruct`.
    """
    if manifold is None:
        manifold = state.sole_manifold()
    n_dir = len(directions)
    orders = list(range(1, max_order + 1))
    mean = np.empty((n_dir, max_order))
    spread = np.zeros((n_dir, max_order))
    stderr = np.empty((n_dir, max_order))
    all_counts: list[CountsRecord] = []
    runs = 1 if exact else config.runs
    for d, direction in enumerate(directions.directions):
        dist = outcome_distribution(state, direction)
        per_run = np.empty((runs, max_order))
        per_run_var = np.empty((runs, max_order))
        for j in range(runs):
            if exact:
                record = expected_counts(dist, config, run=j)
            else:
                record = sample_counts(dist, config, _run_rng(config.seed, d, j), run=j)
            record = calibrate(record, config)
            all_counts.append(record)
            per_run[j], per_run_var[j] = _moments_from_counts(
                record, config, manifold, max_order)
        mean[d] = per_run.mean(axis=0)
        if runs > 1:
            spread[d] = per_run.std(axis=0, ddof=1)
        stderr[d] = np.sqrt(per_run_var.mean(axis=0) / runs)
    empirical = EmpiricalMoments(directions=directions, orders=orders,
                                 mean=mean, spread=spread, stderr=stderr)
    if exact:
        obs_err = None
    else:
        obs_err = {r: np.maximum(stderr[:, r - 1], 1e-12) for r in orders}
    observations = MomentObservations(
        directions=directions,
        values={r: mean[:, r - 1].copy() for r in orders},
        stderr=obs_err)
    return ProtocolResult(observations=observations, empirical=empirical,
                          counts=all_counts)
