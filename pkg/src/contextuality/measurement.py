"""Projective measurement with Lüders update, single- and many-run.

Every run of a context draws one uniform per observable and threads the
Lüders post-state through the sequence.  Many runs are processed together
as a stack of density matrices; each run still has its own uniforms, so the
batched path is the per-run procedure applied elementwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from contextuality import qcore
from contextuality.errors import ConsistencyError, DegenerateBranchError, InvalidInputError
from contextuality.pmsquare import Context, Observable

DEGENERATE_PROB = 1e-15
CLAMP_TOL = 1e-12


class RandomSource:
    """Seeded stream of random numbers.

    Streams with the same ``(seed, stream)`` pair produce identical
    sequences; :meth:`child` derives an independent stream, so concurrent
    work can be split without sharing state.
    """

    def __init__(self, seed: int = 0, stream: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        self.seed = seed
        self.stream = tuple(int(s) for s in stream)
        ss = np.random.SeedSequence(seed, spawn_key=self.stream)
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RandomSource":
        return RandomSource(self.seed, self.stream + (int(index),))

    def uniform(self, size=None):
        return self.generator.random(size)

    def normal(self, scale=1.0, size=None):
        return self.generator.normal(0.0, scale, size)

    def __repr__(self) -> str:
        return f"RandomSource(seed={self.seed}, stream={self.stream})"


@dataclass(frozen=True)
class MeasurementRecord:
    context_id: str
    outcomes: tuple[int, ...]
    product: int = field(default=0)

    def __post_init__(self):
        if any(o not in (-1, 1) for o in self.outcomes):
            raise InvalidInputError("outcomes must be +1 or -1")
        prod = math.prod(self.outcomes)
        if self.product == 0:
            object.__setattr__(self, "product", prod)
        elif self.product != prod:
            raise InvalidInputError("product does not match outcomes")


def _clamp(p):
    """Clip probabilities that stray at most CLAMP_TOL outside [0, 1]."""
    p = np.asarray(p, dtype=float)
    if np.any(p < -CLAMP_TOL) or np.any(p > 1 + CLAMP_TOL):
        raise ConsistencyError(f"probability outside [0, 1]: {p.min()}..{p.max()}")
    return np.clip(p, 0.0, 1.0)


def _trace(m):
    return np.real(np.trace(m, axis1=-2, axis2=-1))


def _dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def sequential_measure(rho, matrices, uniforms):
    """Measure ``matrices`` in order on ``rho`` for a batch of runs.

    ``rho`` is 4x4 or (n, 4, 4); each entry of ``matrices`` is a ±1-valued
    observable, 4x4 or (n, 4, 4); ``uniforms`` has shape (n, k).  Returns
    ``(outcomes, prob_plus, post)`` with outcomes of shape (n, k) in {-1, +1}.
    Matrices are assumed to be validated involutions.
    """
    u = np.atleast_2d(np.asarray(uniforms, dtype=float))
    n, k = u.shape
    if len(matrices) != k:
        raise InvalidInputError("one uniform per observable is required")
    rho = np.asarray(rho, dtype=complex)
    outcomes = np.empty((n, k), dtype=np.int8)
    prob_plus = np.empty((n, k))
    for j, m in enumerate(matrices):
        m = np.asarray(m, dtype=complex)
        p_plus_op = (qcore.I4 + m) / 2
        p_minus_op = (qcore.I4 - m) / 2
        p = _clamp(_trace(p_plus_op @ rho))
        p = np.broadcast_to(p, (n,))
        plus = u[:, j] < p
        outcomes[:, j] = np.where(plus, 1, -1)
        prob_plus[:, j] = p
        selected = np.where(plus, p, 1.0 - p)
        if np.any(selected < DEGENERATE_PROB):
            raise DegenerateBranchError("selected outcome has vanishing probability")
        proj = np.where(plus[:, None, None], p_plus_op, p_minus_op)
        rho = proj @ rho @ proj / selected[:, None, None]
    return outcomes, prob_plus, rho


def measure(state, o: Observable, rng: RandomSource):
    """Born-rule measurement of ``o`` with Lüders update.

    Returns ``(outcome, post, prob_plus)``.
    """
    rho = qcore.as_density(state)
    qcore.eigenprojectors(o)
    outcomes, prob_plus, post = sequential_measure(rho, [o.matrix], rng.uniform((1, 1)))
    return int(outcomes[0, 0]), post[0], float(prob_plus[0, 0])


def run_context(state, c: Context, rng: RandomSource) -> MeasurementRecord:
    """One run: measure every observable of ``c`` in order on one system."""
    rho = qcore.as_density(state)
    outcomes, _, _ = sequential_measure(
        rho, [o.matrix for o in c.observables], rng.uniform((1, len(c.observables))))
    return MeasurementRecord(c.id, tuple(int(x) for x in outcomes[0]))


def run_context_batch(state, c: Context, rng: RandomSource, shots: int) -> np.ndarray:
    """Outcome table of shape (shots, len(c.observables)) for independent runs."""
    if shots < 1:
        raise InvalidInputError("shots must be at least 1")
    rho = qcore.as_density(state)
    outcomes, _, _ = sequential_measure(
        rho, [o.matrix for o in c.observables], rng.uniform((shots, len(c.observables))))
    return outcomes


def mean_and_stderr(samples) -> tuple[float, float]:
    """Sample mean and its standard error (unbiased variance; 0 for n < 2)."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise InvalidInputError("no samples")
    mean = float(x.mean())
    if x.size < 2:
        return mean, 0.0
    return mean, float(x.std(ddof=1) / math.sqrt(x.size))


def context_product_expectation(state, c: Context, shots: int | None = None,
                                rng: RandomSource | None = None) -> tuple[float, float]:
    """``(value, stderr)`` of the context product.

    With ``shots=None`` the exact trace is returned with zero stderr;
    otherwise ``shots`` sequential runs are sampled from ``rng``.
    """
    rho = qcore.as_density(state)
    if shots is None:
        return qcore.expectation(rho, c.product_matrix()), 0.0
    if not isinstance(shots, (int, np.integer)) or shots < 1:
        raise InvalidInputError("shots must be a positive integer")
    if rng is None:
        raise InvalidInputError("sampled mode needs a RandomSource")
    outcomes = run_context_batch(rho, c, rng, int(shots))
    return mean_and_stderr(np.prod(outcomes, axis=1))


def joint_distribution(state, observables) -> dict[tuple[int, ...], float]:
    """Exact distribution of outcome tuples for sequential measurement.

    ``p(o1..ok) = tr(P_k..P_1 rho P_1..P_k)``; tuples of zero probability
    are kept so distributions can be compared key by key.
    """
    rho = qcore.as_density(state)
    projs = []
    for o in observables:
        plus, minus = qcore.eigenprojectors(o)
        projs.append({1: plus, -1: minus})
    dist = {}

    def recurse(prefix, sigma):
        if len(prefix) == len(projs):
            dist[prefix] = float(_trace(sigma))
            return
        for value in (1, -1):
            p = projs[len(prefix)][value]
            recurse(prefix + (value,), p @ sigma @ p)

    recurse((), rho)
    for key, p in dist.items():
        dist[key] = float(_clamp(p))
    return dist


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
