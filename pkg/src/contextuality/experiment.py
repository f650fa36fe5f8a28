"""Noisy finite-shot estimation of both inequalities, visibility thresholds, CHSH.

Noise enters in two ways: Werner mixing of the prepared state with the
maximally mixed state (``visibility``), and independent per-run errors of the
measurement settings (a random cone of half-angle ``spin_misalignment`` for
spin directions, Gaussian ``path_phase_jitter`` for path phases).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from contextuality import apparatus, nchv, qcore
from contextuality.errors import InvalidInputError
from contextuality.measurement import RandomSource, mean_and_stderr, sequential_measure
from contextuality.pmsquare import (
    CONTEXT_IDS,
    Inequality,
    Label,
    bell_state,
    context,
    context_ids,
    ideal_inequality_value,
)

# Reference values, for report annotation only.
CHSH_CLASSICAL_BOUND = 2.0
CHSH_QUANTUM_MAX = 2 * math.sqrt(2)
REFERENCES = {
    "chsh_trapped_ions": {
        "value": 2.25, "stderr": 0.03,
        "citation": "M. A. Rowe et al., Nature (London) 409, 791 (2001)",
    },
    "chsh_single_neutrons": {
        "value": 2.051, "stderr": 0.019,
        "citation": "Y. Hasegawa et al., Nature (London) 425, 45 (2003)",
    },
    "reduced_inequality_projected": {
        "value": 2.1, "bound": 1,
        "citation": "projected single-neutron spin-path value for the three-context inequality",
    },
}


class Mode(str, enum.Enum):
    ABSTRACT = "abstract"
    APPARATUS = "apparatus"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidInputError(f"unknown mode {value!r}") from None


@dataclass(frozen=True)
class NoiseModel:
    visibility: float = 1.0
    spin_misalignment: float = 0.0
    path_phase_jitter: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise InvalidInputError("visibility must lie in [0, 1]")
        if self.spin_misalignment < 0 or self.path_phase_jitter < 0:
            raise InvalidInputError("noise angles must be non-negative")

    @property
    def perturbs_settings(self) -> bool:
        return self.spin_misalignment > 0 or self.path_phase_jitter > 0


@dataclass(frozen=True)
class RunConfig:
    inequality: Inequality = Inequality.REDUCED
    shots: int = 100_000
    noise: NoiseModel = field(default_factory=NoiseModel)
    seed: int = 42
    mode: Mode = Mode.ABSTRACT
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "inequality", Inequality.parse(self.inequality))
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if not isinstance(self.shots, (int, np.integer)) or self.shots < 1:
            raise InvalidInputError("shots must be a positive integer")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInputError("seed must be a 64-bit unsigned integer")
        if self.workers < 1:
            raise InvalidInputError("workers must be at least 1")


@dataclass(frozen=True)
class ContextEstimate:
    context_id: str
    coefficient: int
    mean: float
    stderr: float


@dataclass(frozen=True)
class EstimateReport:
    inequality: Inequality
    terms: tuple[ContextEstimate, ...]
    value: float
    stderr: float
    bound: int
    violation: bool
    sigma_above_bound: float

    def as_dict(self) -> dict:
        return {
            "inequality": self.inequality.value,
            "terms": [vars(t) for t in self.terms],
            "value": self.value,
            "stderr": self.stderr,
            "bound": self.bound,
            "violation": self.violation,
            "sigma_above_bound": self.sigma_above_bound,
        }


def werner_state(v: float) -> np.ndarray:
    """``v |psi><psi| + (1 - v) I/4`` with ``psi`` the anticorrelated state."""
    if not 0.0 <= v <= 1.0:
        raise InvalidInputError("visibility must lie in [0, 1]")
    psi = bell_state()
    return v * np.outer(psi, psi.conj()) + (1 - v) * qcore.I4 / 4


# ---------------------------------------------------------------- sampling

_SPIN_AXIS = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
_PATH_PHASE = {"x": 0.0, "y": math.pi / 2}


def _factor_dirs(label: Label):
    name = label.value
    spin = name[name.index("S") - 1].lower() if "S" in name else None
    path = name[name.index("P") - 1].lower() if "P" in name else None
    return spin, path


def perturbed_observables(labels, noise: NoiseModel, rng: RandomSource, n: int) -> list[np.ndarray]:
    """Per-run observable matrices, shape (n, 4, 4) each, with setting errors.

    Every observable in a context is measured by its own device, so each gets
    independent errors.
    """
    pauli = np.stack([qcore.SX, qcore.SY, qcore.SZ])
    out = []
    for label in labels:
        spin, path = _factor_dirs(Label(label))
        if spin is None:
            spin_op = np.broadcast_to(qcore.I2, (n, 2, 2))
        else:
            dirs = qcore.perturb_direction(_SPIN_AXIS[spin], noise.spin_misalignment, rng, n)
            spin_op = np.einsum("nk,kij->nij", dirs, pauli)
        if path is None:
            path_op = np.broadcast_to(qcore.I2, (n, 2, 2))
        else:
            phi = _PATH_PHASE[path] + rng.normal(noise.path_phase_jitter, size=n)
            path_op = np.cos(phi)[:, None, None] * qcore.SX + np.sin(phi)[:, None, None] * qcore.SY
        out.append(np.einsum("nab,nij->naibj", spin_op, path_op).reshape(n, 4, 4))
    return out


def sample_context_products(rho, cid: str, shots: int, noise: NoiseModel, mode: Mode,
                            rng: RandomSource) -> np.ndarray:
    """Per-run context products (length ``shots``, entries ±1)."""
    mode = Mode.parse(mode)
    c = context(cid)
    if mode is Mode.ABSTRACT:
        if noise.perturbs_settings:
            mats = perturbed_observables(c.labels, noise, rng, shots)
        else:
            mats = [o.matrix for o in c.observables]
        outcomes, _, _ = sequential_measure(rho, mats, rng.uniform((shots, len(mats))))
        return np.prod(outcomes.astype(np.int64), axis=1)
    app = apparatus.scheme_for_context(cid)
    if noise.perturbs_settings:
        keys, table = apparatus.port_probability_table(
            app, rho, shots, rng, noise.spin_misalignment, noise.path_phase_jitter)
    else:
        keys, table = apparatus.port_probability_table(app, rho)
        table = np.broadcast_to(table, (shots, len(keys)))
    products = np.array([math.prod(k) for k in keys], dtype=np.int64)
    cum = np.cumsum(table, axis=1)
    u = rng.uniform(shots) * cum[:, -1]
    idx = np.minimum((u[:, None] >= cum).sum(axis=1), len(keys) - 1)
    return products[idx]


def _estimate_one(rho, cid, cfg: RunConfig) -> ContextEstimate:
    rng = RandomSource(cfg.seed).child(CONTEXT_IDS.index(cid))
    products = sample_context_products(rho, cid, int(cfg.shots), cfg.noise, cfg.mode, rng)
    mean, err = mean_and_stderr(products)
    return ContextEstimate(cid, context(cid).coefficient, mean, err)


def combine(which, terms, bound: int | None = None) -> EstimateReport:
    which = Inequality.parse(which)
    bound = nchv.nchv_bound(which) if bound is None else bound
    value = sum(t.coefficient * t.mean for t in terms)
    err = math.sqrt(sum(t.stderr**2 for t in terms))
    excess = value - bound
    if err > 0:
        sigma = excess / err
    else:
        sigma = math.copysign(math.inf, excess) if excess != 0 else 0.0
    return EstimateReport(which, tuple(terms), value, err, bound, excess > 0, sigma)


def estimate_inequality(cfg: RunConfig) -> EstimateReport:
    """Monte Carlo estimate of the configured inequality.

    Each context uses its own random stream derived from ``(seed, context
    index)``, so the report is identical for any ``workers`` count.
    """
    rho = werner_state(cfg.noise.visibility)
    ids = context_ids(cfg.inequality)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            terms = list(pool.map(lambda cid: _estimate_one(rho, cid, cfg), ids))
    else:
        terms = [_estimate_one(rho, cid, cfg) for cid in ids]
    return combine(cfg.inequality, terms)


def exact_context_expectation(rho, cid: str, mode=Mode.ABSTRACT) -> float:
    """Noise-free-settings expectation of a context product, either route."""
    mode = Mode.parse(mode)
    if mode is Mode.ABSTRACT:
        return qcore.expectation(qcore.as_density(rho), context(cid).product_matrix())
    res = apparatus.port_distribution(apparatus.scheme_for_context(cid), rho)
    return sum(math.prod(k) * p for k, p in res.probabilities.items())


def exact_value(which, visibility: float) -> float:
    return ideal_inequality_value(werner_state(visibility), which)


def critical_visibility(which, tol: float = 1e-9) -> float:
    """Smallest visibility at which the exact value reaches the classical bound (bisection)."""
    which = Inequality.parse(which)
    bound = nchv.nchv_bound(which)
    lo, hi = 0.0, 1.0
    if exact_value(which, hi) < bound:
        raise InvalidInputError("no violation even at unit visibility")
    if exact_value(which, lo) >= bound:
        return 0.0
    while hi - lo > tol / 4:
        mid = 0.5 * (lo + hi)
        if exact_value(which, mid) >= bound:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -------------------------------------------------------------------- CHSH


@dataclass(frozen=True)
class MeasurementSetting:
    """Spin-side directions a0, a1 and path-side directions b0, b1 (Bloch vectors)."""

    a0: tuple[float, float, float]
    a1: tuple[float, float, float]
    b0: tuple[float, float, float]
    b1: tuple[float, float, float]

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > qcore.NUMERIC_TOL:
                raise InvalidInputError(f"setting {name} is not a unit 3-vector")
            object.__setattr__(self, name, tuple(float(x) for x in v))


def optimal_chsh_setting() -> MeasurementSetting:
    """Settings reaching 2*sqrt(2) on the anticorrelated state."""
    s = 1 / math.sqrt(2)
    return MeasurementSetting((1, 0, 0), (0, 1, 0), (-s, -s, 0), (-s, s, 0))


def correlator(rho, a, b) -> float:
    return qcore.expectation(rho, qcore.tensor(qcore.bloch_operator(a), qcore.bloch_operator(b)))


def chsh_value(state, s: MeasurementSetting) -> float:
    rho = qcore.as_density(state)
    return (correlator(rho, s.a0, s.b0) + correlator(rho, s.a0, s.b1)
            + correlator(rho, s.a1, s.b0) - correlator(rho, s.a1, s.b1))


def visibility_for_chsh(value: float) -> float:
    """Werner visibility whose optimal CHSH value equals ``value``."""
    return value / CHSH_QUANTUM_MAX
