"""Element-level model of the interferometer and its three measurement schemes.

An :class:`Apparatus` is an ordered list of elements.  Unitary elements act on
the whole spin (x) path state; detector elements (:class:`PathDetector`,
:class:`SpinAnalyzer`) split the state into branches and append a ±1 reading
to each branch's raw record; a :class:`Mixer` projects each incoming beam onto
a fixed target and merges beams that differ only in erased readings.  Each
final raw record is a detector port, and the apparatus maps ports to the
values of named observables.

Element parameters below were chosen by hand; correctness is established
operationally by :func:`verify_against_abstract`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from contextuality import qcore
from contextuality.errors import DegenerateBranchError, InvalidInputError
from contextuality.measurement import DEGENERATE_PROB, joint_distribution
from contextuality.pmsquare import Context, Label, observable

PATH_I, PATH_II = 0, 1
_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}
# PhaseShifter phase on path II that, followed by the beam splitter, maps the
# +1/-1 eigenvectors of sigma_x / sigma_y onto beams I / II.
_PATH_READOUT_PHASE = {"x": -math.pi / 2, "y": math.pi}

_BS_2x2 = np.array([[1, 1j], [1j, 1]], dtype=complex) / math.sqrt(2)


def _path_projector(path: int) -> np.ndarray:
    p = np.zeros((2, 2), dtype=complex)
    p[path, path] = 1.0
    return p


def _unit(v) -> tuple[float, float, float]:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > qcore.NUMERIC_TOL:
        raise InvalidInputError(f"expected a unit 3-vector, got {v!r}")
    return tuple(float(x) for x in v)


@dataclass(frozen=True)
class PhaseShifter:
    path: int
    phase: float

    def unitary(self, phase=None) -> np.ndarray:
        phi = self.phase if phase is None else phase
        phi = np.asarray(phi, dtype=float)
        diag = np.ones(phi.shape + (2,), dtype=complex)
        diag[..., self.path] = np.exp(1j * phi)
        path_op = diag[..., :, None] * np.eye(2)
        return np.kron(qcore.I2, path_op) if phi.ndim == 0 else np.einsum(
            "ab,nij->naibj", qcore.I2, path_op).reshape(-1, 4, 4)


@dataclass(frozen=True)
class SpinRotator:
    """Spin rotation in one beam (``path``) or in the whole beam (``path=None``)."""

    axis: tuple[float, float, float]
    angle: float
    path: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "axis", _unit(self.axis))

    def unitary(self) -> np.ndarray:
        r = qcore.rotation(self.axis, self.angle)
        if self.path is None:
            return np.kron(r, qcore.I2)
        inside = _path_projector(self.path)
        return np.kron(r, inside) + np.kron(qcore.I2, qcore.I2 - inside)


@dataclass(frozen=True)
class BeamSplitter:
    """Symmetric 50:50 splitter on the path factor."""

    def unitary(self) -> np.ndarray:
        return np.kron(qcore.I2, _BS_2x2)


@dataclass(frozen=True)
class PathDetector:
    """Which-beam readout: +1 for beam I, -1 for beam II."""

    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.kron(qcore.I2, _path_projector(PATH_I)),
                np.kron(qcore.I2, _path_projector(PATH_II)))


@dataclass(frozen=True)
class SpinAnalyzer:
    direction: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "direction", _unit(self.direction))

    def projectors(self, direction=None) -> tuple[np.ndarray, np.ndarray]:
        n = np.asarray(self.direction if direction is None else direction, dtype=float)
        sig = np.einsum("...k,kij->...ij", n, np.stack([qcore.SX, qcore.SY, qcore.SZ]))
        spin_plus = (qcore.I2 + sig) / 2
        spin_minus = (qcore.I2 - sig) / 2
        if n.ndim == 1:
            return np.kron(spin_plus, qcore.I2), np.kron(spin_minus, qcore.I2)
        lift = lambda m: np.einsum("nab,ij->naibj", m, qcore.I2).reshape(-1, 4, 4)
        return lift(spin_plus), lift(spin_minus)


@dataclass(frozen=True)
class Mixer:
    """State mixer: a unitary rotation, then projection onto a per-beam target.

    ``routes`` holds ``(incoming record, outgoing record, target amplitudes)``.
    Beams routed to the same outgoing record are merged, which erases the
    readings that distinguished them.  The projection is a post-selection:
    its success probability is recorded and the surviving state is
    renormalised to the beam's incoming weight.
    """

    rotation: tuple[tuple[complex, ...], ...]
    routes: tuple[tuple[tuple[int, ...], tuple[int, ...], tuple[complex, ...]], ...]

    def rotation_matrix(self) -> np.ndarray:
        return np.array(self.rotation, dtype=complex)

    def kraus(self, incoming: tuple[int, ...]) -> tuple[tuple[int, ...], np.ndarray]:
        for key, out, target in self.routes:
            if key == incoming:
                t = np.array(target, dtype=complex)
                return out, np.outer(t, t.conj()) @ self.rotation_matrix()
        raise InvalidInputError(f"mixer has no route for beam {incoming}")


UNITARY_ELEMENTS = (PhaseShifter, SpinRotator, BeamSplitter)
DETECTOR_ELEMENTS = (PathDetector, SpinAnalyzer)


@dataclass(frozen=True)
class Port:
    port_id: str
    raw: tuple[int, ...]
    outcomes: tuple[int, ...]


@dataclass(frozen=True)
class Apparatus:
    name: str
    elements: tuple
    observables: tuple[Label, ...]
    ports: tuple[Port, ...]

    def __post_init__(self):
        tuples = [p.outcomes for p in self.ports]
        if len(set(tuples)) != len(tuples):
            raise InvalidInputError("ports must map to distinct outcome tuples")
        if any(len(t) != len(self.observables) for t in tuples):
            raise InvalidInputError("port outcome arity does not match observables")

    def port_for_raw(self, raw) -> Port:
        for p in self.ports:
            if p.raw == raw:
                return p
        raise InvalidInputError(f"no port for raw record {raw}")


@dataclass
class PortResult:
    """Port probabilities keyed by outcome tuple (ordered as ``observables``)."""

    observables: tuple[Label, ...]
    probabilities: dict
    mixer_success: dict = field(default_factory=dict)

    def product_distribution(self) -> dict[int, float]:
        out = {1: 0.0, -1: 0.0}
        for key, p in self.probabilities.items():
            out[math.prod(key)] = out[math.prod(key)] + p
        return out

    def marginal(self, index: int) -> dict[int, float]:
        out = {1: 0.0, -1: 0.0}
        for key, p in self.probabilities.items():
            out[key[index]] = out[key[index]] + p
        return out


def _dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def _trace(m):
    return np.real(np.trace(m, axis1=-2, axis2=-1))


def _sandwich(op, sigma):
    return op @ sigma @ _dagger(op)


def compile_elements(elements, n: int | None = None, rng=None,
                     spin_misalignment: float = 0.0, path_phase_jitter: float = 0.0):
    """Turn elements into ``(kind, data)`` operator steps.

    With ``n`` and ``rng`` given, spin-analyzer directions and phase-shifter
    phases are independently perturbed for each of ``n`` runs and the
    operators gain a leading batch axis.
    """
    perturb = n is not None and rng is not None
    steps = []
    for el in elements:
        if isinstance(el, PhaseShifter):
            if perturb and path_phase_jitter > 0:
                phases = el.phase + rng.normal(path_phase_jitter, size=n)
                steps.append(("unitary", el.unitary(phases)))
            else:
                steps.append(("unitary", el.unitary()))
        elif isinstance(el, (SpinRotator, BeamSplitter)):
            steps.append(("unitary", el.unitary()))
        elif isinstance(el, SpinAnalyzer):
            if perturb and spin_misalignment > 0:
                dirs = qcore.perturb_direction(el.direction, spin_misalignment, rng, n)
                steps.append(("split", el.projectors(dirs)))
            else:
                steps.append(("split", el.projectors()))
        elif isinstance(el, PathDetector):
            steps.append(("split", el.projectors()))
        elif isinstance(el, Mixer):
            steps.append(("mixer", el))
        else:
            raise InvalidInputError(f"unknown element {el!r}")
    return steps


def propagate(steps, rho):
    """Push ``rho`` through compiled steps.

    Returns ``(branches, mixer_success)`` where ``branches`` maps each raw
    record to its unnormalised final state and ``mixer_success`` maps each
    incoming mixer beam to its post-selection success probability.
    """
    branches = {(): np.asarray(rho, dtype=complex)}
    success = {}
    for kind, data in steps:
        if kind == "unitary":
            branches = {k: _sandwich(data, s) for k, s in branches.items()}
        elif kind == "split":
            plus, minus = data
            new = {}
            for k, s in branches.items():
                new[k + (1,)] = _sandwich(plus, s)
                new[k + (-1,)] = _sandwich(minus, s)
            branches = new
        else:
            new = {}
            for k, s in branches.items():
                out, op = data.kraus(k)
                kept = _sandwich(op, s)
                w_in = _trace(s)
                w_out = _trace(kept)
                live = w_in > DEGENERATE_PROB
                if np.any(live & (w_out < DEGENERATE_PROB * w_in)):
                    raise DegenerateBranchError(f"mixer rejects beam {k} entirely")
                ratio = np.where(live, w_out / np.where(live, w_in, 1.0), np.nan)
                scale = np.where(live, w_in / np.where(w_out > 0, w_out, 1.0), 0.0)
                success[k] = ratio
                kept = kept * np.asarray(scale)[..., None, None]
                new[out] = new[out] + kept if out in new else kept
            branches = new
    return branches, success


def port_distribution(app: Apparatus, state) -> PortResult:
    """Exact port probabilities of ``app`` for one input state."""
    rho = qcore.as_density(state)
    branches, success = propagate(compile_elements(app.elements), rho)
    probs = {p.outcomes: 0.0 for p in app.ports}
    for raw, sigma in branches.items():
        probs[app.port_for_raw(raw).outcomes] += float(_trace(sigma))
    # beams carrying no weight have no defined success probability
    mixer = {k: float(v) for k, v in success.items() if not np.isnan(v)}
    return PortResult(app.observables, probs, mixer)


def port_probability_table(app: Apparatus, state, n: int | None = None, rng=None,
                           spin_misalignment: float = 0.0, path_phase_jitter: float = 0.0):
    """Port outcome tuples and an (n, ports) or (ports,) probability table."""
    rho = qcore.as_density(state)
    steps = compile_elements(app.elements, n, rng, spin_misalignment, path_phase_jitter)
    branches, _ = propagate(steps, rho)
    keys = [p.outcomes for p in app.ports]
    cols = {k: 0.0 for k in keys}
    for raw, sigma in branches.items():
        cols[app.port_for_raw(raw).outcomes] = cols[app.port_for_raw(raw).outcomes] + _trace(sigma)
    table = np.stack([np.broadcast_to(np.asarray(cols[k], dtype=float), () if n is None else (n,))
                      for k in keys], axis=-1)
    return keys, table


# ---------------------------------------------------------------- schemes


def _path_readout(direction: str) -> list:
    return [PhaseShifter(PATH_II, _PATH_READOUT_PHASE[direction]), BeamSplitter(), PathDetector()]


def _check_dir(d, allowed=("x", "y")) -> str:
    if d not in allowed:
        raise InvalidInputError(f"direction must be one of {allowed}, got {d!r}")
    return d


def _sign_tuples(k):
    return list(itertools.product((1, -1), repeat=k))


def build_scheme_i(spin_dir: str = "x", path_dir: str = "x") -> Apparatus:
    """Path readout followed by a spin readout; ports give (spin, path) values."""
    spin_dir, path_dir = _check_dir(spin_dir), _check_dir(path_dir)
    elements = tuple(_path_readout(path_dir) + [SpinAnalyzer(_AXES[spin_dir])])
    labels = (Label(spin_dir.upper() + "S"), Label(path_dir.upper() + "P"))
    ports = tuple(
        Port(f"{'I' if p > 0 else 'II'}{'+' if s > 0 else '-'}", (p, s), (s, p))
        for p, s in _sign_tuples(2))
    return Apparatus(f"scheme_i_{spin_dir}{path_dir}", elements, labels, ports)


def _discriminator_elements() -> list:
    # spin flip in beam II, with its -i global phase undone by a phase shifter,
    # disentangles the joint eigenbasis; then a sigma_y path readout and a z spin readout
    return [
        SpinRotator(_AXES["x"], math.pi, PATH_II),
        PhaseShifter(PATH_II, math.pi / 2),
        *_path_readout("y"),
        SpinAnalyzer(_AXES["z"]),
    ]


def _discriminator_values(p: int, s: int) -> tuple[int, int]:
    """(sigma_x^s sigma_y^p, sigma_y^s sigma_x^p) values read from (path, spin) ports."""
    return p, p * s


def build_scheme_ii() -> Apparatus:
    """Four-port discriminator for the commuting pair (XSYP, YSXP)."""
    ports = tuple(
        Port(f"{'I' if p > 0 else 'II'}{'+' if s > 0 else '-'}", (p, s), _discriminator_values(p, s))
        for p, s in _sign_tuples(2))
    return Apparatus("scheme_ii", tuple(_discriminator_elements()), (Label.XSYP, Label.YSXP), ports)


def joint_eigenstate(e: int, f: int) -> np.ndarray:
    """Unit vector spanning the (XSYP=e, YSXP=f) eigenspace, phase-fixed."""
    a_plus, a_minus = qcore.eigenprojectors(observable(Label.XSYP))
    b_plus, b_minus = qcore.eigenprojectors(observable(Label.YSXP))
    proj = (a_plus if e > 0 else a_minus) @ (b_plus if f > 0 else b_minus)
    w, v = np.linalg.eigh((proj + proj.conj().T) / 2)
    if not np.isclose(w[-1], 1.0) or (len(w) > 1 and w[-2] > qcore.NUMERIC_TOL):
        raise InvalidInputError("joint eigenspace is not one-dimensional")
    return qcore.fix_global_phase(v[:, -1])


def eraser_target(e: int, f: int, keep: Label) -> np.ndarray:
    """Equal-weight superposition of the (e, f) joint eigenstate and its partner.

    The partner shares the value of ``keep`` and flips the other observable,
    so the target is an eigenstate of ``keep`` only.
    """
    partner = (e, -f) if keep is Label.XSYP else (-e, f)
    t = joint_eigenstate(e, f) + joint_eigenstate(*partner)
    return qcore.fix_global_phase(qcore.normalize_vector(t))


def _front_unitary(elements) -> np.ndarray:
    u = qcore.I4
    for el in elements:
        if isinstance(el, UNITARY_ELEMENTS):
            u = el.unitary() @ u
    return u


def build_scheme_iii(first="XSYP") -> Apparatus:
    """Discriminator, state mixer keeping ``first``, then its two factor readouts.

    Ports give the values of (first, spin factor, path factor).
    """
    try:
        first = Label(first)
    except ValueError:
        raise InvalidInputError(f"unknown label {first!r}") from None
    if first not in (Label.XSYP, Label.YSXP):
        raise InvalidInputError("scheme iii measures XSYP or YSXP first")
    front = _discriminator_elements()
    keep_index = 0 if first is Label.XSYP else 1
    routes = []
    for p, s in _sign_tuples(2):
        e, f = _discriminator_values(p, s)
        kept = (e, f)[keep_index]
        target = eraser_target(e, f, first)
        routes.append(((p, s), (kept,), tuple(complex(x) for x in target)))
    rotation = _front_unitary(front).conj().T
    mixer = Mixer(tuple(tuple(complex(x) for x in row) for row in rotation), tuple(routes))
    spin_dir, path_dir = ("x", "y") if first is Label.XSYP else ("y", "x")
    tail = _path_readout(path_dir) + [SpinAnalyzer(_AXES[spin_dir])]
    labels = (first, Label(spin_dir.upper() + "S"), Label(path_dir.upper() + "P"))
    ports = tuple(Port(f"{'+' if k > 0 else '-'}{'I' if p > 0 else 'II'}{'+' if s > 0 else '-'}",
                       (k, p, s), (k, s, p))
                  for k, p, s in _sign_tuples(3))
    return Apparatus(f"scheme_iii_{first.value}", tuple(front) + (mixer,) + tuple(tail), labels, ports)


def scheme_for_context(cid: str) -> Apparatus:
    return {
        "C1": lambda: build_scheme_i("x", "x"),
        "C2": lambda: build_scheme_i("y", "y"),
        "C3": lambda: build_scheme_iii(Label.XSYP),
        "C4": lambda: build_scheme_iii(Label.YSXP),
        "C5": build_scheme_ii,
    }[cid]()


def shares_front_end(app: Apparatus, front: Apparatus) -> bool:
    """True iff ``front``'s element list is an exact prefix of ``app``'s."""
    n = len(front.elements)
    return len(app.elements) > n and tuple(app.elements[:n]) == tuple(front.elements)


# ------------------------------------------------------------ verification


def tomographic_probes() -> list[np.ndarray]:
    """16 product pure states whose projectors span all 4x4 operators."""
    s = 1 / math.sqrt(2)
    singles = [np.array([1, 0]), np.array([0, 1]), np.array([s, s]), np.array([s, 1j * s])]
    return [np.kron(a, b).astype(complex) for a in singles for b in singles]


@dataclass
class ProbeResult:
    index: int
    max_deviation: float
    first_marginal_deviation: float
    product_deviation: float
    passed: bool


@dataclass
class VerificationReport:
    apparatus: str
    context: str
    criterion: str
    tol: float
    probes: list[ProbeResult]

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.probes)

    @property
    def max_deviation(self) -> float:
        return max((p.max_deviation for p in self.probes), default=0.0)

    @property
    def gated_deviation(self) -> float:
        """Largest deviation in the quantity the criterion actually compares."""
        if self.criterion == "joint-distribution":
            return self.max_deviation
        return max((max(p.first_marginal_deviation, p.product_deviation) for p in self.probes),
                   default=0.0)

    def as_dict(self) -> dict:
        return {
            "apparatus": self.apparatus,
            "context": self.context,
            "criterion": self.criterion,
            "tol": self.tol,
            "passed": self.passed,
            "gated_deviation": self.gated_deviation,
            "max_deviation": self.max_deviation,
            "probes": [vars(p) for p in self.probes],
        }


def verify_against_abstract(app: Apparatus, c: Context, probes, tol: float = 1e-10) -> VerificationReport:
    """Compare apparatus port statistics with sequential measurement of ``c``.

    Without a mixer the full joint distributions must agree within ``tol``.
    A mixer replaces the post-measurement state by a fixed target, so for
    those schemes the gate is the first-outcome marginal together with the
    distribution of the outcome product; the full-distribution deviation is
    still reported.
    """
    if len(app.observables) != len(c.observables) or set(app.observables) != set(c.labels):
        raise InvalidInputError(
            f"{app.name} reports {[l.value for l in app.observables]}, context {c.id} has "
            f"{[l.value for l in c.labels]}")
    order = [app.observables.index(lbl) for lbl in c.labels]
    has_mixer = any(isinstance(el, Mixer) for el in app.elements)
    results = []
    for i, probe in enumerate(probes):
        got = port_distribution(app, probe)
        want = joint_distribution(probe, c.observables)
        reordered = {tuple(k[j] for j in order): p for k, p in got.probabilities.items()}
        full = max(abs(reordered.get(k, 0.0) - want.get(k, 0.0)) for k in set(reordered) | set(want))
        got_first = {v: sum(p for k, p in reordered.items() if k[0] == v) for v in (1, -1)}
        want_first = {v: sum(p for k, p in want.items() if k[0] == v) for v in (1, -1)}
        first_dev = max(abs(got_first[v] - want_first[v]) for v in (1, -1))
        got_prod = {v: sum(p for k, p in reordered.items() if math.prod(k) == v) for v in (1, -1)}
        want_prod = {v: sum(p for k, p in want.items() if math.prod(k) == v) for v in (1, -1)}
        prod_dev = max(abs(got_prod[v] - want_prod[v]) for v in (1, -1))
        gate = max(first_dev, prod_dev) if has_mixer else full
        results.append(ProbeResult(i, full, first_dev, prod_dev, gate <= tol))
    criterion = "first-marginal+product" if has_mixer else "joint-distribution"
    return VerificationReport(app.name, c.id, criterion, tol, results)
