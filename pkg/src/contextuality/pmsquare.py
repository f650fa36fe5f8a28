"""Peres-Mermin observables, the anticorrelated spin-path state and its five contexts."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from contextuality import qcore
from contextuality.errors import InvalidInputError


class Label(str, enum.Enum):
    XS = "XS"
    YS = "YS"
    XP = "XP"
    YP = "YP"
    XSYP = "XSYP"
    YSXP = "YSXP"
    ZSZP = "ZSZP"


# The six observables that carry noncontextual values.
VALUED_LABELS = (Label.XS, Label.YS, Label.XP, Label.YP, Label.XSYP, Label.YSXP)

# (spin factor, path factor) for each label.
_FACTORS = {
    Label.XS: ("x", None),
    Label.YS: ("y", None),
    Label.XP: (None, "x"),
    Label.YP: (None, "y"),
    Label.XSYP: ("x", "y"),
    Label.YSXP: ("y", "x"),
    Label.ZSZP: ("z", "z"),
}
_PAULI = {None: qcore.I2, "x": qcore.SX, "y": qcore.SY, "z": qcore.SZ}


class Inequality(str, enum.Enum):
    """Which linear combination of context averages is evaluated.

    ``FULL`` sums all five contexts (classical bound 3); ``REDUCED`` keeps
    only the three state-dependent ones (classical bound 1).  The string
    values double as the CLI selectors.
    """

    FULL = "eq6"
    REDUCED = "eq7"

    @classmethod
    def parse(cls, value) -> "Inequality":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"eq6": cls.FULL, "full": cls.FULL, "eq7": cls.REDUCED, "reduced": cls.REDUCED}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidInputError(f"unknown inequality {value!r}; expected eq6 or eq7") from None


@dataclass(frozen=True)
class ContextSpec:
    """Matrix-free description of a context: labels, sign, and the sign's role."""

    id: str
    labels: tuple[Label, ...]
    coefficient: int
    state_independent: bool


CONTEXT_SPECS: tuple[ContextSpec, ...] = (
    ContextSpec("C1", (Label.XS, Label.XP), -1, False),
    ContextSpec("C2", (Label.YS, Label.YP), -1, False),
    ContextSpec("C3", (Label.XSYP, Label.XS, Label.YP), +1, True),
    ContextSpec("C4", (Label.YSXP, Label.YS, Label.XP), +1, True),
    ContextSpec("C5", (Label.XSYP, Label.YSXP), -1, False),
)
CONTEXT_IDS = tuple(spec.id for spec in CONTEXT_SPECS)


def context_ids(which) -> tuple[str, ...]:
    """Context ids entering the chosen inequality, in canonical order."""
    which = Inequality.parse(which)
    if which is Inequality.FULL:
        return CONTEXT_IDS
    return tuple(spec.id for spec in CONTEXT_SPECS if not spec.state_independent)


def context_spec(cid: str) -> ContextSpec:
    for spec in CONTEXT_SPECS:
        if spec.id == cid:
            return spec
    raise InvalidInputError(f"unknown context id {cid!r}")


@dataclass(frozen=True, eq=False)
class Observable:
    label: Label
    matrix: np.ndarray

    def __repr__(self) -> str:
        return f"Observable({self.label.value})"


@dataclass(frozen=True, eq=False)
class Context:
    id: str
    observables: tuple[Observable, ...]
    coefficient: int

    @property
    def labels(self) -> tuple[Label, ...]:
        return tuple(o.label for o in self.observables)

    def product_matrix(self) -> np.ndarray:
        out = qcore.I4
        for o in self.observables:
            out = out @ o.matrix
        return out


def bell_state() -> np.ndarray:
    """``(|down,I> - |up,II>)/sqrt(2)`` as amplitudes in the module basis."""
    s = 1 / np.sqrt(2)
    return np.array([0.0, -s, s, 0.0], dtype=complex)


@lru_cache(maxsize=None)
def observable(label) -> Observable:
    try:
        label = Label(label)
    except ValueError:
        raise InvalidInputError(f"unknown observable label {label!r}") from None
    spin, path = _FACTORS[label]
    m = qcore.tensor(_PAULI[spin], _PAULI[path])
    m.setflags(write=False)
    return Observable(label, m)


@lru_cache(maxsize=None)
def _contexts() -> tuple[Context, ...]:
    out = []
    for spec in CONTEXT_SPECS:
        obs = tuple(observable(lbl) for lbl in spec.labels)
        for i, a in enumerate(obs):
            for b in obs[i + 1:]:
                assert qcore.commutes(a.matrix, b.matrix), (spec.id, a, b)
        out.append(Context(spec.id, obs, spec.coefficient))
    return tuple(out)


def contexts() -> list[Context]:
    """The five measurement contexts C1..C5 in order."""
    return list(_contexts())


def context(cid: str) -> Context:
    for c in _contexts():
        if c.id == cid:
            return c
    raise InvalidInputError(f"unknown context id {cid!r}")


def context_expectation(state, c: Context) -> float:
    """``tr(rho * product of the context's observables)``."""
    rho = qcore.as_density(state)
    return qcore.expectation(rho, c.product_matrix())


def ideal_inequality_value(state, which) -> float:
    """Exact left-hand side of the chosen inequality for ``state``."""
    rho = qcore.as_density(state)
    ids = context_ids(which)
    return sum(c.coefficient * qcore.expectation(rho, c.product_matrix())
               for c in _contexts() if c.id in ids)
