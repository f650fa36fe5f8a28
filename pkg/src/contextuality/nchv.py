"""Noncontextual value assignments: exhaustive bounds and the parity contradiction.

A noncontextual model fixes one ±1 value per observable regardless of the
context it is measured in.  With six observables there are only 64 such
models, so every bound here is a brute-force maximum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from contextuality.pmsquare import CONTEXT_SPECS, VALUED_LABELS, Inequality, Label, context_ids


@dataclass(frozen=True)
class Assignment:
    values: tuple[tuple[Label, int], ...]

    def __post_init__(self):
        labels = [lbl for lbl, _ in self.values]
        if sorted(labels) != sorted(VALUED_LABELS) or any(v not in (-1, 1) for _, v in self.values):
            raise ValueError("an assignment maps each of the six observables to +1 or -1")

    @classmethod
    def from_mapping(cls, mapping) -> "Assignment":
        return cls(tuple((Label(k), int(mapping[k])) for k in VALUED_LABELS))

    def __getitem__(self, label) -> int:
        label = Label(label)
        for lbl, v in self.values:
            if lbl is label:
                return v
        raise KeyError(label)

    def as_dict(self) -> dict[str, int]:
        return {lbl.value: v for lbl, v in self.values}

    def satisfies_product_rules(self) -> bool:
        """Both identity-product contexts hold: v(XSYP)=v(XS)v(YP), v(YSXP)=v(YS)v(XP)."""
        return (self[Label.XSYP] == self[Label.XS] * self[Label.YP]
                and self[Label.YSXP] == self[Label.YS] * self[Label.XP])


_INDEX = {lbl: i for i, lbl in enumerate(VALUED_LABELS)}
# (coefficient, value indices) per context, in canonical order
_TERMS = {spec.id: (spec.coefficient, tuple(_INDEX[lbl] for lbl in spec.labels))
          for spec in CONTEXT_SPECS}
_XS, _YS, _XP, _YP, _XSYP, _YSXP = range(6)


def _raw_values(constrained: bool):
    for v in itertools.product((1, -1), repeat=len(VALUED_LABELS)):
        if not constrained or (v[_XSYP] == v[_XS] * v[_YP] and v[_YSXP] == v[_YS] * v[_XP]):
            yield v


def _wrap(v) -> Assignment:
    return Assignment(tuple(zip(VALUED_LABELS, v)))


def enumerate_assignments(constrained: bool = False) -> list[Assignment]:
    """All 64 assignments, or the 16 obeying the identity-product rules."""
    return [_wrap(v) for v in _raw_values(bool(constrained))]


def _raw_value(v, ids) -> int:
    total = 0
    for cid in ids:
        coeff, idx = _TERMS[cid]
        total += coeff * math.prod(v[i] for i in idx)
    return total


def nchv_value(a: Assignment, which) -> int:
    v = tuple(a[lbl] for lbl in VALUED_LABELS)
    return _raw_value(v, context_ids(which))


@dataclass(frozen=True)
class BoundReport:
    inequality: Inequality
    constrained: bool
    bound: int
    searched: int
    witnesses: tuple[Assignment, ...]


def bound_report(which, constrained: bool | None = None) -> BoundReport:
    """Maximum of :func:`nchv_value` with the assignments attaining it.

    By default the full inequality is maximised over all 64 assignments and
    the reduced one over the 16 constrained ones; pass ``constrained``
    explicitly to override (the reduced inequality over all 64 is the
    negative control).
    """
    which = Inequality.parse(which)
    if constrained is None:
        constrained = which is Inequality.REDUCED
    ids = context_ids(which)
    pool = list(_raw_values(constrained))
    values = [_raw_value(v, ids) for v in pool]
    best = max(values)
    witnesses = tuple(_wrap(a) for a, v in zip(pool, values) if v == best)
    return BoundReport(which, constrained, best, len(pool), witnesses)


def nchv_bound(which, constrained: bool | None = None) -> int:
    return bound_report(which, constrained).bound


@dataclass(frozen=True)
class KSReport:
    satisfying_count: int
    max_satisfied: int
    max_witnesses: tuple[Assignment, ...]
    lhs_product_always_one: bool
    rhs_product: int
    searched: int


def ks_contradiction_report() -> KSReport:
    """Check the five context relations against every noncontextual assignment.

    Each observable appears in exactly two contexts, so the product of all
    left-hand sides is +1 for any assignment, while the required signs
    multiply to -1.
    """
    pool = list(_raw_values(False))
    rhs = math.prod(spec.coefficient for spec in CONTEXT_SPECS)
    counts = []
    lhs_ok = True
    for v in pool:
        terms = [math.prod(v[i] for i in _TERMS[spec.id][1]) for spec in CONTEXT_SPECS]
        counts.append(sum(t == spec.coefficient for t, spec in zip(terms, CONTEXT_SPECS)))
        lhs_ok &= math.prod(terms) == 1
    best = max(counts)
    return KSReport(
        satisfying_count=sum(c == len(CONTEXT_SPECS) for c in counts),
        max_satisfied=best,
        max_witnesses=tuple(_wrap(v) for v, c in zip(pool, counts) if c == best),
        lhs_product_always_one=lhs_ok,
        rhs_product=rhs,
        searched=len(pool),
    )
