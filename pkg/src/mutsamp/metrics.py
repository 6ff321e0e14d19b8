"""Mutation score and fault-coverage efficiency metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import AllEquivalent, RangeError, ZeroBaseline


@dataclass(frozen=True)
class MutationScore:
    killed: int
    generated: int
    equivalent: int

    @property
    def exact(self) -> Fraction:
        return Fraction(self.killed, self.generated - self.equivalent)

    @property
    def value(self) -> float:
        return float(self.exact)

    @property
    def percent(self) -> str:
        return f"{100 * self.value:.2f}"


def mutation_score(killed: int, generated: int, equivalent: int) -> MutationScore:
    """K / (M - E) over the generated mutant population."""
    if generated < 0 or equivalent < 0 or killed < 0:
        raise RangeError("counts must be non-negative")
    if equivalent > generated:
        raise RangeError("more equivalent mutants than generated ones")
    if generated == equivalent:
        raise AllEquivalent("mutation score undefined when M == E")
    if killed > generated - equivalent:
        raise RangeError("more killed mutants than non-equivalent ones")
    return MutationScore(killed, generated, equivalent)


def delta_fc(mfc, rfc, length: int) -> float:
    """Relative coverage gain (%) of the mutation curve over the random one at ``length``."""
    base = rfc.fraction_at(length)
    if base == 0:
        raise ZeroBaseline(f"random coverage is zero at length {length}")
    return float(100 * (mfc.fraction_at(length) - base) / base)


@dataclass(frozen=True)
class DeltaL:
    value: float
    random_length: int
    lower_bound: bool = False

    def __float__(self):
        return self.value


def delta_l(mfc, rfc, cap: int, length: int | None = None) -> DeltaL:
    """Relative length gain (%) at equal coverage.

    ``rfc`` is any object with ``length_to_reach(target, cap)``; a plain
    :class:`~mutsamp.faultsim.CoverageCurve` or a lazily extended random
    baseline. If the target is not reached within ``cap`` vectors the
    result is computed with ``cap`` and flagged as a lower bound.
    """
    lm = len(mfc) if length is None else length
    if lm < 1:
        raise ValueError("mutation test set must hold at least one vector")
    if cap < lm:
        raise ValueError("cap must be >= the mutation test length")
    target = mfc.fraction_at(lm)
    lr = rfc.length_to_reach(target, cap)
    if lr is None:
        return DeltaL(float(100 * Fraction(cap - lm, cap)), cap, True)
    return DeltaL(float(100 * Fraction(lr - lm, lr)), lr)


def delta_l_from_lengths(lm: int, lr: int) -> float:
    return float(100 * Fraction(lr - lm, lr))


def nlfce(delta_fc_pct: float, delta_l_pct: float) -> float:
    if not (math.isfinite(delta_fc_pct) and math.isfinite(delta_l_pct)):
        raise ValueError("NLFCE inputs must be finite")
    return delta_fc_pct * delta_l_pct


def round_sig(x: float, digits: int = 3) -> float:
    if x == 0 or not math.isfinite(x):
        return x
    return round(x, digits - 1 - math.floor(math.log10(abs(x))))


def format_nlfce(x: float) -> str:
    """Three significant figures with an explicit sign, e.g. ``+134``, ``+7.15``."""
    r = round_sig(x, 3)
    if r == 0:
        return "0"
    decimals = max(0, 2 - math.floor(math.log10(abs(r))))
    return f"{r:+.{decimals}f}"


def format_pct(x: float) -> str:
    return f"{x:.2f}"


@dataclass(frozen=True)
class EfficiencyRow:
    """One operator's (or strategy's) coverage efficiency against random data."""

    circuit: str
    operator: str
    mfc: float
    rfc: float
    length: int
    random_length: int
    delta_fc_pct: float
    delta_l_pct: float
    flag: str = ""

    @property
    def nlfce(self) -> float:
        return nlfce(self.delta_fc_pct, self.delta_l_pct)

    def as_dict(self) -> dict:
        return {
            "circuit": self.circuit,
            "operator": self.operator,
            "delta_fc_pct": self.delta_fc_pct,
            "delta_l_pct": self.delta_l_pct,
            "nlfce": self.nlfce,
            "mfc": self.mfc,
            "rfc": self.rfc,
            "length": self.length,
            "random_length": self.random_length,
            "flag": self.flag,
        }
