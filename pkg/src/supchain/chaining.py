"""Explicit generic-chaining tail bound for the supremum of a process family.

Given moment control ``E|X_t - X_s|**beta <= B * d(s, t)**(1 + alpha)``, the
supremum deviation from the root point ``t0`` is bounded by

    P(sup_t |X_t - X_t0| >= delta/2) <= C * B * S,

with ``S = sum_{n > n0} |H_n| 2**(-(1 + gamma) n)`` and ``C`` collecting the
Markov-inequality factors produced by the geometric weights
``w_n = (1 - 2**-h) 2**(-h (n - n0))``, ``h = (alpha - gamma) / beta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError, HypothesisError
from .metric import PartitionFamily

# |H_n| <= TAIL_PAIR_FACTOR * |T_n| for dyadic interval partitions
TAIL_PAIR_FACTOR = 5.0


@dataclass(frozen=True)
class ChainingParams:
    """Hoelder excess ``alpha``, moment order ``beta``, entropy exponent ``gamma``, threshold ``delta``.

    ``gamma < alpha`` is a hypothesis of the bound rather than a construction
    invariant: it is checked by :func:`hypothesis_check` and enforced wherever
    the weights are needed.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if self.alpha <= 0:
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        if self.beta <= 0:
            raise DomainError(f"beta must be positive, got {self.beta!r}")
        if self.gamma < 0:
            raise DomainError(f"gamma must be non-negative, got {self.gamma!r}")
        if self.delta <= 0:
            raise DomainError(f"delta must be positive, got {self.delta!r}")

    @classmethod
    def with_default_gamma(cls, alpha: float, beta: float, delta: float) -> "ChainingParams":
        return cls(alpha, beta, alpha / 2.0, delta)

    @property
    def h(self) -> float:
        return (self.alpha - self.gamma) / self.beta

    def require_valid(self):
        if not self.gamma < self.alpha:
            raise HypothesisError(
                f"hypothesis violated: gamma < alpha (gamma={self.gamma}, alpha={self.alpha})"
            )


def chaining_weight(n: int, params: ChainingParams, n0: int) -> float:
    if n < n0:
        raise DomainError(f"weights start at n0={n0}, got n={n}")
    params.require_valid()
    h = params.h
    return -math.expm1(-h * math.log(2.0)) * 2.0 ** (-h * (n - n0))


@dataclass(frozen=True)
class EntropySum:
    partial: float
    tail: float
    n_max: int
    diverged: bool = False

    @property
    def total(self) -> float:
        return self.partial + self.tail


def entropy_sum(family: PartitionFamily, gamma: float) -> EntropySum:
    """``sum_{n0 < n <= n_max} |H_n| 2**(-(1+gamma) n)`` plus a rigorous tail.

    The tail uses ``|H_n| <= 5 |T_n|`` with ``|T_n|`` doubling per level beyond
    ``n_max``; it diverges for ``gamma <= 0``.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be non-negative, got {gamma!r}")
    partial = 0.0
    for n in range(family.n0 + 1, family.n_max + 1):
        partial += family.h_count(n) * 2.0 ** (-(1.0 + gamma) * n)
    if gamma <= 0:
        return EntropySum(partial, math.inf, family.n_max, diverged=True)
    nm = family.n_max
    size = family.level_size(nm)
    tail = (
        TAIL_PAIR_FACTOR
        * size
        * 2.0 ** (-nm)
        * 2.0 ** (-gamma * (nm + 1))
        / -math.expm1(-gamma * math.log(2.0))
    )
    return EntropySum(partial, tail, nm)


def bound_constant(params: ChainingParams, n0: int) -> float:
    """``(delta/2)**-beta (1 - 2**-h)**-beta 6**(1+alpha) 2**(-beta h n0)``."""
    params.require_valid()
    a, b, h = params.alpha, params.beta, params.h
    one_minus = -math.expm1(-h * math.log(2.0))
    return (
        (params.delta / 2.0) ** (-b)
        * one_minus ** (-b)
        * 6.0 ** (1.0 + a)
        * 2.0 ** (-b * h * n0)
    )


@dataclass(frozen=True)
class TailBoundReport:
    entropy_sum: float
    entropy_partial: float
    entropy_tail: float
    constant: float
    b_eps: float
    var_t0: float
    chain_raw: float
    chain_bound: float
    center_bound: float
    total_bound: float
    diverged: bool = False


def tail_bound(
    params: ChainingParams,
    family: PartitionFamily,
    b_eps: float,
    var_t0: float,
) -> TailBoundReport:
    """Bound ``P(sup_t |X_t| >= delta)`` via chaining plus Chebyshev at ``t0``."""
    if not b_eps >= 0:
        raise DomainError(f"b_eps must be non-negative, got {b_eps!r}")
    if not var_t0 >= 0:
        raise DomainError(f"var_t0 must be non-negative, got {var_t0!r}")
    es = entropy_sum(family, params.gamma)
    c = bound_constant(params, family.n0)
    if es.diverged:
        chain_raw = math.inf if b_eps > 0 else 0.0
    else:
        chain_raw = c * b_eps * es.total
    chain = min(1.0, chain_raw)
    center = min(1.0, 4.0 * var_t0 / params.delta**2)
    return TailBoundReport(
        entropy_sum=es.total,
        entropy_partial=es.partial,
        entropy_tail=es.tail,
        constant=c,
        b_eps=float(b_eps),
        var_t0=float(var_t0),
        chain_raw=chain_raw,
        chain_bound=chain,
        center_bound=center,
        total_bound=min(1.0, chain + center),
        diverged=es.diverged,
    )


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class HypothesisReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]


def hypothesis_check(params: ChainingParams, family: PartitionFamily) -> HypothesisReport:
    checks = [
        Check("alpha > 0", params.alpha > 0, f"alpha={params.alpha}"),
        Check("beta > 0", params.beta > 0, f"beta={params.beta}"),
        Check("gamma < alpha", params.gamma < params.alpha,
              f"gamma={params.gamma}, alpha={params.alpha}"),
        Check("h > 0", params.h > 0, f"h={params.h}"),
    ]
    es = entropy_sum(family, params.gamma)
    finite = not es.diverged and math.isfinite(es.total)
    checks.append(Check("entropy sum finite", finite, f"S={es.total}"))
    return HypothesisReport(checks)
