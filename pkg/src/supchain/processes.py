"""Samplers and analytic moments for the two example process families.

* ``IndicatorModel``: ``X_t = 1{t < U <= t + eps}`` with ``U ~ Un[0, 1]``.
  Its increments obey ``E(X_t - X_s)**2 <= 2 min(eps, |t - s|)``, which is not
  of Kolmogorov form, and indeed ``sup_t X_t = 1`` almost surely.
* ``CppModel``: ``X_t = int_{0<|u|<eps} K(t, omega) u N~(du domega)`` for the
  symmetric power-law intensity ``nu = c |u|**(-1-rho) du (x) domega`` on
  ``(-1, 1) x [0, 1]``.  Jumps below ``tau`` are discarded; the symmetric
  region makes the compensator vanish, so a path is a plain jump sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from . import kernels
from .errors import ConfigurationError, DomainError, KernelAuditError

DEFAULT_TAU_REL_TOL = 1e-4
# above this expected jump count the truncation is declared unachievable
MAX_EXPECTED_JUMPS = 1e7

KERNEL_FAMILIES = {"linear": kernels.LINEAR, "sinusoid": kernels.SINUSOID, "hoelder": kernels.HOELDER}


def replicate_rng(seed: int, replicate_index: int, stream: int = 0) -> np.random.Generator:
    """Independent generator keyed by ``(seed, stream, replicate_index)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(replicate_index)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class PathSample:
    grid: np.ndarray
    values: np.ndarray
    seed: int | None = None
    replicate_index: int | None = None


def _as_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise DomainError("grid must be non-empty")
    if np.any((g < 0) | (g > 1)):
        raise DomainError("grid points must lie in [0, 1]")
    return g


# --- indicator -------------------------------------------------------------

@dataclass(frozen=True)
class IndicatorModel:
    eps: float

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise DomainError(f"indicator width must lie in (0, 1), got {self.eps!r}")


def indicator_values(u, eps: float, grid) -> np.ndarray:
    """``1{t < U <= t + eps}``; broadcasts ``u`` of shape ``(R,)`` against the grid."""
    u = np.asarray(u, dtype=float)[..., None]
    t = np.asarray(grid, dtype=float)
    return ((t < u) & (u <= t + eps)).astype(float)


def indicator_path(model: IndicatorModel, grid, rng=None, *, seed=0, replicate_index=0, stream=0) -> PathSample:
    g = _as_grid(grid)
    if rng is None:
        rng = replicate_rng(seed, replicate_index, stream)
    u = rng.random()
    return PathSample(g, indicator_values(u, model.eps, g), seed, replicate_index)


@dataclass(frozen=True)
class IndicatorMoments:
    second_moment: float
    cross_moment: float
    increment_bound: float


def indicator_second_moment(eps: float, t: float) -> float:
    return min(eps, 1.0 - t)


def indicator_cross_moment(eps: float, s: float, t: float) -> float:
    gap = abs(t - s)
    if gap > eps:
        return 0.0
    if min(s, t) <= 1.0 - eps:
        return eps - gap
    return 1.0 - max(s, t)


def indicator_moments(model: IndicatorModel, s: float, t: float) -> IndicatorMoments:
    eps = model.eps
    for name, x in (("s", s), ("t", t)):
        if not 0 <= x <= 1:
            raise DomainError(f"{name}={x!r} outside [0, 1]")
    return IndicatorMoments(
        second_moment=indicator_second_moment(eps, t),
        cross_moment=indicator_cross_moment(eps, s, t),
        increment_bound=2.0 * min(eps, abs(t - s)),
    )


def indicator_increment(model: IndicatorModel, s: float, t: float) -> float:
    """Exact ``E(X_t - X_s)**2`` from the three moments."""
    eps = model.eps
    return (
        indicator_second_moment(eps, t)
        + indicator_second_moment(eps, s)
        - 2.0 * indicator_cross_moment(eps, s, t)
    )


# --- compensated Poisson integral -----------------------------------------

@dataclass(frozen=True)
class PowerLawIntensity:
    """``nu(du domega) = c |u|**(-1-rho) du (x) domega`` on ``(-1, 1) x [0, 1]``."""

    rho: float
    c: float = 1.0

    def __post_init__(self):
        if not 0 < self.rho < 2:
            raise DomainError(f"rho must lie in (0, 2), got {self.rho!r}")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c!r}")

    def density(self, u):
        return self.c * np.abs(u) ** (-1.0 - self.rho)

    def total_second_moment(self) -> float:
        return 2.0 * self.c / (2.0 - self.rho)


def region_mass(intensity: PowerLawIntensity, tau: float, eps: float) -> float:
    """``nu({tau <= |u| < eps} x Omega)``."""
    if not 0 < tau < eps <= 1:
        raise DomainError(f"need 0 < tau < eps <= 1, got tau={tau!r}, eps={eps!r}")
    rho = intensity.rho
    return 2.0 * intensity.c * (tau ** -rho - eps ** -rho) / rho


def second_moment_mass(intensity: PowerLawIntensity, lo: float, hi: float) -> float:
    """``int_{lo <= |u| < hi} u**2 nu(du) = 2c (hi**(2-rho) - lo**(2-rho)) / (2-rho)``."""
    if not 0 <= lo <= hi <= 1:
        raise DomainError(f"need 0 <= lo <= hi <= 1, got lo={lo!r}, hi={hi!r}")
    e = 2.0 - intensity.rho
    return 2.0 * intensity.c * (hi**e - lo**e) / e


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family with its declared Hoelder excess and constant ``C(omega)``.

    ``linear``: ``K = t`` (alpha 1, C 1); ``sinusoid``: ``K = sin(2 pi (t + omega))``
    (alpha 1, C 4 pi**2); ``hoelder``: ``K = |t - omega|**p`` (alpha ``2p - 1``, C 1).
    ``hoelder`` with ``p = 1/2`` has alpha 0 and is only an experiment config.
    ``alpha`` and ``c_omega`` may be overridden to declare a different bound;
    :func:`kernel_hoelder_audit` then checks the declaration.
    """

    family: str
    p: float | None = None
    alpha: float | None = None
    c_omega: float | None = None

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise DomainError(f"unknown kernel family {self.family!r}")
        p = self.p
        if self.family == "hoelder":
            if p is None or not 0.5 <= p <= 1.0:
                raise DomainError(f"hoelder exponent must lie in [1/2, 1], got {p!r}")
        elif p is not None:
            raise DomainError(f"kernel {self.family!r} takes no exponent")
        alpha, c = {"linear": (1.0, 1.0), "sinusoid": (1.0, 4 * math.pi**2)}.get(
            self.family, (2.0 * (p or 1.0) - 1.0, 1.0)
        )
        if self.alpha is None:
            object.__setattr__(self, "alpha", alpha)
        if self.c_omega is None:
            object.__setattr__(self, "c_omega", c)
        if self.alpha < 0 or not self.c_omega > 0:
            raise DomainError("declared alpha must be >= 0 and c_omega > 0")

    @property
    def kind(self) -> int:
        return KERNEL_FAMILIES[self.family]

    @property
    def exponent(self) -> float:
        return self.p if self.p is not None else 1.0

    @property
    def c_omega_bar(self) -> float:
        """``int C(omega) domega``; C is constant in omega for every family."""
        return self.c_omega

    @property
    def sup_abs(self) -> float:
        return 1.0

    def __call__(self, t, omega):
        t = np.asarray(t, dtype=float)
        w = np.asarray(omega, dtype=float)
        if self.kind == kernels.LINEAR:
            return np.broadcast_to(t, np.broadcast(t, w).shape).copy()
        if self.kind == kernels.SINUSOID:
            return np.sin(2.0 * np.pi * (t + w))
        return np.abs(t - w) ** self.p

    def omega_mean_square(self, t: float) -> float:
        """``int_0^1 K(t, omega)**2 domega``."""
        if self.kind == kernels.LINEAR:
            return t * t
        if self.kind == kernels.SINUSOID:
            return 0.5
        q = 2.0 * self.p + 1.0
        return (t**q + (1.0 - t) ** q) / q

    def omega_increment_square(self, s: float, t: float) -> float:
        """``int_0^1 (K(t, omega) - K(s, omega))**2 domega``."""
        if self.kind == kernels.LINEAR:
            return (t - s) ** 2
        if self.kind == kernels.SINUSOID:
            return 1.0 - math.cos(2.0 * math.pi * (t - s))
        if s == t:
            return 0.0
        f = lambda w: (abs(t - w) ** self.p - abs(s - w) ** self.p) ** 2
        val, _ = integrate.quad(f, 0.0, 1.0, points=sorted({s, t}), epsabs=0, epsrel=1e-12, limit=200)
        return val


@dataclass(frozen=True)
class CppModel:
    """Compensated-Poisson integral with outer cutoff ``eps`` and inner truncation.

    ``tau`` is chosen so that the neglected variance bound
    ``sup|K|**2 * int_{|u|<tau} u**2 nu`` is at most ``tau_rel_tol`` times the
    variance at ``t0`` (or times ``sup|K|**2 int_{|u|<eps} u**2 nu`` when the
    kernel vanishes at ``t0``).  ``tau_fixed`` overrides the policy; setting it
    equal to ``eps`` gives the empty region and identically zero paths.
    """

    intensity: PowerLawIntensity
    kernel: KernelSpec
    eps: float
    t0: float = 0.5
    tau_rel_tol: float = DEFAULT_TAU_REL_TOL
    tau_fixed: float | None = None

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise DomainError(f"eps must lie in (0, 1], got {self.eps!r}")
        if not 0 <= self.t0 <= 1:
            raise DomainError(f"t0 must lie in [0, 1], got {self.t0!r}")
        if not 0 < self.tau_rel_tol < 1:
            raise DomainError(f"tau_rel_tol must lie in (0, 1), got {self.tau_rel_tol!r}")
        if self.tau_fixed is not None and not 0 < self.tau_fixed <= self.eps:
            raise DomainError(f"tau must lie in (0, eps], got {self.tau_fixed!r}")
        # resolve tau now so unusable tolerances fail at construction
        object.__setattr__(self, "_tau", self._resolve_tau())

    def with_eps(self, eps: float) -> "CppModel":
        return replace(self, eps=eps)

    def _resolve_tau(self) -> float:
        if self.tau_fixed is not None:
            return float(self.tau_fixed)
        nu = self.intensity
        e = 2.0 - nu.rho
        k2 = self.kernel.sup_abs**2
        ref = self.kernel.omega_mean_square(self.t0) * second_moment_mass(nu, 0.0, self.eps)
        if ref <= 0:
            ref = k2 * second_moment_mass(nu, 0.0, self.eps)
        # k2 * 2c tau**e / e <= tol * ref
        tau = (self.tau_rel_tol * ref * e / (k2 * 2.0 * nu.c)) ** (1.0 / e)
        tau = min(tau, self.eps)
        if not tau > 0 or not math.isfinite(tau ** -nu.rho):
            raise ConfigurationError(f"truncation tolerance {self.tau_rel_tol} unachievable: tau underflows")
        if tau < self.eps and region_mass(nu, tau, self.eps) > MAX_EXPECTED_JUMPS:
            raise ConfigurationError(
                f"truncation tolerance {self.tau_rel_tol} unachievable: "
                f"expected jump count exceeds {MAX_EXPECTED_JUMPS:g}"
            )
        return float(tau)

    @property
    def tau(self) -> float:
        return self._tau

    @property
    def expected_jumps(self) -> float:
        if self.tau >= self.eps:
            return 0.0
        return region_mass(self.intensity, self.tau, self.eps)

    @property
    def neglected_variance_bound(self) -> float:
        return self.kernel.sup_abs**2 * second_moment_mass(self.intensity, 0.0, self.tau)


def draw_jumps(model: CppModel, rng: np.random.Generator):
    """Jump sizes ``u`` and marks ``omega`` on ``{tau <= |u| < eps} x [0, 1]``.

    Draw order is fixed (count, quantiles, signs, marks) so a generator state
    determines the path exactly.
    """
    lam = model.expected_jumps
    if lam == 0.0:
        return np.empty(0), np.empty(0)
    n = rng.poisson(lam)
    q = rng.random(n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    omega = rng.random(n)
    rho = model.intensity.rho
    a = model.tau ** -rho
    b = model.eps ** -rho
    mag = (a - q * (a - b)) ** (-1.0 / rho)
    return sign * mag, omega


def draw_jump_batch(model: CppModel, seed: int, stream: int, start: int, count: int):
    """CSR-packed jumps for replicates ``start .. start+count-1``."""
    us, ws = [], []
    offsets = np.zeros(count + 1, dtype=np.int64)
    for k in range(count):
        u, w = draw_jumps(model, replicate_rng(seed, start + k, stream))
        us.append(u)
        ws.append(w)
        offsets[k + 1] = offsets[k] + len(u)
    u = np.concatenate(us) if us else np.empty(0)
    w = np.concatenate(ws) if ws else np.empty(0)
    return offsets, u, w


def cpp_path(model: CppModel, grid, rng=None, *, seed=0, replicate_index=0, stream=0) -> PathSample:
    g = _as_grid(grid)
    if rng is None:
        rng = replicate_rng(seed, replicate_index, stream)
    u, w = draw_jumps(model, rng)
    offsets = np.array([0, len(u)], dtype=np.int64)
    vals = kernels.paths_at(offsets, u, w, g, model.kernel.kind, model.kernel.exponent)[0]
    return PathSample(g, vals, seed, replicate_index)


def b_eps(model: CppModel) -> float:
    """``B_eps = int_{|u| <= eps} C(omega) u**2 nu(du domega)``."""
    return model.kernel.c_omega_bar * second_moment_mass(model.intensity, 0.0, model.eps)


def var_t0(model, t0: float) -> float:
    """Analytic ``E(X_t0)**2`` of the untruncated process."""
    if not 0 <= t0 <= 1:
        raise DomainError(f"t0={t0!r} outside [0, 1]")
    if isinstance(model, IndicatorModel):
        return indicator_second_moment(model.eps, t0)
    return model.kernel.omega_mean_square(t0) * second_moment_mass(model.intensity, 0.0, model.eps)


def truncated_variance(model: CppModel, t: float) -> float:
    """``E(X_t)**2`` of the simulated process (jumps in ``[tau, eps)``)."""
    return model.kernel.omega_mean_square(t) * second_moment_mass(model.intensity, model.tau, model.eps)


def increment_variance(model: CppModel, s: float, t: float, truncated: bool = True) -> float:
    """Isometry value of ``E(X_t - X_s)**2``."""
    lo = model.tau if truncated else 0.0
    return model.kernel.omega_increment_square(s, t) * second_moment_mass(model.intensity, lo, model.eps)


def increment_bound(model: CppModel, s: float, t: float) -> float:
    """``B_eps |t - s|**(1 + alpha)`` with the kernel's declared alpha."""
    return b_eps(model) * abs(t - s) ** (1.0 + model.kernel.alpha)


def levy_khinchine_cf(model: CppModel, zeta: float, t: float, lo: float = 0.0) -> float:
    """``exp int int_{lo<=|u|<eps} (cos(zeta K u) - 1) nu`` by nested quadrature.

    The sine part cancels under ``u -> -u``.
    """
    nu = model.intensity
    kern = model.kernel

    def inner(w):
        k = float(kern(t, w))
        if k == 0.0 or zeta == 0.0:
            return 0.0
        # cos x - 1 = -2 sin(x/2)**2 without cancellation for small x
        f = lambda u: -2.0 * math.sin(0.5 * zeta * k * u) ** 2 * u ** (-1.0 - nu.rho)
        v, _ = integrate.quad(f, lo, model.eps, epsabs=0, epsrel=1e-11, limit=200)
        return 2.0 * nu.c * v

    if kern.kind == kernels.LINEAR:
        expo = inner(0.0)
    else:
        brk = [t] if kern.kind == kernels.HOELDER and 0 < t < 1 else None
        expo, _ = integrate.quad(inner, 0.0, 1.0, points=brk, epsabs=0, epsrel=1e-10, limit=200)
    return math.exp(expo)


@dataclass(frozen=True)
class HoelderAudit:
    family: str
    worst_ratio: float
    worst_tuple: tuple
    samples: int

    @property
    def passed(self) -> bool:
        return self.worst_ratio <= 1.0 + 1e-9


def kernel_hoelder_audit(kernel: KernelSpec, samples: int = 10_000, seed: int = 0, strict: bool = True) -> HoelderAudit:
    """Worst ``|K(t,w) - K(s,w)|**2 / (C |t - s|**(1+alpha))`` over sampled triples.

    Half the triples are uniform; the rest pair ``t`` with a nearby ``s`` at
    log-uniform gaps, where the ratio approaches its supremum.
    """
    if samples < 1000:
        raise DomainError(f"audit needs at least 1000 samples, got {samples}")
    rng = np.random.default_rng(seed)
    half = samples // 2
    t = rng.random(samples)
    s = rng.random(samples)
    gap = 10.0 ** rng.uniform(-6, -1, samples - half) * rng.choice([-1.0, 1.0], samples - half)
    s[half:] = np.clip(t[half:] + gap, 0.0, 1.0)
    w = rng.random(samples)
    keep = s != t
    s, t, w = s[keep], t[keep], w[keep]
    num = (kernel(t, w) - kernel(s, w)) ** 2
    den = kernel.c_omega * np.abs(t - s) ** (1.0 + kernel.alpha)
    ratio = num / den
    k = int(np.argmax(ratio))
    report = HoelderAudit(kernel.family, float(ratio[k]), (float(s[k]), float(t[k]), float(w[k])), int(keep.sum()))
    if strict and not report.passed:
        raise KernelAuditError(report)
    return report
