"""The exponential-type jump kernel and its radial Fourier transform.

The kernel family is ``J(|x|_p) = c |x|_p^gamma exp(-C1 |x|_p)`` with the
constant c fixed by ``int J(|x|_p) d^n x = 1``; integrability requires
gamma > -n. All spectral information enters through the radial transform
``Jhat(|xi|_p)``, computed via the sphere-sum identity

    1 - Jhat(p^k) = p^{-kn} J(p^{1-k})
                    + (1 - p^{-n}) * sum_{m >= 1-k} p^{nm} J(p^m),

which follows from evaluating the character integral sphere by sphere.
Everything downstream (heat kernels, survival, Laplace transforms) consumes
``1 - Jhat`` directly, so that quantity is what gets cached; it is
nonnegative and at most 2 for any normalized kernel.

For gamma in (-n, 0) the reciprocal ``1/(1 - Jhat(p^{-j}))`` grows double
exponentially in j, which is the mechanism behind recurrence; the
divergence diagnostics below therefore work in log space throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import GammaOutOfRange, NonPositiveRate, SeriesDiverged
from .padic import SpaceParams, log_sphere_volume, sphere_volume

#: Default exponent window for prebuilt spectral caches.
DEFAULT_SPECTRAL_WINDOW = (-40, 40)

_REL_TOL_INTERNAL = 1e-14
_MAX_SERIES_TERMS = 10_000


class RadialKernel(Protocol):
    """A radial jump density: value J(p^j) for each norm exponent j."""

    space: SpaceParams

    def value_at(self, j: int) -> float: ...


@dataclass(frozen=True)
class UnitBallKernel:
    """Indicator of Z_p^n: the self-dual test profile.

    Normalized for every (p, n) since vol(Z_p^n) = 1, and its radial
    transform is known in closed form (1 for k <= 0, 0 for k >= 1), which
    makes it the sharpest available oracle for the spectral code paths.
    Test-only profile; not an exponential-type landscape.
    """

    space: SpaceParams

    def value_at(self, j: int) -> float:
        return 1.0 if j <= 0 else 0.0


@dataclass(frozen=True)
class LandscapeParams:
    """A normalized exponential-type landscape c |x|^gamma e^{-C1 |x|}."""

    space: SpaceParams
    gamma: float
    c1: float
    norm_const: float

    def value_at(self, j: int) -> float:
        """J(p^j), evaluated through the log to dodge overflow at large |j|."""
        log_val = self.log_value_at(j)
        if log_val > 700.0:
            return math.inf
        return math.exp(log_val) if log_val > -745.0 else 0.0

    def log_value_at(self, j: int) -> float:
        p = float(self.space.p)
        decay = self.c1 * p**j  # inf for astronomically large j is fine
        return math.log(self.norm_const) + j * self.gamma * self.space.log_p - decay


def _raw_term(space: SpaceParams, gamma: float, c1: float, j: int) -> float:
    """One term p^{j(gamma+n)} e^{-C1 p^j} (1-p^{-n}) of the mass series."""
    p, n = float(space.p), space.n
    expo = j * (gamma + n) * space.log_p - c1 * p**j
    if expo < -745.0:
        return 0.0
    return math.exp(expo) * space.unit_sphere_volume


def unnormalized_mass(space: SpaceParams, gamma: float, c1: float) -> float:
    """The series sum_j p^{j gamma} e^{-C1 p^j} vol(S_j), truncated adaptively.

    Upper tail: terms collapse double-exponentially, so once the term ratio
    bound p^{gamma+n} e^{-C1 p^j (p-1)} drops below 1/2 the remainder is at
    most twice the last term. Lower tail: bounding e^{-C1 p^j} by 1 leaves a
    geometric series with ratio p^{-(gamma+n)}.
    """
    if c1 <= 0:
        raise NonPositiveRate(f"decay rate c1 must be > 0, got {c1}")
    if gamma <= -space.n:
        raise GammaOutOfRange(
            f"gamma must exceed -n = {-space.n} for an integrable kernel, got {gamma}"
        )
    p = float(space.p)
    terms = []
    # ascend from j = 0
    j = 0
    while True:
        t = _raw_term(space, gamma, c1, j)
        terms.append(t)
        running = math.fsum(terms)
        ratio = p ** (gamma + space.n) * math.exp(-c1 * p**j * (p - 1.0))
        if ratio < 0.5 and t * ratio / (1.0 - ratio) < 1e-15 * running:
            break
        j += 1
        if j > _MAX_SERIES_TERMS:
            raise SeriesDiverged("upper tail of the mass series failed to settle")
    # descend from j = -1
    r = p ** -(gamma + space.n)  # geometric ratio of the lower tail
    j = -1
    while True:
        t = _raw_term(space, gamma, c1, j)
        terms.append(t)
        running = math.fsum(terms)
        tail_bound = t * r / (1.0 - r)
        if tail_bound < 1e-15 * running:
            break
        j -= 1
        if j < -_MAX_SERIES_TERMS:
            raise SeriesDiverged("lower tail of the mass series failed to settle")
    return math.fsum(terms)


def normalize(space: SpaceParams, gamma: float, c1: float) -> LandscapeParams:
    """Fix the constant c so the kernel integrates to one."""
    mass = unnormalized_mass(space, gamma, c1)
    return LandscapeParams(space=space, gamma=gamma, c1=c1, norm_const=1.0 / mass)


def j_value(params: LandscapeParams, j: int) -> float:
    """Kernel value J(p^j) = c p^{j gamma} e^{-C1 p^j}."""
    return params.value_at(j)


# ---------------------------------------------------------------------------
# Radial Fourier transform
# ---------------------------------------------------------------------------


def spectral_one_minus(kernel: RadialKernel, k: int) -> float:
    """1 - Jhat(p^k) via the sphere-sum series; nonnegative by construction.

    The series terms p^{nl} J(p^{1+l-k}) die double-exponentially for the
    landscape family and terminate exactly for compactly supported test
    profiles; truncation stops after the terms are both decreasing and
    below 1e-14 of the running sum (or exactly zero twice).
    """
    space = kernel.space
    pn = float(space.p) ** space.n
    first = pn ** (-k) * kernel.value_at(1 - k)
    series = 0.0
    prev = math.inf
    small_count = 0
    l = 0
    while True:
        v = kernel.value_at(1 + l - k)
        term = 0.0 if v == 0.0 else pn**l * v
        series += term
        scale = first + space.unit_sphere_volume * pn ** (1 - k) * series
        if term == 0.0:
            small_count += 1
        elif l >= 4 and term <= prev and term < _REL_TOL_INTERNAL * max(scale, 1e-300):
            small_count += 1
        else:
            small_count = 0
        if small_count >= 2:
            break
        prev = term if term > 0.0 else prev
        l += 1
        if l > _MAX_SERIES_TERMS:
            raise SeriesDiverged(
                f"spectral series at k={k} failed its tail bound after {l} terms"
            )
    return first + space.unit_sphere_volume * pn ** (1 - k) * series


def spectral(kernel: RadialKernel, k: int) -> float:
    """Jhat(p^k) in [-1, 1]; values drifting past the boundary by more than
    1e-10 indicate a broken series and raise instead of being clamped."""
    jhat = 1.0 - spectral_one_minus(kernel, k)
    if jhat > 1.0:
        if jhat - 1.0 > 1e-10:
            raise SeriesDiverged(f"Jhat(p^{k}) = {jhat} exceeds 1 beyond tolerance")
        return 1.0
    if jhat < -1.0:
        if -1.0 - jhat > 1e-10:
            raise SeriesDiverged(f"Jhat(p^{k}) = {jhat} below -1 beyond tolerance")
        return -1.0
    return jhat


def spectral_by_quadrature(
    kernel: RadialKernel, k: int, rel_tol: float = 1e-12
) -> float:
    """Independent oracle: Jhat(p^k) summed directly over spheres of x.

    Uses only the closed-form character integral per sphere, i.e. the
    definition of the transform, with no rearrangement shared with
    :func:`spectral_one_minus`. Spheres above m = 1-k contribute nothing,
    the sphere at m = 1-k contributes its cancellation term, and the ones
    below contribute kernel value times volume. The kernel is normalized,
    so the un-summed lower tail is exactly 1 minus the volume-weighted
    mass seen so far; the descent stops when that remainder is negligible.
    """
    space = kernel.space
    pn = float(space.p) ** space.n
    # mass sitting above the cancellation sphere (never enters the sum)
    upper_mass = 0.0
    m = 2 - k
    zeros = 0
    while zeros < 2:
        t = kernel.value_at(m) * sphere_volume(space, m)
        upper_mass += t
        zeros = zeros + 1 if t == 0.0 else 0
        m += 1
        if m - (2 - k) > _MAX_SERIES_TERMS:
            raise SeriesDiverged("quadrature upper tail failed to settle")
    m = 1 - k
    total = -kernel.value_at(m) * pn ** (m - 1)  # the lone negative sphere
    mass_seen = kernel.value_at(m) * sphere_volume(space, m)
    scale = max(abs(total), 1.0)
    while True:
        m -= 1
        term = kernel.value_at(m) * sphere_volume(space, m)
        total += term
        mass_seen += term
        scale = max(scale, abs(total))
        remaining = 1.0 - upper_mass - mass_seen  # the entire lower tail
        if remaining < rel_tol * scale:
            break
        if 1 - k - m > _MAX_SERIES_TERMS:
            raise SeriesDiverged("quadrature series failed to settle")
    return total


@dataclass
class SpectralCache:
    """Values of 1 - Jhat(p^k) on an exponent window, extended on demand.

    Reads are pure lookups after construction; on-demand extension only
    inserts idempotent values, so sharing across threads is harmless.
    """

    kernel: RadialKernel
    k_min: int
    k_max: int
    values: dict[int, float] = field(default_factory=dict)
    left_tail_reaches_one: bool = False
    right_tail_decayed: bool = False

    @classmethod
    def build(
        cls,
        kernel: RadialKernel,
        window: tuple[int, int] = DEFAULT_SPECTRAL_WINDOW,
    ) -> "SpectralCache":
        cache = cls(kernel=kernel, k_min=window[0], k_max=window[1])
        for k in range(window[0], window[1] + 1):
            cache.one_minus(k)
        cache.left_tail_reaches_one = cache.one_minus(window[0]) < 1e-6
        cache.right_tail_decayed = abs(cache.jhat(window[1])) < 1e-3
        return cache

    def one_minus(self, k: int) -> float:
        v = self.values.get(k)
        if v is None:
            v = spectral_one_minus(self.kernel, k)
            if not (-1e-10 <= v <= 2.0 + 1e-10):
                raise SeriesDiverged(f"1 - Jhat(p^{k}) = {v} outside [0, 2]")
            v = min(max(v, 0.0), 2.0)
            self.values[k] = v
            self.k_min = min(self.k_min, k)
            self.k_max = max(self.k_max, k)
        return v

    def jhat(self, k: int) -> float:
        return 1.0 - self.one_minus(k)


# ---------------------------------------------------------------------------
# Masses and the spectral gap at |xi| = 1
# ---------------------------------------------------------------------------


def jmass_tail(params: LandscapeParams, r: int) -> float:
    """J-mass outside the ball of radius p^r: sum_{m > r} J(p^m) vol(S_m)."""
    total = 0.0
    zeros = 0
    m = r + 1
    while zeros < 2:
        t = params.value_at(m) * sphere_volume(params.space, m)
        total += t
        zeros = zeros + 1 if t < 1e-300 * max(total, 1.0) else 0
        m += 1
        if m - r > _MAX_SERIES_TERMS:
            raise SeriesDiverged("exterior mass series failed to settle")
    return total


def exterior_mass(params: LandscapeParams) -> float:
    """C = int_{Q_p^n \\ Z_p^n} J, the total rate of coset-moving jumps."""
    return jmass_tail(params, 0)


def jmass_ball(params: LandscapeParams, r: int) -> float:
    """J-mass of the ball of radius p^r (uses normalization: 1 - tail)."""
    return 1.0 - jmass_tail(params, r)


def spectral_gap_at_one(params: LandscapeParams) -> float:
    """1 - Jhat(1) by its closed form J(p) + int_{Q_p^n \\ Z_p^n} J.

    Strictly positive for every exponential-type landscape (the kernel has
    full support, so mass outside the unit ball never vanishes). Summed
    independently of the spectral series as a cross-check anchor.
    """
    return params.value_at(1) + exterior_mass(params)


# ---------------------------------------------------------------------------
# Explicit decay bound on 1 - Jhat for gamma in (-n, 0)
# ---------------------------------------------------------------------------


def spectral_bound_constants(params: LandscapeParams) -> tuple[float, float]:
    """Admissible (B1, B2) with
    1 - Jhat(|xi|) <= (B1 |xi|^{-n-gamma} + B2 |xi|^{-gamma}) e^{-C1 p / |xi|}.

    Derived by majorizing the sphere-sum series with the kernel's sandwich
    (upper constant B = c here) and bounding the exponential tail sum with
    int e^{-tau |y|} d^n y <= n! tau^{-n}, whose explicit constant comes
    from comparing sphere sums against the real-variable integral.
    """
    if not (-params.space.n < params.gamma < 0):
        raise GammaOutOfRange(
            f"decay bound requires -n < gamma < 0, got gamma={params.gamma}"
        )
    p, n = float(params.space.p), params.space.n
    b = params.norm_const
    b1 = b * (p**params.gamma + p**n)
    b2 = (
        b
        * p**n
        * math.factorial(n)
        / (params.space.unit_sphere_volume * params.c1**n)
    )
    return b1, b2


def spectral_decay_bound(params: LandscapeParams, k: int) -> float:
    """The explicit upper bound on 1 - Jhat(p^k) for gamma in (-n, 0)."""
    b1, b2 = spectral_bound_constants(params)
    p, n = float(params.space.p), params.space.n
    expo = -params.c1 * p ** (1 - k)
    damp = math.exp(expo) if expo > -745.0 else 0.0
    return (b1 * p ** (-k * (n + params.gamma)) + b2 * p ** (-k * params.gamma)) * damp


@dataclass(frozen=True)
class SpectralBoundReport:
    ks: tuple[int, ...]
    margins: tuple[float, ...]
    bounds: tuple[float, ...]
    one_minus: tuple[float, ...]
    b1: float
    b2: float

    @property
    def all_nonnegative(self) -> bool:
        return all(m >= 0.0 for m in self.margins)


def spectral_bound_check(
    params: LandscapeParams, ks: Sequence[int], cache: SpectralCache | None = None
) -> SpectralBoundReport:
    """Verify the explicit decay bound pointwise; returns per-k margins.

    Inequality-only contract: the bound need not be tight, so only the sign
    of the margins is meaningful.
    """
    b1, b2 = spectral_bound_constants(params)
    cache = cache or SpectralCache(kernel=params, k_min=0, k_max=0)
    bounds, oms, margins = [], [], []
    for k in ks:
        bd = spectral_decay_bound(params, k)
        om = cache.one_minus(k)
        bounds.append(bd)
        oms.append(om)
        margins.append(bd - om)
    return SpectralBoundReport(
        ks=tuple(ks),
        margins=tuple(margins),
        bounds=tuple(bounds),
        one_minus=tuple(oms),
        b1=b1,
        b2=b2,
    )


# ---------------------------------------------------------------------------
# Divergence diagnostics (all in log space)
# ---------------------------------------------------------------------------


def log_one_minus_jhat(params: LandscapeParams, k: int) -> float:
    """log(1 - Jhat(p^k)) evaluated entirely in log space.

    Needed for k << 0, where 1 - Jhat underflows double precision (it
    decays like e^{-C1 p^{1-k}}). Accumulates the series by logaddexp.
    """
    space = params.space
    n, lp = space.n, space.log_p
    logs = [-k * n * lp + params.log_value_at(1 - k)]
    log_pref = math.log(space.unit_sphere_volume) + n * (1 - k) * lp
    best = -math.inf
    l = 0
    while True:
        lt = log_pref + n * l * lp + params.log_value_at(1 + l - k)
        logs.append(lt)
        best = max(best, lt)
        if l >= 4 and lt < best - 80.0:
            break
        l += 1
        if l > 4000:
            raise SeriesDiverged("log-space spectral series failed to settle")
    return float(np.logaddexp.reduce(np.array(logs)))


@dataclass(frozen=True)
class DivergenceReport:
    """Log-scale evidence that a positive series has no finite sum."""

    term_logs: tuple[float, ...]
    partial_log_sums: tuple[float, ...]
    verdict: str  # "diverges" | "inconclusive"
    growth_floor: float


def divergence_diagnostic(params: LandscapeParams, m_terms: int) -> DivergenceReport:
    """Partial sums of sum_j vol(S_{-j}) / (1 - Jhat(p^{-j})) in log scale.

    For gamma in (-n, 0) the term logs grow like C1 p^{j+1}, which
    overflows doubles almost immediately, hence the log-space contract.
    Verdict "diverges" when the last five term-log increments each clear
    the conservative growth floor ceil(|gamma|) * log p.
    """
    if not (-params.space.n < params.gamma < 0):
        raise GammaOutOfRange(
            f"divergence diagnostic requires -n < gamma < 0, got {params.gamma}"
        )
    space = params.space
    term_logs = []
    partials = []
    running = -math.inf
    for j in range(m_terms + 1):
        lt = log_sphere_volume(space, -j) - log_one_minus_jhat(params, -j)
        term_logs.append(lt)
        running = float(np.logaddexp(running, lt))
        partials.append(running)
    floor = math.ceil(abs(params.gamma)) * space.log_p
    increments = [b - a for a, b in zip(term_logs, term_logs[1:])]
    tail = increments[-5:]
    verdict = "diverges" if len(tail) == 5 and all(d >= floor for d in tail) else "inconclusive"
    return DivergenceReport(
        term_logs=tuple(term_logs),
        partial_log_sums=tuple(partials),
        verdict=verdict,
        growth_floor=floor,
    )


@dataclass(frozen=True)
class NonIntegrableDemo:
    """Partial sums showing e^{-c|x|}/|x| has no integral over Z_p (n = 1)."""

    partial_sums: tuple[float, ...]
    increments: tuple[float, ...]
    limit_increment: float


def nonintegrable_demo(p: int, rate: float, m_terms: int) -> NonIntegrableDemo:
    """Sphere-by-sphere partial sums of int_{Z_p} e^{-c|x|}/|x| dx.

    The j-th sphere (norm p^{-j}) contributes e^{-c p^{-j}} (1 - 1/p),
    which tends to the constant 1 - 1/p: the partial sums grow linearly in
    the number of spheres, i.e. the integral is infinite. One-dimensional
    by construction.
    """
    space = SpaceParams(p=p, n=1)
    incs, partials = [], []
    total = 0.0
    for j in range(m_terms + 1):
        inc = math.exp(-rate * float(p) ** (-j)) * space.unit_sphere_volume
        incs.append(inc)
        total += inc
        partials.append(total)
    return NonIntegrableDemo(
        partial_sums=tuple(partials),
        increments=tuple(incs),
        limit_increment=space.unit_sphere_volume,
    )
