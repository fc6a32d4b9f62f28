"""Heat-kernel series for the nonlocal generator A u = J*u - u.

The semigroup measure factors as ``Z_t = e^{-t} delta_0 + Ztilde(.,t) d^n x``:
the atom is the probability of zero jumps up to time t, and the radial
density away from the origin is given by the sphere series

    Ztilde(x,t) = |x|^{-n} [ (1-p^{-n}) sum_{j>=0} p^{-nj} E(p^{-j}/|x|, t)
                             - E(p/|x|, t) ],
    E(p^k, t) = exp( (Jhat(p^k) - 1) t ).

Consequently the density integrates to 1 - e^{-t} and total probability is
conserved only once the atom is counted; `conservation_audit` reports both
pieces. The solution of the Cauchy problem started from the indicator of
Z_p^n is radial, constant on Z_p^n, and coincides with Ztilde on every
sphere of norm >= p (both are the transition probability into the
corresponding unit coset), which this module exploits and the tests check.

Everything here is a pure function of an immutable (landscape, spectral
cache) pair, so concurrent grid evaluation is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GammaOutOfRange, SeriesDiverged, UnsupportedBall, ZeroPoint
from .landscape import (
    LandscapeParams,
    SpectralCache,
    jmass_ball,
    spectral_bound_constants,
)
from .padic import (
    DEFAULT_DEPTH_CAP,
    CosetPoint,
    NormExponent,
    SpaceParams,
    ZERO_NORM,
    _ZeroNorm,
    sphere_volume,
)


def _machine_tail_len(space: SpaceParams) -> int:
    """Terms needed for a p^{-nj}-weighted series to reach machine tail."""
    return int(math.ceil(17.0 * math.log(10.0) / (space.n * space.log_p))) + 3


@dataclass(frozen=True)
class RadialProfile:
    """A function of the norm only, tabulated by norm exponent at one time.

    ``values[i]`` is the value on the sphere of norm p^i; ``inside`` is the
    value taken throughout Z_p^n where the profile is constant (meaningful
    for solution profiles; the kernel density has no inside value). For a
    full probability profile, inside * vol(Z_p^n) plus the sphere-weighted
    values account for all mass.
    """

    space: SpaceParams
    t: float
    values: dict[int, float]
    inside: float | None = None

    def sphere_mass(self) -> float:
        """sum_i values[i] * vol(S_i) over the tabulated exponents."""
        return math.fsum(
            v * sphere_volume(self.space, i) for i, v in self.values.items()
        )

    def total_probability(self) -> float:
        """inside-ball mass (vol 1) plus the tabulated sphere masses."""
        if self.inside is None:
            raise ValueError("profile has no inside value")
        return self.inside + math.fsum(
            v * sphere_volume(self.space, i) for i, v in self.values.items() if i >= 1
        )


@dataclass
class HeatState:
    """Immutable bundle of a landscape and its spectral cache."""

    landscape: LandscapeParams
    cache: SpectralCache = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.cache is None:
            self.cache = SpectralCache.build(self.landscape)

    @property
    def space(self) -> SpaceParams:
        return self.landscape.space

    def exp_factor(self, k: int, t: float) -> float:
        """e^{(Jhat(p^k) - 1) t}."""
        return math.exp(-self.cache.one_minus(k) * t)


def _bracket(state: HeatState, i: int, t: float) -> float:
    """The sphere series in Ztilde(p^i, t) before the |x|^{-n} prefactor."""
    space = state.space
    pn = float(space.p) ** space.n
    vol1 = space.unit_sphere_volume
    L = _machine_tail_len(space)
    acc = 0.0
    for j in range(L, -1, -1):  # small terms first
        acc += vol1 * pn ** (-j) * state.exp_factor(-j - i, t)
    return acc - state.exp_factor(1 - i, t)


def ztilde(state: HeatState, x_exp: NormExponent, t: float) -> float:
    """Radial heat-kernel density at norm p^x_exp; defined only off the origin.

    Nonnegative up to series roundoff; values within 1e-12 of zero are
    clamped to zero (at t = 0 the series telescopes to exactly that).
    """
    if isinstance(x_exp, _ZeroNorm):
        raise ZeroPoint("Ztilde is defined for x != 0 only")
    if t < 0:
        raise ValueError("time must be nonnegative")
    space = state.space
    val = float(space.p) ** (-space.n * x_exp) * _bracket(state, x_exp, t)
    if -1e-12 <= val < 0.0:
        return 0.0
    return val


def ztilde_sphere_mass(state: HeatState, i: int, t: float) -> float:
    """Ztilde(p^i, t) * vol(S_i), computed without the cancelling p^{+-ni}."""
    val = state.space.unit_sphere_volume * _bracket(state, i, t)
    return 0.0 if -1e-12 <= val < 0.0 else val


def u_profile(state: HeatState, i: NormExponent, t: float) -> float:
    """Solution of the Cauchy problem with unit-ball initial datum, by sphere.

    Constant on Z_p^n (any i <= 0 or the ZERO_NORM tag); for i >= 1 it is
    the sphere series  sum_{j>=i} vol(S_{-j}) E(p^{-j},t) - p^{-ni} E(p^{1-i},t).
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    space = state.space
    pn = float(space.p) ** space.n
    vol1 = space.unit_sphere_volume
    L = _machine_tail_len(space)
    if isinstance(i, _ZeroNorm) or i <= 0:
        acc = 0.0
        for j in range(L, -1, -1):
            acc += vol1 * pn ** (-j) * state.exp_factor(-j, t)
        return acc
    acc = 0.0
    for j in range(i + L, i - 1, -1):
        acc += vol1 * pn ** (-j) * state.exp_factor(-j, t)
    acc -= pn ** (-i) * state.exp_factor(1 - i, t)
    return 0.0 if -1e-12 <= acc < 0.0 else acc


def u_radial_profile(
    state: HeatState, x_exps: Sequence[int], t: float
) -> RadialProfile:
    """Tabulate the solution profile over the given norm exponents."""
    return RadialProfile(
        space=state.space,
        t=t,
        values={i: u_profile(state, i, t) for i in x_exps},
        inside=u_profile(state, ZERO_NORM, t),
    )


def ztilde_radial_profile(
    state: HeatState, x_exps: Sequence[int], t: float
) -> RadialProfile:
    """Tabulate the kernel density over the given norm exponents (x != 0)."""
    return RadialProfile(
        space=state.space,
        t=t,
        values={i: ztilde(state, i, t) for i in x_exps},
    )


def survival(state: HeatState, t: float) -> float:
    """S(t): probability of sitting in Z_p^n at time t, started there.

    Equals the constant value of u on Z_p^n since vol(Z_p^n) = 1. Not
    monotone in general: paths return.
    """
    return u_profile(state, ZERO_NORM, t)


def du_dt(state: HeatState, i: NormExponent, t: float) -> float:
    """Time derivative of u_profile: each sphere term picks up (Jhat - 1)."""
    space = state.space
    pn = float(space.p) ** space.n
    vol1 = space.unit_sphere_volume
    L = _machine_tail_len(space)
    if isinstance(i, _ZeroNorm) or i <= 0:
        return -math.fsum(
            vol1 * pn ** (-j) * state.cache.one_minus(-j) * state.exp_factor(-j, t)
            for j in range(0, L + 1)
        )
    head = -math.fsum(
        vol1 * pn ** (-j) * state.cache.one_minus(-j) * state.exp_factor(-j, t)
        for j in range(i, i + L + 1)
    )
    return head + pn ** (-i) * state.cache.one_minus(1 - i) * state.exp_factor(1 - i, t)


# ---------------------------------------------------------------------------
# Conservation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConservationAudit:
    """Mass accounting for the kernel measure at one time.

    total = atom + density_mass should be 1; the density alone carries
    1 - e^{-t} (the atom is the zero-jump probability at the origin).
    """

    t: float
    density_mass: float
    atom: float
    window: tuple[int, int]

    @property
    def total(self) -> float:
        return self.density_mass + self.atom

    @property
    def defect(self) -> float:
        return abs(self.total - 1.0)


def conservation_audit(
    state: HeatState,
    t: float,
    window: tuple[int, int] = (-40, 40),
    target: float = 1e-8,
    widen: bool = True,
) -> ConservationAudit:
    """Sum Ztilde over spheres and add the atom; widens the window if needed."""
    lo, hi = window
    while True:
        mass = math.fsum(ztilde_sphere_mass(state, i, t) for i in range(lo, hi + 1))
        audit = ConservationAudit(
            t=t, density_mass=mass, atom=math.exp(-t), window=(lo, hi)
        )
        if not widen or audit.defect <= target or lo <= -160:
            return audit
        lo -= 40  # the low-norm tail is the geometric one


# ---------------------------------------------------------------------------
# Radial convolution and the evolution-equation residual
# ---------------------------------------------------------------------------


def _exterior_flux(state: HeatState, t: float) -> float:
    """sum_{m>=1} J(p^m) vol(S_m) u(p^m, t): flux from outside into Z_p^n."""
    params = state.landscape
    total = 0.0
    m = 1
    zeros = 0
    while zeros < 2:
        w = params.value_at(m) * sphere_volume(state.space, m)
        total += w * u_profile(state, m, t)
        zeros = zeros + 1 if w == 0.0 else 0
        m += 1
    return total


def j_convolve_u(state: HeatState, i: NormExponent, t: float) -> float:
    """(J * u(., t))(x) for |x| = p^i, via ultrametric ball geometry.

    The convolution collapses to a finite weighted sum: spheres of y
    strictly larger than |x| contribute J(|y|) u(|y|) vol directly, smaller
    ones see u(|x|) weighted by the interior J-mass, and the same-norm
    sphere contributes J(|x|) times the u-mass of the ball B_i minus the
    sub-ball around x.
    """
    params = state.landscape
    space = state.space
    if isinstance(i, _ZeroNorm) or i <= 0:
        return u_profile(state, ZERO_NORM, t) * jmass_ball(params, 0) + _exterior_flux(
            state, t
        )
    u_i = u_profile(state, i, t)
    # spheres of y with norm above p^i
    outer = 0.0
    m = i + 1
    zeros = 0
    while zeros < 2:
        w = params.value_at(m) * sphere_volume(space, m)
        outer += w * u_profile(state, m, t)
        zeros = zeros + 1 if w == 0.0 else 0
        m += 1
    # strictly smaller norms leave the displaced norm at p^i
    inner = u_i * jmass_ball(params, i - 1)
    # same norm: integrate u over B_i(x) = B_i minus the ball B_{i-1}(x) in S_i
    ball_u = u_profile(state, ZERO_NORM, t) + math.fsum(
        u_profile(state, m, t) * sphere_volume(space, m) for m in range(1, i + 1)
    )
    same = params.value_at(i) * (
        ball_u - u_i * float(space.p) ** ((i - 1) * space.n)
    )
    return outer + inner + same


def pde_residual(state: HeatState, i: NormExponent, t: float) -> float:
    """Residual of du/dt = J*u - u at one (norm, time) point."""
    u_i = u_profile(state, i, t)
    return du_dt(state, i, t) - (j_convolve_u(state, i, t) - u_i)


# ---------------------------------------------------------------------------
# Transition probabilities and the quotient-chain matrix
# ---------------------------------------------------------------------------


def transition_prob(
    state: HeatState,
    x: CosetPoint,
    center: CosetPoint,
    radius_exp: int,
    t: float,
) -> float:
    """p_t(x, B) for a ball B of radius p^radius_exp around a canonical point.

    Balls with radius_exp >= 1 are unions of unit cosets; radius_exp <= 0
    means a sub-ball of a single coset (centered at the canonical
    representative of `center`). The atom e^{-t} at the displacement origin
    is included whenever the displaced ball contains it, which is what makes
    p_t(x, Q_p^n) = 1 and the survival identity hold.
    """
    if x.space != center.space:
        raise ValueError("x and ball center live over different spaces")
    if radius_exp < -DEFAULT_DEPTH_CAP:
        raise UnsupportedBall(
            f"ball radius exponent {radius_exp} is below the depth cap"
        )
    space = x.space
    delta = center - x
    d = delta.norm_exponent()
    if t == 0.0:
        inside = delta.is_zero() or (not isinstance(d, _ZeroNorm) and d <= radius_exp)
        return 1.0 if inside else 0.0
    if not delta.is_zero() and d > radius_exp:
        # every point of the displaced ball sits on the sphere of norm p^d
        return ztilde(state, d, t) * float(space.p) ** (radius_exp * space.n)
    if radius_exp >= 1:
        return survival(state, t) + math.fsum(
            ztilde_sphere_mass(state, j, t) for j in range(1, radius_exp + 1)
        )
    # sub-ball of Z_p^n around the origin: atom plus the small-norm spheres
    return math.exp(-t) + _small_ball_density_mass(state, radius_exp, t)


def _small_ball_density_mass(state: HeatState, r: int, t: float) -> float:
    """sum_{j <= r} Ztilde(p^j, t) vol(S_j), truncated adaptively.

    For gamma < 0 the density blows up like |x|^gamma at the origin, so the
    sphere masses decay only geometrically with ratio about p^{-(gamma+n)};
    the loop therefore stops on an explicit remaining-tail bound instead of
    a fixed machine-precision length.
    """
    params = state.landscape
    ratio = float(params.space.p) ** -(params.gamma + params.space.n)
    ratio = min(max(ratio, 0.0), 0.999)
    terms = []
    j = r
    decreasing = 0
    prev = math.inf
    while True:
        m = ztilde_sphere_mass(state, j, t)
        terms.append(m)
        total = math.fsum(terms)
        decreasing = decreasing + 1 if m <= prev else 0
        if decreasing >= 3 and m * ratio / (1.0 - ratio) < 1e-13 * max(total, 1e-300):
            return total
        prev = m
        j -= 1
        if r - j > 100_000:
            raise SeriesDiverged("small-ball mass series failed to settle")


def coset_norm_exponents(space: SpaceParams, depth: int) -> np.ndarray:
    """Norm exponent of every coset residue at the given depth (0 = identity).

    Residue index encodes the n coordinates in base p^depth; the norm
    exponent of a nonzero coordinate residue A is depth - v_p(A).
    """
    pm = space.p**depth
    per_coord = np.zeros(pm, dtype=np.int64)
    for a in range(1, pm):
        v = 0
        b = a
        while b % space.p == 0:
            b //= space.p
            v += 1
        per_coord[a] = depth - v
    if space.n == 1:
        return per_coord
    total = space.p ** (depth * space.n)
    idx = np.arange(total)
    out = np.zeros(total, dtype=np.int64)
    for _ in range(space.n):
        out = np.maximum(out, per_coord[idx % pm])
        idx //= pm
    return out


def q_by_norm(state: HeatState, t: float, depth: int) -> np.ndarray:
    """Transition probability into a single unit coset, by coset norm.

    Index 0 is the identity coset (probability S(t)); index j >= 1 is any
    coset of norm p^j (probability Ztilde(p^j, t), the density being
    constant on unit balls at that distance).
    """
    q = np.empty(depth + 1)
    q[0] = survival(state, t)
    for j in range(1, depth + 1):
        q[j] = ztilde(state, j, t)
    return q


def transition_matrix(state: HeatState, t: float, depth: int) -> np.ndarray:
    """Quotient-chain transition matrix on cosets of norm <= p^depth.

    P[a, b] = p_t(a-coset, b-coset + Z_p^n) depends only on the coset
    difference, so the matrix is the group convolution operator truncated
    to the window; the neglected tail mass decays double-exponentially in
    depth.
    """
    space = state.space
    pm = space.p**depth
    total = space.p ** (depth * space.n)
    norms = coset_norm_exponents(space, depth)
    q = q_by_norm(state, t, depth)
    idx = np.arange(total)
    coords = []
    rest = idx.copy()
    for _ in range(space.n):
        coords.append(rest % pm)
        rest //= pm
    diff_index = np.zeros((total, total), dtype=np.int64)
    mult = 1
    for c in coords:
        diff_index += ((c[None, :] - c[:, None]) % pm) * mult
        mult *= pm
    return q[norms[diff_index]]


def chapman_kolmogorov_defect(
    state: HeatState, t: float, s: float, depth: int
) -> float:
    """max |P(t+s) - P(t) P(s)| over the truncated coset chain."""
    pt = transition_matrix(state, t, depth)
    ps = transition_matrix(state, s, depth)
    pts = transition_matrix(state, t + s, depth)
    return float(np.max(np.abs(pts - pt @ ps)))


# ---------------------------------------------------------------------------
# Decay-bound checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayBoundReport:
    """Pointwise margins for the two heat-kernel decay estimates."""

    points: tuple[tuple[int, float], ...]  # (norm exponent, t)
    uniform_margins: tuple[float, ...]  # 2 t |x|^{-n} - Ztilde
    claim_margins: tuple[float, ...]  # t |x|^{-n} (1 - Jhat(p/|x|)) - Ztilde
    decay_margins: tuple[float, ...]  # C0 t |x|^gamma e^{-C1 |x|} - Ztilde
    c0: float

    @property
    def all_nonnegative(self) -> bool:
        return all(
            m >= 0.0
            for ms in (self.uniform_margins, self.claim_margins, self.decay_margins)
            for m in ms
        )


def decay_bound_check(
    state: HeatState,
    x_exps: Sequence[int],
    ts: Sequence[float],
    l: int = 1,
) -> DecayBoundReport:
    """Check Ztilde against its uniform and exponential decay bounds.

    The exponential bound holds for gamma in (-n, 0) and |x| > p^l with the
    constant C0 assembled from the spectral decay constants:
    C0(l) = B1 p^{-n-gamma} + B2 p^{-gamma - (l+1) n}.
    """
    params = state.landscape
    if not (-params.space.n < params.gamma < 0):
        raise GammaOutOfRange(
            f"decay bound requires -n < gamma < 0, got {params.gamma}"
        )
    if any(i <= l for i in x_exps):
        raise ValueError(f"decay bound applies to norm exponents > l = {l}")
    b1, b2 = spectral_bound_constants(params)
    p, n = float(params.space.p), params.space.n
    pn = p**n
    vol1 = params.space.unit_sphere_volume
    c0 = b1 * p ** (-n - params.gamma) + b2 * p ** (-params.gamma - (l + 1) * n)
    L = _machine_tail_len(params.space)
    points, uni, claim, decay = [], [], [], []
    for i in x_exps:
        for t in ts:
            # The first bound is tight to within roundoff when 1 - Jhat is
            # tiny, so the margins are assembled from manifestly nonnegative
            # pieces instead of subtracting two nearly equal numbers:
            #   t d - (1 - e^{-dt})            with d = 1 - Jhat(p^{1-i}),
            #   sum_j vol(S_{-j}) (1 - E_j)    the deficit of the sphere sum.
            d = state.cache.one_minus(1 - i)
            core = d * t + math.expm1(-d * t)
            deficit = math.fsum(
                vol1
                * pn ** (-j)
                * -math.expm1(-state.cache.one_minus(-j - i) * t)
                for j in range(0, L + 1)
            )
            xm_n = p ** (-i * n)
            claim_margin = xm_n * (core + deficit)
            points.append((i, t))
            uni.append(xm_n * t * (2.0 - d) + claim_margin)
            claim.append(claim_margin)
            ex = -params.c1 * p**i
            damp = math.exp(ex) if ex > -745.0 else 0.0
            decay.append(
                t * (c0 * p ** (i * params.gamma) * damp - xm_n * d) + claim_margin
            )
    return DecayBoundReport(
        points=tuple(points),
        uniform_margins=tuple(uni),
        claim_margins=tuple(claim),
        decay_margins=tuple(decay),
        c0=c0,
    )
