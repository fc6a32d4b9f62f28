"""Exact compound-Poisson simulation on the quotient Q_p^n / Z_p^n.

The process behind the evolution equation du/dt = J*u - u jumps at unit
rate with increments drawn from the density J. Membership in Z_p^n depends
only on the coset of the position, and increments of norm <= 1 act
trivially on the quotient, so simulating the induced coset chain is exact
for survival and first-passage observables: no discretization anywhere.

Randomness protocol (stable; reproducibility contract):
each path index owns the Philox stream ``Philox(key=seed).jumped(index)``
and consumes it jump by jump, strictly interleaved:

1. one standard exponential — the waiting time (stop once the running sum
   passes the horizon);
2. one uniform, inverted through the jump-norm CDF — the norm exponent j;
3. if j >= 1: vectors of n digits until one is nonzero (the leading
   column at position -j), then, if j > 1, an (n, j-1) digit block for
   positions -1 .. -(j-1).

Because nothing drawn depends on the horizon, runs with nested horizons
and the same seed consume identical stream prefixes: path histories agree
up to the shorter horizon exactly, and identical (seed, path index) always
reproduces the identical path no matter how paths are batched across
workers. Estimators reduce over paths associatively.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DepthOverflow, SeriesDiverged
from .landscape import LandscapeParams
from .padic import (
    DEFAULT_DEPTH_CAP,
    CosetPoint,
    SpaceParams,
    sphere_volume,
    split_stream,
)

#: Largest tolerated jump-norm mass beyond the table's upper edge.
TRUNCATION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class JumpNormTable:
    """Inverse-CDF table for the norm exponent of a J-distributed jump.

    Covers exponents [j_min, j_max]; the upper defect (mass beyond j_max)
    must be below TRUNCATION_TOLERANCE and both defects are recorded. The
    probabilities are renormalized over the table.
    """

    landscape: LandscapeParams
    js: np.ndarray
    probs: np.ndarray
    cdf: np.ndarray
    defect_low: float
    defect_high: float

    @classmethod
    def build(cls, landscape: LandscapeParams, j_max: int) -> "JumpNormTable":
        space = landscape.space
        w_of = lambda j: landscape.value_at(j) * sphere_volume(space, j)
        # mass beyond the cap: terms collapse double-exponentially
        defect_high = 0.0
        j = j_max + 1
        zeros = 0
        while zeros < 2:
            t = w_of(j)
            defect_high += t
            zeros = zeros + 1 if t == 0.0 else 0
            j += 1
            if j - j_max > 10_000:
                raise SeriesDiverged("jump-norm upper tail failed to settle")
        # extend downward until the geometric lower tail is negligible
        ratio = float(space.p) ** -(landscape.gamma + space.n)
        ratio = min(ratio, 0.999999)
        weights = [w_of(j_max)]
        j = j_max - 1
        while True:
            t = w_of(j)
            weights.append(t)
            if t * ratio / (1.0 - ratio) < 1e-16 * math.fsum(weights):
                break
            j -= 1
            if j_max - j > 100_000:
                raise SeriesDiverged("jump-norm lower tail failed to settle")
        j_min = j
        js = np.arange(j_min, j_max + 1, dtype=np.int64)
        probs = np.array(weights[::-1])
        defect_low = max(0.0, 1.0 - defect_high - float(probs.sum()))
        probs /= probs.sum()
        return cls(
            landscape=landscape,
            js=js,
            probs=probs,
            cdf=np.cumsum(probs),
            defect_low=defect_low,
            defect_high=defect_high,
        )

    @property
    def prob_nonmoving(self) -> float:
        """P(norm exponent <= 0): jumps that do not move the coset."""
        return float(self.probs[self.js <= 0].sum())


def sample_jump_norm(
    table: JumpNormTable, rng: np.random.Generator, size: int | None = None
):
    """Draw jump-norm exponents by inverse CDF over the table."""
    u = rng.random(size=size)
    idx = np.searchsorted(table.cdf, u, side="right")
    idx = np.minimum(idx, len(table.js) - 1)
    return table.js[idx] if size is not None else int(table.js[int(idx)])


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo run parameters; validated eagerly at construction."""

    landscape: LandscapeParams
    horizon: float
    max_paths: int
    seed: int
    j_max: int
    depth_cap: int = DEFAULT_DEPTH_CAP
    table: JumpNormTable = field(compare=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.horizon <= 0:
            raise ConfigError(f"sim.horizon: must be > 0, got {self.horizon}")
        if self.max_paths < 1:
            raise ConfigError(f"sim.paths: must be >= 1, got {self.max_paths}")
        if not (0 <= self.seed < 2**64):
            raise ConfigError(f"sim.seed: must fit in 64 bits, got {self.seed}")
        if self.j_max < 1:
            raise ConfigError(f"sim.j_max: must be >= 1, got {self.j_max}")
        if self.j_max > self.depth_cap:
            raise ConfigError(
                f"sim.j_max: {self.j_max} exceeds the depth cap {self.depth_cap}"
            )
        if self.table is None:
            object.__setattr__(
                self, "table", JumpNormTable.build(self.landscape, self.j_max)
            )
        if self.table.defect_high >= TRUNCATION_TOLERANCE:
            raise ConfigError(
                f"sim.j_max: truncated jump mass {self.table.defect_high:.3e} "
                f"beyond p^{self.j_max} is not below {TRUNCATION_TOLERANCE}"
            )


@dataclass(frozen=True)
class PathSample:
    """One simulated path up to the horizon (always censored there)."""

    jump_times: tuple[float, ...]
    norm_exponents: tuple[int, ...]
    positions: tuple[CosetPoint, ...]
    horizon: float
    censored: bool = True


@dataclass(frozen=True)
class FirstPassageSample:
    """tau = first return time to Z_p^n after an excursion, if observed."""

    tau: float | None
    censored: bool
    exited: bool


def _draw_path_raw(
    rng: np.random.Generator, table: JumpNormTable, horizon: float, space: SpaceParams
):
    """Consume one path's stream; see the module docstring for the protocol.

    Returns (jump_times, norm_exponents, mover_digits) where mover_digits
    holds, for each jump with norm exponent >= 1 in order, the pair
    (leading column, shallower digit block).
    """
    p, n = space.p, space.n
    times: list[float] = []
    jexps: list[int] = []
    movers = []
    t = 0.0
    while True:
        t += rng.standard_exponential()
        if t > horizon:
            break
        j = sample_jump_norm(table, rng)
        times.append(t)
        jexps.append(j)
        if j >= 1:
            while True:
                col = rng.integers(0, p, size=n)
                if col.any():
                    break
            rest = rng.integers(0, p, size=(n, j - 1)) if j > 1 else None
            movers.append((j, col, rest))
    return (
        np.asarray(times, dtype=float),
        np.asarray(jexps, dtype=np.int64),
        movers,
    )


def _mover_coset(
    space: SpaceParams, j: int, col: np.ndarray, rest, depth_cap: int
) -> CosetPoint:
    arrays = []
    for c in range(space.n):
        digs = [int(rest[c, k]) for k in range(j - 1)] if rest is not None else []
        digs.append(int(col[c]))  # position -j
        arrays.append(tuple(digs))
    if j > depth_cap:  # unreachable when j_max <= depth_cap was validated
        raise DepthOverflow(f"jump norm exponent {j} exceeds depth cap {depth_cap}")
    return CosetPoint(space, tuple(arrays))


def _mover_residues(space: SpaceParams, j: int, col, rest, depth: int) -> tuple[int, ...]:
    """Same digits as :func:`_mover_coset`, encoded as residues mod p^depth."""
    p = space.p
    out = []
    for c in range(space.n):
        a = int(col[c]) * p ** (depth - j)
        if rest is not None:
            for k in range(j - 1):  # digit at position -(k+1)
                a += int(rest[c, k]) * p ** (depth - 1 - k)
        out.append(a)
    return tuple(out)


def simulate_path(config: SimConfig, path_index: int) -> PathSample:
    """Simulate one exact path of the quotient chain, start at the identity.

    Deterministic under (config.seed, path_index). Positions are recorded
    after every jump, including the coset-fixing ones.
    """
    space = config.landscape.space
    rng = split_stream(config.seed, path_index)
    times, jexps, movers = _draw_path_raw(rng, config.table, config.horizon, space)
    pos = CosetPoint.zero(space)
    positions = []
    mover_iter = iter(movers)
    for j in jexps:
        if j >= 1:
            jm, col, rest = next(mover_iter)
            pos = pos + _mover_coset(space, jm, col, rest, config.depth_cap)
        positions.append(pos)
    return PathSample(
        jump_times=tuple(float(t) for t in times),
        norm_exponents=tuple(int(j) for j in jexps),
        positions=tuple(positions),
        horizon=config.horizon,
    )


def first_passage(path: PathSample) -> FirstPassageSample:
    """Scan a path for its first return to Z_p^n after leaving.

    The path is constant between jumps, so the first-passage time, when it
    exists, is attained at a jump time: the first one whose position is the
    identity coset while some strictly earlier jump left it.
    """
    exited = False
    for t, pos in zip(path.jump_times, path.positions):
        if pos.is_zero():
            if exited:
                return FirstPassageSample(tau=t, censored=False, exited=True)
        else:
            exited = True
    return FirstPassageSample(tau=None, censored=True, exited=exited)


# ---------------------------------------------------------------------------
# Batch runner and estimators
# ---------------------------------------------------------------------------


@dataclass
class PathBatch:
    """Per-path summaries over a contiguous block of path indices."""

    query_times: tuple[float, ...]
    inside_at: np.ndarray  # (paths, times) bool
    norm_at: np.ndarray  # (paths, times) int16 norm exponent, 0 = inside Z_p^n
    tau: np.ndarray  # nan when not observed
    exited: np.ndarray  # bool
    n_jumps: np.ndarray  # int64


def _residue_norm_exp(pos: list[int], p: int, depth: int) -> int:
    """Coset norm exponent of a residue vector; 0 means the identity coset."""
    best = 0
    for a in pos:
        if a == 0:
            continue
        v = 0
        while a % p == 0:
            a //= p
            v += 1
        best = max(best, depth - v)
    return best


def _run_block(
    config: SimConfig, start: int, stop: int, query_times: tuple[float, ...]
) -> PathBatch:
    space = config.landscape.space
    depth = config.j_max
    qts = np.asarray(query_times, dtype=float)
    n_paths = stop - start
    inside = np.ones((n_paths, len(qts)), dtype=bool)
    norm_at = np.zeros((n_paths, len(qts)), dtype=np.int16)
    tau = np.full(n_paths, np.nan)
    exited = np.zeros(n_paths, dtype=bool)
    n_jumps = np.zeros(n_paths, dtype=np.int64)
    modulus = space.p**depth
    if modulus > 2**62:
        raise ConfigError(
            "sim.j_max: residue fast path needs p^j_max < 2^62; lower j_max"
        )
    for k in range(n_paths):
        rng = split_stream(config.seed, start + k)
        times, jexps, movers = _draw_path_raw(rng, config.table, config.horizon, space)
        n_jumps[k] = len(times)
        pos = [0] * space.n
        mover_times = []
        norm_after = []
        mi = 0
        for t, j in zip(times, jexps):
            if j < 1:
                continue
            jm, col, rest = movers[mi]
            mi += 1
            inc = _mover_residues(space, jm, col, rest, depth)
            pos = [(a + b) % modulus for a, b in zip(pos, inc)]
            norm = _residue_norm_exp(pos, space.p, depth)
            mover_times.append(t)
            norm_after.append(norm)
            if norm > 0:
                exited[k] = True
            elif exited[k] and math.isnan(tau[k]):
                tau[k] = t
        if mover_times:
            idx = np.searchsorted(np.asarray(mover_times), qts, side="right") - 1
            state = np.array(norm_after, dtype=np.int16)
            norms_k = np.where(idx >= 0, state[np.maximum(idx, 0)], 0)
            norm_at[k] = norms_k
            inside[k] = norms_k == 0
    return PathBatch(
        query_times=tuple(query_times),
        inside_at=inside,
        norm_at=norm_at,
        tau=tau,
        exited=exited,
        n_jumps=n_jumps,
    )


def run_paths(
    config: SimConfig,
    query_times: Sequence[float] = (),
    workers: int = 1,
) -> PathBatch:
    """Simulate config.max_paths paths and reduce to per-path summaries.

    Fan-out is by path index, so the result is independent of the worker
    count; blocks are concatenated in index order.
    """
    qts = tuple(float(t) for t in query_times)
    total = config.max_paths
    if workers <= 1 or total < 4 * workers:
        return _run_block(config, 0, total, qts)
    bounds = np.linspace(0, total, workers + 1, dtype=int)
    blocks = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_run_block, config, int(a), int(b), qts)
            for a, b in zip(bounds[:-1], bounds[1:])
            if b > a
        ]
        blocks = [f.result() for f in futures]
    return PathBatch(
        query_times=qts,
        inside_at=np.concatenate([b.inside_at for b in blocks]),
        norm_at=np.concatenate([b.norm_at for b in blocks]),
        tau=np.concatenate([b.tau for b in blocks]),
        exited=np.concatenate([b.exited for b in blocks]),
        n_jumps=np.concatenate([b.n_jumps for b in blocks]),
    )


@dataclass(frozen=True)
class SurvivalEstimate:
    t: float
    estimate: float
    stderr: float
    n_paths: int


def survival_estimates(batch: PathBatch) -> list[SurvivalEstimate]:
    """Fraction of paths sitting in Z_p^n at each query time, with binomial
    standard errors; all times share the same underlying paths."""
    n = batch.inside_at.shape[0]
    out = []
    for col, t in enumerate(batch.query_times):
        phat = float(batch.inside_at[:, col].mean())
        out.append(
            SurvivalEstimate(
                t=t,
                estimate=phat,
                stderr=math.sqrt(max(phat * (1.0 - phat), 0.0) / n),
                n_paths=n,
            )
        )
    return out


def estimate_survival(
    config: SimConfig, times: Sequence[float], workers: int = 1
) -> list[SurvivalEstimate]:
    return survival_estimates(run_paths(config, times, workers=workers))


def fpt_cdf_estimate(batch: PathBatch, upto: float) -> tuple[float, float]:
    """(P(tau <= upto) estimate, binomial stderr) from a batch."""
    n = len(batch.tau)
    hits = float(np.sum(~np.isnan(batch.tau) & (batch.tau <= upto)))
    phat = hits / n
    return phat, math.sqrt(max(phat * (1.0 - phat), 0.0) / n)
