"""Metropolis sampling of the hard-disk log-gas Gibbs measure.

Target density on the disk of area N is proportional to exp(-beta F_N); moves
are single-particle Gaussian proposals, proposals outside the disk are
rejected (hard wall). Randomness comes from a counter-based generator keyed
on (master seed, chain index), so chains are reproducible and independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import metropolis_block
from .core import DiskDomain, PointConfig, system_domain
from .energy import interaction_energy

RESYNC_INTERVAL = 100_000
TARGET_ACCEPT = 0.35
BLOCK = 16_384


def chain_rng(seed: int, chain_index: int = 0) -> np.random.Generator:
    """Counter-based stream for one chain, independent across chain indices."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(seed), int(chain_index)]))
    )


@dataclass
class ChainPlan:
    n: int
    beta: float
    seed: int
    burn_in: int | None = None
    thinning: int = 1
    n_chains: int = 1
    proposal_scale: float | None = None
    adapt: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need n >= 1")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if self.burn_in is None:
            # empirical default, scales with system size
            self.burn_in = 1000 * self.n
        if self.proposal_scale is None:
            # around one interparticle distance; adapted during burn-in
            self.proposal_scale = 1.0 if self.beta > 0 else system_domain(self.n).radius


@dataclass
class ChainState:
    points: np.ndarray
    domain: DiskDomain
    beta: float
    rng: np.random.Generator
    proposal_scale: float
    cached_energy: float
    step_count: int = 0
    accept_count: int = 0
    resync_drift: float = 0.0

    @property
    def config(self) -> PointConfig:
        return PointConfig(self.points.copy())

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / max(self.step_count, 1)


def initial_config(n: int, seed: int = 0) -> PointConfig:
    """Perturbed triangular lattice clipped to the confinement disk."""
    dom = system_domain(n)
    if n == 1:
        return PointConfig([[0.0, 0.0]])
    rng = chain_rng(seed, chain_index=2**31)
    a = math.sqrt(2.0 / math.sqrt(3.0))  # unit-density triangular lattice spacing
    k = int(math.ceil(dom.radius / a)) + 2
    ii, jj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1))
    xs = a * (ii + 0.5 * (jj % 2)).ravel()
    ys = a * (math.sqrt(3.0) / 2.0) * jj.ravel()
    pts = np.column_stack((xs, ys))
    order = np.argsort(np.einsum("ij,ij->i", pts, pts), kind="stable")
    pts = pts[order[:n]]
    pts = pts + 0.05 * a * rng.standard_normal(pts.shape)
    # anything jittered out of the disk gets resampled uniformly inside
    bad = ~dom.contains(pts)
    while np.any(bad):
        pts[bad] = dom.sample_uniform(int(np.count_nonzero(bad)), rng)
        bad = ~dom.contains(pts)
    return PointConfig(pts)


def make_state(plan: ChainPlan, chain_index: int = 0) -> ChainState:
    cfg = initial_config(plan.n, plan.seed)
    dom = system_domain(plan.n)
    return ChainState(
        points=cfg.points.copy(),
        domain=dom,
        beta=plan.beta,
        rng=chain_rng(plan.seed, chain_index),
        proposal_scale=plan.proposal_scale,
        cached_energy=interaction_energy(cfg, dom).total,
    )


def advance(state: ChainState, n_steps: int, adapt: bool = False) -> ChainState:
    """Run n_steps Metropolis updates in place; optionally adapt the scale."""
    done = 0
    # smaller blocks while adapting, so the scale gets enough feedback rounds
    max_block = 2048 if adapt else BLOCK
    while done < n_steps:
        block = min(max_block, n_steps - done)
        idx = state.rng.integers(0, len(state.points), size=block)
        normals = state.rng.standard_normal((block, 2))
        unif = state.rng.random(block)
        acc, dsum = metropolis_block(
            state.points,
            state.domain.radius,
            state.beta,
            state.proposal_scale,
            idx,
            normals,
            unif,
        )
        state.cached_energy += dsum
        state.accept_count += acc
        before = state.step_count
        state.step_count += block
        done += block
        if adapt and block > 0:
            rate = acc / block
            state.proposal_scale *= math.exp(0.5 * (rate - TARGET_ACCEPT))
        if before // RESYNC_INTERVAL != state.step_count // RESYNC_INTERVAL:
            resync_energy(state)
    return state


def resync_energy(state: ChainState) -> None:
    exact = interaction_energy(PointConfig(state.points.copy()), state.domain).total
    denom = max(abs(exact), 1.0)
    state.resync_drift = max(state.resync_drift, abs(state.cached_energy - exact) / denom)
    state.cached_energy = exact


def mcmc_step(state: ChainState) -> ChainState:
    """One Metropolis update (convenience wrapper around the block kernel)."""
    return advance(state, 1)


def equilibrated_state(plan: ChainPlan, chain_index: int = 0) -> ChainState:
    """Fresh chain state after burn-in, with sampling-phase counters zeroed.

    The proposal scale adapts toward 35% acceptance during burn-in only and
    is frozen afterward, so the sampling phase satisfies detailed balance.
    """
    state = make_state(plan, chain_index)
    if plan.burn_in:
        advance(state, plan.burn_in, adapt=plan.adapt)
    state.accept_count = 0
    state.step_count = 0
    return state


def run_chain(plan: ChainPlan, n_samples: int, chain_index: int = 0):
    """Yield thinned post-burn-in configurations as (step, points) pairs."""
    state = equilibrated_state(plan, chain_index)
    for _ in range(n_samples):
        advance(state, plan.thinning)
        yield state.step_count, state.points.copy()


def collect_samples(plan: ChainPlan, n_samples: int, chain_index: int = 0):
    """Materialize a sampling run as an (n_samples, n, 2) array plus its state."""
    state = equilibrated_state(plan, chain_index)
    samples = np.empty((n_samples, plan.n, 2))
    for k in range(n_samples):
        advance(state, plan.thinning)
        samples[k] = state.points
    resync_energy(state)
    return samples, state
