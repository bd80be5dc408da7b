"""Langevin diffusions with double-bracket dissipation on reductive groups.

Three noise placements share one integrator:

* momentum: friction and additive noise on ``m`` (kinetic Langevin),
* position: noise on ``g`` (a Riemannian Brownian motion) with the matching
  transport of ``m`` and a gradient drift on ``g``,
* symplectic: both, with independent driving noises.

For ``H0 = Q(m, m)/2 + V(g)`` the Stratonovich system is

    dg = g ((m - b g2 gradV) dt + sqrt(2 g2) X_i o dW^i)
    dm = (-gradV - b g1 m + b g2 [gradV, m]) dt
         + sqrt(2 g1) X_i dW~^i + sqrt(2 g2) [m, X_i] o dW^i

with ``b = beta`` and friction ``g1`` (momentum noise), ``g2`` (position
noise). The position-noise part moves ``(g, m) <- (g e^B, e^{-B} m e^B)``
along ``dB = -b g2 gradV dt + sqrt(2 g2) X_i o dW^i``. Each step is

    B(h/2)  A(h/2)  O(h)  P(h)  A(h/2)  B(h/2)

with B the potential kick, A the geodesic move ``g <- g e^{(h/2) m}``, O the
exact Ornstein-Uhlenbeck update of ``m`` and P a Stratonovich Heun step in
``B`` followed by one exponential. ``g2 = 0`` gives BAOAB. The variants are
parameter choices of one code path, so the reductions are bitwise.

Every step draws ``2d`` standard normals: the ``W`` block (position noise)
then the ``W~`` block (momentum noise), whether or not both are used.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from liesde import _kernels
from liesde.algebra import AlgebraDescriptor, AlgebraElement, Family, OrthonormalBasis, build_basis
from liesde.group import GroupElement, group_defect_array, identity
from liesde.mechanics import PhaseState, Potential
from liesde.rng import RngStream

__all__ = [
    "Variant",
    "LangevinConfig",
    "TrajectoryRecord",
    "momentum_langevin_step",
    "position_langevin_step",
    "symplectic_langevin_step",
    "langevin_step",
    "simulate",
    "simulate_ensemble",
]

NOISE_BLOCK = 4096


class Variant(str, enum.Enum):
    MOMENTUM = "momentum"
    POSITION = "position"
    SYMPLECTIC = "symplectic"


@dataclass(frozen=True)
class LangevinConfig:
    """Parameters of a Langevin run.

    ``gamma`` is the friction of the momentum and position variants; the
    symplectic variant reads ``gamma1`` (momentum noise) and ``gamma2``
    (position noise), each defaulting to ``gamma``.
    """

    variant: Variant = Variant.MOMENTUM
    beta: float = 1.0
    gamma: float = 1.0
    gamma1: float | None = None
    gamma2: float | None = None
    h: float = 1e-3
    T: float = 10.0
    seed: int = 0
    stream_id: int = 0
    record_every: int = 10
    reproject_every: int = 100

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta}")
        for name in ("gamma", "gamma1", "gamma2"):
            v = getattr(self, name)
            if v is not None and not (v >= 0 and np.isfinite(v)):
                raise ValueError(f"{name} must be non-negative, got {v}")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"h must be positive, got {self.h}")
        if not (self.T >= 0 and np.isfinite(self.T)):
            raise ValueError(f"T must be non-negative, got {self.T}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")
        if int(self.reproject_every) != self.reproject_every or self.reproject_every < 0:
            raise ValueError(f"reproject_every must be a non-negative integer, got {self.reproject_every}")
        n = round(self.T / self.h)
        if abs(n * self.h - self.T) > 1e-9 * max(1.0, self.T):
            raise ValueError(f"T={self.T} is not a multiple of h={self.h}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.h))

    def gammas(self) -> tuple[float, float]:
        """``(gamma1, gamma2)``: momentum-noise and position-noise frictions."""
        if self.variant is Variant.MOMENTUM:
            return float(self.gamma), 0.0
        if self.variant is Variant.POSITION:
            return 0.0, float(self.gamma)
        g1 = self.gamma if self.gamma1 is None else self.gamma1
        g2 = self.gamma if self.gamma2 is None else self.gamma2
        return float(g1), float(g2)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["variant"] = self.variant.value
        return out


@dataclass(eq=False)
class TrajectoryRecord:
    """Recorded states of one run, the initial state included.

    ``g`` has shape ``(N, n, n)`` (``(N, n)`` on R^n), ``m`` the matching
    algebra arrays and ``m_coefficients`` shape ``(N, d)``.
    """

    times: np.ndarray
    g: np.ndarray
    m: np.ndarray
    basis: OrthonormalBasis = field(repr=False)
    potential: Potential = field(repr=False)
    config: LangevinConfig | None = None
    m_coefficients: np.ndarray = field(init=False, repr=False)
    energy: np.ndarray = field(init=False, repr=False)
    casimir: np.ndarray = field(init=False, repr=False)
    defect: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = self.basis
        self.m_coefficients = b.coefficients(self.m)
        self.casimir = b.pair(self.m, self.m)
        self.energy = 0.5 * self.casimir + self.potential.value_array(self.g)
        if b.abelian:
            self.defect = np.zeros(len(self.times))
        else:
            self.defect = np.array([group_defect_array(x, b.descriptor) for x in self.g])

    def __len__(self) -> int:
        return len(self.times)

    @property
    def descriptor(self) -> AlgebraDescriptor:
        return self.basis.descriptor

    def state(self, i: int) -> PhaseState:
        return PhaseState.from_arrays(self.g[i], self.m[i], self.descriptor)

    def tail(self, burn_in_fraction: float) -> "TrajectoryRecord":
        """Record with the first ``burn_in_fraction`` of samples dropped."""
        if not 0 <= burn_in_fraction < 1:
            raise ValueError("burn_in_fraction must lie in [0, 1)")
        start = int(np.ceil(burn_in_fraction * len(self)))
        return TrajectoryRecord(self.times[start:], self.g[start:], self.m[start:],
                                self.basis, self.potential, self.config)


# -- single steps ----------------------------------------------------------------------


def _prepare(s: PhaseState, V: Potential, basis: OrthonormalBasis | None):
    if basis is None:
        basis = build_basis(s.descriptor)
    if V.descriptor != s.descriptor or basis.descriptor != s.descriptor:
        raise ValueError(f"state, potential and basis disagree on the algebra ({s.descriptor})")
    return basis


def _advance(g, m, z, h, beta, g1, g2, V: Potential, basis: OrthonormalBasis):
    kind, A, gradient = V._kernel(basis)
    fn = _kernels.euclid_step if basis.abelian else _kernels.langevin_step
    if gradient is not None:
        fn = _kernels.python_kernel(fn, gradient)
    if basis.abelian:
        return fn(g, m, z[0], z[1], h, beta, g1, g2, basis.scale, kind, A)
    traceless = basis.descriptor.family is Family.SU
    return fn(g, m, z[0], z[1], h, beta, g1, g2, basis.matrices, basis.scale, traceless, kind, A)


def langevin_step(s: PhaseState, cfg: LangevinConfig, V: Potential, rng: RngStream,
                  basis: OrthonormalBasis | None = None, gammas: tuple[float, float] | None = None) -> PhaseState:
    """One step of the configured variant (or explicit ``gammas``); consumes ``2d`` normals."""
    basis = _prepare(s, V, basis)
    g1, g2 = cfg.gammas() if gammas is None else gammas
    z = rng.standard_normal((2, len(basis)))
    g, m = _advance(np.ascontiguousarray(s.g.matrix), np.ascontiguousarray(s.m.matrix), z,
                    float(cfg.h), float(cfg.beta), g1, g2, V, basis)
    d = s.descriptor
    return PhaseState(GroupElement(g, d), AlgebraElement(basis.project(m), d))


def momentum_langevin_step(s, cfg, V, rng, basis=None) -> PhaseState:
    """BAOAB step: kick, half geodesic, exact OU on ``m``, half geodesic, kick."""
    return langevin_step(s, cfg, V, rng, basis, gammas=(float(cfg.gamma), 0.0))


def position_langevin_step(s, cfg, V, rng, basis=None) -> PhaseState:
    """Kick, half geodesic, position-noise Heun update, half geodesic, kick.

    The same increments drive ``g`` and the transport of ``m``.
    """
    return langevin_step(s, cfg, V, rng, basis, gammas=(0.0, float(cfg.gamma)))


def symplectic_langevin_step(s, cfg, V, rng, basis=None) -> PhaseState:
    """Both noises; ``gamma1 = 0`` and ``gamma2 = 0`` reduce bitwise to the other variants."""
    g1 = cfg.gamma if cfg.gamma1 is None else cfg.gamma1
    g2 = cfg.gamma if cfg.gamma2 is None else cfg.gamma2
    return langevin_step(s, cfg, V, rng, basis, gammas=(float(g1), float(g2)))


# -- whole trajectories ----------------------------------------------------------------------


def _run_python(g, m, noise, cfg, g1, g2, V, basis, step0, g_out, m_out, n_out):
    traceless = basis.descriptor.family is Family.SU
    for s in range(noise.shape[0]):
        g, m = _advance(g, m, noise[s], cfg.h, cfg.beta, g1, g2, V, basis)
        k = step0 + s + 1
        if not basis.abelian and cfg.reproject_every and k % cfg.reproject_every == 0:
            g = _kernels.reproject_group(g, traceless)
            m = _kernels.project_skew(m, traceless)
        if k % cfg.record_every == 0:
            g_out[n_out] = g
            m_out[n_out] = m
            n_out += 1
    return g, m, n_out


def simulate(cfg: LangevinConfig, descriptor: AlgebraDescriptor, V: Potential,
             g0: GroupElement | None = None, m0: AlgebraElement | None = None,
             basis: OrthonormalBasis | None = None, stream_id: int | None = None) -> TrajectoryRecord:
    """Run one trajectory from ``(g0, m0)`` (default identity and zero).

    Uses stream ``(cfg.seed, cfg.stream_id)`` unless ``stream_id`` is given.
    """
    if basis is None:
        basis = build_basis(descriptor)
    g0 = identity(descriptor) if g0 is None else g0
    m0 = AlgebraElement.zero(descriptor) if m0 is None else m0
    s0 = PhaseState(g0, m0)
    _prepare(s0, V, basis)
    rng = RngStream(cfg.seed, cfg.stream_id if stream_id is None else stream_id)
    g1, g2 = cfg.gammas()
    n = cfg.n_steps
    n_rec = n // cfg.record_every
    dtype = basis.matrices.dtype
    gs = np.empty((n_rec + 1,) + g0.matrix.shape, dtype=dtype)
    ms = np.empty((n_rec + 1,) + m0.matrix.shape, dtype=dtype)
    gs[0], ms[0] = g0.matrix, m0.matrix
    g = np.ascontiguousarray(g0.matrix, dtype=dtype)
    m = np.ascontiguousarray(m0.matrix, dtype=dtype)
    kind, A, gradient = V._kernel(basis)
    traceless = descriptor.family is Family.SU
    d = len(basis)
    n_out = 1
    for start in range(0, n, NOISE_BLOCK):
        noise = rng.standard_normal((min(NOISE_BLOCK, n - start), 2, d))
        if gradient is not None:
            g, m, n_out = _run_python(g, m, noise, cfg, g1, g2, V, basis, start, gs, ms, n_out)
        elif basis.abelian:
            g, m, n_out = _kernels.euclid_run(g, m, noise, cfg.h, cfg.beta, g1, g2, basis.scale,
                                              kind, A, cfg.record_every, start, gs, ms, n_out)
        else:
            g, m, n_out = _kernels.langevin_run(g, m, noise, cfg.h, cfg.beta, g1, g2, basis.matrices,
                                                basis.scale, traceless, kind, A, cfg.record_every,
                                                cfg.reproject_every, start, gs, ms, n_out)
    times = cfg.h * cfg.record_every * np.arange(n_rec + 1)
    return TrajectoryRecord(times, gs, ms, basis, V, cfg)


def simulate_ensemble(cfg: LangevinConfig, descriptor: AlgebraDescriptor, V: Potential,
                      inits: Sequence[tuple[GroupElement, AlgebraElement]] | None = None,
                      n_traj: int = 1, workers: int = 1,
                      basis: OrthonormalBasis | None = None) -> list[TrajectoryRecord]:
    """``n_traj`` independent runs; run ``i`` uses stream ``cfg.stream_id + i``.

    ``inits`` gives one ``(g0, m0)`` per run, or is ``None`` for the
    defaults. Results are ordered by index and do not depend on ``workers``.
    """
    if basis is None:
        basis = build_basis(descriptor)
    if inits is not None and len(inits) != n_traj:
        raise ValueError(f"got {len(inits)} initial states for {n_traj} trajectories")

    def one(i):
        g0, m0 = (None, None) if inits is None else inits[i]
        return simulate(cfg, descriptor, V, g0, m0, basis, stream_id=cfg.stream_id + i)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(n_traj)))
    return [one(i) for i in range(n_traj)]


def with_variant(cfg: LangevinConfig, variant: Variant | str, **changes) -> LangevinConfig:
    """Copy of ``cfg`` with another variant (and any other field changes)."""
    return replace(cfg, variant=Variant(variant), **changes)
