"""Statistical checks of Langevin output against the Gibbs measure.

The Gibbs measure ``exp(-beta H0)`` with ``H0 = Q(m, m)/2 + V(g)`` factorises
into a Gaussian in ``m`` and ``exp(-beta V)`` times Haar measure in ``g``;
:func:`gibbs_oracle_samples` draws from it exactly (rejection from Haar), so
Monte-Carlo comparisons have honest i.i.d. error bars.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from liesde.algebra import AlgebraDescriptor, Family, OrthonormalBasis
from liesde.group import group_defect_array, haar_samples
from liesde.langevin import TrajectoryRecord, Variant
from liesde.mechanics import (
    Hamiltonian,
    Observable,
    PhaseState,
    Potential,
    hamiltonian_vector_field,
    poisson_bracket_arrays,
)
from liesde.rng import RngStream

__all__ = [
    "MomentReport",
    "GibbsOracleConfig",
    "ConservationReport",
    "gibbs_oracle_sample",
    "gibbs_oracle_samples",
    "batch_means",
    "ergodic_average",
    "compare_to_oracle",
    "default_observables",
    "diffusion_hamiltonians",
    "generator_values",
    "generator_stationarity",
    "conservation_monitors",
    "spectrum_drift",
    "autocorrelation_ess",
    "DegenerateSeries",
]

Z_THRESHOLD = 3.0
ACCEPTANCE_WINDOW = 10_000


class DegenerateSeries(ValueError):
    """A constant series has no autocorrelation structure."""


@dataclass(frozen=True)
class MomentReport:
    name: str
    ergodic_mean: float
    ergodic_se: float
    oracle_mean: float
    oracle_se: float
    z: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _z_score(a: float, sa: float, b: float, sb: float) -> float:
    se = math.hypot(sa, sb)
    diff = abs(a - b)
    if se == 0:
        return 0.0 if diff == 0 else math.inf
    return diff / se


# -- Gibbs oracle ----------------------------------------------------------------------


@dataclass(frozen=True)
class GibbsOracleConfig:
    """Rejection sampler settings.

    ``lower_bound`` must satisfy ``V(g) >= lower_bound`` on the group; by
    default the potential's own bound is used. ``batch`` proposals are
    drawn per round.
    """

    beta: float
    potential: Potential
    n_samples: int = 100_000
    lower_bound: float | None = None
    batch: int = 8192
    max_proposals: int = 10**9

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.n_samples < 0:
            raise ValueError("n_samples must be non-negative")
        if self.bound is None:
            raise ValueError("potential has no known lower bound; pass lower_bound")

    @property
    def bound(self) -> float | None:
        return self.potential.lower if self.lower_bound is None else self.lower_bound


def gibbs_oracle_samples(rng: RngStream, cfg: GibbsOracleConfig, basis: OrthonormalBasis):
    """``cfg.n_samples`` exact Gibbs draws as arrays ``(g, m)``.

    ``g`` comes from Haar proposals accepted with probability
    ``exp(-beta (V(g) - bound))``; ``m = sum_i xi_i X_i / sqrt(beta)``.
    All group draws are made before the momentum draws.
    """
    d = basis.descriptor
    V = cfg.potential
    if not d.is_compact:
        raise ValueError(f"{d} is not compact; the Gibbs measure in g is not normalisable")
    if V.descriptor != d:
        raise ValueError("potential and basis disagree on the algebra")
    n = cfg.n_samples
    kept = []
    have = 0
    proposals = 0
    window_prop = window_acc = 0
    while have < n:
        gs = haar_samples(rng, d, cfg.batch)
        u = rng.uniform(cfg.batch)
        log_acc = -cfg.beta * (V.value_array(gs) - cfg.bound)
        if np.any(log_acc > 1e-9):
            raise ValueError("lower bound on V is violated; acceptance probability exceeds 1")
        ok = np.log(u) < log_acc
        kept.append(gs[ok])
        have += int(ok.sum())
        proposals += cfg.batch
        window_prop += cfg.batch
        window_acc += int(ok.sum())
        if window_prop >= ACCEPTANCE_WINDOW:
            if window_acc == 0:
                raise RuntimeError(f"no acceptances in {window_prop} proposals; the bound is far too loose")
            window_prop = window_acc = 0
        if proposals > cfg.max_proposals:
            raise RuntimeError("proposal budget exhausted")
    g = np.concatenate(kept)[:n] if kept else np.empty((0,) + d.element_shape, dtype=d.dtype)
    xi = rng.standard_normal((n, len(basis)))
    m = basis.combine(xi) / math.sqrt(cfg.beta)
    return g, m


def gibbs_oracle_sample(rng: RngStream, beta: float, V: Potential, descriptor: AlgebraDescriptor,
                        basis: OrthonormalBasis) -> PhaseState:
    """A single exact Gibbs draw."""
    if basis.descriptor != descriptor:
        raise ValueError("basis does not match descriptor")
    g, m = gibbs_oracle_samples(rng, GibbsOracleConfig(beta, V, 1, batch=256), basis)
    return PhaseState.from_arrays(g[0], m[0], descriptor)


# -- ergodic averages ----------------------------------------------------------------------


def batch_means(series) -> tuple[float, float]:
    """Mean and batch-means standard error with ``floor(sqrt(N))`` batches."""
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("empty series")
    mean = float(np.mean(x))
    nb = int(math.isqrt(n))
    if nb < 2:
        return mean, 0.0
    size = n // nb
    means = x[: nb * size].reshape(nb, size).mean(axis=1)
    return mean, float(np.std(means, ddof=1) / math.sqrt(nb))


def ergodic_average(traj: TrajectoryRecord, obs: Observable, burn_in_fraction: float = 0.2) -> tuple[float, float]:
    """Time average of ``obs`` after burn-in, with its batch-means standard error.

    A constant series returns standard error 0 and emits a warning.
    """
    tail = traj.tail(burn_in_fraction)
    if len(tail) == 0:
        raise ValueError("no samples left after burn-in")
    values = obs(tail.g, tail.m, traj.basis)
    mean, se = batch_means(values)
    if se == 0 and np.ptp(values) == 0:
        warnings.warn(f"observable {obs.name!r} is constant along the trajectory", stacklevel=2)
    return mean, se


def compare_to_oracle(trajs: TrajectoryRecord | Sequence[TrajectoryRecord], observables: Sequence[Observable],
                      oracle: tuple[np.ndarray, np.ndarray], burn_in_fraction: float = 0.2,
                      threshold: float = Z_THRESHOLD) -> list[MomentReport]:
    """Per-observable z-scores of ergodic averages against oracle samples.

    Several trajectories are pooled as the mean of their ergodic means with
    the standard errors combined in quadrature.
    """
    if isinstance(trajs, TrajectoryRecord):
        trajs = [trajs]
    if not trajs:
        raise ValueError("no trajectories")
    basis = trajs[0].basis
    og, om = oracle
    if len(og) == 0:
        raise ValueError("no oracle samples")
    reports = []
    for obs in observables:
        stats = [ergodic_average(t, obs, burn_in_fraction) for t in trajs]
        k = len(stats)
        mean = float(np.mean([s[0] for s in stats]))
        se = math.sqrt(sum(s[1] ** 2 for s in stats)) / k
        ov = obs(og, om, basis)
        o_mean = float(np.mean(ov))
        o_se = float(np.std(ov, ddof=1) / math.sqrt(len(ov))) if len(ov) > 1 else 0.0
        z = _z_score(mean, se, o_mean, o_se)
        reports.append(MomentReport(obs.name, mean, se, o_mean, o_se, z, bool(z <= threshold)))
    return reports


# -- observables -------------------------------------------------------------------------------


def default_observables(basis: OrthonormalBasis, A=None) -> list[Observable]:
    """The six-observable suite on a matrix group.

    ``Re tr g``, ``(Re tr g)^2``, ``Q(m, m)``, ``Q(m, X_1)``,
    ``Re tr(A^H g)`` and ``Re tr g * Q(m, m)``, all with analytic derivatives.
    """
    d = basis.descriptor
    if d.family is Family.RN:
        raise ValueError("the default suite needs a matrix group")
    n = d.ambient_size
    A = np.eye(n, dtype=d.dtype) if A is None else np.asarray(A, dtype=d.dtype)

    def zero(g, m, b):
        return np.zeros_like(m)

    def tr_value(g, m, b):
        return np.real(np.trace(g, axis1=-2, axis2=-1))

    def tr_grad(g, m, b):
        # d/de Re tr(g e^{eX}) = Re tr(g X) = Q(Pi(g^H), X) / scale
        return b.project(np.conj(np.swapaxes(g, -1, -2))) / b.scale

    trace = Observable(tr_value, dm=zero, dg_triv=tr_grad, name="tr_g")
    casimir = Observable(lambda g, m, b: b.pair(m, m), dm=lambda g, m, b: 2 * m, dg_triv=zero, name="Q(m,m)")
    x1 = basis.matrices[0]
    comp = Observable(lambda g, m, b: b.pair(m, x1), dm=lambda g, m, b: np.broadcast_to(x1, m.shape),
                      dg_triv=zero, name="Q(m,X_1)")
    trace_a = Observable(lambda g, m, b: np.real(np.einsum("ij,...ij->...", np.conj(A), g)),
                         dm=zero,
                         dg_triv=lambda g, m, b: b.project(np.conj(np.swapaxes(g, -1, -2)) @ A) / b.scale,
                         name="Re_tr(A^H g)")
    square = trace * trace
    square.name = "tr_g^2"
    mixed = trace * casimir
    mixed.name = "tr_g*Q(m,m)"
    return [trace, square, casimir, comp, trace_a, mixed]


def diffusion_hamiltonians(variant: Variant | str, gammas: tuple[float, float],
                           basis: OrthonormalBasis) -> list[Observable]:
    """Noise Hamiltonians ``H_i`` of a variant, linear in the Darboux coordinates.

    Momentum noise: ``H_i`` with zero m-gradient and constant trivialised
    g-gradient ``-sqrt(2 gamma1) X_i``, so ``X_{H_i}`` shifts ``m`` by
    ``sqrt(2 gamma1) X_i``. Only its derivatives are defined (it is locally
    Hamiltonian). Position noise: ``H_i = sqrt(2 gamma2) Q(m, X_i)``, whose
    vector field moves ``g`` along ``X_i`` and transports ``m``.
    """
    variant = Variant(variant)
    g1, g2 = gammas
    if variant is Variant.MOMENTUM:
        g2 = 0.0
    elif variant is Variant.POSITION:
        g1 = 0.0
    out = []

    def zero(g, m, b):
        return np.zeros_like(m)

    if g1 > 0:
        a = math.sqrt(2 * g1)
        for i, x in enumerate(basis.matrices):
            out.append(Observable(None, dm=zero, dg_triv=lambda g, m, b, x=x: np.broadcast_to(-a * x, m.shape),
                                  name=f"Hmom_{i + 1}"))
    if g2 > 0:
        a = math.sqrt(2 * g2)
        for i, x in enumerate(basis.matrices):
            out.append(Observable(lambda g, m, b, x=x: a * b.pair(m, x),
                                  dm=lambda g, m, b, x=x: np.broadcast_to(a * x, m.shape),
                                  dg_triv=zero, name=f"Hpos_{i + 1}"))
    return out


def _flow(g, m, vg, vm, eps, basis):
    return basis.left_translate(g, basis.exp(eps * vg)), m + eps * vm


def generator_values(F: Observable, H0: Observable, diffusion: Sequence[Observable], beta: float,
                     g, m, basis: OrthonormalBasis, drop_double_bracket: bool = False,
                     eps: float = 1e-4) -> np.ndarray:
    """``LF = {F, H0} - (beta/2) sum_i {H0, H_i}{F, H_i} + (1/2) sum_i X_{H_i}({F, H_i})``.

    This is the generator of the Stratonovich system driven by ``H0`` and
    the noise Hamiltonians; the middle (double-bracket) term is the
    dissipation that makes ``exp(-beta H0)`` invariant. The last term is a
    central difference of ``{F, H_i}`` along the flow of ``X_{H_i}``.
    """
    g = np.asarray(g)
    m = np.asarray(m)
    out = poisson_bracket_arrays(F, H0, g, m, basis)
    for H in diffusion:
        fh = poisson_bracket_arrays(F, H, g, m, basis)
        if not drop_double_bracket:
            out = out - 0.5 * beta * poisson_bracket_arrays(H0, H, g, m, basis) * fh
        vg, vm = hamiltonian_vector_field(H, g, m, basis)
        gp, mp = _flow(g, m, vg, vm, eps, basis)
        gm, mm_ = _flow(g, m, vg, vm, -eps, basis)
        deriv = (poisson_bracket_arrays(F, H, gp, mp, basis) - poisson_bracket_arrays(F, H, gm, mm_, basis)) / (2 * eps)
        out = out + 0.5 * deriv
    return out


@dataclass(frozen=True)
class GeneratorReport:
    name: str
    mean: float
    se: float
    z: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def generator_stationarity(variant: Variant | str, beta: float, gammas: tuple[float, float], V: Potential,
                           observables: Iterable[Observable], oracle: tuple[np.ndarray, np.ndarray],
                           basis: OrthonormalBasis, drop_double_bracket: bool = False,
                           threshold: float = Z_THRESHOLD) -> list[GeneratorReport]:
    """Monte-Carlo test of ``E_Gibbs[LF] = 0`` for each observable."""
    H0 = Hamiltonian(V).observable()
    diffusion = diffusion_hamiltonians(variant, gammas, basis)
    g, m = oracle
    reports = []
    for F in observables:
        vals = generator_values(F, H0, diffusion, beta, g, m, basis, drop_double_bracket)
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
        z = _z_score(mean, se, 0.0, 0.0)
        reports.append(GeneratorReport(F.name, mean, se, z, bool(z <= threshold)))
    return reports


# -- conservation ------------------------------------------------------------------------


def spectrum_drift(ms) -> np.ndarray:
    """``max_i |lambda_i(t) - lambda_i(0)|`` per sample, eigenvalues sorted."""
    ms = np.asarray(ms)
    # i m is Hermitian for skew-Hermitian m; eigvalsh returns sorted reals
    ev = np.linalg.eigvalsh(1j * ms)
    return np.max(np.abs(ev - ev[0]), axis=-1)


DEFAULT_THRESHOLDS = {
    "energy_drift": math.inf,
    "casimir_drift": math.inf,
    "spectrum_drift": math.inf,
    "defect": 1e-9,
}


@dataclass
class ConservationReport:
    energy_drift_max: float
    energy_drift_final: float
    casimir_drift_max: float
    casimir_drift_final: float
    spectrum_drift_max: float
    spectrum_drift_final: float
    defect_max: float
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))

    @property
    def violations(self) -> list[str]:
        got = {
            "energy_drift": self.energy_drift_max,
            "casimir_drift": self.casimir_drift_max,
            "spectrum_drift": self.spectrum_drift_max,
            "defect": self.defect_max,
        }
        return [k for k, v in got.items() if v > self.thresholds.get(k, math.inf)]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        out = asdict(self)
        out["thresholds"] = {k: (None if math.isinf(v) else v) for k, v in self.thresholds.items()}
        out["violations"] = self.violations
        out["passed"] = self.passed
        return out


def conservation_monitors(traj: TrajectoryRecord, hamiltonian: Hamiltonian | None = None,
                          thresholds: dict | None = None) -> ConservationReport:
    """Energy, Casimir, spectrum and group-defect drift along a record.

    The energy is ``traj.energy`` unless a ``hamiltonian`` (e.g. with an
    inertia operator) is given. Thresholds default to reporting only, except
    the group defect (1e-9).
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    basis = traj.basis
    energy = traj.energy if hamiltonian is None else hamiltonian.energy_array(traj.g, traj.m, basis)
    de = np.abs(energy - energy[0])
    dc = np.abs(traj.casimir - traj.casimir[0])
    if basis.abelian:
        ds = np.zeros(len(traj))
    else:
        ds = spectrum_drift(traj.m)
    th = dict(DEFAULT_THRESHOLDS)
    th.update(thresholds or {})
    return ConservationReport(float(de.max()), float(de[-1]), float(dc.max()), float(dc[-1]),
                              float(ds.max()), float(ds[-1]), float(np.max(traj.defect)), th)


# -- autocorrelation -------------------------------------------------------------------------------


def _autocorrelation(x: np.ndarray) -> np.ndarray:
    n = x.size
    y = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(y, size)
    acf = np.fft.irfft(f * np.conj(f), size)[:n]
    return acf / acf[0]


def autocorrelation_ess(series) -> tuple[float, float]:
    """Integrated autocorrelation time ``tau = sum_{k>=1} rho_k`` and ``ESS = N/(2 tau + 1)``.

    The sum is truncated by Geyer's initial positive sequence: pairs
    ``rho_{2k} + rho_{2k+1}`` are summed while positive.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 4:
        raise ValueError("series too short for autocorrelation analysis")
    if np.ptp(x) == 0:
        raise DegenerateSeries("constant series")
    rho = _autocorrelation(x)
    total = 0.0
    for k in range(0, x.size - 1, 2):
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        total += pair
    tau = total - 1.0
    return float(tau), float(x.size / (2 * tau + 1))
