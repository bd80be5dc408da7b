"""Hamiltonian mechanics on ``T*G = G x g*`` in left-trivialised coordinates.

Momenta are stored as algebra elements through the metric ``Q``. The
Poisson bracket used throughout is

    {F, G} = -Q(m, [F_m, G_m]) + Q(G_m, F_g) - Q(F_m, G_g)

with ``F_m`` the Q-gradient in ``m`` and ``F_g`` the left-trivialised
gradient in ``g``. Hamilton's equations ``dF/dt = {F, H}`` then read

    dg = g xi,   dm = [m, xi] - H_g,   xi = H_m,

so the coadjoint action is ``ad*_xi m = [m, xi]``; with ``xi = I^{-1} m``
on so(3) this is Euler's rigid-body equation.

Array-level helpers accept leading batch axes: ``g`` of shape
``(..., n, n)`` (``(..., n)`` on R^n) and ``m`` of the algebra shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from liesde import _kernels
from liesde.algebra import (
    AlgebraDescriptor,
    AlgebraElement,
    DescriptorMismatch,
    Family,
    OrthonormalBasis,
    build_basis,
)
from liesde.group import GroupElement, group_defect_array

__all__ = [
    "PhaseState",
    "Potential",
    "InertiaOperator",
    "Hamiltonian",
    "Observable",
    "total_energy",
    "left_trivialized_gradient",
    "poisson_bracket",
    "poisson_bracket_arrays",
    "bracket_observable",
    "hamiltonian_drift",
    "hamiltonian_vector_field",
    "symplectic_drift_step",
    "symplectic_drift_path",
    "lie_poisson_step",
    "lie_poisson_path",
    "fd_derivatives",
]

FD_STEP = 1e-6
MIDPOINT_TOL = 1e-15
MIDPOINT_MAX_ITER = 100

ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class PhaseState:
    """A point ``(g, m)`` of the trivialised cotangent bundle."""

    g: GroupElement
    m: AlgebraElement

    def __post_init__(self):
        if self.g.descriptor != self.m.descriptor:
            raise DescriptorMismatch(f"{self.g.descriptor} vs {self.m.descriptor}")

    @property
    def descriptor(self) -> AlgebraDescriptor:
        return self.g.descriptor

    @classmethod
    def from_arrays(cls, g, m, descriptor: AlgebraDescriptor, check: bool = True) -> "PhaseState":
        return cls(GroupElement(g, descriptor, check=check), AlgebraElement(m, descriptor))


def _basis_for(descriptor: AlgebraDescriptor, basis: OrthonormalBasis | None) -> OrthonormalBasis:
    if basis is None:
        return build_basis(descriptor)
    if basis.descriptor != descriptor:
        raise DescriptorMismatch(f"{descriptor} vs {basis.descriptor}")
    return basis


# -- potentials ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Potential:
    """Potential energy ``V(g)``.

    Use the constructors :meth:`zero`, :meth:`trace`, :meth:`quadratic` and
    :meth:`custom` rather than the raw fields.
    """

    kind: str
    descriptor: AlgebraDescriptor
    A: np.ndarray | None = None
    k: np.ndarray | None = None
    fn: Callable[[np.ndarray], float] | None = None
    grad_fn: Callable[[np.ndarray], np.ndarray] | None = None
    lower: float | None = None

    @classmethod
    def zero(cls, descriptor: AlgebraDescriptor) -> "Potential":
        return cls("zero", descriptor, lower=0.0)

    @classmethod
    def trace(cls, A, descriptor: AlgebraDescriptor) -> "Potential":
        """``V(g) = -Re tr(A^H g)`` on SO(n) or SU(n)."""
        if descriptor.family is Family.RN:
            raise ValueError("trace potentials need a matrix group")
        n = descriptor.ambient_size
        A = np.array(A, dtype=descriptor.dtype)
        if A.shape != (n, n) or not np.all(np.isfinite(A)):
            raise ValueError(f"trace potential matrix must be a finite {n}x{n} array")
        A.setflags(write=False)
        # Re tr(A^H g) <= sum of singular values of A for unitary g
        lower = -float(np.sum(np.linalg.svd(A, compute_uv=False)))
        return cls("trace", descriptor, A=A, lower=lower)

    @classmethod
    def quadratic(cls, k, descriptor: AlgebraDescriptor) -> "Potential":
        """``V(q) = sum_i k_i q_i^2 / 2`` on R^n."""
        if descriptor.family is not Family.RN:
            raise ValueError("quadratic potentials live on R^n")
        k = np.broadcast_to(np.asarray(k, dtype=float), (descriptor.ambient_size,)).copy()
        if np.any(k <= 0) or not np.all(np.isfinite(k)):
            raise ValueError("quadratic stiffnesses must be positive")
        k.setflags(write=False)
        return cls("quadratic", descriptor, k=k, lower=0.0)

    @classmethod
    def custom(cls, descriptor, value, gradient=None, lower_bound=None) -> "Potential":
        """User potential from a callback ``value(g_matrix) -> float``.

        ``gradient(g_matrix)`` should return the left-trivialised gradient as
        an algebra array; without it central differences are used.
        ``lower_bound`` enables the Gibbs rejection sampler.
        """
        return cls("custom", descriptor, fn=value, grad_fn=gradient, lower=lower_bound)

    def value_array(self, g) -> np.ndarray:
        g = np.asarray(g)
        batch = g.shape[: g.ndim - self.descriptor.element_ndim]
        if self.kind == "zero":
            return np.zeros(batch)
        if self.kind == "trace":
            return -np.real(np.einsum("ij,...ij->...", np.conj(self.A), g))
        if self.kind == "quadratic":
            return 0.5 * np.sum(self.k * g * g, axis=-1)
        flat = g.reshape((-1,) + self.descriptor.element_shape)
        return np.array([float(self.fn(x)) for x in flat]).reshape(batch)

    def gradient_array(self, g, basis: OrthonormalBasis) -> np.ndarray:
        g = np.asarray(g)
        if self.kind == "zero":
            return np.zeros(g.shape, dtype=basis.matrices.dtype)
        if self.kind == "trace":
            return -basis.project(np.conj(np.swapaxes(g, -1, -2)) @ self.A) / basis.scale
        if self.kind == "quadratic":
            return self.k * g / basis.scale
        if self.grad_fn is not None:
            flat = g.reshape((-1,) + self.descriptor.element_shape)
            out = np.array([np.asarray(self.grad_fn(x)) for x in flat])
            return out.reshape(g.shape).astype(basis.matrices.dtype)
        return _fd_group_gradient(self.value_array, g, basis, FD_STEP)

    def __call__(self, g: GroupElement) -> float:
        return float(self.value_array(g.matrix))

    def _kernel(self, basis: OrthonormalBasis):
        """(kind code, parameter array, Python gradient or None) for the step kernels.

        A ``None`` gradient means the compiled kernels handle this kind.
        """
        # placeholder parameters keep the compiled signature uniform across kinds
        blank = np.zeros(self.descriptor.element_shape, dtype=basis.matrices.dtype)
        if self.kind == "zero":
            return _kernels.ZERO, blank, None
        if self.kind == "trace":
            return _kernels.TRACE, np.ascontiguousarray(self.A), None
        if self.kind == "quadratic":
            return _kernels.QUADRATIC, np.ascontiguousarray(self.k), None

        def gradient(kind, g, *rest):
            return self.gradient_array(g, basis)

        return _kernels.CUSTOM, blank, gradient


def _fd_group_gradient(value: Callable, g: np.ndarray, basis: OrthonormalBasis, eps: float) -> np.ndarray:
    out = np.zeros(g.shape, dtype=basis.matrices.dtype)
    for x in basis.matrices:
        if basis.abelian:
            plus, minus = g + eps * x, g - eps * x
        else:
            plus, minus = g @ basis.exp(eps * x), g @ basis.exp(-eps * x)
        slope = (value(plus) - value(minus)) / (2 * eps)
        out = out + np.multiply.outer(slope, x)
    return out


def left_trivialized_gradient(V: Potential, g: GroupElement, basis: OrthonormalBasis | None = None) -> AlgebraElement:
    """``grad V(g)`` with ``Q(grad V, X) = d/de V(g exp(eX))`` at ``e = 0``."""
    basis = _basis_for(g.descriptor, basis)
    return AlgebraElement(V.gradient_array(g.matrix, basis), g.descriptor)


# -- kinetic energy ---------------------------------------------------------------------


@dataclass(frozen=True)
class InertiaOperator:
    """Diagonal inertia ``I_1..I_d`` in the orthonormal basis; ``Omega_i = m_i / I_i``."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        if not c or any(not (x > 0 and np.isfinite(x)) for x in c):
            raise ValueError("inertia coefficients must be positive and finite")
        object.__setattr__(self, "coefficients", c)

    @property
    def inverse(self) -> np.ndarray:
        return 1.0 / np.array(self.coefficients)

    def apply_inverse(self, m, basis: OrthonormalBasis) -> np.ndarray:
        if len(self.coefficients) != len(basis):
            raise ValueError(f"inertia has {len(self.coefficients)} entries, algebra dimension is {len(basis)}")
        return basis.combine(basis.coefficients(m) * self.inverse)


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Separable Hamiltonian ``Q(m, I^{-1} m)/2 + V(g)``; ``inertia=None`` is bi-invariant."""

    potential: Potential
    inertia: InertiaOperator | None = None

    @property
    def descriptor(self) -> AlgebraDescriptor:
        return self.potential.descriptor

    @property
    def biinvariant(self) -> bool:
        return self.inertia is None

    def velocity(self, m, basis: OrthonormalBasis) -> np.ndarray:
        """``xi = H_m = I^{-1} m``."""
        m = np.asarray(m)
        return m.copy() if self.inertia is None else self.inertia.apply_inverse(m, basis)

    def energy_array(self, g, m, basis: OrthonormalBasis) -> np.ndarray:
        return 0.5 * basis.pair(m, self.velocity(m, basis)) + self.potential.value_array(g)

    def observable(self) -> "Observable":
        H = self
        return Observable(
            lambda g, m, b: H.energy_array(g, m, b),
            dm=lambda g, m, b: H.velocity(m, b),
            dg_triv=lambda g, m, b: H.potential.gradient_array(g, b),
            name="H0",
        )

    def _inv_inertia(self, basis: OrthonormalBasis) -> np.ndarray:
        return np.ones(len(basis)) if self.inertia is None else self.inertia.inverse


def total_energy(H: Hamiltonian, s: PhaseState, basis: OrthonormalBasis | None = None) -> float:
    basis = _basis_for(s.descriptor, basis)
    return float(H.energy_array(s.g.matrix, s.m.matrix, basis))


# -- observables ---------------------------------------------------------------------------


class Observable:
    """Real function ``F(g, m)`` with its variational derivatives.

    ``value``, ``dm`` and ``dg_triv`` are callables ``(g, m, basis)`` acting
    on batched arrays. ``dm`` returns the Q-gradient in ``m``; ``dg_triv``
    the left-trivialised gradient in ``g``. A missing derivative falls back
    to central differences with step ``fd_step``. ``value`` may be ``None``
    for "formal" observables that are only known through their derivatives
    (locally Hamiltonian noise fields).

    Sums, products and scalar multiples combine derivatives by linearity
    and the Leibniz rule.
    """

    def __init__(self, value=None, dm=None, dg_triv=None, name: str = "F", fd_step: float = FD_STEP):
        self._value = value
        self._dm = dm
        self._dg = dg_triv
        self.name = name
        self.fd_step = fd_step

    def __repr__(self) -> str:
        return f"Observable({self.name!r})"

    def __call__(self, g, m, basis: OrthonormalBasis) -> np.ndarray:
        if self._value is None:
            raise ValueError(f"observable {self.name!r} has no value, only derivatives")
        return np.asarray(self._value(g, m, basis), dtype=float)

    def at(self, s: PhaseState, basis: OrthonormalBasis | None = None) -> float:
        """Value at a single phase-space state."""
        return float(self(s.g.matrix, s.m.matrix, _basis_for(s.descriptor, basis)))

    @property
    def has_value(self) -> bool:
        return self._value is not None

    def derivatives(self, g, m, basis: OrthonormalBasis) -> tuple[np.ndarray, np.ndarray]:
        g = np.asarray(g)
        m = np.asarray(m)
        if self._dm is not None:
            dm = np.broadcast_to(self._dm(g, m, basis), m.shape)
        else:
            dm = _fd_algebra_gradient(lambda mm_: self(g, mm_, basis), m, basis, self.fd_step)
        if self._dg is not None:
            dg = np.broadcast_to(self._dg(g, m, basis), m.shape)
        else:
            dg = _fd_group_gradient(lambda gg: self(gg, m, basis), g, basis, self.fd_step)
        return dm, dg

    # -- combinators --------------------------------------------------------------------

    @classmethod
    def constant(cls, c: float) -> "Observable":
        c = float(c)

        def zero(g, m, b):
            return np.zeros_like(m)

        return cls(lambda g, m, b: np.full(np.shape(m)[: np.ndim(m) - b.descriptor.element_ndim], c),
                   dm=zero, dg_triv=zero, name=repr(c))

    def __add__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        return _Combined(self, other, "+")

    __radd__ = __add__

    def __sub__(self, other):
        other = _lift(other)
        if other is NotImplemented:
            return other
        return _Combined(self, -1.0 * other, "+")

    def __neg__(self):
        return -1.0 * self

    def __mul__(self, other):
        if np.isscalar(other):
            return _Scaled(self, float(other))
        other = _lift(other)
        if other is NotImplemented:
            return other
        return _Combined(self, other, "*")

    def __rmul__(self, other):
        return self.__mul__(other)


def _lift(x):
    if isinstance(x, Observable):
        return x
    if np.isscalar(x):
        return Observable.constant(x)
    return NotImplemented


class _Scaled(Observable):
    def __init__(self, base: Observable, c: float):
        super().__init__(name=f"{c:g}*{base.name}", fd_step=base.fd_step)
        self.base, self.c = base, c
        if base.has_value:
            self._value = lambda g, m, b: c * base(g, m, b)

    def derivatives(self, g, m, basis):
        dm, dg = self.base.derivatives(g, m, basis)
        return self.c * dm, self.c * dg


class _Combined(Observable):
    def __init__(self, a: Observable, b: Observable, op: str):
        super().__init__(name=f"({a.name}{op}{b.name})", fd_step=min(a.fd_step, b.fd_step))
        self.a, self.b, self.op = a, b, op
        if a.has_value and b.has_value:
            if op == "+":
                self._value = lambda g, m, bs: a(g, m, bs) + b(g, m, bs)
            else:
                self._value = lambda g, m, bs: a(g, m, bs) * b(g, m, bs)

    def derivatives(self, g, m, basis):
        am, ag = self.a.derivatives(g, m, basis)
        bm, bg = self.b.derivatives(g, m, basis)
        if self.op == "+":
            return am + bm, ag + bg
        nd = basis.descriptor.element_ndim
        va = self.a(g, m, basis)[(...,) + (None,) * nd]
        vb = self.b(g, m, basis)[(...,) + (None,) * nd]
        return va * bm + vb * am, va * bg + vb * ag


def _fd_algebra_gradient(value: Callable, m: np.ndarray, basis: OrthonormalBasis, eps: float) -> np.ndarray:
    out = np.zeros(m.shape, dtype=basis.matrices.dtype)
    for x in basis.matrices:
        slope = (value(m + eps * x) - value(m - eps * x)) / (2 * eps)
        out = out + np.multiply.outer(slope, x)
    return out


def fd_derivatives(F: Observable, g, m, basis: OrthonormalBasis, eps: float = FD_STEP):
    """Central-difference ``(dm, dg_triv)`` of ``F``, ignoring any analytic derivatives."""
    g = np.asarray(g)
    m = np.asarray(m)
    dm = _fd_algebra_gradient(lambda x: F(g, x, basis), m, basis, eps)
    dg = _fd_group_gradient(lambda x: F(x, m, basis), g, basis, eps)
    return dm, dg


def poisson_bracket_arrays(F: Observable, G: Observable, g, m, basis: OrthonormalBasis) -> np.ndarray:
    """``{F, G}`` at a batch of states."""
    fm, fg = F.derivatives(g, m, basis)
    gm, gg = G.derivatives(g, m, basis)
    return -basis.pair(m, basis.bracket(fm, gm)) + basis.pair(gm, fg) - basis.pair(fm, gg)


def poisson_bracket(F: Observable, G: Observable, s: PhaseState, basis: OrthonormalBasis | None = None) -> float:
    basis = _basis_for(s.descriptor, basis)
    return float(poisson_bracket_arrays(F, G, s.g.matrix, s.m.matrix, basis))


def bracket_observable(F: Observable, G: Observable, fd_step: float = 1e-5) -> Observable:
    """``{F, G}`` as an observable; its own derivatives are finite differences."""
    return Observable(lambda g, m, b: poisson_bracket_arrays(F, G, g, m, b),
                      name=f"{{{F.name},{G.name}}}", fd_step=fd_step)


def hamiltonian_vector_field(H: Observable, g, m, basis: OrthonormalBasis) -> tuple[np.ndarray, np.ndarray]:
    """Trivialised vector field ``X_H = (g-velocity, dm)`` with ``dF = {F, H}``."""
    hm, hg = H.derivatives(g, m, basis)
    return hm, basis.bracket(m, hm) - hg


# -- deterministic flows -----------------------------------------------------------------


def hamiltonian_drift(H: Hamiltonian, s: PhaseState, basis: OrthonormalBasis | None = None):
    """Right-hand side of Hamilton's equations: returns ``(dm, xi)``.

    ``xi = I^{-1} m`` is the trivialised velocity (``dg = g xi``) and
    ``dm = [m, xi] - grad V(g)``.
    """
    basis = _basis_for(s.descriptor, basis)
    xi = H.velocity(s.m.matrix, basis)
    dm = basis.bracket(s.m.matrix, xi) - H.potential.gradient_array(s.g.matrix, basis)
    d = s.descriptor
    return AlgebraElement(basis.project(dm), d), AlgebraElement(basis.project(xi), d)


def _check_h(h):
    if not np.isfinite(h):
        raise ValueError("step size must be finite")


def _drift_args(H: Hamiltonian, basis: OrthonormalBasis):
    kind, A, gradient = H.potential._kernel(basis)
    traceless = basis.descriptor.family is Family.SU
    return kind, A, gradient, traceless


def symplectic_drift_step(H: Hamiltonian, s: PhaseState, h: float,
                          basis: OrthonormalBasis | None = None) -> PhaseState:
    """Kick-drift-kick step, symmetric and time-reversible.

    Half kick ``m -= h/2 grad V``, then the kinetic flow by one implicit
    midpoint Lie-Poisson step (``m <- e^{-hB} m e^{hB}``,
    ``g <- g e^{hB}`` with ``B = I^{-1}`` of the averaged momentum), then
    the second half kick. With bi-invariant kinetic energy ``B = m`` and the
    drift is the exact geodesic ``g e^{hm}``. Negative ``h`` runs backwards.
    """
    _check_h(h)
    basis = _basis_for(s.descriptor, basis)
    d = s.descriptor
    if basis.abelian:
        grad = H.potential.gradient_array
        p = s.m.matrix - 0.5 * h * grad(s.g.matrix, basis)
        q = s.g.matrix + h * H.velocity(p, basis)
        p = p - 0.5 * h * grad(q, basis)
        return PhaseState(GroupElement(q, d), AlgebraElement(p, d))
    kind, A, gradient, traceless = _drift_args(H, basis)
    fn = _kernels.symplectic_drift
    if gradient is not None:
        fn = _kernels.python_kernel(fn, gradient)
    g, m = fn(np.ascontiguousarray(s.g.matrix), np.ascontiguousarray(s.m.matrix), float(h),
              basis.matrices, basis.scale, H._inv_inertia(basis), H.biinvariant, traceless,
              kind, A, MIDPOINT_TOL, MIDPOINT_MAX_ITER)
    return PhaseState(GroupElement(g, d), AlgebraElement(m, d))


def symplectic_drift_path(H: Hamiltonian, s: PhaseState, h: float, n_steps: int,
                          basis: OrthonormalBasis | None = None, record_every: int = 1,
                          reproject_every: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Iterate :func:`symplectic_drift_step`; returns recorded ``(g, m)`` arrays
    including the initial state."""
    basis = _basis_for(s.descriptor, basis)
    n_rec = n_steps // record_every
    gs = np.empty((n_rec + 1,) + s.g.matrix.shape, dtype=basis.matrices.dtype)
    ms = np.empty((n_rec + 1,) + s.m.matrix.shape, dtype=basis.matrices.dtype)
    gs[0], ms[0] = s.g.matrix, s.m.matrix
    if basis.abelian or H.potential._kernel(basis)[2] is not None:
        state = s
        k = 0
        for i in range(n_steps):
            state = symplectic_drift_step(H, state, h, basis)
            if (i + 1) % record_every == 0:
                k += 1
                gs[k], ms[k] = state.g.matrix, state.m.matrix
        return gs, ms
    kind, A, _, traceless = _drift_args(H, basis)
    _kernels.symplectic_drift_run(
        np.ascontiguousarray(s.g.matrix), np.ascontiguousarray(s.m.matrix), float(h), int(n_steps),
        basis.matrices, basis.scale, H._inv_inertia(basis), H.biinvariant, traceless, kind, A,
        MIDPOINT_TOL, MIDPOINT_MAX_ITER, reproject_every, record_every, gs[1:], ms[1:])
    return gs, ms


def _lie_poisson_args(H: Hamiltonian, descriptor: AlgebraDescriptor, basis):
    basis = _basis_for(descriptor, basis)
    if basis.abelian:
        raise ValueError("Lie-Poisson dynamics on an abelian algebra are trivial; nothing to integrate")
    if H.potential.kind != "zero":
        raise ValueError("Lie-Poisson reduction needs a Hamiltonian without potential")
    return basis


def _noise_array(noise: Sequence[AlgebraElement] | None, basis: OrthonormalBasis) -> np.ndarray:
    shape = (0,) + basis.descriptor.element_shape
    if noise is None or len(noise) == 0:
        return np.zeros(shape, dtype=basis.matrices.dtype)
    for y in noise:
        if y.descriptor != basis.descriptor:
            raise DescriptorMismatch(f"{y.descriptor} vs {basis.descriptor}")
    return np.ascontiguousarray([y.matrix for y in noise], dtype=basis.matrices.dtype)


def lie_poisson_step(H: Hamiltonian, m: AlgebraElement, h: float,
                     noise: Sequence[AlgebraElement] | None = None, dw=None,
                     basis: OrthonormalBasis | None = None) -> AlgebraElement:
    """One isospectral step of ``dm = [m, I^{-1} m] dt + sum_a [m, Y_a] o dW_a``.

    Without ``noise`` the update is ``m <- e^{-hB} m e^{hB}`` with ``B`` the
    velocity of the midpoint momentum (solved by fixed-point iteration).
    With noise directions ``Y_a`` (Hamiltonians ``Q(m, Y_a)``) and Brownian
    increments ``dw``, a Stratonovich Heun predictor fixes ``B`` and a single
    conjugation is applied. Either way ``m`` moves by conjugation, so its
    spectrum is preserved up to rounding.
    """
    _check_h(h)
    basis = _lie_poisson_args(H, m.descriptor, basis)
    traceless = basis.descriptor.family is Family.SU
    dirs = _noise_array(noise, basis)
    mat = np.ascontiguousarray(m.matrix)
    if dirs.shape[0] == 0:
        out, _ = _kernels.lie_poisson_midpoint(mat, float(h), basis.matrices, basis.scale,
                                               H._inv_inertia(basis), H.biinvariant, traceless,
                                               MIDPOINT_TOL, MIDPOINT_MAX_ITER)
    else:
        dw = np.asarray(dw, dtype=float)
        if dw.shape != (dirs.shape[0],):
            raise ValueError(f"need {dirs.shape[0]} Brownian increments, got shape {dw.shape}")
        out = _kernels.lie_poisson_heun(mat, float(h), dw, dirs, basis.matrices, basis.scale,
                                        H._inv_inertia(basis), H.biinvariant, traceless)
    return AlgebraElement(out, m.descriptor)


def lie_poisson_path(H: Hamiltonian, m0: AlgebraElement, h: float, n_steps: int,
                     noise: Sequence[AlgebraElement] | None = None, rng=None,
                     basis: OrthonormalBasis | None = None, record_every: int = 1) -> np.ndarray:
    """Iterate :func:`lie_poisson_step`; returns recorded momenta, initial one first.

    Noisy runs draw ``len(noise)`` increments ``N(0, h)`` per step from ``rng``.
    """
    basis = _lie_poisson_args(H, m0.descriptor, basis)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    traceless = basis.descriptor.family is Family.SU
    dirs = _noise_array(noise, basis)
    if dirs.shape[0] and rng is None:
        raise ValueError("a noisy Lie-Poisson path needs an rng")
    out = np.empty((n_steps // record_every + 1,) + m0.matrix.shape, dtype=basis.matrices.dtype)
    out[0] = m0.matrix
    m = np.ascontiguousarray(m0.matrix)
    n_out = 1
    block = 8192
    for start in range(0, n_steps, block):
        size = min(block, n_steps - start)
        if dirs.shape[0]:
            dws = np.sqrt(h) * rng.standard_normal((size, dirs.shape[0]))
        else:
            dws = np.zeros((size, 0))
        m, n_out = _kernels.lie_poisson_run(m, float(h), dws, dirs, basis.matrices, basis.scale,
                                            H._inv_inertia(basis), H.biinvariant, traceless,
                                            MIDPOINT_TOL, MIDPOINT_MAX_ITER, record_every, start,
                                            out, n_out)
    return out


def state_defect(s: PhaseState) -> float:
    return group_defect_array(s.g.matrix, s.descriptor)
