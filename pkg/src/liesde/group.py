"""Group elements, exponentials, Haar sampling and Riemannian Brownian motion."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import InitVar, dataclass

import numpy as np

from liesde import _kernels, _linalg
from liesde.algebra import (
    AlgebraDescriptor,
    AlgebraElement,
    DescriptorMismatch,
    Family,
    OrthonormalBasis,
    sample_algebra_gaussian,
)
from liesde.rng import RngStream

__all__ = [
    "GroupElement",
    "identity",
    "exp_algebra",
    "compose",
    "inverse",
    "adjoint",
    "group_defect",
    "group_defect_array",
    "reproject",
    "geodesic",
    "haar_sample",
    "haar_samples",
    "rbm_step",
    "rbm_path",
    "rbm_terminal_ensemble",
]

GROUP_TOL = 1e-10
REPROJECT_MAX_DEFECT = 0.1
NOISE_BLOCK = 8192  # steps of noise drawn per RNG call


def group_defect_array(g: np.ndarray, descriptor: AlgebraDescriptor) -> float:
    """``||g^H g - I||_F + |det g / |det g| - 1|`` for a raw matrix.

    The determinant term only measures the phase (sign for SO(n)) so that
    the defect of ``c * I`` is exactly ``|c^2 - 1| sqrt(n)``. Zero on R^n.
    """
    if descriptor.family is Family.RN:
        return 0.0 if np.all(np.isfinite(g)) else float("inf")
    g = np.asarray(g, dtype=descriptor.dtype)
    out = _linalg.unitary_defect(np.ascontiguousarray(g))
    d = _linalg.det(np.ascontiguousarray(g))
    if d == 0:
        return float("inf")
    out += abs(d / abs(d) - 1.0)
    return float(out)


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A matrix in SO(n) / SU(n), or a vector in R^n, tagged with its algebra.

    Pass ``check=False`` to wrap a matrix that is only near the group (the
    input of :func:`reproject`).
    """

    matrix: np.ndarray
    descriptor: AlgebraDescriptor
    check: InitVar[bool] = True

    def __post_init__(self, check):
        d = self.descriptor
        x = np.asarray(self.matrix)
        if x.shape != d.element_shape:
            raise ValueError(f"{d} group element must have shape {d.element_shape}, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("group element has non-finite entries")
        if d.family is Family.SU:
            x = x.astype(np.complex128, copy=True)
        else:
            if np.iscomplexobj(x) and np.any(np.imag(x) != 0):
                raise ValueError(f"{d} group element must be real")
            x = np.real(x).astype(np.float64, copy=True)
        if check:
            defect = group_defect_array(x, d)
            if defect > GROUP_TOL:
                raise ValueError(f"matrix is not in the group of {d} (defect {defect:.3e})")
        x.setflags(write=False)
        object.__setattr__(self, "matrix", x)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def __repr__(self) -> str:
        return f"GroupElement({self.descriptor}, {self.matrix.tolist()!r})"


def identity(descriptor: AlgebraDescriptor) -> GroupElement:
    if descriptor.family is Family.RN:
        return GroupElement(np.zeros(descriptor.ambient_size), descriptor)
    return GroupElement(np.eye(descriptor.ambient_size, dtype=descriptor.dtype), descriptor)


def exp_algebra(x: AlgebraElement) -> GroupElement:
    """Group exponential; the identity map on R^n."""
    d = x.descriptor
    if d.family is Family.RN:
        return GroupElement(x.matrix, d)
    return GroupElement(_linalg.expm(np.ascontiguousarray(x.matrix)), d)


def _same(g, h):
    if g.descriptor != h.descriptor:
        raise DescriptorMismatch(f"{g.descriptor} vs {h.descriptor}")


def compose(g: GroupElement, h: GroupElement) -> GroupElement:
    _same(g, h)
    if g.descriptor.family is Family.RN:
        return GroupElement(g.matrix + h.matrix, g.descriptor)
    return GroupElement(g.matrix @ h.matrix, g.descriptor)


def inverse(g: GroupElement) -> GroupElement:
    if g.descriptor.family is Family.RN:
        return GroupElement(-g.matrix, g.descriptor)
    return GroupElement(np.conj(g.matrix.T), g.descriptor)


def adjoint(g: GroupElement, x: AlgebraElement) -> AlgebraElement:
    """``Ad_g X = g X g^{-1}``."""
    if g.descriptor != x.descriptor:
        raise DescriptorMismatch(f"{g.descriptor} vs {x.descriptor}")
    if g.descriptor.family is Family.RN:
        return x
    return AlgebraElement(g.matrix @ x.matrix @ np.conj(g.matrix.T), x.descriptor)


def group_defect(g: GroupElement) -> float:
    return group_defect_array(g.matrix, g.descriptor)


def reproject(g: GroupElement) -> GroupElement:
    """Nearest group element via the unitary polar factor (determinant fixed on SU(n))."""
    d = g.descriptor
    if d.family is Family.RN:
        return g
    off = _linalg.unitary_defect(np.ascontiguousarray(g.matrix))
    if off > REPROJECT_MAX_DEFECT:
        raise ValueError(f"matrix too far from the group to reproject (||g^H g - I|| = {off:.3g} > 0.1)")
    u = _kernels.reproject_group(np.ascontiguousarray(g.matrix), d.family is Family.SU)
    return GroupElement(u, d)


def geodesic(g0: GroupElement, x: AlgebraElement, t: float) -> GroupElement:
    """``g0 exp(t X)``, the geodesic through ``g0`` with trivialised velocity ``X``."""
    _same(g0, x)
    return compose(g0, exp_algebra(float(t) * x))


def haar_samples(rng: RngStream, descriptor: AlgebraDescriptor, size: int) -> np.ndarray:
    """``size`` Haar-distributed matrices, shape ``(size, n, n)``.

    QR of a Gaussian (complex Ginibre for SU(n)) matrix with the phases of
    ``diag(R)`` moved into ``Q``. SO(n): a column flip fixes ``det = +1``;
    SU(n): the determinant phase is divided out.
    """
    if not descriptor.is_compact:
        raise ValueError(f"{descriptor} has no normalisable Haar measure")
    n = descriptor.ambient_size
    if descriptor.family is Family.SU:
        z = rng.standard_normal((size, n, n, 2))
        z = (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)
    else:
        z = rng.standard_normal((size, n, n))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (diag / np.abs(diag))[..., None, :]
    dets = np.linalg.det(q)
    if descriptor.family is Family.SO:
        q[..., :, 0] *= np.sign(dets)[..., None]
    else:
        q = q * (dets ** (-1.0 / n))[..., None, None]
    return q


def haar_sample(rng: RngStream, descriptor: AlgebraDescriptor) -> GroupElement:
    return GroupElement(haar_samples(rng, descriptor, 1)[0], descriptor)


def _check_basis(g: GroupElement, basis: OrthonormalBasis):
    if g.descriptor != basis.descriptor:
        raise DescriptorMismatch(f"{g.descriptor} vs {basis.descriptor}")


def rbm_step(g: GroupElement, h: float, rng: RngStream, basis: OrthonormalBasis) -> GroupElement:
    """``g exp(sqrt(h) xi)`` with ``xi`` a standard Gaussian algebra element."""
    _check_basis(g, basis)
    if h < 0:
        raise ValueError("step size must be non-negative")
    xi = sample_algebra_gaussian(rng, basis)
    return compose(g, exp_algebra(np.sqrt(h) * xi))


def _n_steps(T: float, h: float) -> int:
    if not h > 0:
        raise ValueError(f"step size h must be positive, got {h}")
    if T < 0:
        raise ValueError(f"horizon T must be non-negative, got {T}")
    n = int(round(T / h))
    if abs(n * h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon T={T} is not a multiple of h={h}")
    return n


def rbm_path(
    g0: GroupElement,
    T: float,
    h: float,
    rng: RngStream,
    basis: OrthonormalBasis,
    record_every: int = 1,
    reproject_every: int = 100,
) -> list[tuple[float, GroupElement]]:
    """Brownian path sampled every ``record_every`` steps, starting with ``(0, g0)``.

    Noise is consumed exactly as by repeated :func:`rbm_step` calls, so the
    path agrees with a hand-written loop up to reprojection.
    """
    _check_basis(g0, basis)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if T <= 0:
        if T == 0:
            return [(0.0, g0)]
        raise ValueError(f"horizon T must be non-negative, got {T}")
    n = _n_steps(T, h)
    d = len(basis)
    out: list[tuple[float, GroupElement]] = [(0.0, g0)]
    if basis.abelian:
        steps = rng.standard_normal((n, d))
        incr = np.sqrt(h) * basis.combine(steps)
        path = g0.matrix + np.cumsum(incr, axis=0)
        for k in range(record_every - 1, n, record_every):
            out.append(((k + 1) * h, GroupElement(path[k], g0.descriptor)))
        return out
    traceless = basis.descriptor.family is Family.SU
    rec = np.empty((n // record_every,) + g0.matrix.shape, dtype=basis.matrices.dtype)
    g = np.ascontiguousarray(g0.matrix)
    n_out = 0
    for start in range(0, n, NOISE_BLOCK):
        block = rng.standard_normal((min(NOISE_BLOCK, n - start), d))
        g, n_out = _kernels.rbm_run(g, block, np.sqrt(h), basis.matrices, traceless,
                                    record_every, reproject_every, start, rec, n_out)
    for k in range(n_out):
        out.append(((k + 1) * record_every * h, GroupElement(rec[k], g0.descriptor)))
    return out


def _terminal_one(args):
    g0, n, sqrt_h, basis, seed, stream_id, reproject_every = args
    rng = RngStream(seed, stream_id)
    traceless = basis.descriptor.family is Family.SU
    g = np.ascontiguousarray(g0)
    d = len(basis)
    for start in range(0, n, NOISE_BLOCK):
        block = rng.standard_normal((min(NOISE_BLOCK, n - start), d))
        # the kernel reprojects once at the end of each block
        g = _kernels.rbm_terminal(g, block, sqrt_h, basis.matrices, traceless, reproject_every)
    return g


def rbm_terminal_ensemble(
    basis: OrthonormalBasis,
    T: float,
    h: float,
    n_paths: int,
    seed: int,
    base_stream: int = 0,
    g0: GroupElement | None = None,
    workers: int = 1,
) -> np.ndarray:
    """Terminal states of ``n_paths`` independent Brownian paths, shape ``(n_paths, n, n)``.

    Path ``i`` uses stream ``base_stream + i``; the result does not depend
    on ``workers``.
    """
    if basis.abelian:
        raise ValueError("use rbm_path for R^n; the terminal law is Gaussian")
    n = _n_steps(T, h)
    g0m = identity(basis.descriptor).matrix if g0 is None else g0.matrix
    jobs = [(g0m, n, np.sqrt(h), basis, seed, base_stream + i, 0) for i in range(n_paths)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_terminal_one, jobs))
    else:
        results = [_terminal_one(j) for j in jobs]
    return np.array(results)
