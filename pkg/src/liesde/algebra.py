"""Reductive matrix Lie algebras: so(n), su(n) and abelian R^n.

Algebra elements of the matrix families are stored as ``n x n`` arrays
(real for so(n), complex for su(n)); elements of R^n are length-``n``
vectors. All pairings are real: ``Q(X, Y) = scale * Re tr(X^H Y)``.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from liesde import _linalg

if TYPE_CHECKING:
    from liesde.rng import RngStream

__all__ = [
    "Family",
    "AlgebraDescriptor",
    "AlgebraElement",
    "BiInvariantMetric",
    "FROBENIUS",
    "OrthonormalBasis",
    "StructureConstants",
    "DescriptorMismatch",
    "build_basis",
    "bracket",
    "pairing",
    "ad_matrix",
    "killing_form",
    "killing_matrix",
    "structure_constants",
    "project_to_algebra",
    "curvature_tensor",
    "sectional_curvature",
    "ricci",
    "ricci_from_curvature",
    "sample_algebra_gaussian",
]

MEMBERSHIP_TOL = 1e-12


class DescriptorMismatch(ValueError):
    """Raised when two operands live in different algebras."""


class Family(str, enum.Enum):
    SO = "so"
    SU = "su"
    RN = "rn"


_DESCRIPTOR_RE = re.compile(r"^\s*(so|su)\s*\(?\s*(\d+)\s*\)?\s*$|^\s*rn\s*[:(]?\s*(\d+)\s*\)?\s*$", re.I)


@dataclass(frozen=True)
class AlgebraDescriptor:
    """Which algebra: family plus ambient matrix size ``n``."""

    family: Family
    ambient_size: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        n = int(self.ambient_size)
        if n != self.ambient_size:
            raise ValueError(f"ambient_size must be an integer, got {self.ambient_size!r}")
        object.__setattr__(self, "ambient_size", n)
        if self.family is Family.RN:
            if n < 1:
                raise ValueError(f"rn:{n} needs n >= 1")
        elif n < 2:
            raise ValueError(f"{self.family.value}({n}) needs n >= 2")

    @classmethod
    def parse(cls, text: str) -> "AlgebraDescriptor":
        """Parse ``"so3"``, ``"su(2)"``, ``"rn:4"`` and similar spellings."""
        if isinstance(text, AlgebraDescriptor):
            return text
        match = _DESCRIPTOR_RE.match(str(text))
        if match is None:
            raise ValueError(f"unrecognised algebra descriptor {text!r}; expected e.g. 'so3', 'su2', 'rn:4'")
        if match.group(3) is not None:
            return cls(Family.RN, int(match.group(3)))
        return cls(Family(match.group(1).lower()), int(match.group(2)))

    def __str__(self) -> str:
        if self.family is Family.RN:
            return f"rn:{self.ambient_size}"
        return f"{self.family.value}{self.ambient_size}"

    @property
    def dimension(self) -> int:
        n = self.ambient_size
        if self.family is Family.SO:
            return n * (n - 1) // 2
        if self.family is Family.SU:
            return n * n - 1
        return n

    @property
    def scalar_field(self) -> str:
        return "complex" if self.family is Family.SU else "real"

    @property
    def dtype(self):
        return np.complex128 if self.family is Family.SU else np.float64

    @property
    def is_abelian(self) -> bool:
        return self.family is Family.RN or (self.family is Family.SO and self.ambient_size == 2)

    @property
    def is_compact(self) -> bool:
        return self.family is not Family.RN

    @property
    def element_shape(self) -> tuple[int, ...]:
        n = self.ambient_size
        return (n,) if self.family is Family.RN else (n, n)

    @property
    def element_ndim(self) -> int:
        return len(self.element_shape)


def membership_defect(matrix: np.ndarray, descriptor: AlgebraDescriptor) -> float:
    """Distance of ``matrix`` from the algebra, in Frobenius norm."""
    x = np.asarray(matrix)
    if descriptor.family is Family.RN:
        return float(np.linalg.norm(np.imag(x)))
    skew = x + np.conj(x.T)
    out = np.linalg.norm(skew)
    if descriptor.family is Family.SU:
        out += abs(np.trace(x))
    elif np.iscomplexobj(x):
        out += np.linalg.norm(np.imag(x))
    return float(out)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """A matrix (or vector, for R^n) tagged with its algebra."""

    matrix: np.ndarray
    descriptor: AlgebraDescriptor

    def __post_init__(self):
        d = self.descriptor
        x = np.asarray(self.matrix)
        if x.shape != d.element_shape:
            raise ValueError(f"{d} element must have shape {d.element_shape}, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("algebra element has non-finite entries")
        scale = max(1.0, float(np.linalg.norm(x)))
        defect = membership_defect(x, d)
        if defect > MEMBERSHIP_TOL * scale:
            raise ValueError(f"matrix is not in {d} (defect {defect:.3e})")
        if d.family is Family.SU:
            x = x.astype(np.complex128, copy=True)
        else:
            x = np.real(x).astype(np.float64, copy=True)
        x.setflags(write=False)
        object.__setattr__(self, "matrix", x)

    @classmethod
    def zero(cls, descriptor: AlgebraDescriptor) -> "AlgebraElement":
        return cls(np.zeros(descriptor.element_shape, dtype=descriptor.dtype), descriptor)

    def _check(self, other: "AlgebraElement"):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        if other.descriptor != self.descriptor:
            raise DescriptorMismatch(f"{self.descriptor} vs {other.descriptor}")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.matrix + other.matrix, self.descriptor)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return AlgebraElement(self.matrix - other.matrix, self.descriptor)

    def __neg__(self):
        return AlgebraElement(-self.matrix, self.descriptor)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return AlgebraElement(float(scalar) * self.matrix, self.descriptor)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def __repr__(self) -> str:
        return f"AlgebraElement({self.descriptor}, {self.matrix.tolist()!r})"


@dataclass(frozen=True)
class BiInvariantMetric:
    """``Q(X, Y) = c * scale * Re tr(X^H Y)``.

    ``c = 1`` for the Frobenius kind. For ``negative_killing``, ``c`` is the
    constant with ``-kappa(X, Y) = c * Re tr(X^H Y)``: ``n - 2`` on so(n) and
    ``2n`` on su(n).
    """

    kind: str = "frobenius"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("frobenius", "negative_killing"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError(f"metric scale must be positive, got {self.scale}")

    def trace_factor(self, descriptor: AlgebraDescriptor) -> float:
        """Multiplier of ``Re tr(X^H Y)`` on the given algebra."""
        if self.kind == "frobenius":
            return float(self.scale)
        n = descriptor.ambient_size
        if descriptor.family is Family.SO and n >= 3:
            return float(self.scale) * (n - 2)
        if descriptor.family is Family.SU:
            return float(self.scale) * 2 * n
        raise ValueError(f"the Killing form of {descriptor} is degenerate; use the frobenius metric")


FROBENIUS = BiInvariantMetric()


def _real_inner(a: np.ndarray, b: np.ndarray, ndim: int) -> np.ndarray:
    axes = tuple(range(-ndim, 0))
    return np.sum(np.real(np.conj(a) * b), axis=axes)


def _canonical_generators(descriptor: AlgebraDescriptor) -> list[np.ndarray]:
    n = descriptor.ambient_size
    fam = descriptor.family
    out = []
    if fam is Family.RN:
        return list(np.eye(n))
    if fam is Family.SO:
        for a in range(n):
            for b in range(a + 1, n):
                e = np.zeros((n, n))
                e[b, a] = 1.0
                e[a, b] = -1.0
                out.append(e)
        return out
    for a in range(n):
        for b in range(a + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[a, b] = sym[b, a] = 1j
            anti = np.zeros((n, n), dtype=complex)
            anti[b, a] = 1.0
            anti[a, b] = -1.0
            out.extend([sym, anti])
    for k in range(1, n):
        diag = np.zeros(n, dtype=complex)
        diag[:k] = 1j
        diag[k] = -1j * k
        out.append(np.diag(diag))
    return out


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Q-orthonormal basis ``{X_i}`` of an algebra, stacked as a ``(d, ...)`` array.

    Besides holding the basis, this object is the context that the
    batch-aware helpers (``pair``, ``bracket``, ``coefficients``...) need;
    those helpers accept arrays with arbitrary leading batch axes.
    """

    descriptor: AlgebraDescriptor
    metric: BiInvariantMetric
    matrices: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrices, dtype=self.descriptor.dtype)
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, i: int) -> AlgebraElement:
        return AlgebraElement(self.matrices[i], self.descriptor)

    @property
    def elements(self) -> tuple[AlgebraElement, ...]:
        return tuple(self[i] for i in range(len(self)))

    @property
    def dimension(self) -> int:
        return len(self)

    @property
    def scale(self) -> float:
        """Factor ``c`` in ``Q = c Re tr(X^H Y)``."""
        return self.metric.trace_factor(self.descriptor)

    @property
    def abelian(self) -> bool:
        return self.descriptor.family is Family.RN

    # -- batch-aware array helpers -------------------------------------------------

    def pair(self, a, b) -> np.ndarray:
        return self.scale * _real_inner(np.asarray(a), np.asarray(b), self.descriptor.element_ndim)

    def bracket(self, a, b) -> np.ndarray:
        a = np.asarray(a)
        b = np.asarray(b)
        if self.descriptor.is_abelian:
            return np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
        return a @ b - b @ a

    def coefficients(self, x) -> np.ndarray:
        """Coordinates ``Q(x, X_i)`` along the last axis."""
        x = np.asarray(x)
        nd = self.descriptor.element_ndim
        flat_x = x.reshape(x.shape[: x.ndim - nd] + (int(np.prod(self.descriptor.element_shape)),))
        flat_b = self.matrices.reshape(len(self), -1)
        return self.scale * np.real(flat_x @ np.conj(flat_b).T)

    def combine(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)
        return np.tensordot(c, self.matrices, axes=([-1], [0]))

    def project(self, x) -> np.ndarray:
        return _project_array(np.asarray(x), self.descriptor)

    def exp(self, x) -> np.ndarray:
        """Group exponential of (a batch of) algebra arrays."""
        x = np.asarray(x, dtype=self.descriptor.dtype)
        if self.abelian:
            return x.copy()
        if x.ndim == 2:
            return _linalg.expm(np.ascontiguousarray(x))
        flat = np.ascontiguousarray(x.reshape((-1,) + x.shape[-2:]))
        return _linalg.expm_batch(flat).reshape(x.shape)

    def left_translate(self, g, e) -> np.ndarray:
        """``g * e`` in the group (vector addition on R^n)."""
        return g + e if self.abelian else np.asarray(g) @ np.asarray(e)


@dataclass(frozen=True)
class StructureConstants:
    """``tensor[k, i, j] = C^k_ij`` with ``[X_i, X_j] = sum_k C^k_ij X_k``."""

    tensor: np.ndarray

    def jacobi_residual(self) -> float:
        c = self.tensor
        # sum_m C^m_ij C^l_mk + C^m_jk C^l_mi + C^m_ki C^l_mj
        t1 = np.einsum("mij,lmk->lijk", c, c)
        t2 = np.einsum("mjk,lmi->lijk", c, c)
        t3 = np.einsum("mki,lmj->lijk", c, c)
        return float(np.max(np.abs(t1 + t2 + t3))) if c.size else 0.0

    def antisymmetry_residual(self) -> float:
        c = self.tensor
        return float(np.max(np.abs(c + np.swapaxes(c, 1, 2)))) if c.size else 0.0

    def full_antisymmetry_residual(self) -> float:
        """``max |C^k_ij + C^j_ik|``; zero for an ad-invariant orthonormal basis."""
        c = self.tensor
        return float(np.max(np.abs(c + np.transpose(c, (2, 1, 0))))) if c.size else 0.0


def build_basis(descriptor: AlgebraDescriptor | str, metric: BiInvariantMetric = FROBENIUS) -> OrthonormalBasis:
    """Q-orthonormal basis from the canonical generators by Gram-Schmidt.

    Generator order: so(n) uses ``E_(a,b)`` (entry ``(b,a) = 1``,
    ``(a,b) = -1``) for ``a < b`` in lexicographic order; su(n) uses, for
    each ``a < b``, the symmetric-imaginary ``i(E_ab + E_ba)`` then the
    antisymmetric-real generator, followed by the ``n - 1`` diagonal
    traceless generators; R^n uses the coordinate vectors.
    """
    if isinstance(descriptor, str):
        descriptor = AlgebraDescriptor.parse(descriptor)
    scale = metric.trace_factor(descriptor)
    nd = descriptor.element_ndim
    ortho: list[np.ndarray] = []
    for gen in _canonical_generators(descriptor):
        v = np.array(gen, dtype=descriptor.dtype)
        for _ in range(2):  # re-orthogonalise once for stability
            for u in ortho:
                v = v - scale * _real_inner(u, v, nd) * u
        norm = np.sqrt(scale * _real_inner(v, v, nd))
        if norm < 1e-12:
            raise ValueError(f"degenerate generator while building {descriptor} basis")
        ortho.append(v / norm)
    return OrthonormalBasis(descriptor, metric, np.array(ortho))


def _same(x: AlgebraElement, y: AlgebraElement) -> AlgebraDescriptor:
    if x.descriptor != y.descriptor:
        raise DescriptorMismatch(f"{x.descriptor} vs {y.descriptor}")
    return x.descriptor


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """Matrix commutator ``XY - YX`` (zero on abelian algebras)."""
    d = _same(x, y)
    if d.family is Family.RN:
        return AlgebraElement.zero(d)
    return AlgebraElement(x.matrix @ y.matrix - y.matrix @ x.matrix, d)


def pairing(metric: BiInvariantMetric, x: AlgebraElement, y: AlgebraElement) -> float:
    d = _same(x, y)
    return float(metric.trace_factor(d) * _real_inner(x.matrix, y.matrix, d.element_ndim))


def ad_matrix(basis: OrthonormalBasis, x: AlgebraElement) -> np.ndarray:
    """Matrix of ``ad_X`` in the basis: ``A[k, j] = Q([X, X_j], X_k)``."""
    if x.descriptor != basis.descriptor:
        raise DescriptorMismatch(f"{x.descriptor} vs {basis.descriptor}")
    cols = basis.bracket(x.matrix[None], basis.matrices)
    return basis.coefficients(cols).T


def killing_form(basis: OrthonormalBasis, x: AlgebraElement, y: AlgebraElement) -> float:
    """``kappa(X, Y) = tr(ad_X ad_Y)`` assembled from ad-matrices."""
    _same(x, y)
    return float(np.trace(ad_matrix(basis, x) @ ad_matrix(basis, y)))


def killing_matrix(basis: OrthonormalBasis) -> np.ndarray:
    ads = [ad_matrix(basis, e) for e in basis.elements]
    return np.array([[np.trace(a @ b) for b in ads] for a in ads])


def structure_constants(basis: OrthonormalBasis) -> StructureConstants:
    x = basis.matrices
    brackets = basis.bracket(x[:, None], x[None, :])  # (i, j, ...)
    c = basis.coefficients(brackets)  # (i, j, k)
    return StructureConstants(np.ascontiguousarray(np.transpose(c, (2, 0, 1))))


def _project_array(m: np.ndarray, descriptor: AlgebraDescriptor) -> np.ndarray:
    if descriptor.family is Family.RN:
        return np.real(m).astype(float)
    mh = np.conj(np.swapaxes(m, -1, -2))
    p = 0.5 * (m - mh)
    if descriptor.family is Family.SO:
        return np.real(p).astype(float)
    n = descriptor.ambient_size
    tr = np.trace(p, axis1=-2, axis2=-1)[..., None, None]
    return (p - tr / n * np.eye(n)).astype(complex)


def project_to_algebra(m, descriptor: AlgebraDescriptor) -> AlgebraElement:
    """Frobenius-orthogonal projection of an ambient matrix onto the algebra."""
    m = np.asarray(m)
    if m.shape != descriptor.element_shape:
        raise ValueError(f"expected shape {descriptor.element_shape}, got {m.shape}")
    return AlgebraElement(_project_array(m, descriptor), descriptor)


def curvature_tensor(x: AlgebraElement, y: AlgebraElement, z: AlgebraElement) -> AlgebraElement:
    """Riemann tensor of the bi-invariant metric, ``R(X,Y)Z = -[[X,Y],Z]/4``."""
    return -0.25 * bracket(bracket(x, y), z)


def sectional_curvature(metric: BiInvariantMetric, x: AlgebraElement, y: AlgebraElement) -> float:
    """Unnormalised sectional curvature ``Q(R(X,Y)Y, X)``."""
    return pairing(metric, curvature_tensor(x, y, y), x)


def ricci(basis: OrthonormalBasis, x: AlgebraElement, y: AlgebraElement) -> float:
    """``Ric(X, Y) = -kappa(X, Y)/4``."""
    return -0.25 * killing_form(basis, x, y)


def ricci_from_curvature(basis: OrthonormalBasis, x: AlgebraElement, y: AlgebraElement) -> float:
    """``sum_i Q(R(X_i, X)Y, X_i)``; must agree with :func:`ricci`."""
    return sum(
        pairing(basis.metric, curvature_tensor(e, x, y), e) for e in basis.elements
    )


def sample_algebra_gaussian(rng: "RngStream", basis: OrthonormalBasis) -> AlgebraElement:
    """``sum_i xi_i X_i`` with ``xi_i`` i.i.d. standard normal (d draws)."""
    xi = rng.standard_normal(len(basis))
    return AlgebraElement(_linalg_combine(basis, xi), basis.descriptor)


def _linalg_combine(basis: OrthonormalBasis, coeffs: np.ndarray) -> np.ndarray:
    if basis.abelian:
        return basis.combine(coeffs)
    return _linalg.combine(basis.matrices, np.asarray(coeffs, dtype=float))
