"""Executable invariant suite behind ``liesde check``.

Each property group runs on every requested algebra and reports the worst
residual against its tolerance. Groups that do not apply to an algebra
(e.g. isospectrality on R^n) are reported as skipped, not failed.
"""

from __future__ import annotations

import time
import zlib
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from liesde import algebra as la
from liesde import group as gr
from liesde import mechanics as me
from liesde.algebra import AlgebraDescriptor, AlgebraElement, Family, OrthonormalBasis
from liesde.rng import RngStream

DEFAULT_GROUPS = ("so3", "so5", "su2", "su3", "rn:4")
N_RANDOM = 20


@dataclass(frozen=True)
class CheckResult:
    group: str
    algebra: str
    residual: float
    tolerance: float
    skipped: bool = False

    @property
    def passed(self) -> bool:
        return self.skipped or bool(self.residual <= self.tolerance)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


class _Ctx:
    def __init__(self, descriptor: AlgebraDescriptor, seed: int):
        self.d = descriptor
        self.b = la.build_basis(descriptor)
        self.rng = RngStream(seed, zlib.crc32(str(descriptor).encode()))

    def x(self) -> AlgebraElement:
        return la.sample_algebra_gaussian(self.rng, self.b)

    def g(self) -> gr.GroupElement:
        if self.d.family is Family.RN:
            return gr.GroupElement(self.rng.standard_normal(self.d.ambient_size), self.d)
        return gr.haar_sample(self.rng, self.d)

    def state(self) -> me.PhaseState:
        return me.PhaseState(self.g(), self.x())


CHECKS: list[tuple[str, float, Callable[[_Ctx], float | None]]] = []


def _check(name: str, tol: float):
    def deco(fn):
        CHECKS.append((name, tol, fn))
        return fn

    return deco


def _nrm(x) -> float:
    return float(np.linalg.norm(np.asarray(x)))


# -- lie_structure ------------------------------------------------------------------------


@_check("basis_orthonormal", 1e-12)
def _(c):
    gram = c.b.pair(c.b.matrices[:, None], c.b.matrices[None, :])
    return float(np.max(np.abs(gram - np.eye(len(c.b)))))


@_check("basis_span", 1e-10)
def _(c):
    worst = 0.0
    for _ in range(N_RANDOM):
        m = c.rng.standard_normal(c.d.element_shape)
        if c.d.family is Family.SU:
            m = m + 1j * c.rng.standard_normal(c.d.element_shape)
        x = c.b.project(m)
        worst = max(worst, _nrm(c.b.combine(c.b.coefficients(x)) - x))
    return worst


@_check("bracket_closure", 1e-12)
def _(c):
    return max(la.membership_defect(c.b.bracket(c.x().matrix, c.x().matrix), c.d) for _ in range(N_RANDOM))


@_check("bracket_antisymmetry", 1e-14)
def _(c):
    worst = 0.0
    for _ in range(N_RANDOM):
        x, y = c.x(), c.x()
        worst = max(worst, _nrm((la.bracket(x, y) + la.bracket(y, x)).matrix))
    return worst


@_check("ad_invariance", 1e-12)
def _(c):
    worst = 0.0
    q = c.b.metric
    for _ in range(N_RANDOM):
        x, y, z = c.x(), c.x(), c.x()
        r = la.pairing(q, la.bracket(x, y), z) + la.pairing(q, y, la.bracket(x, z))
        scale = np.sqrt(la.pairing(q, x, x) * la.pairing(q, y, y) * la.pairing(q, z, z))
        worst = max(worst, abs(r) / scale)
    return worst


@_check("ad_skew_adjoint", 1e-12)
def _(c):
    worst = 0.0
    for _ in range(N_RANDOM):
        a = la.ad_matrix(c.b, c.x())
        worst = max(worst, float(np.max(np.abs(a + a.T))))
    return worst


@_check("jacobi_structure_constants", 1e-10)
def _(c):
    return la.structure_constants(c.b).jacobi_residual()


@_check("structure_full_antisymmetry", 1e-12)
def _(c):
    sc = la.structure_constants(c.b)
    return max(sc.antisymmetry_residual(), sc.full_antisymmetry_residual())


@_check("killing_negative_definite", 0.0)
def _(c):
    k = la.killing_matrix(c.b)
    if c.d.is_abelian:
        return float(np.max(np.abs(k)))
    # positive residual when some eigenvalue is not below -1e-8
    return max(0.0, float(np.max(np.linalg.eigvalsh(k))) + 1e-8)


@_check("killing_trace_formula", 1e-10)
def _(c):
    if c.d.is_abelian:
        return None
    n = c.d.ambient_size
    factor = (n - 2) if c.d.family is Family.SO else 2 * n
    worst = 0.0
    for _ in range(N_RANDOM):
        x, y = c.x(), c.x()
        expected = factor * np.real(np.trace(x.matrix @ y.matrix))
        worst = max(worst, abs(la.killing_form(c.b, x, y) - expected))
    return worst


@_check("ricci_curvature_cross_check", 1e-10)
def _(c):
    worst = 0.0
    for _ in range(N_RANDOM // 2):
        x, y = c.x(), c.x()
        worst = max(worst, abs(la.ricci(c.b, x, y) - la.ricci_from_curvature(c.b, x, y)))
    return worst


@_check("sectional_curvature", 1e-12)
def _(c):
    worst = 0.0
    for _ in range(N_RANDOM):
        x, y = c.x(), c.x()
        k = la.sectional_curvature(c.b.metric, x, y)
        br = la.bracket(x, y)
        worst = max(worst, abs(k - 0.25 * la.pairing(c.b.metric, br, br)), max(0.0, -k))
    return worst


@_check("projection", 1e-12)
def _(c):
    worst = 0.0
    for _ in range(N_RANDOM):
        m = c.rng.standard_normal(c.d.element_shape)
        p = c.b.project(m)
        worst = max(worst, _nrm(c.b.project(p) - p))
        # orthogonality of the residual to every basis element
        worst = max(worst, float(np.max(np.abs(c.b.pair(m - p, c.b.matrices)))))
    return worst


# -- group_ops --------------------------------------------------------------------------


@_check("exp_inverse", 1e-12)
def _(c):
    worst = 0.0
    e = gr.identity(c.d).matrix
    for _ in range(N_RANDOM):
        x = c.x()
        worst = max(worst, _nrm(gr.compose(gr.exp_algebra(x), gr.exp_algebra(-x)).matrix - e))
    return worst


@_check("exp_on_group", 1e-10)
def _(c):
    return max(gr.group_defect(gr.exp_algebra(3.0 * c.x())) for _ in range(N_RANDOM))


@_check("adjoint_exp_identity", 1e-8)
def _(c):
    if c.d.family is Family.RN:
        return None
    from scipy.linalg import expm

    worst = 0.0
    for _ in range(N_RANDOM // 2):
        x, y = c.x(), c.x()
        lhs = gr.adjoint(gr.exp_algebra(x), y)
        rhs = expm(la.ad_matrix(c.b, x)) @ c.b.coefficients(y.matrix)
        worst = max(worst, _nrm(c.b.coefficients(lhs.matrix) - rhs))
    return worst


@_check("compose_associative", 1e-12)
def _(c):
    worst = 0.0
    for _ in range(N_RANDOM):
        a, b, d = c.g(), c.g(), c.g()
        worst = max(worst, _nrm(gr.compose(gr.compose(a, b), d).matrix - gr.compose(a, gr.compose(b, d)).matrix))
    return worst


@_check("inverse", 1e-12)
def _(c):
    e = gr.identity(c.d).matrix
    return max(_nrm(gr.compose(g, gr.inverse(g)).matrix - e) for g in (c.g() for _ in range(N_RANDOM)))


@_check("reproject", 1e-13)
def _(c):
    if c.d.family is Family.RN:
        return None
    worst = 0.0
    for _ in range(N_RANDOM):
        g = c.g()
        noisy = gr.GroupElement(g.matrix + 1e-6 * c.rng.standard_normal(g.matrix.shape), c.d, check=False)
        r = gr.reproject(noisy)
        worst = max(worst, gr.group_defect(r), _nrm(gr.reproject(r).matrix - r.matrix))
        worst = max(worst, _nrm(gr.reproject(g).matrix - g.matrix))
    return worst


@_check("geodesic_one_parameter", 1e-12)
def _(c):
    worst = 0.0
    e = gr.identity(c.d)
    for _ in range(N_RANDOM):
        x = c.x()
        s, t = c.rng.uniform(2)
        lhs = gr.geodesic(e, x, s + t).matrix
        rhs = gr.compose(gr.geodesic(e, x, s), gr.geodesic(e, x, t)).matrix
        worst = max(worst, _nrm(lhs - rhs))
    return worst


@_check("rbm_path_defect", 1e-10)
def _(c):
    path = gr.rbm_path(gr.identity(c.d), 5.0, 1e-3, c.rng, c.b, record_every=50)
    return max(gr.group_defect(g) for _, g in path)


@_check("haar_membership", 1e-10)
def _(c):
    if not c.d.is_compact:
        return None
    gs = gr.haar_samples(c.rng, c.d, 200)
    return max(gr.group_defect_array(g, c.d) for g in gs)


@_check("rng_reproducible", 0.0)
def _(c):
    a = RngStream(123, 4).standard_normal(64)
    b = RngStream(123, 4).standard_normal(64)
    other = RngStream(123, 5).standard_normal(64)
    return float(np.any(a != b) or np.array_equal(a, other))


# -- mechanics ---------------------------------------------------------------------------


def _potential(c):
    if c.d.family is Family.RN:
        return me.Potential.quadratic(np.linspace(1.0, 2.0, c.d.ambient_size), c.d)
    a = c.rng.standard_normal(c.d.element_shape)
    return me.Potential.trace(a, c.d)


@_check("potential_gradient_fd", 1e-5)
def _(c):
    V = _potential(c)
    fd = me.Potential.custom(c.d, V.value_array)
    worst = 0.0
    for _ in range(N_RANDOM // 2):
        g = c.g()
        a = me.left_trivialized_gradient(V, g, c.b).matrix
        b = me.left_trivialized_gradient(fd, g, c.b).matrix
        worst = max(worst, _nrm(a - b) / max(1.0, _nrm(a)))
    return worst


def _suite(c):
    V = _potential(c)
    H = me.Hamiltonian(V).observable()
    x1 = c.b.matrices[0]
    lin = me.Observable(lambda g, m, b: b.pair(m, x1), dm=lambda g, m, b: np.broadcast_to(x1, m.shape),
                        dg_triv=lambda g, m, b: np.zeros_like(m), name="lin")
    return [H, lin, H * lin + 2.0 * lin]


@_check("observable_derivatives_fd", 1e-5)
def _(c):
    worst = 0.0
    for F in _suite(c):
        for _ in range(5):
            s = c.state()
            dm, dg = F.derivatives(s.g.matrix, s.m.matrix, c.b)
            fm, fg = me.fd_derivatives(F, s.g.matrix, s.m.matrix, c.b)
            scale = max(1.0, _nrm(dm), _nrm(dg))
            worst = max(worst, (_nrm(dm - fm) + _nrm(dg - fg)) / scale)
    return worst


@_check("poisson_antisymmetry", 1e-10)
def _(c):
    F, G, K = _suite(c)
    worst = 0.0
    for _ in range(N_RANDOM // 2):
        s = c.state()
        worst = max(worst, abs(me.poisson_bracket(F, G, s, c.b) + me.poisson_bracket(G, F, s, c.b)),
                    abs(me.poisson_bracket(F, F, s, c.b)))
    return worst


@_check("poisson_leibniz", 1e-10)
def _(c):
    F, G, K = _suite(c)
    FG = F * G
    worst = 0.0
    for _ in range(N_RANDOM // 2):
        s = c.state()
        lhs = me.poisson_bracket(FG, K, s, c.b)
        rhs = F.at(s, c.b) * me.poisson_bracket(G, K, s, c.b) + G.at(s, c.b) * me.poisson_bracket(F, K, s, c.b)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst


@_check("poisson_jacobi", 1e-6)
def _(c):
    F, G, K = _suite(c)
    worst = 0.0
    pb = me.bracket_observable
    for _ in range(5):
        s = c.state()
        total = (me.poisson_bracket(F, pb(G, K), s, c.b) + me.poisson_bracket(G, pb(K, F), s, c.b)
                 + me.poisson_bracket(K, pb(F, G), s, c.b))
        worst = max(worst, abs(total))
    return worst


@_check("geodesic_drift", 1e-12)
def _(c):
    H = me.Hamiltonian(me.Potential.zero(c.d))
    worst = 0.0
    for _ in range(5):
        s = c.state()
        dm, xi = me.hamiltonian_drift(H, s, c.b)
        worst = max(worst, _nrm(dm.matrix), _nrm(xi.matrix - s.m.matrix))
        nxt = me.symplectic_drift_step(H, s, 0.1, c.b)
        worst = max(worst, _nrm(nxt.g.matrix - gr.geodesic(s.g, s.m, 0.1).matrix))
    return worst


@_check("symplectic_reversible", 1e-12)
def _(c):
    V = _potential(c)
    inertia = None if c.d.family is Family.RN else me.InertiaOperator(np.linspace(1.0, 3.0, len(c.b)))
    H = me.Hamiltonian(V, inertia)
    worst = 0.0
    for _ in range(5):
        s = c.state()
        back = me.symplectic_drift_step(H, me.symplectic_drift_step(H, s, 0.01, c.b), -0.01, c.b)
        worst = max(worst, _nrm(back.g.matrix - s.g.matrix), _nrm(back.m.matrix - s.m.matrix))
    return worst


@_check("lie_poisson_isospectral", 1e-10)
def _(c):
    if c.d.family is Family.RN:
        return None
    from liesde.diagnostics import spectrum_drift

    H = me.Hamiltonian(me.Potential.zero(c.d), me.InertiaOperator(np.linspace(1.0, 3.0, len(c.b))))
    m0 = c.x()
    det = me.lie_poisson_path(H, m0, 1e-2, 500, basis=c.b, record_every=50)
    sto = me.lie_poisson_path(H, m0, 1e-2, 500, noise=[c.x(), c.x()], rng=c.rng, basis=c.b, record_every=50)
    return max(float(spectrum_drift(det).max()), float(spectrum_drift(sto).max()))


@_check("lie_poisson_biinvariant_static", 0.0)
def _(c):
    if c.d.family is Family.RN:
        return None
    H = me.Hamiltonian(me.Potential.zero(c.d))
    m0 = c.x()
    return _nrm(me.lie_poisson_step(H, m0, 0.1, basis=c.b).matrix - m0.matrix)


def run_checks(groups=DEFAULT_GROUPS, seed: int = 0) -> list[CheckResult]:
    """Run every property group on every algebra in ``groups``."""
    results = []
    for spec in groups:
        descriptor = AlgebraDescriptor.parse(spec) if isinstance(spec, str) else spec
        ctx = _Ctx(descriptor, seed)
        for name, tol, fn in CHECKS:
            value = fn(ctx)
            if value is None:
                results.append(CheckResult(name, str(descriptor), 0.0, tol, skipped=True))
            else:
                results.append(CheckResult(name, str(descriptor), float(value), tol))
    return results


def summarise(results: list[CheckResult]) -> dict:
    names = list(dict.fromkeys(r.group for r in results))
    table = {}
    for name in names:
        rows = [r for r in results if r.group == name]
        table[name] = {
            "passed": all(r.passed for r in rows),
            "algebras": {r.algebra: ("skipped" if r.skipped else f"{r.residual:.2e}") for r in rows},
            "tolerance": rows[0].tolerance,
        }
    return {"groups": table, "n_groups": len(names), "passed": all(v["passed"] for v in table.values())}


if __name__ == "__main__":  # pragma: no cover
    t = time.time()
    res = run_checks()
    for r in res:
        if not r.passed:
            print("FAIL", r)
    print(summarise(res)["n_groups"], "groups", time.time() - t, "s")
