"""Randomised invariants across every supported algebra."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from liesde import (
    AlgebraElement,
    Hamiltonian,
    InertiaOperator,
    LangevinConfig,
    PhaseState,
    Potential,
    build_basis,
    exp_algebra,
    group_defect,
    poisson_bracket,
    reproject,
    symplectic_drift_step,
)
from liesde.algebra import membership_defect
from liesde.cli import parse_config
from liesde.group import GroupElement

from conftest import ALL, COMPACT

BASES = {name: build_basis(name) for name in ALL}
SETTINGS = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
floats = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


@st.composite
def elements(draw, names=ALL, k=1):
    name = draw(st.sampled_from(names))
    b = BASES[name]
    cs = [draw(arrays(np.float64, len(b), elements=floats)) for _ in range(k)]
    return b, [AlgebraElement(b.combine(c), b.descriptor) for c in cs]


@SETTINGS
@given(elements(k=3))
def test_ad_invariance(data):
    b, (x, y, z) = data
    lhs = b.pair(b.bracket(x.matrix, y.matrix), z.matrix)
    rhs = -b.pair(y.matrix, b.bracket(x.matrix, z.matrix))
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


@SETTINGS
@given(elements(k=3))
def test_jacobi(data):
    b, (x, y, z) = data
    br = b.bracket
    total = br(x.matrix, br(y.matrix, z.matrix)) + br(y.matrix, br(z.matrix, x.matrix)) + br(z.matrix, br(x.matrix, y.matrix))
    assert np.abs(total).max() < 1e-12


@SETTINGS
@given(elements(k=2))
def test_bracket_closure_and_coordinates(data):
    b, (x, y) = data
    z = b.bracket(x.matrix, y.matrix)
    assert membership_defect(z, b.descriptor) < 1e-12
    np.testing.assert_allclose(b.combine(b.coefficients(z)), z, atol=1e-12)


@SETTINGS
@given(elements(COMPACT))
def test_exp_on_group_and_reproject_idempotent(data):
    b, (x,) = data
    g = exp_algebra(x)
    assert group_defect(g) < 1e-12
    r = reproject(g)
    assert np.abs(r.matrix - g.matrix).max() < 1e-13
    assert np.abs(reproject(r).matrix - r.matrix).max() < 1e-13


@SETTINGS
@given(elements(COMPACT), st.floats(1e-7, 1e-4))
def test_reproject_repairs_perturbation(data, size):
    b, (x,) = data
    g = exp_algebra(x).matrix
    n = b.descriptor.ambient_size
    noisy = GroupElement(g + size * np.random.default_rng(0).standard_normal((n, n)), b.descriptor, check=False)
    assert group_defect(reproject(noisy)) < 1e-13


@SETTINGS
@given(elements(COMPACT, k=2))
def test_poisson_antisymmetric(data):
    b, (x, y) = data
    d = b.descriptor
    s = PhaseState(exp_algebra(x), y)
    F = Hamiltonian(Potential.trace(np.eye(d.ambient_size), d)).observable()
    G = Hamiltonian(Potential.zero(d), InertiaOperator(np.linspace(1, 2, len(b)))).observable()
    assert abs(poisson_bracket(F, G, s, b) + poisson_bracket(G, F, s, b)) < 1e-12
    assert poisson_bracket(F, F, s, b) == 0


@SETTINGS
@given(elements(COMPACT, k=2), st.floats(1e-3, 5e-2))
def test_symplectic_drift_reversible(data, h):
    b, (x, y) = data
    d = b.descriptor
    H = Hamiltonian(Potential.trace(np.eye(d.ambient_size), d), InertiaOperator(np.linspace(1, 3, len(b))))
    s = PhaseState(exp_algebra(x), y)
    back = symplectic_drift_step(H, symplectic_drift_step(H, s, h, b), -h, b)
    assert np.abs(back.g.matrix - s.g.matrix).max() < 1e-12
    assert np.abs(back.m.matrix - s.m.matrix).max() < 1e-12


@SETTINGS
@given(
    command=st.sampled_from(["rbm", "langevin", "compare", "gibbs-oracle", "lie-poisson", "check"]),
    group=st.sampled_from(["so3", "so5", "su2", "su3", "rn:3"]),
    variant=st.sampled_from(["momentum", "position", "symplectic"]),
    beta=st.floats(0.1, 10),
    gamma=st.floats(0, 5),
    n_steps=st.integers(1, 10_000),
    seed=st.integers(0, 2**31),
    record_every=st.integers(1, 100),
    fmt=st.sampled_from(["csv", "jsonl"]),
)
def test_config_round_trip(command, group, variant, beta, gamma, n_steps, seed, record_every, fmt):
    flags = {"group": group, "variant": variant, "beta": beta, "gamma": gamma, "h": 0.01, "T": n_steps * 0.01,
             "seed": seed, "record_every": record_every, "format": fmt}
    try:
        LangevinConfig(h=0.01, T=n_steps * 0.01)
    except ValueError:
        return
    cfg = parse_config(None, flags, command=command)
    assert parse_config(None, cfg.to_dict()) == cfg
