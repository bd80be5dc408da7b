import math

import numpy as np
import pytest

from liesde import (
    AlgebraDescriptor,
    AlgebraElement,
    GroupElement,
    Hamiltonian,
    LangevinConfig,
    PhaseState,
    Potential,
    RngStream,
    Variant,
    exp_algebra,
    geodesic,
    identity,
    momentum_langevin_step,
    position_langevin_step,
    simulate,
    simulate_ensemble,
    symplectic_drift_step,
    symplectic_langevin_step,
)
from liesde.langevin import with_variant

SO3 = AlgebraDescriptor.parse("so3")


def rand_state(basis, seed):
    r = np.random.default_rng(seed)
    d = basis.descriptor
    if basis.abelian:
        return PhaseState(GroupElement(r.standard_normal(d.ambient_size), d),
                          AlgebraElement(r.standard_normal(d.ambient_size), d))
    g = exp_algebra(AlgebraElement(basis.combine(r.standard_normal(len(basis))), d))
    return PhaseState(g, AlgebraElement(basis.combine(r.standard_normal(len(basis))), d))


class TestConfig:
    def test_defaults(self):
        cfg = LangevinConfig()
        assert (cfg.h, cfg.T, cfg.beta, cfg.gamma, cfg.seed, cfg.record_every) == (1e-3, 10.0, 1.0, 1.0, 0, 10)
        assert cfg.n_steps == 10_000

    @pytest.mark.parametrize("kw", [
        {"beta": 0}, {"beta": -1}, {"gamma": -0.1}, {"gamma1": float("nan")}, {"h": 0},
        {"T": -1}, {"record_every": 0}, {"record_every": 2.5}, {"h": 0.3, "T": 1.0},
    ])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            LangevinConfig(**kw)

    def test_gammas(self):
        assert LangevinConfig(Variant.MOMENTUM, gamma=2).gammas() == (2.0, 0.0)
        assert LangevinConfig("position", gamma=2).gammas() == (0.0, 2.0)
        assert LangevinConfig("symplectic", gamma=2, gamma2=0.5).gammas() == (2.0, 0.5)

    def test_to_dict(self):
        d = LangevinConfig("position").to_dict()
        assert d["variant"] == "position"
        assert LangevinConfig(**d) == LangevinConfig("position")


class TestSteps:
    def test_frictionless_free_is_geodesic(self, bases):
        b = bases["su2"]
        s = rand_state(b, 0)
        cfg = LangevinConfig(gamma=0.0, h=0.01)
        out = momentum_langevin_step(s, cfg, Potential.zero(b.descriptor), RngStream(0, 0), b)
        np.testing.assert_allclose(out.g.matrix, geodesic(s.g, s.m, 0.01).matrix, atol=1e-15)
        np.testing.assert_allclose(out.m.matrix, s.m.matrix, atol=1e-15)

    @pytest.mark.parametrize("name", ["so3", "su3", "rn:2"])
    def test_noiseless_symplectic_is_drift(self, bases, name):
        b = bases[name]
        d = b.descriptor
        V = Potential.quadratic([2.0, 3.0], d) if b.abelian else Potential.trace(np.eye(d.ambient_size), d)
        s = rand_state(b, 1)
        cfg = LangevinConfig("symplectic", gamma1=0.0, gamma2=0.0, h=0.02)
        out = symplectic_langevin_step(s, cfg, V, RngStream(0, 0), b)
        ref = symplectic_drift_step(Hamiltonian(V), s, 0.02, b)
        np.testing.assert_allclose(out.g.matrix, ref.g.matrix, atol=1e-14)
        np.testing.assert_allclose(out.m.matrix, ref.m.matrix, atol=1e-14)

    @pytest.mark.parametrize("name", ["so3", "su3", "rn:3"])
    def test_bitwise_reductions(self, bases, name):
        b = bases[name]
        d = b.descriptor
        V = Potential.quadratic(2.0, d) if b.abelian else Potential.trace(np.diag(np.arange(1.0, d.ambient_size + 1)), d)
        s = rand_state(b, 2)
        base = LangevinConfig(gamma=0.7, h=0.01)
        for step_fn, variant, kw in [
            (position_langevin_step, "position", {"gamma1": 0.0, "gamma2": 0.7}),
            (momentum_langevin_step, "momentum", {"gamma1": 0.7, "gamma2": 0.0}),
        ]:
            ref = step_fn(s, with_variant(base, variant), V, RngStream(4, 0), b)
            got = symplectic_langevin_step(s, with_variant(base, "symplectic", **kw), V, RngStream(4, 0), b)
            assert np.array_equal(ref.g.matrix, got.g.matrix)
            assert np.array_equal(ref.m.matrix, got.m.matrix)

    def test_position_free_preserves_casimir(self, bases):
        b = bases["so3"]
        cfg = LangevinConfig("position", gamma=1.0, h=1e-3, T=10.0, record_every=100, reproject_every=0)
        m0 = AlgebraElement(b.combine([1.0, -0.5, 0.25]), SO3)
        rec = simulate(cfg, SO3, Potential.zero(SO3), m0=m0, basis=b)
        cas = rec.casimir
        assert np.max(np.abs(cas - cas[0])) / cas[0] < 1e-10
        assert np.linalg.norm(rec.m[-1] - rec.m[0]) > 0.1  # m did move

    def test_position_abelian_no_transport(self, bases):
        b = bases["rn:2"]
        s = rand_state(b, 3)
        out = position_langevin_step(s, LangevinConfig("position", h=0.1), Potential.zero(b.descriptor),
                                     RngStream(0, 0), b)
        np.testing.assert_array_equal(out.m.matrix, s.m.matrix)

    def test_custom_potential_matches_builtin(self, bases):
        b = bases["su2"]
        d = b.descriptor
        A = np.array([[1.0, 0.5j], [0.2, 2.0]])
        ref = Potential.trace(A, d)
        custom = Potential.custom(d, lambda g: -np.real(np.trace(A.conj().T @ g)),
                                  gradient=lambda g: ref.gradient_array(g, b))
        cfg = LangevinConfig("symplectic", h=0.01, T=0.5, record_every=10)
        a = simulate(cfg, d, ref, basis=b)
        c = simulate(cfg, d, custom, basis=b)
        np.testing.assert_allclose(c.g, a.g, atol=1e-13)
        np.testing.assert_allclose(c.m, a.m, atol=1e-13)

    def test_rejects_mismatched_state(self, bases):
        s = rand_state(bases["so3"], 0)
        with pytest.raises(ValueError):
            momentum_langevin_step(s, LangevinConfig(), Potential.zero(AlgebraDescriptor.parse("su2")),
                                   RngStream(0, 0))


class TestSimulate:
    def test_record_layout(self, bases):
        cfg = LangevinConfig(h=0.01, T=1.0, record_every=10)
        rec = simulate(cfg, SO3, Potential.zero(SO3), basis=bases["so3"])
        assert len(rec) == 11
        np.testing.assert_allclose(rec.times, np.linspace(0, 1, 11))
        assert rec.g.shape == (11, 3, 3) and rec.m_coefficients.shape == (11, 3)
        assert np.array_equal(rec.g[0], np.eye(3))
        assert rec.defect.max() < 1e-12
        assert len(rec.tail(0.2)) == 8

    def test_matches_steps(self, bases):
        b = bases["so3"]
        V = Potential.trace(np.eye(3), SO3)
        cfg = LangevinConfig("symplectic", h=0.01, T=0.5, record_every=50, reproject_every=0, seed=3)
        rec = simulate(cfg, SO3, V, basis=b)
        rng = RngStream(3, 0)
        s = PhaseState(identity(SO3), AlgebraElement.zero(SO3))
        for _ in range(50):
            s = symplectic_langevin_step(s, cfg, V, rng, b)
        np.testing.assert_allclose(rec.g[-1], s.g.matrix, atol=1e-14)
        np.testing.assert_allclose(rec.m[-1], s.m.matrix, atol=1e-14)

    def test_ensemble_one_matches_simulate(self, bases):
        cfg = LangevinConfig("position", h=0.01, T=1.0, seed=5)
        V = Potential.trace(np.eye(3), SO3)
        a = simulate(cfg, SO3, V, basis=bases["so3"])
        (c,) = simulate_ensemble(cfg, SO3, V, n_traj=1, basis=bases["so3"])
        assert np.array_equal(a.g, c.g) and np.array_equal(a.m, c.m)

    def test_ensemble_parallel_identical(self, bases):
        cfg = LangevinConfig("symplectic", h=0.01, T=2.0, seed=6)
        d = AlgebraDescriptor.parse("su3")
        V = Potential.trace(np.eye(3), d)
        serial = simulate_ensemble(cfg, d, V, n_traj=6, workers=1)
        threaded = simulate_ensemble(cfg, d, V, n_traj=6, workers=4)
        for a, c in zip(serial, threaded):
            assert a.g.tobytes() == c.g.tobytes() and a.m.tobytes() == c.m.tobytes()
        assert not np.array_equal(serial[0].g, serial[1].g)

    def test_ensemble_init_count(self):
        with pytest.raises(ValueError):
            simulate_ensemble(LangevinConfig(T=0.1), SO3, Potential.zero(SO3), inits=[], n_traj=2)

    def test_performance_smoke(self, bases):
        import time

        cfg = LangevinConfig(h=1e-3, T=10.0, record_every=10_000)
        V = Potential.trace(np.eye(3), SO3)
        simulate(cfg, SO3, V, basis=bases["so3"])  # warm-up
        t0 = time.perf_counter()
        simulate_ensemble(cfg, SO3, V, n_traj=1000, basis=bases["so3"])
        assert time.perf_counter() - t0 < 60


class TestStationaryMoments:
    def test_momentum_variance_free(self, bases):
        cfg = LangevinConfig("momentum", beta=2.0, gamma=1.0, h=0.01, T=10_000.0, seed=11)
        rec = simulate(cfg, SO3, Potential.zero(SO3), basis=bases["so3"])
        var = np.mean(rec.tail(0.2).m_coefficients ** 2, axis=0)
        np.testing.assert_allclose(var, 0.5, rtol=0.05)

    @pytest.mark.parametrize("variant", list(Variant))
    def test_euclidean_r2(self, bases, variant):
        b = bases["rn:2"]
        k = np.array([4.0, 1.0])
        cfg = LangevinConfig(variant, beta=1.0, gamma=1.0, h=0.01, T=10_000.0, record_every=1, seed=12)
        rec = simulate(cfg, b.descriptor, Potential.quadratic(k, b.descriptor), basis=b)
        tail = rec.tail(0.2)
        np.testing.assert_allclose(np.mean(tail.g**2, axis=0), 1 / k, rtol=0.05)
        np.testing.assert_allclose(np.mean(tail.m**2, axis=0), 1.0, rtol=0.05)
