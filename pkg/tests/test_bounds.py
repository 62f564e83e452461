import json
import math

import numpy as np
import pytest

from isogap import (
    bound_report,
    build_kernel,
    cubic_gap_estimate,
    ergodicity_bound_checks,
    flow_vs_adjoint_check,
    gap_certificate,
    gelfand_sequence,
    iso_profile,
    lawler_sokal_check,
    make_cycle,
    make_hypercube,
    make_star,
    mixing_profile,
    norm_lower_bound_check,
    orgc_estimate,
    propagation_check,
    spectral_report,
    star_weights,
)
from isogap.bounds import certificate_horizon, certificate_radius, tv_sandwich_check
from isogap.errors import InexactProfile, InputError, PremiseUnverifiable

from conftest import flip_chain


def _star():
    return make_star(star_weights(0.3, 10))


class TestCertificate:
    def test_horizon_and_radius_arithmetic(self):
        # independent evaluation with arccos
        x = 0.99**2 / 16
        assert certificate_horizon(0.99) == math.floor(2 * math.pi / math.acos(1 - x)) + 1 == 18
        assert abs(certificate_radius(0.99) - (1 - x) ** (1 / 18)) < 1e-15
        assert abs(certificate_radius(0.99) - 0.99650) < 1e-5

    def test_rank_one(self, rank_one):
        cert = gap_certificate(iso_profile(*rank_one, 20))
        assert cert.m_nonempty and not cert.insufficient_horizon
        eps, H = cert.feasible_epsilons[0]
        assert abs(eps - 1) < 1e-8 and H == 18
        assert cert.r0 >= 0 - 1e-10

    def test_rank_one_short_horizon(self, rank_one):
        cert = gap_certificate(iso_profile(*rank_one, 17))
        assert not cert.m_nonempty and cert.insufficient_horizon

    def test_cycle7_empty(self):
        m = make_cycle(7)
        cert = gap_certificate(iso_profile(m.kernel, m.pi, 7))
        assert not cert.m_nonempty and not cert.insufficient_horizon
        assert cert.r0 is None

    def test_star_sound(self):
        m = _star()
        cert = gap_certificate(iso_profile(m.kernel, m.pi, 50))
        assert cert.m_nonempty
        assert cert.r0 >= spectral_report(m.kernel, m.pi).rho - 1e-10

    def test_requires_exact(self):
        m = make_hypercube(3)
        prof = iso_profile(m.kernel, m.pi, 10, "candidates", list(m.cuts))
        with pytest.raises(InexactProfile):
            gap_certificate(prof)
        assert not gap_certificate(prof, require_exact=False).exact

    def test_kappa(self, rank_one):
        with pytest.raises(InputError):
            gap_certificate(iso_profile(*rank_one, 5), kappa=0.5)
        # larger kappa shortens the horizon
        assert certificate_horizon(0.5, 4.0) < certificate_horizon(0.5, 1.0)


class TestCubic:
    def test_values(self):
        assert cubic_gap_estimate(0.0) == 0.0
        assert abs(cubic_gap_estimate(0.5) - math.sqrt(2) / (128 * math.pi) * 0.125) < 1e-18
        assert abs(cubic_gap_estimate(0.5) - 4.3961e-4) < 5e-8
        assert abs(cubic_gap_estimate(1.0) - 3.5169e-3) < 5e-7

    def test_range(self):
        with pytest.raises(InputError):
            cubic_gap_estimate(-0.1)


class TestInequalities:
    def test_norm_bound_identity(self, identity2):
        k, pi = identity2
        lb, ok = norm_lower_bound_check(iso_profile(k, pi, 3), gelfand_sequence(k, pi, 3))
        assert np.allclose(lb, 0.75) and ok.all()

    def test_norm_bound_rank_one(self, rank_one):
        lb, ok = norm_lower_bound_check(iso_profile(*rank_one, 3), gelfand_sequence(*rank_one, 3))
        assert np.all(lb == 0) and ok.all()

    def test_lawler_sokal_rank_one(self, rank_one):
        assert lawler_sokal_check(spectral_report(*rank_one), 1.0)

    @pytest.mark.parametrize("a", [0.1, 0.5, 0.9, 1.0])
    def test_lawler_sokal_flip(self, a):
        k, pi = flip_chain(a)
        k1 = iso_profile(k, pi, 1).k_inf[0]
        assert abs(k1 - 2 * a) < 1e-14
        assert lawler_sokal_check(spectral_report(k, pi), k1)

    def test_flow_vs_adjoint(self):
        m = make_cycle(5, lazy=True)
        assert flow_vs_adjoint_check(iso_profile(m.kernel, m.pi, 10)).all()

    def test_inexact_rejected(self):
        m = make_hypercube(3)
        prof = iso_profile(m.kernel, m.pi, 5, "sweep")
        with pytest.raises(InexactProfile):
            flow_vs_adjoint_check(prof)


class TestPropagation:
    def test_rank_one(self, rank_one):
        r = propagation_check(iso_profile(*rank_one, 3), 1.0, 1)
        assert r.premise_held and r.conclusion_held and r.ok

    def test_hypercube(self):
        m = make_hypercube(4)
        prof = iso_profile(m.kernel, m.pi, 40)
        r = propagation_check(prof, float(prof.k_inf[19]), 20)
        assert r.ok

    def test_star(self):
        m = _star()
        prof = iso_profile(m.kernel, m.pi, 30)
        r = propagation_check(prof, 0.9 * float(prof.k_inf[-1]), 10)
        assert r.premise_held and r.conclusion_held

    def test_window_too_short(self, rank_one):
        with pytest.raises(PremiseUnverifiable):
            propagation_check(iso_profile(*rank_one, 5), 0.5, 4)

    def test_failed_premise_is_vacuous(self):
        m = make_cycle(7)
        r = propagation_check(iso_profile(m.kernel, m.pi, 13), 0.5, 7)
        assert not r.premise_held and r.ok


class TestMixing:
    def test_rank_one(self, rank_one):
        mix = mixing_profile(*rank_one, 4)
        assert np.all(mix.phi == 0) and np.all(mix.phi_direct < 1e-15)

    def test_cycle_no_decay(self):
        m = make_cycle(5)
        mix = mixing_profile(m.kernel, m.pi, 10)
        assert abs(mix.phi[4] - 0.8) < 1e-12 and abs(mix.phi[9] - 0.8) < 1e-12
        assert not mix.geometric

    def test_star_geometric(self):
        m = _star()
        mix = mixing_profile(m.kernel, m.pi, 40)
        assert mix.geometric and abs(mix.rate - 0.7) < 1e-6
        n = np.arange(1, 41)
        assert np.all(mix.phi <= mix.prefactor * mix.rate**n * (1 + 1e-9))
        assert np.max(np.abs(mix.phi - mix.phi_direct)) < 1e-12

    def test_heuristic_direct_on_selected_cut(self):
        m = make_hypercube(5)
        mix = mixing_profile(m.kernel, m.pi, 5, "sweep")
        assert not mix.exact
        assert np.max(np.abs(mix.phi - mix.phi_direct)) < 1e-12


class TestRates:
    def test_star(self):
        m = _star()
        rc = ergodicity_bound_checks(m.kernel, m.pi, orgc_estimate(m.kernel, m.pi, 200),
                                     spectral_report(m.kernel, m.pi))
        assert rc.rho_le_delta and rc.rho_le_sqrt_delta and rc.rho_le_sqrt_delta_delta_adjoint
        assert rc.sandwich_ok

    def test_rank_one(self, rank_one):
        rc = ergodicity_bound_checks(*rank_one, orgc_estimate(*rank_one, 20),
                                     spectral_report(*rank_one))
        assert rc.delta == 0 and rc.rho_le_delta and rc.rho_le_sqrt_delta

    def test_non_normal_skips_rho_le_delta(self):
        rng = np.random.default_rng(1)
        W = rng.random((5, 5))
        k = build_kernel(W / W.sum(1, keepdims=True))
        from isogap import stationary
        pi = stationary(k)
        rc = ergodicity_bound_checks(k, pi, orgc_estimate(k, pi, 100), spectral_report(k, pi))
        assert rc.rho_le_delta is None

    def test_sandwich_detects_growth(self, identity2):
        assert tv_sandwich_check(*identity2, np.array([1.0, 1.0, 1.0]))
        assert not tv_sandwich_check(*identity2, np.array([0.5, 1.0, 1.0]))


class TestReport:
    def test_star_all_ok_and_json(self):
        m = _star()
        prof = iso_profile(m.kernel, m.pi, 50)
        rep = bound_report(m.kernel, m.pi, prof, spectral_report(m.kernel, m.pi),
                           gelfand_sequence(m.kernel, m.pi, 50),
                           orgc_estimate(m.kernel, m.pi, 200))
        assert rep.all_ok
        d = json.loads(rep.to_json())
        assert d["certificate"]["m_nonempty"] and d["all_ok"]

    def test_heuristic_skips_exact_checks(self):
        m = make_hypercube(5)
        prof = iso_profile(m.kernel, m.pi, 10, "candidates", list(m.cuts))
        rep = bound_report(m.kernel, m.pi, prof, spectral_report(m.kernel, m.pi),
                           gelfand_sequence(m.kernel, m.pi, 10), with_mixing=False)
        assert rep.certificate is None and rep.flow_vs_adjoint_ok is None
        assert rep.all_ok
