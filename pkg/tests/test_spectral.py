import numpy as np
import pytest

from isogap import (
    StationaryMeasure,
    build_kernel,
    gelfand_sequence,
    iso_gap_estimator,
    iso_profile,
    make_cycle,
    make_hypercube,
    make_star,
    spectral_report,
    star_weights,
    stationary,
)
from isogap.errors import HorizonTooShort
from isogap.spectral import mean_zero_basis


def test_mean_zero_basis_orthonormal():
    pi = np.array([0.1, 0.2, 0.3, 0.4])
    U = mean_zero_basis(pi)
    assert np.allclose(U.T @ U, np.eye(3), atol=1e-14)
    assert np.allclose(np.sqrt(pi) @ U, 0, atol=1e-14)


class TestSpectralReport:
    def test_star(self):
        m = make_star(star_weights(0.3, 10))
        rep = spectral_report(m.kernel, m.pi)
        # true spectrum {1, a1 - 1, 0 x 8}
        assert abs(rep.rho - 0.7) < 1e-12
        assert np.sum(np.abs(rep.restricted) < 1e-10) == 8
        assert rep.method == "symmetrized-eigen"

    def test_hypercube8(self):
        m = make_hypercube(8)
        assert abs(spectral_report(m.kernel, m.pi).rho - 0.875) < 1e-10

    def test_cycle7(self):
        m = make_cycle(7)
        rep = spectral_report(m.kernel, m.pi)
        assert rep.method == "general-eigen"
        assert np.allclose(np.abs(rep.eigenvalues), 1, atol=1e-12)
        assert abs(rep.rho - 1) < 1e-12

    def test_matches_full_spectrum(self):
        rng = np.random.default_rng(0)
        W = rng.random((6, 6))
        k = build_kernel(W / W.sum(1, keepdims=True))
        pi = stationary(k)
        full = np.linalg.eigvals(np.asarray(k))
        rep = spectral_report(k, pi)
        assert np.allclose(np.sort_complex(full), np.sort_complex(rep.eigenvalues), atol=1e-12)

    def test_to_dict(self):
        m = make_cycle(3)
        d = spectral_report(m.kernel, m.pi).to_dict()
        assert d["class"]["normal"] and len(d["eigenvalues"]) == 3


class TestGelfand:
    def test_identity(self, identity2):
        assert np.allclose(gelfand_sequence(*identity2, 5).norms, 1)

    def test_star_normal(self):
        m = make_star(star_weights(0.3, 10))
        g = gelfand_sequence(m.kernel, m.pi, 12)
        assert np.allclose(g.norms, 0.7 ** np.arange(1, 13), atol=1e-10)

    def test_rank_one(self, rank_one):
        assert np.all(gelfand_sequence(*rank_one, 4).norms < 1e-15)

    def test_non_normal_exceeds_rho(self):
        P = np.array([[0, 1, 0], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]])
        k = build_kernel(P)
        pi = stationary(k)
        g = gelfand_sequence(k, pi, 60)
        rho = spectral_report(k, pi).rho
        assert g.norms[0] > rho
        assert abs(g.roots[-1] - rho) < 0.05

    def test_csv(self):
        m = make_cycle(3)
        text = gelfand_sequence(m.kernel, m.pi, 2).to_csv()
        assert text.splitlines()[0] == "n,norm,root"


class TestEstimator:
    def test_hypercube_ratio_exact(self):
        m = make_hypercube(8)
        prof = iso_profile(m.kernel, m.pi, 10, "candidates", [m.cuts[0]])
        est = iso_gap_estimator(prof, spectral_report(m.kernel, m.pi))
        assert np.allclose(est.ratio_sequence, 0.875, atol=1e-12)
        assert est.converged and abs(est.rho_estimate - 0.875) < 1e-12
        assert est.below_oracle

    def test_star_hub_ratio(self):
        m = make_star(star_weights(0.3, 10))
        hub = m.cuts[0].complement()
        prof = iso_profile(m.kernel, m.pi, 30, "candidates", [hub])
        est = iso_gap_estimator(prof)
        assert abs(est.ratio_sequence[-1] - 0.7) < 1e-10

    def test_rank_one(self, rank_one):
        est = iso_gap_estimator(iso_profile(*rank_one, 5))
        assert np.all(est.root_sequence == 0) and est.rho_estimate == 0

    def test_root_lower_bound_reversible(self):
        from isogap.proptest import random_reversible_chain
        rng = np.random.default_rng(11)
        P, w = random_reversible_chain(rng, 6)
        k, pi = build_kernel(P), StationaryMeasure(w)
        prof = iso_profile(k, pi, 40)
        rep = spectral_report(k, pi)
        est = iso_gap_estimator(prof, rep)
        assert est.below_oracle
        assert np.all(np.diff(est.root_sequence) >= -1e-10)

    def test_root_not_monotone_for_non_normal(self):
        # the root sequence is only a lower bound for normal chains
        P = np.array([[0, 1, 0], [0, 0, 1], [1 / 3, 1 / 3, 1 / 3]])
        k = build_kernel(P)
        pi = stationary(k)
        est = iso_gap_estimator(iso_profile(k, pi, 6), spectral_report(k, pi))
        assert est.root_sequence[0] > est.oracle_rho
        assert np.any(np.diff(est.root_sequence) < 0)

    def test_short_horizon(self, rank_one):
        with pytest.raises(HorizonTooShort):
            iso_gap_estimator(iso_profile(*rank_one, 3))
