import numpy as np
import pytest

from cfrpnet.dataset import SpecimenRecord
from cfrpnet.mechanics import (
    ConfinementInputs,
    EmpiricalModelParams,
    confinement_stress,
    eurocode_strains,
    hoop_rupture_strain,
    lam_teng,
    miyauchi,
    nonlinear_model,
    predict_record,
    stiffness_ratio,
    strain_ratio,
)


class TestHoopRuptureStrain:
    def test_hand_value(self):
        # 40**0.125 = 1.58582, so 0.015 / 1.58582 = 0.0094588
        assert hoop_rupture_strain(0.015, 40.0) == pytest.approx(0.015 / 40.0 ** 0.125, rel=1e-12)
        assert hoop_rupture_strain(0.015, 40.0) == pytest.approx(0.009459, rel=1e-4)

    def test_unit_denominator(self):
        assert hoop_rupture_strain(0.012, 1.0) == 0.012

    def test_linear_in_fiber_strain(self):
        assert hoop_rupture_strain(0.03, 37.0) == pytest.approx(2 * hoop_rupture_strain(0.015, 37.0), rel=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            hoop_rupture_strain(0.0, 40.0)
        with pytest.raises(ValueError):
            hoop_rupture_strain(0.015, -1.0)


class TestStrainRatio:
    def test_equal_strains(self):
        assert strain_ratio(0.002, 0.002) == 1.0

    def test_hand_value(self):
        assert strain_ratio(0.01, 0.002) == pytest.approx(5.0, rel=1e-12)

    def test_zero_numerator(self):
        assert strain_ratio(0.0, 0.002) == 0.0

    def test_zero_denominator(self):
        with pytest.raises(ValueError):
            strain_ratio(0.01, 0.0)


class TestStiffnessRatio:
    def test_hand_value(self):
        # 2*231000*0.167 = 77154 over (30/0.002)*150 = 2250000
        expected = 77154.0 / 2250000.0
        assert stiffness_ratio(231000.0, 0.167, 30.0, 0.002, 150.0) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.0342907, rel=1e-4)

    def test_linear_in_thickness(self):
        base = stiffness_ratio(231000.0, 0.167, 30.0, 0.002, 150.0)
        assert stiffness_ratio(231000.0, 0.334, 30.0, 0.002, 150.0) == pytest.approx(2 * base, rel=1e-12)

    def test_inverse_in_diameter(self):
        base = stiffness_ratio(231000.0, 0.167, 30.0, 0.002, 150.0)
        assert stiffness_ratio(231000.0, 0.167, 30.0, 0.002, 300.0) == pytest.approx(base / 2, rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            stiffness_ratio(231000.0, 0.167, 30.0, -0.002, 150.0)


class TestConfinementStress:
    def test_hand_value(self):
        assert confinement_stress(231000.0, 0.01, 0.167, 150.0) == pytest.approx(5.1436, rel=1e-4)

    def test_zero_hoop_strain(self):
        assert confinement_stress(231000.0, 0.0, 0.167, 150.0) == 0.0

    def test_scaling(self):
        base = confinement_stress(231000.0, 0.01, 0.167, 150.0)
        assert confinement_stress(462000.0, 0.01, 0.167, 150.0) == pytest.approx(2 * base, rel=1e-12)
        assert confinement_stress(231000.0, 0.02, 0.167, 150.0) == pytest.approx(2 * base, rel=1e-12)
        assert confinement_stress(231000.0, 0.01, 0.334, 150.0) == pytest.approx(2 * base, rel=1e-12)
        assert confinement_stress(231000.0, 0.01, 0.167, 300.0) == pytest.approx(base / 2, rel=1e-12)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            confinement_stress(0.0, 0.01, 0.167, 150.0)


class TestStrengthModels:
    def test_unconfined_limits(self):
        assert lam_teng(30.0, 0.0) == 30.0
        assert miyauchi(30.0, 0.0) == 30.0

    def test_hand_values(self):
        assert lam_teng(30.0, 10.0) == pytest.approx(63.0, rel=1e-12)
        assert miyauchi(30.0, 10.0) == pytest.approx(64.85, rel=1e-12)
        assert lam_teng(30.0, 5.1436) == pytest.approx(46.974, rel=1e-4)

    def test_miyauchi_exceeds_lam_teng(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            fco = rng.uniform(10.0, 150.0)
            f_l = rng.uniform(0.01, 60.0)
            assert miyauchi(fco, f_l) > lam_teng(fco, f_l)

    def test_strictly_increasing_in_pressure(self):
        pressures = np.linspace(0.0, 40.0, 30)
        lt = [lam_teng(25.0, p) for p in pressures]
        mi = [miyauchi(25.0, p) for p in pressures]
        assert all(b > a for a, b in zip(lt, lt[1:]))
        assert all(b > a for a, b in zip(mi, mi[1:]))

    def test_deterministic(self):
        assert lam_teng(31.7, 8.3) == lam_teng(31.7, 8.3)


class TestNonlinearModel:
    def test_reduces_to_lam_teng(self):
        params = EmpiricalModelParams(k=3.3, n=1.0)
        rng = np.random.default_rng(1)
        for _ in range(200):
            fco = rng.uniform(10.0, 180.0)
            f_l = rng.uniform(0.0, 50.0)
            assert nonlinear_model(fco, f_l, params) == pytest.approx(lam_teng(fco, f_l), rel=1e-12)

    def test_matches_miyauchi_on_random_inputs(self):
        params = EmpiricalModelParams(k=3.485, n=1.0)
        rng = np.random.default_rng(2)
        for _ in range(1000):
            fco = rng.uniform(10.0, 180.0)
            f_l = rng.uniform(0.0, 50.0)
            assert nonlinear_model(fco, f_l, params) == pytest.approx(miyauchi(fco, f_l), rel=1e-12)

    def test_unconfined_limit(self):
        assert nonlinear_model(25.0, 0.0, EmpiricalModelParams(k=2.0, n=0.5)) == 25.0

    def test_hand_value(self):
        # 25 * (1 + 2 * (4/25)**0.5) = 25 * (1 + 2*0.4) = 45
        assert nonlinear_model(25.0, 4.0, EmpiricalModelParams(k=2.0, n=0.5)) == pytest.approx(45.0, rel=1e-12)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            EmpiricalModelParams(k=0.0, n=1.0)
        with pytest.raises(ValueError):
            EmpiricalModelParams(k=3.3, n=-1.0)


class TestEurocodeStrains:
    def test_hand_values(self):
        eps_c1, eps_cu1 = eurocode_strains(12.5)
        assert eps_c1 == pytest.approx(0.0015196, rel=1e-4)
        assert eps_cu1 == pytest.approx(0.0037408, rel=1e-4)

    def test_asymptotic_limits(self):
        eps_c1, eps_cu1 = eurocode_strains(1e6)
        assert eps_c1 == pytest.approx(0.0028, rel=1e-9)
        assert eps_cu1 == pytest.approx(0.0029, rel=1e-9)

    def test_bounded_over_practical_range(self):
        for fcm in np.linspace(1.0, 200.0, 200):
            eps_c1, eps_cu1 = eurocode_strains(float(fcm))
            assert 0.0 < eps_c1 < 0.004
            assert 0.0 < eps_cu1 < 0.004

    def test_domain_error(self):
        with pytest.raises(ValueError):
            eurocode_strains(0.0)


class TestConfinementInputs:
    def test_rupture_strain_priority(self):
        ci = ConfinementInputs(ef_mpa=231000.0, t=0.167, d=150.0, fco=30.0,
                               eps_f=0.015, eps_h_rup=0.01)
        assert ci.rupture_strain() == 0.01

    def test_derived_from_fiber_strain(self):
        ci = ConfinementInputs(ef_mpa=231000.0, t=0.167, d=150.0, fco=40.0, eps_f=0.015)
        assert ci.rupture_strain() == pytest.approx(hoop_rupture_strain(0.015, 40.0), rel=1e-12)

    def test_no_source(self):
        ci = ConfinementInputs(ef_mpa=231000.0, t=0.167, d=150.0, fco=30.0)
        with pytest.raises(ValueError, match="rupture-strain"):
            ci.lateral_pressure()


class TestPredictRecord:
    def _record(self, **overrides):
        base = dict(d=150.0, h=300.0, nt=0.167, ef=231.0, fco=30.0,
                    eco=0.2, ecc=1.2, fcc=45.0)
        base.update(overrides)
        return SpecimenRecord(**base)

    def test_chained_hand_value(self):
        fcc = predict_record(self._record(), model="lam_teng", eps_h_rup=0.01)
        assert fcc == pytest.approx(46.974, rel=1e-4)

    def test_zero_confinement_path(self):
        r = self._record()
        params = EmpiricalModelParams(k=2.0, n=0.7)
        for model, kwargs in [("lam_teng", {}), ("miyauchi", {}), ("nonlinear", {"params": params})]:
            assert predict_record(r, model=model, eps_h_rup=0.0, **kwargs) == r.fco

    def test_nonlinear_reduction_on_records(self):
        params = EmpiricalModelParams(k=3.3, n=1.0)
        rng = np.random.default_rng(3)
        for _ in range(50):
            r = self._record(nt=rng.uniform(0.1, 1.0), fco=rng.uniform(15.0, 90.0))
            eps = rng.uniform(0.004, 0.02)
            a = predict_record(r, model="nonlinear", params=params, eps_h_rup=eps)
            b = predict_record(r, model="lam_teng", eps_h_rup=eps)
            assert a == pytest.approx(b, rel=1e-12)

    def test_record_rupture_strain_used(self):
        r = self._record(eps_h_rup=0.01)
        assert predict_record(r) == pytest.approx(46.974, rel=1e-4)

    def test_explicit_overrides_record(self):
        r = self._record(eps_h_rup=0.01)
        assert predict_record(r, eps_h_rup=0.0) == r.fco

    def test_fiber_strain_fallback(self):
        r = self._record(fco=40.0)
        expected = lam_teng(40.0, confinement_stress(231000.0, hoop_rupture_strain(0.015, 40.0), 0.167, 150.0))
        assert predict_record(r, eps_f=0.015) == pytest.approx(expected, rel=1e-12)

    def test_no_rupture_source(self):
        with pytest.raises(ValueError, match="rupture-strain"):
            predict_record(self._record())

    def test_mapping_input(self):
        values = {"d": 150.0, "nt": 0.167, "ef": 231.0, "fco": 30.0}
        assert predict_record(values, eps_h_rup=0.01) == pytest.approx(46.974, rel=1e-4)

    def test_unknown_model(self):
        with pytest.raises(ValueError, match="unknown empirical model"):
            predict_record(self._record(), model="svm", eps_h_rup=0.01)

    def test_nonlinear_needs_params(self):
        with pytest.raises(ValueError, match="nonlinear"):
            predict_record(self._record(), model="nonlinear", eps_h_rup=0.01)


def test_formula_oracle_runtime():
    # the closed forms must be effectively instantaneous
    import time
    start = time.perf_counter()
    for _ in range(200):
        hoop_rupture_strain(0.015, 40.0)
        confinement_stress(231000.0, 0.01, 0.167, 150.0)
        lam_teng(30.0, 10.0)
        miyauchi(30.0, 10.0)
        eurocode_strains(12.5)
    elapsed = time.perf_counter() - start
    assert elapsed < 0.2  # 1000 calls, sub-millisecond each with big margin


def test_repeated_calls_agree_bitwise():
    args = (231000.0, 0.00912, 0.334, 203.0)
    assert confinement_stress(*args) == confinement_stress(*args)
    assert eurocode_strains(47.3) == eurocode_strains(47.3)
