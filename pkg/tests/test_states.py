import json
import math

import numpy as np
import pytest

from cvres.errors import InsufficientCutoffError, UsageError
from cvres.fock_core import total_photon_numbers
from cvres.states import (
    FockDiagonalState,
    StateSpec,
    basel_weights,
    exact_energy,
    gaussian_descriptor,
    make_state,
    thermal_weights,
)


class TestMakeState:
    def test_fock(self):
        rho = make_state(StateSpec("fock", {"n": 2}, 5))
        assert rho.diagonal()[2] == 1.0
        assert rho.trace_deficit == 0.0
        assert rho.energy == pytest.approx(2.0)

    def test_thermal_weights(self):
        rho = make_state(StateSpec("thermal", {"nu": 1}, 40))
        k = np.arange(40)
        assert np.allclose(rho.diagonal(), 0.5 * 0.5**k)
        assert rho.trace_deficit == pytest.approx(2.0**-40, rel=1e-6)

    def test_cat_overlap_symmetry(self):
        # overlap with |-1> equals overlap with |1> by the expansion's symmetry
        from cvres.fock_core import coherent_vector

        rho = make_state(StateSpec("cat", {"alpha": 1, "sign": "+"}, 30))
        vp, _ = coherent_vector(1.0, 30)
        vm, _ = coherent_vector(-1.0, 30)
        op = np.real(np.vdot(vp, rho.entries @ vp))
        om = np.real(np.vdot(vm, rho.entries @ vm))
        assert op == pytest.approx(om, abs=1e-13)
        assert rho.purity() >= 1 - 2 * rho.trace_deficit - 1e-12

    def test_cat_parity_exact(self):
        even = make_state(StateSpec("cat", {"alpha": 1.5, "sign": "+"}, 30))
        odd = make_state(StateSpec("cat", {"alpha": 1.5, "sign": "-"}, 30))
        assert np.all(even.diagonal()[1::2] == 0.0)
        assert np.all(odd.diagonal()[0::2] == 0.0)

    def test_squeezed_r0_is_vacuum(self):
        rho = make_state(StateSpec("squeezed", {"r": 0}, 10))
        assert rho.diagonal()[0] == 1.0

    def test_squeezed_amplitudes_formula(self):
        # rho[4,0] = c_2 * c_0 with c_n = sqrt(C(2n,n)) (-tanh(r)/2)^n / sqrt(cosh r)
        rho = make_state(StateSpec("squeezed", {"r": 0.8}, 50))
        t = math.tanh(0.8)
        expected = math.sqrt(math.comb(4, 2)) * (t / 2) ** 2 / math.cosh(0.8)
        assert np.real(rho.entries[4, 0]) == pytest.approx(expected, rel=1e-12)
        # adjacent even levels alternate in sign
        assert np.real(rho.entries[2, 0]) < 0.0

    def test_purity_of_pure_families(self):
        for spec in [
            StateSpec("coherent", {"alpha": 2}, 40),
            StateSpec("cat", {"alpha": 1, "sign": "-"}, 40),
            StateSpec("squeezed", {"r": 1}, 70),
        ]:
            rho = make_state(spec, deficit_tol=1e-6)
            assert rho.purity() >= 1 - 2 * rho.trace_deficit - 1e-12

    def test_noisy_fock(self):
        rho = make_state(StateSpec("noisy_fock", {"n": 1, "nu": 0, "p": 0.3}, 10))
        diag = rho.diagonal()
        assert diag[0] == pytest.approx(0.7)
        assert diag[1] == pytest.approx(0.3)
        assert rho.fock_diagonal

    def test_insufficient_cutoff_names_requirement(self):
        with pytest.raises(InsufficientCutoffError) as err:
            make_state(StateSpec("coherent", {"alpha": 3}, 10))
        assert err.value.required_cutoff > 10

    def test_renormalize_flag(self):
        rho = make_state(StateSpec("thermal", {"nu": 1}, 20), deficit_tol=1e-4, renormalize=True)
        assert rho.trace() == pytest.approx(1.0, abs=1e-14)
        assert rho.trace_deficit == 0.0

    def test_energy_tracks_exact_energy(self):
        for spec in [
            StateSpec("coherent", {"alpha": 1.5}, 50),
            StateSpec("thermal", {"nu": 2}, 90),
            StateSpec("cat", {"alpha": 1, "sign": "+"}, 40),
            StateSpec("squeezed", {"r": 0.8}, 60),
            StateSpec("noisy_fock", {"n": 2, "nu": 1, "p": 0.4}, 60),
        ]:
            rho = make_state(spec, deficit_tol=1e-6)
            assert rho.energy == pytest.approx(exact_energy(spec), abs=1e-5)


class TestBasel:
    def test_sparse_representation(self):
        state = make_state(StateSpec("basel", {"n_max": 20}, 2**20 + 1))
        assert isinstance(state, FockDiagonalState)
        assert state.indices[-1] == 2**20

    def test_trace_partial_sum(self):
        _, w, deficit = basel_weights(20)
        partial = (6 / math.pi**2) * sum(1 / (n + 1) ** 2 for n in range(21))
        assert float(np.sum(w)) == pytest.approx(partial, abs=1e-15)
        assert deficit == pytest.approx(1 - partial, abs=1e-15)

    def test_insufficient_cutoff(self):
        with pytest.raises(InsufficientCutoffError) as err:
            make_state(StateSpec("basel", {"n_max": 5}, 10))
        assert err.value.required_cutoff == 2**5 + 1


class TestStateSpecJson:
    def test_round_trip(self):
        spec = StateSpec("cat", {"alpha": 1.5, "sign": "+"}, 40)
        again = StateSpec.from_json(spec.to_json())
        assert again == spec

    def test_field_names(self):
        doc = json.loads(StateSpec("noisy_fock", {"n": 1, "nu": 0.5, "p": 0.9}, 30).to_json())
        assert set(doc) == {"family", "params", "cutoff"}
        assert set(doc["params"]) == {"n", "nu", "p"}

    def test_rejects_unknown_family(self):
        with pytest.raises(UsageError):
            StateSpec("noon", {"n": 1}, 10)

    def test_validates_params(self):
        with pytest.raises(UsageError):
            StateSpec("noisy_fock", {"n": 1, "nu": 0, "p": 1.5}, 10)
        with pytest.raises(UsageError):
            StateSpec("cat", {"alpha": 1, "sign": "x"}, 10)


def quadrature_moments(rho):
    d = rho.cutoff
    a = np.diag(np.sqrt(np.arange(1, d)), k=1)
    x = (a + a.T.conj()) / math.sqrt(2)
    p = (a - a.T.conj()) / (1j * math.sqrt(2))
    rvec = [x, np.asarray(p)]
    ent = rho.entries
    s = np.array([np.real(np.trace(ent @ r)) for r in rvec])
    v = np.empty((2, 2))
    for i in range(2):
        for j in range(2):
            anti = rvec[i] @ rvec[j] + rvec[j] @ rvec[i]
            v[i, j] = np.real(np.trace(ent @ anti)) - 2 * s[i] * s[j]
    return s, v


class TestGaussianDescriptor:
    def test_vacuum(self):
        gd = gaussian_descriptor(StateSpec("coherent", {"alpha": 0}, 10))
        assert np.allclose(gd.s, 0.0)
        assert np.allclose(gd.V, np.eye(2))

    def test_thermal(self):
        gd = gaussian_descriptor(StateSpec("thermal", {"nu": 1}, 10))
        assert np.allclose(gd.V, 3 * np.eye(2))

    def test_coherent_means(self):
        gd = gaussian_descriptor(StateSpec("coherent", {"alpha": [1.0, 0.5]}, 10))
        assert np.allclose(gd.s, math.sqrt(2) * np.array([1.0, 0.5]))

    @pytest.mark.parametrize(
        "spec",
        [
            StateSpec("coherent", {"alpha": 1.5}, 60),
            StateSpec("coherent", {"alpha": 3.0}, 80),
            StateSpec("thermal", {"nu": 3}, 120),
            StateSpec("squeezed", {"r": 1.0}, 90),
            StateSpec("squeezed", {"r": 1.5}, 210),
        ],
    )
    def test_moments_match_construction(self, spec):
        rho = make_state(spec, deficit_tol=1e-6).renormalized()
        s_num, v_num = quadrature_moments(rho)
        gd = gaussian_descriptor(spec)
        assert np.max(np.abs(s_num - gd.s)) < 1e-6
        assert np.max(np.abs(v_num - gd.V)) < 1e-6

    def test_rejects_non_gaussian(self):
        with pytest.raises(UsageError):
            gaussian_descriptor(StateSpec("cat", {"alpha": 1, "sign": "+"}, 10))

    def test_uncertainty_validation(self):
        from cvres.states import GaussianDescriptor

        with pytest.raises(UsageError):
            GaussianDescriptor(np.zeros(2), 0.5 * np.eye(2))
