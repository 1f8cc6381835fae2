import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaop.circuit.stateprep import (
    compute_omega_table,
    loaded_amplitudes,
    prepare_state,
    state_prep_fidelity,
)
from qaop.errors import InvalidInputError


def random_target(q, rng, signed=False):
    v = rng.random(1 << q) if not signed else rng.standard_normal(1 << q)
    return v / np.linalg.norm(v)


class TestOmegaTable:
    def test_basis_state_all_zero(self):
        t = compute_omega_table([1, 0, 0, 0], 8)
        assert all(np.all(o == 0) for o in t.omegas)

    def test_uniform_is_one_eighth(self):
        t = compute_omega_table(np.full(4, 0.5), 8)
        assert all(t.value(i, j) == 0.125 for i in range(2) for j in range(1 << i))

    def test_one_qubit_ratio(self):
        t = compute_omega_table([np.sqrt(0.75), 0.5], 16)
        assert t.value(0, 0) == pytest.approx(1 / 12, abs=2**-16)

    def test_range(self, rng):
        t = compute_omega_table(random_target(3, rng), 12)
        for o in t.omegas:
            assert np.all((o >= 0) & (o <= 2**12 // 4))

    def test_unnormalized(self):
        with pytest.raises(InvalidInputError):
            compute_omega_table([1.0, 1.0], 8)


class TestPrepare:
    def test_zero_table_gives_ground_state(self):
        amps, leak = loaded_amplitudes(prepare_state(compute_omega_table([1, 0, 0, 0], 6)))
        np.testing.assert_allclose(np.abs(amps), [1, 0, 0, 0], atol=1e-12)
        assert leak < 1e-20

    def test_uniform(self):
        assert state_prep_fidelity(np.full(4, 0.5), 16) >= 1 - 1e-6

    def test_signed(self, rng):
        target = random_target(3, rng, signed=True)
        assert state_prep_fidelity(target, 16) >= 1 - 1e-4

    def test_omega_register_cleared(self, rng):
        _, leak = loaded_amplitudes(prepare_state(compute_omega_table(random_target(3, rng), 10)))
        assert leak < 1e-20

    def test_trace_counts(self, rng):
        s = prepare_state(compute_omega_table(random_target(2, rng), 5), trace=True)
        kinds = [e.kind for e in s.trace]
        assert kinds.count("R") == 10 and kinds.count("QRAM") == 2 and kinds.count("V") == 2

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**31))
    def test_fidelity_high(self, q, seed):
        target = random_target(q, np.random.default_rng(seed))
        assert state_prep_fidelity(target, 16) >= 1 - 1e-4
