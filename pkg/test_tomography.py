import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dynmap.errors import ConfigError
from dynmap.models import eval_family, make_family
from dynmap.superop import ProcessMatrix, max_norm, pure_state, singular_values
from dynmap.tomography import (
    INCONCLUSIVE,
    INVERTIBLE,
    NON_INVERTIBLE,
    ProbeSet,
    TomographyRun,
    default_probes,
    invertibility_verdict,
    reconstruct_process,
    simulate_outputs,
    verdict_thresholds,
)

from test_models import zoo

RANK = {NON_INVERTIBLE: 0, INCONCLUSIVE: 1, INVERTIBLE: 2}


def test_default_probes():
    probes = default_probes(2)
    assert len(probes) == 4
    assert singular_values(probes.stack).min > 0.2
    with pytest.raises(ConfigError):
        default_probes(3)


def test_probe_set_rejects_duplicates():
    states = list(default_probes().states)
    states[3] = states[2]
    with pytest.raises(ConfigError):
        ProbeSet(tuple(states))
    with pytest.raises(ConfigError):
        ProbeSet(tuple(states[:3]))


def test_noiseless_amplitude_damping_output():
    f = make_family("amplitude-damping", gamma=1.0, t_max=3.0)
    run = simulate_outputs(f, 0.5)
    excited = run.outputs[1].mat
    assert excited[1, 1].real == pytest.approx(math.exp(-1), abs=1e-12)


def test_identity_outputs_equal_probes():
    run = simulate_outputs(make_family("identity", t_max=1.0), 0.3)
    for probe, out in zip(run.probes.states, run.outputs):
        assert np.allclose(probe.mat, out.mat, atol=1e-15)


def test_noise_is_seed_deterministic():
    f = make_family("amplitude-damping", gamma=1.0, t_max=3.0)
    a = simulate_outputs(f, 1.0, noise_sigma=1e-2, seed=11)
    b = simulate_outputs(f, 1.0, noise_sigma=1e-2, seed=11)
    c = simulate_outputs(f, 1.0, noise_sigma=1e-2, seed=12)
    assert all(np.array_equal(x.mat, y.mat) for x, y in zip(a.outputs, b.outputs))
    assert not all(np.array_equal(x.mat, y.mat) for x, y in zip(a.outputs, c.outputs))
    assert a.to_json() == b.to_json()
    for out in a.outputs:
        assert np.trace(out.mat).real == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("f", zoo(), ids=lambda f: f"{f.name}-{getattr(f.params, 'preset', '')}")
def test_noiseless_reconstruction_matches_family(f):
    rng = np.random.default_rng(17)
    for t in rng.uniform(f.t_min, f.t_max, size=16):
        A_rec = reconstruct_process(simulate_outputs(f, t))
        assert max_norm(A_rec.mat - eval_family(f, t).mat) < 1e-10


def test_noisy_reconstruction_and_verdicts():
    sigma = 1e-3
    f = make_family("amplitude-damping", gamma=0.25, t_max=4.0)
    errors, invertible = [], 0
    for seed in range(100):
        A_rec = reconstruct_process(simulate_outputs(f, 2.0, noise_sigma=sigma, seed=seed))
        errors.append(max_norm(A_rec.mat - eval_family(f, 2.0).mat))
        invertible += invertibility_verdict(A_rec, sigma).verdict == INVERTIBLE
    assert np.median(errors) < 1e-2
    assert invertible >= 95


def test_cutoff_after_tstar_is_non_invertible():
    f = make_family("decay-g", preset="linear-cutoff", tstar=1.0, t_max=2.0)
    verdict = invertibility_verdict(reconstruct_process(simulate_outputs(f, 1.5)), 0.0)
    assert verdict.verdict == NON_INVERTIBLE
    assert verdict.margin < 1e-10


def test_noiseless_amplitude_damping_is_invertible():
    f = make_family("amplitude-damping", gamma=1.0, t_max=3.0)
    verdict = invertibility_verdict(reconstruct_process(simulate_outputs(f, 0.5)), 0.0)
    assert verdict.verdict == INVERTIBLE


def test_verdict_band():
    A = ProcessMatrix(np.diag([1.0, 1.0, 1.0, 0.05]))
    verdict = invertibility_verdict(A, 1e-3)
    assert verdict.verdict == INCONCLUSIVE
    assert verdict.margin == pytest.approx(0.05)
    assert (verdict.tau_low, verdict.tau_high) == pytest.approx((1e-2, 1e-1))


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1.0), st.lists(st.floats(0.0, 0.1), min_size=2, max_size=6))
def test_verdicts_degrade_monotonically_with_noise(smallest, sigmas):
    A = ProcessMatrix(np.diag([1.0, 1.0, 1.0, smallest]))
    ranks = [RANK[invertibility_verdict(A, s).verdict] for s in sorted(sigmas)]
    assert all(a >= b for a, b in zip(ranks, ranks[1:]))
    for s in sigmas:
        low, high = verdict_thresholds(s)
        assert low <= high


def test_run_json_roundtrip():
    f = make_family("mixed-pauli", a=0.5, r=1.0, t_max=5.0)
    run = simulate_outputs(f, 1.0, noise_sigma=1e-3, seed=4)
    back = TomographyRun.from_json(run.to_json())
    assert back.to_json() == run.to_json()
    assert np.allclose(reconstruct_process(back).mat, reconstruct_process(run).mat)
    with pytest.raises(ConfigError):
        TomographyRun.from_json('{"t": 1.0}')


def test_run_rejects_mismatched_outputs():
    probes = default_probes()
    with pytest.raises(ConfigError):
        TomographyRun(probes, 0.0, (pure_state([1, 0]),))
