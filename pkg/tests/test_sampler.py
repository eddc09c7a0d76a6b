import json

import numpy as np
import pytest
from scipy.stats import kstest

from gnmh.errors import (
    BurnTooLarge,
    CorruptCheckpoint,
    DimensionMismatch,
    InitialGuessOutsideDomain,
    IOFailure,
    NotPSD,
    SingularProposal,
)
from gnmh.model import ModelHandle, linear_handle, quickstart_handle
from gnmh.sampler import Sampler


def make_quickstart(seed=0):
    s = Sampler([0.5], quickstart_handle(), seed=seed)
    s.set_prior([0.0], [[1.0]])
    return s


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def test_init_evaluates_once():
    s = make_quickstart()
    assert s.call_count == 1
    assert s.n_samples == 0


def test_init_outside_domain():
    h = ModelHandle(lambda x, a: (x[0] > 0, [x[0]], [[1.0]]), None, dim_in=1)
    with pytest.raises(InitialGuessOutsideDomain):
        Sampler([-1.0], h, seed=0)


def test_init_singular_flat_prior_at_zero_jacobian():
    with pytest.raises(SingularProposal):
        Sampler([0.0], quickstart_handle(), seed=0)


def test_set_prior_validation():
    s = make_quickstart()
    with pytest.raises(NotPSD):
        s.set_prior([0.0], [[-0.1]])
    with pytest.raises(DimensionMismatch):
        s.set_prior([0.0, 0.0], np.eye(2))


def test_set_prior_costs_no_model_call():
    s = make_quickstart()
    before = s.call_count
    s.set_prior([0.1], [[2.0]])
    assert s.call_count == before


# ---------------------------------------------------------------------------
# counters and invariants
# ---------------------------------------------------------------------------


def test_counter_identities_after_each_run():
    s = make_quickstart(seed=3)
    s.set_static(2, 0.3)
    for chunk in (50, 75, 125):
        s.run_sample(chunk)
        counts = s.step_count
        assert s.n_accepted == sum(v for k, v in counts.items() if k != -1)
        assert s.n_samples == s.n_accepted + counts[-1]
        assert s.accept_rate == pytest.approx(s.n_accepted / s.n_samples)


def test_call_count_closed_form_without_backoff():
    s = make_quickstart(seed=1)
    s.run_sample(321)
    # one call at the initial guess plus one per proposal
    assert s.call_count == 1 + 321


def test_chain_rows_always_inside_domain():
    def half(x, args):
        if x[0] <= 0:
            return 0, None, None
        return 1, [(x[0] * x[0] - 1.0) / 0.5], [[2 * x[0] / 0.5]]

    s = Sampler([1.0], ModelHandle(half, None, dim_in=1), seed=5)
    s.set_prior([0.0], [[1.0]])
    s.run_sample(2000)
    assert np.all(s.chain[:, 0] > 0)


def test_resume_matches_single_run():
    a = make_quickstart(seed=42)
    a.run_sample(200)
    b = make_quickstart(seed=42)
    b.run_sample(100)
    b.run_sample(100)
    assert a.n_samples == b.n_samples == 200
    np.testing.assert_array_equal(a.chain, b.chain)


def test_divisions_do_not_change_the_chain():
    a = make_quickstart(seed=9)
    a.run_sample(120, divs=1)
    b = make_quickstart(seed=9)
    b.run_sample(120, divs=7)
    np.testing.assert_array_equal(a.chain, b.chain)


def test_seeded_runs_bit_identical():
    a = make_quickstart(seed=1234)
    b = make_quickstart(seed=1234)
    a.set_dynamic(2)
    b.set_dynamic(2)
    a.run_sample(300)
    b.run_sample(300)
    assert a.chain.tobytes() == b.chain.tobytes()


def test_visual_prints_percentages(capsys):
    s = make_quickstart(seed=0)
    s.run_sample(10, divs=2, visual=True)
    out = capsys.readouterr().out
    assert "50.0%" in out and "100.0%" in out


# ---------------------------------------------------------------------------
# burn
# ---------------------------------------------------------------------------


def test_burn_semantics():
    s = make_quickstart(seed=7)
    s.run_sample(100)
    full = s.chain.copy()
    s.burn(0)
    assert s.n_samples == 100
    s.burn(30)
    assert s.n_samples == 70
    assert s.burned == 30
    np.testing.assert_array_equal(s.chain, full[30:])
    s.burn(70)
    assert s.n_samples == 0
    with pytest.raises(BurnTooLarge):
        s.burn(1)


def test_burn_keeps_counters():
    s = make_quickstart(seed=8)
    s.run_sample(100)
    accepted = s.n_accepted
    counts = s.step_count
    s.burn(40)
    assert s.n_accepted == accepted
    assert s.step_count == counts
    # rate still refers to all 100 attempted transitions
    assert s.accept_rate == pytest.approx(accepted / 100)


# ---------------------------------------------------------------------------
# posterior_at
# ---------------------------------------------------------------------------


def test_posterior_at_values():
    s = make_quickstart()
    assert s.posterior_at([0.0]) == pytest.approx(np.exp(-2.0))
    # consistency of ratios with the log posterior difference
    r = s.posterior_at([0.3]) / s.posterior_at([0.8])
    lp = lambda x: -0.5 * x**2 - 0.5 * ((x**2 - 1.0) / 0.5) ** 2
    assert r == pytest.approx(np.exp(lp(0.3) - lp(0.8)))


def test_posterior_at_outside_domain_is_zero():
    h = ModelHandle(lambda x, a: (x[0] > 0, [x[0]], [[1.0]]), None, dim_in=1)
    s = Sampler([1.0], h, seed=0)
    assert s.posterior_at([-1.0]) == 0.0


# ---------------------------------------------------------------------------
# exactness on the linear model
# ---------------------------------------------------------------------------


def test_linear_model_chain_is_iid_from_posterior():
    A = np.array([[1.0, 0.3], [0.0, 1.2], [0.5, -0.4]])
    b = np.array([0.5, -0.2, 0.1])
    H = np.array([[2.0, 0.4], [0.4, 1.5]])
    m = np.array([0.3, 0.1])
    s = Sampler([0.0, 0.0], linear_handle(A, b), seed=2024)
    s.set_prior(m, H)
    n = 100_000
    s.run_sample(n)
    assert s.accept_rate == 1.0

    P = H + A.T @ A
    mu = np.linalg.solve(P, H @ m + A.T @ b)
    cov = np.linalg.inv(P)
    for j in range(2):
        stat = kstest(s.chain[:, j], "norm", args=(mu[j], np.sqrt(cov[j, j]))).statistic
        assert stat < 1.63 / np.sqrt(n)


# ---------------------------------------------------------------------------
# checkpointing
# ---------------------------------------------------------------------------


def test_checkpoint_round_trip_continues_identically(tmp_path):
    path = tmp_path / "state.json"
    a = make_quickstart(seed=77)
    a.set_static(1, 0.2)
    a.run_sample(150)
    a.save_checkpoint(path)
    a.run_sample(150)

    b = Sampler.load_checkpoint(path, quickstart_handle())
    b.run_sample(150)
    np.testing.assert_array_equal(a.chain, b.chain)
    assert a.n_accepted == b.n_accepted
    assert a.call_count == b.call_count
    assert a.step_count == b.step_count


def test_checkpoint_restores_prior_policy_and_counters(tmp_path):
    path = tmp_path / "state.json"
    a = make_quickstart(seed=5)
    a.set_dynamic(2)
    a.run_sample(80)
    a.burn(10)
    a.save_checkpoint(path)

    b = Sampler.load_checkpoint(path, quickstart_handle())
    assert b.policy == a.policy
    np.testing.assert_array_equal(b.prior.mean, a.prior.mean)
    np.testing.assert_array_equal(b.prior.precision, a.prior.precision)
    assert b.burned == 10
    assert b.n_samples == 70
    assert b.accept_rate == a.accept_rate


def test_checkpoint_file_bytes_stable(tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    a = make_quickstart(seed=13)
    a.run_sample(40)
    a.save_checkpoint(p1)
    b = Sampler.load_checkpoint(p1, quickstart_handle())
    b.save_checkpoint(p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_checkpoint_wrong_version_rejected(tmp_path):
    path = tmp_path / "state.json"
    s = make_quickstart(seed=1)
    s.run_sample(10)
    s.save_checkpoint(path)
    doc = json.loads(path.read_text())
    doc["format_version"] = 2
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptCheckpoint):
        Sampler.load_checkpoint(path, quickstart_handle())


def test_checkpoint_tampering_detected(tmp_path):
    path = tmp_path / "state.json"
    s = make_quickstart(seed=1)
    s.run_sample(10)
    s.save_checkpoint(path)
    doc = json.loads(path.read_text())
    doc["counters"]["n_accepted"] += 1
    path.write_text(json.dumps(doc))
    with pytest.raises(CorruptCheckpoint):
        Sampler.load_checkpoint(path, quickstart_handle())


def test_checkpoint_dimension_mismatch(tmp_path):
    path = tmp_path / "state.json"
    s = make_quickstart(seed=1)
    s.run_sample(10)
    s.save_checkpoint(path)
    two_dim = ModelHandle(lambda x, a: (1, [x[0], x[1]], np.eye(2)), None, dim_in=2)
    with pytest.raises(DimensionMismatch):
        Sampler.load_checkpoint(path, two_dim)


def test_checkpoint_missing_file(tmp_path):
    with pytest.raises(IOFailure):
        Sampler.load_checkpoint(tmp_path / "nope.json", quickstart_handle())


def test_checkpoint_numbers_have_17_significant_digits(tmp_path):
    path = tmp_path / "state.json"
    s = make_quickstart(seed=2)
    s.run_sample(5)
    s.save_checkpoint(path)
    text = path.read_text()
    # a third of the double-well samples sit near 0.94...; check a row
    doc = json.loads(text)
    row = np.asarray(doc["chain"], dtype=float)
    np.testing.assert_array_equal(row, s.chain)


def test_safe_mode_writes_checkpoint_every_division(tmp_path):
    path = tmp_path / "ck.json"
    s = make_quickstart(seed=3)
    counts = []
    original = Sampler.save_checkpoint

    def counting(self, p):
        counts.append(self.n_samples)
        return original(self, p)

    Sampler.save_checkpoint = counting
    try:
        s.run_sample(100, divs=4, safe=path)
    finally:
        Sampler.save_checkpoint = original
    assert counts == [25, 50, 75, 100, 100]
    assert path.exists()


def test_interrupted_safe_run_resumes_bit_identically(tmp_path):
    path_a = tmp_path / "a.json"
    path_b = tmp_path / "b.json"

    a = make_quickstart(seed=99)
    a.set_static(1, 0.3)
    a.run_sample(1000, divs=10, safe=path_a)
    final_a = path_a.read_bytes()

    class Interrupted(RuntimeError):
        pass

    b = make_quickstart(seed=99)
    b.set_static(1, 0.3)
    writes = {"n": 0}
    original = Sampler.save_checkpoint

    def interrupting(self, p):
        original(self, p)
        writes["n"] += 1
        if writes["n"] == 3:
            raise Interrupted

    Sampler.save_checkpoint = interrupting
    try:
        with pytest.raises(Interrupted):
            b.run_sample(1000, divs=10, safe=path_b)
    finally:
        Sampler.save_checkpoint = original

    c = Sampler.load_checkpoint(path_b, quickstart_handle())
    assert c.n_samples == 300
    c.run_sample(700, divs=7, safe=path_b)
    np.testing.assert_array_equal(a.chain, c.chain)
    assert a.chain.tobytes() == c.chain.tobytes()
    assert path_b.read_bytes() == final_a
