"""Protocol simulation, leakage accounting, rate formula, and sampling tails."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamebox import diqkd, games
from gamebox.errors import (
    BudgetExceededError,
    ProtocolViolationError,
    ValidationError,
)

# ---------------------------------------------------------------------------
# parameters, budget, channel
# ---------------------------------------------------------------------------


def test_protocol_params_sizes():
    p = diqkd.ProtocolParams(n=100, alpha=0.5, gamma=0.2, delta=0.05, seed=0)
    assert p.s_size == 50
    assert p.t_size == 10
    tiny = diqkd.ProtocolParams(n=10, alpha=0.01, gamma=0.01, delta=0.0, seed=0)
    assert tiny.s_size == 1  # floors never collapse to an empty set
    assert tiny.t_size == 1


def test_protocol_params_validation():
    with pytest.raises(ValidationError):
        diqkd.ProtocolParams(n=0, alpha=0.5, gamma=0.2, delta=0.0, seed=0)
    with pytest.raises(ValidationError):
        diqkd.ProtocolParams(n=10, alpha=0.5, gamma=0.2, delta=0.5, seed=0)
    with pytest.raises(ValidationError):
        diqkd.ProtocolParams(n=10, alpha=0.5, gamma=0.2, delta=0.0, seed=-1)


def test_budget_metering():
    b = diqkd.LeakageBudget(10)
    b.debit(4)
    b.debit(6)
    assert b.used_bits == 10
    with pytest.raises(BudgetExceededError):
        b.debit(1)
    with pytest.raises(ValidationError):
        b.debit(-1)


def test_channel_routing_and_lock():
    ch = diqkd.LeakageChannel(diqkd.LeakageBudget(8))
    ch.send("alice_box", "eve", 3, "101")
    ch.send("eve", "bob_box", 2, "01")
    assert ch.remaining == 3
    assert ch.inbox("eve") == [("alice_box", 3, "101")]
    assert ch.inbox("bob_box") == [("eve", 2, "01")]
    with pytest.raises(ValidationError):
        ch.send("alice_box", "alice_box", 1)
    with pytest.raises(ValidationError):
        ch.send("alice_box", "mallory", 1)
    ch.lock()
    with pytest.raises(ProtocolViolationError):
        ch.send("alice_box", "eve", 1)


# ---------------------------------------------------------------------------
# boxes
# ---------------------------------------------------------------------------


def test_conditional_table_is_perfect_and_unbiased():
    q = diqkd._ms_conditional_table()
    assert q.shape == (3, 3, 4, 4)
    np.testing.assert_allclose(q.sum(axis=(2, 3)), np.ones((3, 3)), atol=1e-12)
    ms = games.magic_square()
    V = ms.dense_V()
    for x in range(3):
        for y in range(3):
            winning = sum(q[x, y, a, b] for a in range(4) for b in range(4) if V[a, b, x, y])
            assert winning == pytest.approx(1.0, abs=1e-9)
            # Alice's row is uniform whatever the inputs (no-signalling)
            np.testing.assert_allclose(q[x, y].sum(axis=1), np.full(4, 0.25), atol=1e-9)


def _win_rate(A, B, xs, ys):
    r = np.arange(xs.size)
    return float((A[r, ys] == B[r, xs]).mean())


def test_honest_boxes_win_exactly_without_noise():
    rng = np.random.default_rng(1)
    xs, ys = rng.integers(0, 3, 5000), rng.integers(0, 3, 5000)
    boxes = diqkd.honest_boxes(0.0, seed=42)
    A, B = boxes.produce(xs, ys, diqkd.LeakageChannel(diqkd.LeakageBudget(0)))
    assert _win_rate(A, B, xs, ys) == 1.0
    assert np.all(A.sum(axis=1) % 2 == 0)
    assert np.all(B.sum(axis=1) % 2 == 1)


def test_honest_boxes_noise_calibration():
    # replacing Bob's row with a uniform odd row half-agrees, so the win
    # rate is 1 - 2 delta * 1/2 = 1 - delta
    delta, m = 0.12, 40000
    rng = np.random.default_rng(7)
    xs, ys = rng.integers(0, 3, m), rng.integers(0, 3, m)
    boxes = diqkd.honest_boxes(delta, seed=9)
    A, B = boxes.produce(xs, ys, diqkd.LeakageChannel(diqkd.LeakageBudget(0)))
    rate = _win_rate(A, B, xs, ys)
    sigma = math.sqrt(delta * (1 - delta) / m)
    assert abs(rate - (1 - delta)) < 4 * sigma


def test_baseline_cheater_wins_two_thirds_of_cells():
    boxes = diqkd.baseline_cheating_boxes()
    xs, ys = np.repeat(np.arange(3), 3), np.tile(np.arange(3), 3)
    A, B = boxes.produce(xs, ys, diqkd.LeakageChannel(diqkd.LeakageBudget(0)))
    # "000" against "001" agree except when Alice is probed at position 2
    assert _win_rate(A, B, xs, ys) == pytest.approx(6 / 9)


def test_test_set_cheater_spends_five_bits_per_round():
    xs, ys = np.array([0, 1, 2, 0]), np.array([1, 2, 0, 1])
    ch = diqkd.LeakageChannel(diqkd.LeakageBudget(11))  # affords two rounds
    boxes = diqkd.test_set_cheating_boxes(guess_count=4)
    A, B = boxes.produce(xs, ys, ch)
    assert ch.budget.used_bits == 10
    r = np.arange(2)
    assert np.all(A[r, ys[:2]] == B[r, xs[:2]])  # leaked rounds agree
    assert np.all(B[2:] == games.ODD_BITS[0])  # unleaked rounds fall back


# ---------------------------------------------------------------------------
# abort rule and full runs
# ---------------------------------------------------------------------------


def test_abort_test_threshold_boundary():
    # t=4, delta=0.25: need ceil((1 - 0.5) * 4) = 2 matches
    A = np.repeat(games.EVEN_BITS[0][None, :], 4, axis=0)
    xs = np.zeros(4, dtype=int)
    ys = np.zeros(4, dtype=int)
    agree = games.ODD_BITS[diqkd._odd_row_with_bit(0, 0)]
    clash = games.ODD_BITS[diqkd._odd_row_with_bit(0, 1)]
    two = np.stack([agree, agree, clash, clash])
    one = np.stack([agree, clash, clash, clash])
    assert diqkd.abort_test(A, two, xs, ys, 0.25)
    assert not diqkd.abort_test(A, one, xs, ys, 0.25)


def test_run_protocol_noiseless_keys_match():
    params = diqkd.ProtocolParams(n=300, alpha=0.5, gamma=0.4, delta=0.0, seed=5)
    for run_index in range(5):
        rec = diqkd.run_protocol(params, diqkd.honest_boxes(0.0, [5, run_index]), run_index=run_index)
        assert not rec.aborted
        assert rec.qber == 0.0
        assert rec.mismatch_S == 0.0
        np.testing.assert_array_equal(rec.K_A, rec.K_B)
        assert rec.K_A.size == params.s_size
        assert rec.leaked_bits == 0


def test_run_protocol_sets_are_nested_and_sorted():
    params = diqkd.ProtocolParams(n=120, alpha=0.4, gamma=0.3, delta=0.0, seed=2)
    rec = diqkd.run_protocol(params, diqkd.honest_boxes(0.0, 3))
    assert np.all(np.diff(rec.S) > 0)
    assert np.all(np.diff(rec.T) > 0)
    assert set(rec.T).issubset(set(rec.S))
    assert rec.S.size == params.s_size
    assert rec.T.size == params.t_size


def test_run_protocol_deterministic():
    params = diqkd.ProtocolParams(n=80, alpha=0.5, gamma=0.25, delta=0.02, seed=11)
    a = diqkd.run_protocol(params, diqkd.honest_boxes(0.02, 4), run_index=1)
    b = diqkd.run_protocol(params, diqkd.honest_boxes(0.02, 4), run_index=1)
    np.testing.assert_array_equal(a.S, b.S)
    assert a.qber == b.qber
    assert a.aborted == b.aborted


class _BadParityBoxes(diqkd.BoxPair):
    def produce(self, xs, ys, channel):
        n = xs.size
        return np.zeros((n, 3), dtype=np.uint8), np.zeros((n, 3), dtype=np.uint8)


def test_run_protocol_rejects_invalid_rows():
    params = diqkd.ProtocolParams(n=10, alpha=0.5, gamma=0.5, delta=0.0, seed=0)
    with pytest.raises(ValidationError):
        diqkd.run_protocol(params, _BadParityBoxes())  # Bob rows have even parity


def test_baseline_cheater_usually_aborts_but_leaky_cheater_passes():
    params = diqkd.ProtocolParams(n=200, alpha=0.5, gamma=0.5, delta=0.1, seed=21)
    base_passes = sum(
        not diqkd.run_protocol(params, diqkd.baseline_cheating_boxes(), run_index=r).aborted
        for r in range(30)
    )
    assert base_passes <= 3  # 2/3 win rate is far below the 0.8 threshold

    leaks = 0
    for r in range(30):
        budget = diqkd.LeakageBudget(5 * params.n)
        rec = diqkd.run_protocol(
            params,
            diqkd.test_set_cheating_boxes(guess_count=params.n),
            budget=budget,
            run_index=r,
        )
        leaks += int(not rec.aborted)
        assert rec.leaked_bits == 5 * params.n
    assert leaks == 30  # full leakage defeats the test every time


def test_scripted_adversary_end_to_end():
    adversary = diqkd.load_adversary(
        {
            "rounds": [
                {"from": "alice_box", "to": "eve", "bits": 4, "function_id": "input_prefix"},
                {"from": "eve", "to": "bob_box", "bits": 3, "function_id": "zeros"},
            ]
        }
    )
    params = diqkd.ProtocolParams(n=40, alpha=0.5, gamma=0.5, delta=0.0, seed=1)
    rec = diqkd.run_protocol(
        params, diqkd.honest_boxes(0.0, 2), adversary=adversary, budget=diqkd.LeakageBudget(7)
    )
    assert rec.leaked_bits == 7
    with pytest.raises(BudgetExceededError):
        diqkd.run_protocol(
            params, diqkd.honest_boxes(0.0, 2), adversary=adversary, budget=diqkd.LeakageBudget(6)
        )


def test_load_adversary_forms(tmp_path):
    doc = {"rounds": [{"from": "eve", "to": "alice_box", "bits": 2, "function_id": "ones"}]}
    import json

    from_dict = diqkd.load_adversary(doc)
    from_text = diqkd.load_adversary(json.dumps(doc))
    path = tmp_path / "adv.json"
    path.write_text(json.dumps(doc))
    from_file = diqkd.load_adversary(str(path))
    assert from_dict == from_text == from_file
    with pytest.raises(ValidationError):
        diqkd.load_adversary({"rounds": [{"from": "eve", "to": "eve", "bits": 1, "function_id": "ones"}]})
    with pytest.raises(ValidationError):
        diqkd.load_adversary({"rounds": [{"from": "eve", "to": "alice_box", "bits": 1, "function_id": "nope"}]})
    with pytest.raises(ValidationError):
        diqkd.load_adversary({"no_rounds": []})


def test_adversary_payload_functions():
    xs = np.array([2, 1])
    ys = np.array([0, 1])
    assert diqkd.ADVERSARY_FUNCTIONS["zeros"]("eve", 3, xs, ys) == "000"
    assert diqkd.ADVERSARY_FUNCTIONS["ones"]("eve", 2, xs, ys) == "11"
    # inputs serialise two bits per round, most significant round first
    assert diqkd.ADVERSARY_FUNCTIONS["input_prefix"]("alice_box", 4, xs, ys) == "1001"
    assert diqkd.ADVERSARY_FUNCTIONS["input_prefix"]("bob_box", 3, xs, ys) == "000"


# ---------------------------------------------------------------------------
# rate formula and tails
# ---------------------------------------------------------------------------


def _rate_oracle(alpha, gamma, delta, c, n, nu, beta, PrE):
    def h2(x):
        return 0.0 if x in (0.0, 1.0) else -x * math.log2(x) - (1 - x) * math.log2(1 - x)

    return alpha * (nu - beta * (math.sqrt(c) + math.sqrt(alpha)) - 2 * h2(4 * delta) - gamma) * n - math.log2(1 / PrE)


def test_key_rate_matches_hand_arithmetic():
    points = [
        (0.04, 0.01, 0.001, 0.001, 10**6, 0.3, 0.5, 1.0),
        (0.25, 0.0, 0.0, 0.0, 1000, 0.3, 1.0, 1.0),
        (0.5, 0.1, 0.05, 0.2, 5000, 0.8, 0.7, 0.9),
    ]
    for alpha, gamma, delta, c, n, nu, beta, PrE in points:
        out = diqkd.key_rate(
            diqkd.KeyRateParams(alpha=alpha, gamma=gamma, delta=delta, c=c, n=n, nu=nu, beta=beta, PrE=PrE)
        )
        expect = _rate_oracle(alpha, gamma, delta, c, n, nu, beta, PrE)
        assert out["hmin_minus_h0_bits"] == pytest.approx(expect, rel=1e-12, abs=1e-12)
        assert out["rate_per_copy"] == pytest.approx(expect / n, rel=1e-12, abs=1e-15)
        assert out["eps_smooth"] == pytest.approx(2 * 2 ** (-8 * delta**2 * alpha * n) / PrE, rel=1e-12)


def test_key_rate_validation():
    with pytest.raises(ValidationError):
        diqkd.KeyRateParams(alpha=0.0, gamma=0.1, delta=0.01, c=0.0, n=100)
    with pytest.raises(ValidationError):
        diqkd.KeyRateParams(alpha=0.5, gamma=0.1, delta=0.2, c=0.0, n=100)  # delta > 1/8
    # gamma = 0 stays legal: the formula needs no test rounds
    diqkd.KeyRateParams(alpha=0.5, gamma=0.0, delta=0.01, c=0.0, n=100)


def test_chernoff_abort_bound_arithmetic():
    # 2 delta^2 gamma alpha n = 2 * 0.0025 * 0.5 * 0.2 * 10^4 = 5
    assert diqkd.chernoff_abort_bound(0.05, 0.5, 0.2, 10**4) == pytest.approx(2.0**-5, rel=1e-12)
    with pytest.raises(ValidationError):
        diqkd.chernoff_abort_bound(0.05, 0.0, 0.2, 100)


def test_serfling_mc_exact_small_case():
    # n=10, t=5, eps=0.2, pattern with 5 good rounds: the joint event needs
    # >= 4 good in the subset; hypergeometric count 26/252
    n, gamma, eps = 10, 0.5, 0.2
    pattern = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0, 0])
    exact = (math.comb(5, 4) * math.comb(5, 1) + math.comb(5, 5)) / math.comb(10, 5)
    out = diqkd.serfling_mc(n, gamma, eps, pattern, trials=40000, seed=1)
    sigma = math.sqrt(exact * (1 - exact) / 40000)
    assert abs(out["empirical"] - exact) < 4 * sigma
    assert out["bound"] == pytest.approx(2 ** (-2 * eps**2 * gamma * n), rel=1e-12)


def test_serfling_mc_degenerate_patterns():
    out = diqkd.serfling_mc(100, 0.2, 0.2, np.ones(100), 1000, 0)
    assert out["empirical"] == 0.0  # the whole string is never "bad"
    out = diqkd.serfling_mc(100, 0.2, 0.2, np.zeros(100), 1000, 0)
    assert out["empirical"] == 0.0  # no subset can look good
    out = diqkd.serfling_mc(5, 0.1, 0.2, np.zeros(5), 50, 0)
    assert out["empirical"] == 0.0  # empty test set


def test_serfling_mc_callable_pattern():
    def fresh(rng):
        return rng.integers(0, 2, 12)

    out = diqkd.serfling_mc(12, 0.5, 0.25, fresh, trials=2000, seed=3)
    assert 0.0 <= out["empirical"] <= 1.0
    again = diqkd.serfling_mc(12, 0.5, 0.25, fresh, trials=2000, seed=3)
    assert out == again


def test_serfling_mc_validation():
    with pytest.raises(ValidationError):
        diqkd.serfling_mc(10, 0.5, 0.7, np.zeros(10), 100, 0)
    with pytest.raises(ValidationError):
        diqkd.serfling_mc(10, 0.5, 0.2, np.zeros(7), 100, 0)  # wrong length


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def test_expand_grid_order():
    cells = diqkd.expand_grid({"a": [1, 2], "b": [10, 20]})
    assert cells == [
        {"a": 1, "b": 10},
        {"a": 1, "b": 20},
        {"a": 2, "b": 10},
        {"a": 2, "b": 20},
    ]


def test_sweep_rows_without_runs():
    rows = diqkd.sweep([{"n": 100, "alpha": 0.5, "gamma": 0.1, "delta": 0.01}], 0, 0)
    (row,) = rows
    assert tuple(row) == diqkd.SWEEP_COLUMNS
    assert math.isnan(row["abort_freq"]) and math.isnan(row["qber"])
    assert row["PrE_est"] == 1.0
    oracle = _rate_oracle(0.5, 0.1, 0.01, 0.0, 100, 0.01, 1.0, 1.0)
    assert row["rate_bits"] == pytest.approx(oracle, rel=1e-12)


def test_sweep_with_runs_feeds_pre_estimate():
    rows = diqkd.sweep(
        [{"n": 200, "alpha": 0.5, "gamma": 0.2, "delta": 0.0}], runs_per_cell=10, seed=4
    )
    (row,) = rows
    assert row["abort_freq"] == 0.0
    assert row["qber"] == 0.0
    assert row["PrE_est"] == 1.0
    again = diqkd.sweep(
        [{"n": 200, "alpha": 0.5, "gamma": 0.2, "delta": 0.0}], runs_per_cell=10, seed=4
    )
    assert rows == again


def test_sweep_validation():
    with pytest.raises(ValidationError):
        diqkd.sweep([{"n": 100, "alpha": 0.5, "gamma": 0.1, "delta": 0.01, "zeta": 1}], 0, 0)
    with pytest.raises(ValidationError):
        diqkd.sweep([{"n": 100, "alpha": 0.5}], 0, 0)  # missing keys
    with pytest.raises(ValidationError):
        diqkd.sweep([], -1, 0)
