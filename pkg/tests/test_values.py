import numpy as np
import pytest
from conftest import random_policy
from oracles import brute_force_best_response, cf_values_by_terminals, history_value, policy_lookup

from escherlab.games import InfoKey, UsageError
from escherlab.policy import TabularPolicy
from escherlab.values import (
    NoisyOracle,
    OracleValueFn,
    action_value,
    best_response,
    best_response_value,
    counterfactual_action_values,
    counterfactual_regrets,
    counterfactual_value,
    counterfactual_values,
    exploitability,
    exploitability_report,
    infoset_own_reach,
    node_values,
    noisy_lookup,
    reach_probabilities,
    reach_profile,
)


def kuhn_nash(tree, alpha=0.0):
    """The analytic Kuhn equilibrium family, parameterized by player 0's bluff rate."""
    table = {
        "0:J|": [1 - alpha, alpha], "0:Q|": [1, 0], "0:K|": [1 - 3 * alpha, 3 * alpha],
        "0:J|pb": [1, 0], "0:Q|pb": [2 / 3 - alpha, 1 / 3 + alpha], "0:K|pb": [0, 1],
        "1:J|b": [1, 0], "1:J|p": [2 / 3, 1 / 3], "1:Q|b": [2 / 3, 1 / 3], "1:Q|p": [1, 0],
        "1:K|b": [0, 1], "1:K|p": [0, 1],
    }
    pol = TabularPolicy()
    for k, v in table.items():
        pol[InfoKey.parse(k)] = v
    assert len(pol) == tree.num_infosets
    return pol


def _state(tree, *labels):
    node = 0
    for lab in labels:
        st = tree.state_of(node)
        acts = [a for a, _ in st.chance_outcomes()] if st.is_chance else st.legal_actions()
        (a,) = [a for a in acts if a.label == lab]
        node = int(tree.child_start[node]) + a.id
    return tree.state_of(node)


# ---- history and action values ------------------------------------------------

def test_terminal_history_value_is_its_utility(kuhn):
    z = _state(kuhn, "JK", "bet", "bet")
    oracle = OracleValueFn(kuhn)
    assert oracle.history_value(z, 0) == -2
    assert oracle.history_value(z, 1) == 2


@pytest.mark.parametrize("seed", [None, 1, 2])
def test_root_value_matches_brute_force_enumeration(kuhn, seed):
    flat = kuhn.uniform_policy() if seed is None else random_policy(kuhn, seed)
    oracle = OracleValueFn(kuhn, flat)
    root = kuhn.state_of(0)
    expected = history_value(root, policy_lookup(kuhn, flat), 0)
    assert oracle.history_value(root, 0) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("name", ["kuhn_poker", "leduc_poker"])
def test_zero_sum_on_random_histories(name, request):
    tree = request.getfixturevalue("kuhn" if name == "kuhn_poker" else "leduc")
    oracle = OracleValueFn(tree, random_policy(tree, 7))
    rng = np.random.default_rng(0)
    for node in rng.integers(0, tree.num_nodes, size=100):
        h = tree.state_of(int(node))
        assert oracle.history_value(h, 0) == -oracle.history_value(h, 1)


def test_action_values_average_to_history_value(leduc):
    flat = random_policy(leduc, 4)
    oracle = OracleValueFn(leduc, flat)
    rng = np.random.default_rng(1)
    decisions = np.flatnonzero(leduc.is_decision)
    for node in rng.choice(decisions, size=10, replace=False):
        h = leduc.state_of(int(node))
        i = h.current_player
        probs = flat[leduc.slots_of(leduc.infoset[node])]
        total = sum(p * action_value(oracle, h, a, i) for p, a in zip(probs, h.legal_actions()))
        assert total == pytest.approx(oracle.history_value(h, i), abs=1e-12)


def test_kuhn_king_facing_bet_call_value_by_hand(kuhn):
    oracle = OracleValueFn(kuhn)
    # at the history level the call is a won showdown for ante plus bet
    for deal in ("KJ", "KQ"):
        h = _state(kuhn, deal, "pass", "bet")
        assert oracle.action_value(h, 1, 0) == 2.0
    # counterfactually: each deal has chance 1/6 and player 1 bets with 1/2
    q = counterfactual_action_values(kuhn, kuhn.uniform_policy(), InfoKey(0, "K|pb"))
    assert q[1] == pytest.approx(2 * (1 / 6) * (1 / 2) * 2.0)
    assert q[0] == pytest.approx(2 * (1 / 6) * (1 / 2) * -1.0)


def test_action_into_terminal_equals_terminal_utility(kuhn):
    oracle = OracleValueFn(kuhn, random_policy(kuhn, 3))
    h = _state(kuhn, "QJ", "bet")
    assert oracle.action_value(h, 0, 1) == -1.0   # player 1 folds
    assert oracle.action_value(h, 1, 1) == -2.0   # calls and loses the showdown


def test_illegal_action_value_is_usage_error(kuhn):
    oracle = OracleValueFn(kuhn)
    with pytest.raises(UsageError):
        oracle.action_value(_state(kuhn, "QJ"), 5, 0)


def test_memo_is_transparent_and_invalidated(leduc):
    a, b = random_policy(leduc, 1), random_policy(leduc, 2)
    oracle = OracleValueFn(leduc, a)
    first = oracle.values0.copy()
    assert oracle.values0 is oracle.values0 and oracle.passes == 1
    assert np.array_equal(first, node_values(leduc, a))
    oracle.set_policy(b)
    assert np.array_equal(oracle.values0, node_values(leduc, b))
    assert oracle.passes == 2
    assert not np.array_equal(first, oracle.values0)


def test_vectorized_values_match_recursion_everywhere(kuhn):
    flat = random_policy(kuhn, 11)
    pol = policy_lookup(kuhn, flat)
    v = node_values(kuhn, flat)
    for node in range(kuhn.num_nodes):
        assert v[node] == pytest.approx(history_value(kuhn.state_of(node), pol, 0), abs=1e-12)


# ---- reach ------------------------------------------------------------------

def test_reach_profile_factorizes(leduc):
    flat = random_policy(leduc, 5)
    rng = np.random.default_rng(2)
    for node in rng.integers(0, leduc.num_nodes, size=50):
        for i in (0, 1):
            r = reach_profile(leduc, flat, int(node), i)
            assert r.eta == pytest.approx(r.eta_i * r.eta_minus_i, abs=1e-12)
            assert 0 <= r.eta <= 1 and 0 <= r.eta_i <= 1 and 0 <= r.eta_minus_i <= 1


@pytest.mark.parametrize("fixture", ["kuhn", "leduc"])
def test_own_reach_is_constant_within_an_infoset(fixture, request):
    tree = request.getfixturevalue(fixture)
    flat = random_policy(tree, 6)
    reach = reach_probabilities(tree, flat)
    own = infoset_own_reach(tree, flat)
    members = tree.member_nodes
    owners = tree.player[members]
    member_own = np.where(owners == 0, reach.player0[members], reach.player1[members])
    assert np.allclose(member_own, own[tree.infoset[members]], atol=1e-15, rtol=0)


# ---- counterfactual values --------------------------------------------------

def test_singleton_infoset_counterfactual_value(battleship):
    # the root placement decision is the only member of its infoset and has reach 1
    key = battleship.infoset_keys[battleship.infoset[0]]
    assert len(battleship.members(battleship.infoset[0])) == 1
    flat = random_policy(battleship, 0)
    assert counterfactual_value(battleship, flat, key, 0) == pytest.approx(OracleValueFn(battleship, flat).node_value(0, 0))


def test_counterfactual_value_unknown_key(kuhn):
    with pytest.raises(UsageError):
        counterfactual_value(kuhn, None, InfoKey(0, "X|"))


@pytest.mark.parametrize("seeds,fixture", [
    (range(20), "kuhn"),
    pytest.param(range(20), "leduc", marks=pytest.mark.slow),
])
def test_counterfactual_value_two_forms_agree(seeds, fixture, request):
    tree = request.getfixturevalue(fixture)
    root = tree.state_of(0)
    for seed in seeds:
        flat = random_policy(tree, 100 + seed, full_support=seed % 2 == 0)
        ours = counterfactual_values(tree, flat).infoset
        ref = cf_values_by_terminals(root, policy_lookup(tree, flat))
        for s, key in enumerate(tree.infoset_keys):
            assert ours[s] == pytest.approx(ref.get(key, 0.0), abs=1e-10), key


def test_kuhn_uniform_counterfactual_values_frozen(kuhn):
    ref = cf_values_by_terminals(kuhn.state_of(0), policy_lookup(kuhn, kuhn.uniform_policy()))
    for key, v in ref.items():
        assert counterfactual_value(kuhn, None, key) == pytest.approx(v, abs=1e-12)
    # frozen from the enumeration above
    assert ref[InfoKey(0, "K|")] == pytest.approx(0.375, abs=1e-12)
    assert ref[InfoKey(1, "J|b")] == pytest.approx(-0.25, abs=1e-12)


def test_counterfactual_regret_is_q_minus_v(kuhn):
    flat = random_policy(kuhn, 8)
    cf = counterfactual_values(kuhn, flat)
    r = counterfactual_regrets(kuhn, flat)
    for s in range(kuhn.num_infosets):
        sl = kuhn.slots_of(s)
        assert r[sl] == pytest.approx(cf.slot[sl] - cf.infoset[s], abs=1e-15)
        # v^c is the policy-weighted average of q^c
        assert flat[sl] @ cf.slot[sl] == pytest.approx(cf.infoset[s], abs=1e-12)


# ---- best response and exploitability -----------------------------------------

def test_best_response_to_nash_is_game_value(kuhn):
    ne = kuhn_nash(kuhn, alpha=0.2)
    assert best_response_value(kuhn, ne, 0) == pytest.approx(-1 / 18, abs=1e-9)
    assert best_response_value(kuhn, ne, 1) == pytest.approx(1 / 18, abs=1e-9)
    assert exploitability(kuhn, ne) == pytest.approx(0.0, abs=1e-9)


def test_best_response_against_always_fold(kuhn):
    flat = kuhn.uniform_policy()
    for s, key in enumerate(kuhn.infoset_keys):
        if key.player == 1 and key.key.endswith("b"):
            flat[kuhn.slots_of(s)] = [1.0, 0.0]
    value, response = best_response(kuhn, flat, 0)
    assert value >= 1.0
    # betting wins the ante outright; only the king does better by trapping
    assert value == pytest.approx((1 + 1 + 1.5) / 3, abs=1e-12)
    for card, act in (("J", [0.0, 1.0]), ("Q", [0.0, 1.0]), ("K", [1.0, 0.0])):
        s = kuhn.infoset_index(InfoKey(0, card + "|"))
        assert response[kuhn.slots_of(s)].tolist() == act


@pytest.mark.parametrize("seed", [None, 0, 1, 2, 3])
def test_best_response_matches_pure_strategy_search(kuhn, seed):
    flat = kuhn.uniform_policy() if seed is None else random_policy(kuhn, seed, full_support=seed % 2 == 0)
    for i in (0, 1):
        assert best_response_value(kuhn, flat, i) == pytest.approx(brute_force_best_response(kuhn, flat, i), abs=1e-12)


def test_uniform_kuhn_exploitability_frozen(kuhn):
    report = exploitability_report(kuhn, None)
    brute = sum(brute_force_best_response(kuhn, kuhn.uniform_policy(), i) for i in (0, 1))
    assert report.nash_conv == pytest.approx(brute, abs=1e-12)
    assert report.nash_conv == pytest.approx(0.9166666666666666, abs=1e-12)
    assert float(report) == report.nash_conv


def test_uniform_leduc_exploitability_frozen(leduc):
    assert exploitability(leduc, None) == pytest.approx(4.747222222222222, abs=1e-12)


def test_exploitability_nonnegative_and_br_dominates(kuhn, leduc):
    for tree, n in ((kuhn, 100), (leduc, 10)):
        for seed in range(n):
            flat = random_policy(tree, 1000 + seed, full_support=seed % 2 == 0)
            assert exploitability(tree, flat) >= -1e-12
            v0 = node_values(tree, flat)[0]
            assert best_response_value(tree, flat, 0) >= v0 - 1e-12
            assert best_response_value(tree, flat, 1) >= -v0 - 1e-12


def test_tabular_and_flat_inputs_agree(kuhn):
    flat = random_policy(kuhn, 9)
    tab = TabularPolicy.from_flat(kuhn, flat)
    assert exploitability(kuhn, tab) == exploitability(kuhn, flat)


# ---- noisy oracle -----------------------------------------------------------

def test_noise_free_oracle_is_identical(kuhn):
    oracle = OracleValueFn(kuhn, random_policy(kuhn, 1))
    noisy = NoisyOracle(oracle, 0.0, seed=0)
    for node in np.flatnonzero(~kuhn.is_terminal):
        assert np.array_equal(noisy.child_values(int(node), 0), oracle.child_values(int(node), 0))


def test_noise_is_bounded_and_frozen_within_an_iteration(leduc):
    oracle = OracleValueFn(leduc, random_policy(leduc, 2))
    noisy = NoisyOracle(oracle, 0.3, seed=1)
    rng = np.random.default_rng(0)
    internal = np.flatnonzero(~leduc.is_terminal)
    for node in rng.choice(internal, size=10_000):
        h = leduc.state_of(int(node)) if node % 97 == 0 else None
        q = noisy.child_values(int(node), 0)
        assert np.all(np.abs(q - oracle.child_values(int(node), 0)) <= 0.3)
        assert np.array_equal(q, noisy.child_values(int(node), 0))
        if h is not None:
            a = h.legal_actions()[0] if not h.is_chance else h.chance_outcomes()[0][0]
            assert noisy_lookup(noisy, h, a, 0) == q[0]


def test_noise_redraw_modes(kuhn):
    oracle = OracleValueFn(kuhn)
    per_iter = NoisyOracle(oracle, 0.5, seed=3)
    frozen = NoisyOracle(oracle, 0.5, seed=3, redraw="run")
    a, b = per_iter.child_values(0, 0), frozen.child_values(0, 0)
    assert np.array_equal(a, b)
    per_iter.new_iteration()
    frozen.new_iteration()
    assert not np.array_equal(per_iter.child_values(0, 0), a)
    assert np.array_equal(frozen.child_values(0, 0), b)


def test_noisy_oracle_rejects_bad_args(kuhn):
    with pytest.raises(UsageError):
        NoisyOracle(OracleValueFn(kuhn), -0.1)
    with pytest.raises(UsageError):
        NoisyOracle(OracleValueFn(kuhn), 0.1, redraw="never")
