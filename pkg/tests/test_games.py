import itertools

import numpy as np
import pytest

from escherlab.games import (
    CHANCE,
    ConfigurationError,
    GameSpec,
    InfoKey,
    UsageError,
    apply_action,
    chance_outcomes,
    info_key,
    initial_state,
    legal_actions,
    load_game,
)
from escherlab.tree import build_tree


def _play(state, *labels):
    for lab in labels:
        (a,) = [x for x in (state.legal_actions() if not state.is_chance else [o for o, _ in state.chance_outcomes()])
                if x.label == lab]
        state = state.apply(a)
    return state


# ---- Kuhn -------------------------------------------------------------------

def test_kuhn_root_is_uniform_chance_over_ordered_deals():
    root = initial_state("kuhn_poker")
    assert root.current_player == CHANCE
    outcomes = chance_outcomes(root)
    assert len(outcomes) == 6
    assert {a.label for a, _ in outcomes} == {"".join(p) for p in itertools.permutations("JQK", 2)}
    assert all(p == pytest.approx(1 / 6) for _, p in outcomes)


def test_kuhn_first_decision_has_pass_and_bet():
    s = _play(initial_state("kuhn_poker"), "KQ")
    assert [a.label for a in legal_actions(s)] == ["pass", "bet"]
    assert [a.id for a in legal_actions(s)] == [0, 1]


@pytest.mark.parametrize("deal,moves,u0", [
    ("KQ", ("pass", "pass"), 1.0),
    ("JK", ("bet", "pass"), 1.0),
    ("KJ", ("bet", "pass"), 1.0),
    ("JK", ("bet", "bet"), -2.0),
    ("QJ", ("pass", "bet", "pass"), -1.0),
    ("QJ", ("pass", "bet", "bet"), 2.0),
])
def test_kuhn_terminal_payoffs(deal, moves, u0):
    z = _play(initial_state("kuhn_poker"), deal, *moves)
    assert z.is_terminal
    assert z.returns() == (u0, -u0)


def test_kuhn_key_hides_opponent_card():
    a = _play(initial_state("kuhn_poker"), "KJ")
    b = _play(initial_state("kuhn_poker"), "KQ")
    assert info_key(a) == info_key(b)
    assert info_key(a).player == 0


def test_info_key_rejects_chance_and_terminal():
    root = initial_state("kuhn_poker")
    with pytest.raises(UsageError):
        info_key(root)
    z = _play(root, "KQ", "pass", "pass")
    with pytest.raises(UsageError):
        info_key(z)


def test_legal_actions_on_terminal_is_usage_error():
    z = _play(initial_state("kuhn_poker"), "KQ", "pass", "pass")
    with pytest.raises(UsageError):
        legal_actions(z)


def test_chance_outcomes_on_decision_is_usage_error():
    s = _play(initial_state("kuhn_poker"), "KQ")
    with pytest.raises(UsageError):
        chance_outcomes(s)


def test_illegal_action_is_usage_error():
    s = _play(initial_state("kuhn_poker"), "KQ")
    with pytest.raises(UsageError):
        apply_action(s, 2)
    with pytest.raises(UsageError):
        apply_action(s, -1)


def test_apply_action_is_deterministic_and_pure():
    s = _play(initial_state("leduc_poker"), "Ks", "Jh")
    a = apply_action(s, 1)
    b = apply_action(s, 1)
    assert a == b and info_key(a) == info_key(b)
    assert s.history == _play(initial_state("leduc_poker"), "Ks", "Jh").history


# ---- Leduc ------------------------------------------------------------------

def test_leduc_public_card_reveal_is_uniform_over_remaining_cards():
    s = _play(initial_state("leduc_poker"), "Js", "Qs", "call", "call")
    assert s.is_chance
    outcomes = chance_outcomes(s)
    assert sorted(a.label for a, _ in outcomes) == ["Jh", "Kh", "Ks", "Qh"]
    assert sum(p for _, p in outcomes) == pytest.approx(1.0, abs=1e-12)
    assert all(p == pytest.approx(0.25) for _, p in outcomes)


def _hand_leduc_round_legal(seq):
    """Legal actions in one Leduc betting round from its action string (c/r/f)."""
    raises = seq.count("r")
    facing = seq.endswith("r")
    acts = (["fold"] if facing else []) + ["call"]
    if raises < 2:
        acts.append("raise")
    return acts


def _hand_round_sequences():
    out = []

    def rec(seq):
        if seq.endswith("f"):
            return
        if len(seq) >= 2 and seq.endswith("c"):
            return
        out.append(seq)
        for a in _hand_leduc_round_legal(seq):
            rec(seq + a[0])

    rec("")
    return out


def test_leduc_round_one_legal_actions_match_hand_written_tree():
    deal = _play(initial_state("leduc_poker"), "Ks", "Qh")
    seqs = _hand_round_sequences()
    assert sorted(seqs) == sorted(["", "c", "r", "cr", "rr", "crr"])
    for seq in seqs:
        s = deal
        for ch in seq:
            s = _play(s, {"c": "call", "r": "raise", "f": "fold"}[ch])
        assert [a.label for a in legal_actions(s)] == _hand_leduc_round_legal(seq), seq


def test_leduc_facing_bet_offers_fold_call_raise():
    s = _play(initial_state("leduc_poker"), "Ks", "Qh", "raise")
    assert [a.label for a in legal_actions(s)] == ["fold", "call", "raise"]


def test_leduc_key_contains_private_public_and_bets():
    s = _play(initial_state("leduc_poker"), "Ks", "Qh", "raise", "call", "Js")
    key = info_key(s)
    assert key.player == 0
    assert "Ks" in key.key and "Js" in key.key and "rc" in key.key
    assert "Qh" not in key.key


def test_leduc_rejects_bad_params():
    with pytest.raises(ConfigurationError):
        load_game("leduc_poker", {"players": 3})
    with pytest.raises(ConfigurationError):
        load_game("leduc_poker", {"suits": 3})


# ---- Liar's Dice ------------------------------------------------------------

def test_liars_dice_root_rolls_a_fair_die():
    root = initial_state("liars_dice")
    assert root.is_chance
    out = chance_outcomes(root)
    assert len(out) == 6 and all(p == pytest.approx(1 / 6) for _, p in out)


def test_liars_dice_bids_then_liar():
    s = _play(initial_state("liars_dice"), "3", "6")
    assert len(legal_actions(s)) == 12
    s = _play(s, "1-4")
    labels = [a.label for a in legal_actions(s)]
    assert labels[0] == "1-5" and labels[-1] == "Liar"


def test_liars_dice_sixes_are_wild():
    # one 2 and one 6: there are two 2s, so the bid stands and the caller loses
    z = _play(initial_state("liars_dice"), "2", "6", "2-2", "Liar")
    assert z.returns() == (1.0, -1.0)
    z = _play(initial_state("liars_dice"), "2", "3", "2-2", "Liar")
    assert z.returns() == (-1.0, 1.0)


# ---- Battleship ---------------------------------------------------------------

def test_battleship_root_is_player0_placement():
    root = initial_state("battleship")
    assert root.current_player == 0
    assert len(legal_actions(root)) == 4


def test_battleship_one_prior_shot_leaves_three_cells():
    s = initial_state("battleship")
    s = apply_action(apply_action(s, 0), 0)
    s = apply_action(s, 0)           # player 0 shoots
    s = apply_action(s, 0)           # player 1 shoots
    assert s.current_player == 0
    assert len(legal_actions(s)) == 3


def test_battleship_keys_never_reveal_opponent_placement():
    # every placement of player 1 looks the same to player 0
    base = apply_action(initial_state("battleship"), 0)
    keys = {info_key(apply_action(base, a)) for a in range(4)}
    assert len(keys) == 1
    # opponent fleets h_0_0 and v_0_0 both leave (1, 1) as water: after
    # player 0 shoots there and player 1 replies, player 0 cannot tell them apart
    def after(fleet):
        s = _play(initial_state("battleship"), "h_1_0", fleet, "s_1_1", "s_0_0")
        return info_key(s)

    assert after("h_0_0") == after("v_0_0")


def test_battleship_params_validated():
    with pytest.raises(ConfigurationError):
        load_game("battleship", {"board_width": 0})
    with pytest.raises(ConfigurationError):
        load_game("battleship", {"ship_sizes": [3]})
    with pytest.raises(ConfigurationError):
        load_game("battleship", {"bogus": 1})
    g = load_game("battleship", {"ship_sizes": "[2]", "ship_values": "[2]"})
    assert g.payoff_range == 2


def test_unknown_game_is_configuration_error():
    with pytest.raises(ConfigurationError):
        load_game("dark_chess")


# ---- whole-tree invariants --------------------------------------------------

@pytest.mark.parametrize("name,infosets,terminal_count", [
    ("kuhn_poker", 12, 30),
    ("leduc_poker", 936, 5520),
    ("battleship", 3286, None),
])
def test_tree_sizes(name, infosets, terminal_count):
    tree = build_tree(name)
    assert tree.num_infosets == infosets
    if terminal_count is not None:
        assert int(tree.is_terminal.sum()) == terminal_count


@pytest.mark.parametrize("name", ["kuhn_poker", "battleship", "leduc_poker"])
def test_zero_sum_and_payoff_range(name):
    tree = build_tree(name)
    game = load_game(name)
    for z in np.flatnonzero(tree.is_terminal)[:: max(1, tree.num_nodes // 4000)]:
        u0, u1 = tree.state_of(int(z)).returns()
        assert u0 + u1 == 0
        assert abs(u0) <= game.payoff_range


@pytest.mark.parametrize("name", ["kuhn_poker", "leduc_poker", "battleship"])
def test_perfect_recall_by_enumeration(name):
    """Members of an infoset share legal actions and the owner's own action prefix."""
    game = load_game(name)
    seen = {}

    def walk(state, own):
        if state.is_terminal:
            return
        if state.is_chance:
            for a, _ in state.chance_outcomes():
                walk(state.apply(a), own)
            return
        p = state.current_player
        key = state.info_key()
        sig = (tuple(a.label for a in state.legal_actions()), own[p])
        assert seen.setdefault(key, sig) == sig, key
        for a in state.legal_actions():
            nxt = list(own)
            nxt[p] = own[p] + ((str(key), a.id),)
            walk(state.apply(a), tuple(nxt))

    walk(game.initial_state(), ((), ()))
    assert len(seen) == build_tree(name).num_infosets


def test_info_key_roundtrip_text():
    k = InfoKey(1, "Q|pb")
    assert InfoKey.parse(str(k)) == k


def test_game_spec_hash_freezes_lists():
    a = GameSpec("battleship", {"ship_sizes": [2]})
    b = GameSpec("battleship", {"ship_sizes": [2]})
    assert a == b and hash(a) == hash(b)


# ---- OpenSpiel cross-checks ---------------------------------------------------

def _openspiel():
    return pytest.importorskip("pyspiel")


OPENSPIEL_PARAMS = {
    "kuhn_poker": {},
    "leduc_poker": {},
    "liars_dice": {},
    "battleship": {"board_width": 2, "board_height": 2, "ship_sizes": "[2]", "ship_values": "[2]",
                   "num_shots": 3, "allow_repeated_shots": False},
}


def _lockstep(name, ps):
    """Walk our tree and OpenSpiel's together; return (our key, OS infostate) pairs
    for every decision node and (our u0, OS u0) for every terminal."""
    tree = build_tree(name)
    og = ps.load_game(name, OPENSPIEL_PARAMS[name])
    pairs = []
    payoffs = []
    stack = [(0, og.new_initial_state())]
    while stack:
        node, os_state = stack.pop()
        if tree.is_terminal[node]:
            assert os_state.is_terminal()
            payoffs.append((tree.u0[node], os_state.returns()[0]))
            continue
        lo = int(tree.child_start[node])
        if tree.is_decision[node]:
            pairs.append((tree.infoset[node], os_state.information_state_string()))
        for k in range(int(tree.num_children[node])):
            nxt = os_state.clone()
            if tree.is_chance[node] and name == "kuhn_poker":
                label = tree.state_of(node).chance_outcomes()[k][0].label
                for card in label:
                    nxt.apply_action("JQK".index(card))
            elif tree.is_chance[node]:
                nxt.apply_action(nxt.chance_outcomes()[k][0])
            else:
                nxt.apply_action(nxt.legal_actions()[k])
            stack.append((lo + k, nxt))
    return pairs, payoffs


@pytest.mark.parametrize("name", [
    "kuhn_poker", "leduc_poker", "battleship",
    pytest.param("liars_dice", marks=pytest.mark.slow),
])
def test_infoset_partition_matches_openspiel(name):
    ps = _openspiel()
    pairs, payoffs = _lockstep(name, ps)
    ours_to_os = {}
    os_to_ours = {}
    for ours, theirs in pairs:
        assert ours_to_os.setdefault(ours, theirs) == theirs
        assert os_to_ours.setdefault(theirs, ours) == ours
    assert all(a == b for a, b in payoffs)


# Uniform-profile NashConv, computed once with OpenSpiel's exploitability module
# and with the brute-force best response in test_values; frozen here.
UNIFORM_NASHCONV = {
    "kuhn_poker": 0.9166666666666666,
    "leduc_poker": 4.747222222222222,
    "battleship": 1.0,
    "liars_dice": 1.5614886463844795,
}


@pytest.mark.parametrize("name", ["kuhn_poker", "leduc_poker", "battleship"])
def test_uniform_nashconv_matches_openspiel(name):
    ps = _openspiel()
    from open_spiel.python import policy as os_policy
    from open_spiel.python.algorithms import exploitability as os_expl

    og = ps.load_game(name, OPENSPIEL_PARAMS[name])
    value = os_expl.nash_conv(og, os_policy.UniformRandomPolicy(og))
    assert value == pytest.approx(UNIFORM_NASHCONV[name], abs=1e-12)
