import numpy as np
import pytest

from escherlab.policy import regret_matching_flat
from escherlab.tree import build_tree


@pytest.fixture(scope="session")
def kuhn():
    return build_tree("kuhn_poker")


@pytest.fixture(scope="session")
def leduc():
    return build_tree("leduc_poker")


@pytest.fixture(scope="session")
def battleship():
    return build_tree("battleship")


@pytest.fixture(scope="session")
def liars_dice():
    return build_tree("liars_dice")


def random_policy(tree, seed, full_support=True):
    """Random joint policy as a flat slot vector."""
    rng = np.random.default_rng(seed)
    if full_support:
        x = rng.random(tree.num_slots) + 0.05
        sums = np.add.reduceat(x, tree.infoset_offset)[tree.slot_infoset]
        return x / sums
    return regret_matching_flat(tree, rng.normal(size=tree.num_slots))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for n in sorted(verdicts):
            terminalreporter.write_line(verdicts[n])
