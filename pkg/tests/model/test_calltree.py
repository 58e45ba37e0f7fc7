"""Tests for the gpact_sim.model.calltree file."""
import pytest
from gpact_sim.errors import UnresolvablePathError
from gpact_sim.model.calltree import CallExecutionTree, CallPath, FunctionCallSpec
from gpact_sim.model.chain import make_address


def spec(chain, name):
    return FunctionCallSpec(chain, make_address(name, chain), name)


@pytest.fixture
def trade_shaped_tree():
    """Root with one child that has three leaf children."""
    return CallExecutionTree(
        spec(1, "root"),
        [
            CallExecutionTree(
                spec(2, "mid"),
                [
                    CallExecutionTree(spec(3, "a")),
                    CallExecutionTree(spec(4, "b")),
                    CallExecutionTree(spec(5, "c")),
                ],
            )
        ],
    )


def test_call_path():
    root = CallPath.root()
    assert root.is_root
    assert str(root) == "root"
    assert root.depth == 0

    path = CallPath.parse("1.2")
    assert path.indices == (1, 2)
    assert str(path) == "1.2"
    assert path.depth == 2
    assert path.parent == CallPath((1,))
    assert path.parent.parent == root
    assert root.child(3) == CallPath((3,))
    assert CallPath.parse("root") == root
    assert CallPath.parse(" 1 ") == CallPath((1,))

    with pytest.raises(ValueError):
        root.parent
    with pytest.raises(ValueError):
        CallPath((0,))
    with pytest.raises(ValueError):
        CallPath.parse("1.x")


def test_call_path_ordering():
    paths = [CallPath.parse(p) for p in ["2", "1.1", "1", "root"]]
    assert [str(p) for p in sorted(paths)] == ["root", "1", "1.1", "2"]


def test_resolve(trade_shaped_tree):
    assert trade_shaped_tree.resolve(CallPath.root()) is trade_shaped_tree
    assert trade_shaped_tree.resolve(CallPath.parse("1")).node.function == "mid"
    assert trade_shaped_tree.resolve(CallPath.parse("1.3")).node.chain == 5
    with pytest.raises(UnresolvablePathError):
        trade_shaped_tree.resolve(CallPath.parse("2"))
    with pytest.raises(UnresolvablePathError):
        trade_shaped_tree.resolve(CallPath.parse("1.4"))
    with pytest.raises(UnresolvablePathError):
        trade_shaped_tree.resolve(CallPath.parse("1.1.1"))


def test_traversals(trade_shaped_tree):
    assert [str(p) for p, _ in trade_shaped_tree.walk()] == ["root", "1", "1.1", "1.2", "1.3"]
    assert [str(p) for p in trade_shaped_tree.post_order()] == ["1.1", "1.2", "1.3", "1", "root"]
    levels = trade_shaped_tree.levels()
    assert sorted(levels) == [0, 1, 2]
    assert [str(p) for p in levels[2]] == ["1.1", "1.2", "1.3"]
    assert trade_shaped_tree.depth == 2
    assert trade_shaped_tree.chains == {1, 2, 3, 4, 5}
    assert len(trade_shaped_tree) == 5


def test_single_node_tree():
    tree = CallExecutionTree(spec(1, "alone"))
    assert tree.depth == 0
    assert tree.post_order() == [CallPath.root()]
    assert len(tree) == 1
