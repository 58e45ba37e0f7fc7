"""Call execution trees.

A `CallExecutionTree` is committed in the Start Event of a crosschain
transaction. Each node names the function to call on some chain together with
the canonical encoding of the arguments it is expected to be called with.
Nodes are addressed by `CallPath`s of 1-based child indices.
"""

from __future__ import annotations
from attrs import define, field
from typing import Iterator
from gpact_sim.errors import UnresolvablePathError
from gpact_sim.model.chain import Address, ChainId


@define(frozen=True)
class FunctionCallSpec:
    """A function call on a specific chain.

    Attributes:
        chain: Chain the called contract lives on.
        contract: Address of the called contract.
        function: Name of the called function.
        expected_args: Canonical encoding of the argument list.
    """

    chain: ChainId
    contract: Address
    function: str
    expected_args: bytes = b""


def _check_indices(instance, attribute, value):
    if any(i < 1 for i in value):
        raise ValueError(f"Call path indices are 1-based, got {value}.")


@define(frozen=True, order=True)
class CallPath:
    """Position of a node in a call execution tree.

    Attributes:
        indices: 1-based child indices from the root. Empty denotes the root.
    """

    indices: tuple[int, ...] = field(
        factory=tuple, converter=tuple, validator=_check_indices
    )

    @classmethod
    def root(cls) -> CallPath:
        """Return the path of the root node."""
        return cls(())

    @classmethod
    def parse(cls, text: str) -> CallPath:
        """Parse a path written as `root` or dotted indices like `1.2`."""
        text = text.strip()
        if text in ("", "root"):
            return cls.root()
        try:
            return cls(tuple(int(part) for part in text.split(".")))
        except ValueError:
            raise ValueError(f"Invalid call path: {text!r}.") from None

    @property
    def is_root(self) -> bool:
        """Return `True` for the root path."""
        return len(self.indices) == 0

    @property
    def depth(self) -> int:
        """Number of edges from the root."""
        return len(self.indices)

    @property
    def parent(self) -> CallPath:
        """Path of the parent node."""
        if self.is_root:
            raise ValueError("The root path has no parent.")
        return CallPath(self.indices[:-1])

    def child(self, index: int) -> CallPath:
        """Path of the `index`-th (1-based) child."""
        return CallPath(self.indices + (index,))

    def __str__(self) -> str:
        return "root" if self.is_root else ".".join(str(i) for i in self.indices)


@define(frozen=True)
class CallExecutionTree:
    """A node of the call execution tree and its ordered children.

    Attributes:
        node: The call made at this node.
        children: Crosschain calls made by this node, in call order.
    """

    node: FunctionCallSpec
    children: tuple[CallExecutionTree, ...] = field(factory=tuple, converter=tuple)

    def resolve(self, path: CallPath) -> CallExecutionTree:
        """Return the subtree at `path`.

        Raises:
            UnresolvablePathError: If the path leaves the tree.
        """
        subtree = self
        for index in path.indices:
            if index > len(subtree.children):
                raise UnresolvablePathError(f"Call path {path} is not in the tree.")
            subtree = subtree.children[index - 1]
        return subtree

    def walk(self, path: CallPath = CallPath()) -> Iterator[tuple[CallPath, CallExecutionTree]]:
        """Iterate over `(path, subtree)` pairs in pre-order."""
        yield path, self
        for i, child in enumerate(self.children, start=1):
            yield from child.walk(path.child(i))

    def post_order(self) -> list[CallPath]:
        """Paths in depth-first call order with children before their parent."""
        paths = []

        def visit(path: CallPath, subtree: CallExecutionTree):
            for i, child in enumerate(subtree.children, start=1):
                visit(path.child(i), child)
            paths.append(path)

        visit(CallPath.root(), self)
        return paths

    def levels(self) -> dict[int, list[CallPath]]:
        """Group node paths by depth."""
        levels: dict[int, list[CallPath]] = {}
        for path, _ in self.walk():
            levels.setdefault(path.depth, []).append(path)
        return levels

    @property
    def depth(self) -> int:
        """Number of edges on the longest root-to-leaf path."""
        if not self.children:
            return 0
        return 1 + max(child.depth for child in self.children)

    @property
    def chains(self) -> set[ChainId]:
        """Chains referenced anywhere in the tree."""
        return {subtree.node.chain for _, subtree in self.walk()}

    def __len__(self) -> int:
        return sum(1 for _ in self.walk())
