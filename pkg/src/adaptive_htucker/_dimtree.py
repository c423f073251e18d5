import attr

BALANCED = "balanced"
LINEAR = "linear"
TREE_SHAPES = (BALANCED, LINEAR)


@attr.s(frozen=True, repr=False)
class DimensionTree(object):
    """A binary dimension tree over the modes ``0 .. m-1``.

    Nodes are tuples of consecutive mode numbers. Every interior node ``a`` is
    the disjoint union of its children ``c1, c2`` with ``min(c1) < min(c2)``.
    :attr:`nodes` lists the nodes in breadth-first order, root first.
    """

    m = attr.ib()
    nodes = attr.ib()
    shape = attr.ib(eq=False)
    _children = attr.ib(eq=False)

    @property
    def root(self):
        return self.nodes[0]

    @property
    def interior(self):
        """Non-leaf nodes in breadth-first order, root first."""
        return tuple(n for n in self.nodes if len(n) > 1)

    @property
    def non_root(self):
        return self.nodes[1:]

    def children(self, node):
        return self._children[node]

    def parent(self, node):
        for parent, pair in self._children.items():
            if node in pair:
                return parent
        raise KeyError(node)

    def sibling(self, node):
        c1, c2 = self.children(self.parent(node))
        return c2 if node == c1 else c1

    def __repr__(self):
        return "DimensionTree(m=%d, shape=%r)" % (self.m, self.shape)


def _split(node, shape):
    if shape == LINEAR:
        cut = 1
    else:
        cut = (len(node) + 1) // 2
    return node[:cut], node[cut:]


def build_tree(m, shape=BALANCED):
    """Builds a dimension tree on ``m`` modes.

    :param m:
        The number of modes, at least 2.

    :param shape:
        ``"balanced"`` halves every node (left half rounded up), giving minimal
        depth; ``"linear"`` splits off the first mode at every node, giving
        the degenerate tensor-train tree.

    :raises ValueError:
        For ``m < 2`` or an unknown shape.
    """
    if int(m) != m or m < 2:
        raise ValueError("a dimension tree needs at least two modes", m)
    if shape not in TREE_SHAPES:
        raise ValueError("unknown tree shape", shape)

    m = int(m)
    root = tuple(range(m))
    nodes = [root]
    children = {}

    queue = [root]
    while queue:
        node = queue.pop(0)
        if len(node) == 1:
            continue
        c1, c2 = _split(node, shape)
        children[node] = (c1, c2)
        nodes.extend((c1, c2))
        queue.extend((c1, c2))

    return DimensionTree(
        m=m,
        nodes=tuple(nodes),
        shape=shape,
        children=children,
    )
