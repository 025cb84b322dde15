"""
Binary tree shapes, canonical codes, extension/compression and fringe censuses.

Trees are immutable recursive values. A node has an optional left and an
optional right child; a node with neither is a leaf. Full binary trees are
those where every node has zero or two children.

Shape codes are preorder strings. For full trees they use only ``0`` (leaf)
and ``1`` (binary node, followed by the left then the right code). General
binary trees additionally use ``L`` for a node with only a left child and
``R`` for a node with only a right child, so codes stay unambiguous.

Every traversal here runs on an explicit stack; degenerate trees can be
arbitrarily deep.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping

__all__ = [
    "Tree", "LEAF", "ShapeError", "NotFullError", "TreeMetrics", "FringeCensus",
    "node", "parse_shape", "format_shape", "encode", "decode", "from_tokens",
    "compress", "extend", "delete_leaves", "mirror", "metrics", "census",
    "quenched_fringe_prob", "quenched_qsin", "cladogram_code", "phi_count",
    "is_full", "full_shapes", "binary_shapes", "NAMED",
]

# preorder tokens
_LEAF, _BIN, _LEFT, _RIGHT = "0", "1", "L", "R"


class ShapeError(ValueError):
    """Malformed shape text or shape code."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)
        self.position = position


class NotFullError(ValueError):
    """An operation that needs a full binary tree received a non-full one."""


class Tree:
    """An oriented binary tree shape.

    ``left``/``right`` are child trees or ``None``. ``leaves`` and ``size``
    are computed once at construction from the children.
    """

    __slots__ = ("left", "right", "leaves", "size", "_code")

    def __init__(self, left: Tree | None = None, right: Tree | None = None):
        self.left = left
        self.right = right
        if left is None and right is None:
            self.leaves = 1
            self.size = 1
        else:
            self.leaves = (left.leaves if left is not None else 0) + (
                right.leaves if right is not None else 0)
            self.size = 1 + (left.size if left is not None else 0) + (
                right.size if right is not None else 0)
        self._code: str | None = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None and self.right is None

    @property
    def degree(self) -> int:
        return (self.left is not None) + (self.right is not None)

    @property
    def internal(self) -> int:
        return self.size - self.leaves

    @property
    def code(self) -> str:
        if self._code is None:
            self._code = encode(self)
        return self._code

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        if self is other:
            return True
        if self.size != other.size or self.leaves != other.leaves:
            return False
        return self.code == other.code

    def __hash__(self) -> int:
        return hash(self.code)

    def __repr__(self) -> str:
        if self.size <= 31:
            return f"Tree({format_shape(self)!r})"
        return f"Tree(size={self.size}, leaves={self.leaves})"


LEAF = Tree()


def node(left: Tree | None, right: Tree | None) -> Tree:
    """Build a node; a childless node is the shared ``LEAF``."""
    if left is None and right is None:
        return LEAF
    return Tree(left, right)


# ---------------------------------------------------------------------------
# traversal helpers
# ---------------------------------------------------------------------------

def _preorder(t: Tree) -> Iterator[Tree]:
    stack = [t]
    pop, push = stack.pop, stack.append
    while stack:
        v = pop()
        yield v
        if v.right is not None:
            push(v.right)
        if v.left is not None:
            push(v.left)


def _token(v: Tree) -> str:
    if v.left is None:
        return _LEAF if v.right is None else _RIGHT
    return _BIN if v.right is not None else _LEFT


def encode(t: Tree) -> str:
    """Preorder shape code of ``t``."""
    if t._code is not None:
        return t._code
    code = "".join(map(_token, _preorder(t)))
    t._code = code
    return code


def from_tokens(tokens: Iterable[str]) -> Tree:
    """Rebuild a tree from its preorder token sequence (see module docstring).

    Accepts any iterable of single-character tokens; used by both ``decode``
    and the samplers.
    """
    toks = tokens if isinstance(tokens, (str, list, tuple)) else list(tokens)
    stack: list[Tree] = []
    push, pop = stack.append, stack.pop
    for i in range(len(toks) - 1, -1, -1):
        tok = toks[i]
        if tok == _LEAF:
            push(LEAF)
        elif tok == _BIN:
            if len(stack) < 2:
                raise ShapeError("truncated code", i)
            left = pop()
            push(Tree(left, pop()))
        elif tok == _LEFT or tok == _RIGHT:
            if not stack:
                raise ShapeError("truncated code", i)
            child = pop()
            push(Tree(child, None) if tok == _LEFT else Tree(None, child))
        else:
            raise ShapeError(f"bad code symbol {tok!r}", i)
    if len(stack) != 1:
        raise ShapeError("code does not describe exactly one tree")
    t = stack[0]
    if isinstance(toks, str):
        t._code = toks
    return t


def decode(code: str) -> Tree:
    """Inverse of :func:`encode`."""
    if not code:
        raise ShapeError("empty code", 0)
    return from_tokens(code)


# ---------------------------------------------------------------------------
# text format:  S ::= "*" | "(" S "," S ")"   ("-" marks an empty child slot)
# ---------------------------------------------------------------------------

def parse_shape(text: str) -> Tree:
    """Parse a shape expression such as ``"(*,(*,*))"``.

    Whitespace is ignored. A ``-`` in a child slot denotes a missing child,
    which allows general (non-full) binary trees, e.g. ``"(*,-)"``.
    """
    s = "".join(text.split())
    tokens: list[str] = []
    pos = 0
    n = len(s)
    # iterative recursive descent; ``expect`` holds the pending grammar symbols
    expect = ["S"]
    slot_tokens: list[int] = []  # token index of each open "("
    slot_children: list[list[bool]] = []  # which child slots of each open "(" are filled
    while expect:
        what = expect.pop()
        if what == "S":
            if pos >= n:
                raise ShapeError("unexpected end of input", pos)
            c = s[pos]
            if c == "*":
                tokens.append(_LEAF)
                pos += 1
                if slot_children:
                    slot_children[-1].append(True)
            elif c == "-":
                if not slot_children:
                    raise ShapeError("empty tree is not allowed", pos)
                pos += 1
                slot_children[-1].append(False)
            elif c == "(":
                if slot_children:
                    slot_children[-1].append(True)
                pos += 1
                slot_tokens.append(len(tokens))
                tokens.append("?")
                slot_children.append([])
                expect.extend([")", "S", ",", "S"])
            else:
                raise ShapeError(f"unexpected {c!r}", pos)
        elif what in ",)":
            if pos >= n or s[pos] != what:
                got = repr(s[pos]) if pos < n else "end of input"
                raise ShapeError(f"expected {what!r}, got {got}", pos)
            pos += 1
            if what == ")":
                at = slot_tokens.pop()
                has_left, has_right = slot_children.pop()
                if has_left and has_right:
                    tokens[at] = _BIN
                elif has_left:
                    tokens[at] = _LEFT
                elif has_right:
                    tokens[at] = _RIGHT
                else:
                    raise ShapeError("node with two empty slots", pos - 1)
    if pos != n:
        raise ShapeError(f"trailing input {s[pos:]!r}", pos)
    return from_tokens("".join(tokens))


def format_shape(t: Tree) -> str:
    """Render ``t`` in the text grammar accepted by :func:`parse_shape`."""
    out: list[str] = []
    stack: list[object] = [t]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
        elif item is None:
            out.append("-")
        elif item.is_leaf:  # type: ignore[union-attr]
            out.append("*")
        else:
            stack.extend([")", item.right, ",", item.left])  # type: ignore[union-attr]
            out.append("(")
    return "".join(out)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def _rebuild(t: Tree, visit) -> Tree:
    """Bottom-up rebuild: ``visit(v, new_left, new_right)`` returns the image of v."""
    order = list(_preorder(t))
    image: dict[int, Tree | None] = {}
    for v in reversed(order):
        nl = image[id(v.left)] if v.left is not None else None
        nr = image[id(v.right)] if v.right is not None else None
        image[id(v)] = visit(v, nl, nr)
    return image[id(t)]  # type: ignore[return-value]


def compress(t: Tree) -> Tree:
    """Delete every node of outdegree 1, giving a full binary tree."""
    def visit(v, nl, nr):
        if nl is None and nr is None:
            return LEAF
        if nl is None:
            return nr
        if nr is None:
            return nl
        return Tree(nl, nr)
    return _rebuild(t, visit)


def extend(t: Tree) -> Tree:
    """Attach external leaves at every empty child slot (size 2n+1)."""
    def visit(v, nl, nr):
        return Tree(nl if nl is not None else LEAF, nr if nr is not None else LEAF)
    return _rebuild(t, visit)


def delete_leaves(t: Tree) -> Tree:
    """Remove all leaves of a full tree with at least two leaves (inverse of extend)."""
    if t.is_leaf:
        raise ValueError("deleting the leaves of a single leaf leaves nothing")
    def visit(v, nl, nr):
        if v.is_leaf:
            return None
        return node(nl, nr)
    return _rebuild(t, visit)


def mirror(t: Tree) -> Tree:
    return _rebuild(t, lambda v, nl, nr: node(nr, nl))


def is_full(t: Tree) -> bool:
    return t.size == 2 * t.leaves - 1


def _require_full(t: Tree) -> None:
    if not is_full(t):
        raise NotFullError(f"tree with {t.size} nodes and {t.leaves} leaves is not full")


# ---------------------------------------------------------------------------
# metrics and census
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeMetrics:
    leafcount: int
    size: int
    lpl: int
    rpl: int
    nu: dict[int, int]
    internal_count: int

    @property
    def external_path_length(self) -> int:
        return self.lpl + self.rpl


def metrics(t: Tree) -> TreeMetrics:
    """Left/right external path lengths and fringe leaf-size counts of a full tree.

    ``nu[k]`` counts nodes whose fringe tree has ``k`` leaves, for
    ``2 <= k <= leafcount - 1`` only.
    """
    _require_full(t)
    m = t.leaves
    lpl = rpl = 0
    nu: Counter[int] = Counter()
    stack = [(t, 0, 0)]
    while stack:
        v, ld, rd = stack.pop()
        if v.is_leaf:
            lpl += ld
            rpl += rd
            continue
        if 2 <= v.leaves <= m - 1:
            nu[v.leaves] += 1
        stack.append((v.left, ld + 1, rd))
        stack.append((v.right, ld, rd + 1))
    return TreeMetrics(m, t.size, lpl, rpl, dict(sorted(nu.items())), t.size - m)


@dataclass
class FringeCensus:
    """Fringe subtree counts of one tree, truncated at ``max_leaves`` leaves.

    ``counts`` maps shape code to the number of nodes whose fringe tree has
    that shape. ``leaf_size_hist`` maps ``m`` to the number of nodes whose
    fringe tree has ``m`` leaves, for ``m <= hist_cap``.
    """
    tree_size: int
    tree_leafcount: int
    max_leaves: int
    counts: dict[str, int] = field(default_factory=dict)
    leaf_size_hist: dict[int, int] = field(default_factory=dict)

    def count(self, t: Tree | str) -> int:
        code = t if isinstance(t, str) else t.code
        leaves = code.count(_LEAF)
        if leaves > self.max_leaves:
            raise ValueError(
                f"shape with {leaves} leaves is above the census cutoff {self.max_leaves}")
        return self.counts.get(code, 0)

    def total(self) -> int:
        return sum(self.counts.values())


def census(t: Tree, max_leaves: int = 8, hist_cap: int | None = None) -> FringeCensus:
    """Count fringe subtrees of ``t`` with at most ``max_leaves`` leaves.

    One bottom-up pass. ``hist_cap`` (default ``max_leaves``) bounds the
    leaf-size histogram separately from the shape table.
    """
    if max_leaves < 1:
        raise ValueError("max_leaves must be >= 1")
    if hist_cap is None:
        hist_cap = max_leaves
    counts: Counter[str] = Counter()
    hist: Counter[int] = Counter()
    codes: dict[int, str] = {}
    order = list(_preorder(t))
    for v in reversed(order):
        m = v.leaves
        if m <= hist_cap:
            hist[m] += 1
        if m > max_leaves:
            continue
        c = v._code
        if c is None:
            left, right = v.left, v.right
            if left is None:
                c = _LEAF if right is None else _RIGHT + codes[id(right)]
            elif right is None:
                c = _LEFT + codes[id(left)]
            else:
                c = _BIN + codes[id(left)] + codes[id(right)]
        codes[id(v)] = c
        counts[c] += 1
    return FringeCensus(t.size, t.leaves, max_leaves, dict(counts), dict(sorted(hist.items())))


def quenched_fringe_prob(c: FringeCensus, t: Tree) -> Fraction:
    """P(random fringe tree = t | T) = N_t(T)/|T|."""
    return Fraction(c.count(t), c.tree_size)


def quenched_qsin(c: FringeCensus, t: Tree) -> Fraction:
    """Probability that a uniform random leaf of T lies in a fringe copy of ``t``."""
    return Fraction(c.count(t) * t.leaves, c.tree_leafcount)


def phi_count(T: Tree, t: Tree, max_leaves: int | None = None) -> int:
    """Number of nodes v of a general tree T whose fringe tree subdivides to ``t``.

    A fringe tree lies in C(t) iff its root does not have outdegree 1 (unless
    t is a leaf, where this is automatic) and it compresses to t. Computed on
    the uncompressed tree, so it serves as an independent check of
    ``census(compress(T))``.
    """
    target = t.code
    m = t.leaves
    compressed: dict[int, str] = {}
    hits = 0
    for v in reversed(list(_preorder(T))):
        if v.leaves > m:
            continue
        if v.left is None and v.right is None:
            c = _LEAF
        elif v.left is None:
            c = compressed[id(v.right)]
        elif v.right is None:
            c = compressed[id(v.left)]
        else:
            c = _BIN + compressed[id(v.left)] + compressed[id(v.right)]
        compressed[id(v)] = c
        if v.degree != 1 and c == target:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# cladogram mode
# ---------------------------------------------------------------------------

def _clade_key(c: str) -> tuple[int, str]:
    return (len(c), c)


def cladogram_code(t: Tree | str) -> str:
    """Orientation-free code: children ordered shorter-code first, then lexicographically."""
    tree = decode(t) if isinstance(t, str) else t
    _require_full(tree)
    codes: dict[int, str] = {}
    for v in reversed(list(_preorder(tree))):
        if v.is_leaf:
            codes[id(v)] = _LEAF
            continue
        a, b = codes[id(v.left)], codes[id(v.right)]
        if _clade_key(b) < _clade_key(a):
            a, b = b, a
        codes[id(v)] = _BIN + a + b
    return codes[id(tree)]


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

_full_cache: dict[int, list[Tree]] = {1: [LEAF]}
_binary_cache: dict[int, list[Tree | None]] = {0: [None]}


def full_shapes(m: int) -> list[Tree]:
    """All oriented full binary trees with ``m`` leaves (Catalan(m-1) of them)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    for k in range(2, m + 1):
        if k not in _full_cache:
            _full_cache[k] = [Tree(a, b) for i in range(1, k)
                              for a in _full_cache[i] for b in _full_cache[k - i]]
    return list(_full_cache[m])


def binary_shapes(n: int) -> list[Tree]:
    """All binary trees with ``n`` nodes (Catalan(n) of them)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    for k in range(1, n + 1):
        if k not in _binary_cache:
            _binary_cache[k] = [node(a, b) for i in range(k)
                                for a in _binary_cache[i] for b in _binary_cache[k - 1 - i]]
    return list(_binary_cache[n])  # type: ignore[arg-type]


NAMED: Mapping[str, Tree] = {
    "t1": LEAF,
    "t2": parse_shape("(*,*)"),
    "t3": parse_shape("(*,(*,*))"),
    "t4a": parse_shape("(*,(*,(*,*)))"),
    "t4b": parse_shape("(*,((*,*),*))"),
    "t4c": parse_shape("((*,*),(*,*))"),
}
