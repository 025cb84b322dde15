"""
Seedable samplers for the random binary tree models.

Every sampler builds a preorder token list on an explicit stack and turns it
into a :class:`~fringelab.tree.Tree` with :func:`~fringelab.tree.from_tokens`,
so depth is never limited by the Python call stack.

Models
------
trie          n i.i.d. Bernoulli(p) strings, general binary tree with n leaves
patricia      compressed trie, full, n leaves
bst           random binary search tree with n nodes
ebst          extended BST (full, n+1 leaves)
cbst          compressed BST (full, random leaf count)
beta_split    Aldous beta-splitting tree with n leaves (beta=-1 is critical)
uniform_full  uniform full binary tree with n leaves (Remy's growth procedure)
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .tree import LEAF, Tree, compress, extend, from_tokens

__all__ = [
    "MODELS", "ModelSpec", "RandomSource", "sample", "sample_trie", "sample_patricia",
    "sample_bst", "sample_ebst", "sample_cbst", "sample_beta_split",
    "sample_uniform_full", "replicate_source",
]

MODELS = ("trie", "patricia", "bst", "ebst", "cbst", "beta_split", "uniform_full")
_ALIASES = {"cb": "beta_split", "beta": "beta_split", "uniform": "uniform_full"}

_BLOCK = 4096


class RandomSource:
    """A seeded stream of random numbers owned by a single sampler call chain.

    Wraps a numpy ``Generator``; uniforms are drawn in blocks to keep the
    per-node cost low. ``position`` counts uniforms consumed.
    """

    def __init__(self, seed: int | np.random.SeedSequence | None = None):
        if isinstance(seed, np.random.SeedSequence):
            self.seed = seed.entropy
            self.generator = np.random.Generator(np.random.PCG64(seed))
        else:
            self.seed = seed
            self.generator = np.random.default_rng(seed)
        self._buf: list[float] = []
        self._i = 0
        self.position = 0

    def random(self) -> float:
        if self._i >= len(self._buf):
            self._buf = self.generator.random(_BLOCK).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        self.position += 1
        return u

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)``."""
        return int(self.random() * k)

    def binomial(self, k: int, p: float) -> int:
        """Exact Binomial(k, p) draw (numpy: inversion for small mean, BTPE otherwise)."""
        return int(self.generator.binomial(k, p))


def replicate_source(master_seed: int, index: int, stream: int = 0) -> RandomSource:
    """Independent source for replicate ``index``: seed = master_seed XOR index.

    ``stream`` separates several sizes drawn for the same replicate.
    """
    seq = np.random.SeedSequence(entropy=(master_seed ^ index) & (2**64 - 1),
                                 spawn_key=(stream,))
    return RandomSource(seq)


def _as_source(rng: RandomSource | int | None) -> RandomSource:
    return rng if isinstance(rng, RandomSource) else RandomSource(rng)


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return p


# ---------------------------------------------------------------------------
# tries
# ---------------------------------------------------------------------------

def sample_trie(n: int, p: float | Fraction, rng: RandomSource | int | None = None) -> Tree:
    """Trie of ``n`` independent Bernoulli(p) strings.

    Split recursively: a node holding ``k >= 2`` strings sends
    ``Binomial(k, 1-p)`` of them (those whose next bit is 0) to the left.
    An empty side gives an outdegree-1 node.
    """
    _check_n(n)
    p = _check_p(p)
    q = 1.0 - p
    src = _as_source(rng)
    tokens: list[str] = []
    emit = tokens.append
    stack = [n]
    pop, push = stack.pop, stack.append
    while stack:
        k = pop()
        if k == 1:
            emit("0")
            continue
        left = src.binomial(k, q)
        if left == 0:
            emit("R")
            push(k)
        elif left == k:
            emit("L")
            push(k)
        else:
            emit("1")
            push(k - left)
            push(left)
    return from_tokens(tokens)


@lru_cache(maxsize=4096)
def _conditioned_cdf(k: int, q: float) -> tuple[float, ...]:
    # Binomial(k, q) restricted to 1..k-1, as a cumulative table
    logs = [math.lgamma(k + 1) - math.lgamma(j + 1) - math.lgamma(k - j + 1)
            + j * math.log(q) + (k - j) * math.log1p(-q) for j in range(1, k)]
    top = max(logs)
    w = np.exp(np.array(logs) - top)
    c = np.cumsum(w)
    return tuple((c / c[-1]).tolist())


def _split_nondegenerate(src: RandomSource, k: int, q: float) -> int:
    accept = 1.0 - q**k - (1.0 - q)**k
    if accept >= 0.25:
        while True:
            left = src.binomial(k, q)
            if 0 < left < k:
                return left
    cdf = _conditioned_cdf(k, q)
    return 1 + min(bisect.bisect_right(cdf, src.random()), k - 2)


def sample_patricia(n: int, p: float | Fraction, rng: RandomSource | int | None = None) -> Tree:
    """Patricia trie: the trie with its unary chains compressed away.

    Draws each split from Binomial(k, 1-p) conditioned on ``1..k-1``; the
    skipped degenerate splits are exactly the deleted outdegree-1 nodes.
    """
    _check_n(n)
    p = _check_p(p)
    q = 1.0 - p
    src = _as_source(rng)
    tokens: list[str] = []
    emit = tokens.append
    stack = [n]
    pop, push = stack.pop, stack.append
    while stack:
        k = pop()
        if k == 1:
            emit("0")
            continue
        left = _split_nondegenerate(src, k, q)
        emit("1")
        push(k - left)
        push(left)
    return from_tokens(tokens)


# ---------------------------------------------------------------------------
# binary search trees
# ---------------------------------------------------------------------------

def sample_bst(n: int, rng: RandomSource | int | None = None) -> Tree:
    """Random BST on ``n`` keys: the left subtree size is uniform on 0..k-1."""
    _check_n(n)
    src = _as_source(rng)
    tokens: list[str] = []
    emit = tokens.append
    stack = [n]
    pop, push = stack.pop, stack.append
    rand = src.random
    while stack:
        k = pop()
        left = int(rand() * k)
        right = k - 1 - left
        if left == 0:
            if right == 0:
                emit("0")
            else:
                emit("R")
                push(right)
        elif right == 0:
            emit("L")
            push(left)
        else:
            emit("1")
            push(right)
            push(left)
    return from_tokens(tokens)


def sample_ebst(n: int, rng: RandomSource | int | None = None) -> Tree:
    return extend(sample_bst(n, rng))


def sample_cbst(n: int, rng: RandomSource | int | None = None) -> Tree:
    return compress(sample_bst(n, rng))


# ---------------------------------------------------------------------------
# beta-splitting
# ---------------------------------------------------------------------------

class _Harmonic:
    """Cumulative harmonic numbers h_1..h_n, grown on demand."""

    def __init__(self) -> None:
        self.h = [0.0]

    def upto(self, n: int) -> list[float]:
        h = self.h
        if len(h) <= n:
            acc = h[-1]
            for j in range(len(h), n + 1):
                acc += 1.0 / j
                h.append(acc)
        return h


_HARMONIC = _Harmonic()


@lru_cache(maxsize=1024)
def _beta_cdf_cached(k: int, beta: float) -> np.ndarray:
    return _beta_cdf(k, beta)


def _beta_cdf(k: int, beta: float) -> np.ndarray:
    i = np.arange(1, k, dtype=float)
    logw = (gammaln(beta + i + 1) + gammaln(beta + k - i + 1)
            - gammaln(i + 1) - gammaln(k - i + 1))
    w = np.exp(logw - logw.max())
    c = np.cumsum(w)
    return c / c[-1]


def sample_beta_split(n: int, beta: float = -1.0, rng: RandomSource | int | None = None) -> Tree:
    """Beta-splitting tree with ``n`` leaves.

    The left leaf count ``i`` of a node with ``k`` leaves has weight
    ``Gamma(beta+i+1) Gamma(beta+k-i+1) / (Gamma(i+1) Gamma(k-i+1))``.
    For ``beta = -1`` this is ``(1/i + 1/(k-i)) / (2 h_{k-1})``, sampled as a
    harmonic draw J on 1..k-1 followed by a fair choice between J and k-J.
    """
    _check_n(n)
    beta = float(beta)
    if not beta > -2.0 or math.isinf(beta):
        raise ValueError(f"beta must be a finite number > -2, got {beta}")
    src = _as_source(rng)
    rand = src.random
    critical = beta == -1.0
    h = _HARMONIC.upto(n) if critical else None
    tokens: list[str] = []
    emit = tokens.append
    stack = [n]
    pop, push = stack.pop, stack.append
    while stack:
        k = pop()
        if k == 1:
            emit("0")
            continue
        if critical:
            j = bisect.bisect_left(h, rand() * h[k - 1], 1, k - 1)
            left = j if rand() < 0.5 else k - j
        else:
            cdf = _beta_cdf_cached(k, beta) if k <= 512 else _beta_cdf(k, beta)
            left = 1 + min(int(np.searchsorted(cdf, rand(), side="right")), k - 2)
        emit("1")
        push(k - left)
        push(left)
    return from_tokens(tokens)


# ---------------------------------------------------------------------------
# uniform full binary trees
# ---------------------------------------------------------------------------

def sample_uniform_full(n: int, rng: RandomSource | int | None = None) -> Tree:
    """Uniform full binary tree with ``n`` leaves by Remy's leaf insertion.

    With ``k`` leaves there are ``2k-1`` nodes. Pick one uniformly, put a new
    internal node in its place and hang the picked node and a fresh leaf
    below it, the fresh leaf on a uniformly chosen side.
    """
    _check_n(n)
    if n == 1:
        return LEAF
    src = _as_source(rng)
    rand = src.random
    total = 2 * n - 1
    left = [-1] * total
    right = [-1] * total
    parent = [-1] * total
    root = 0
    count = 1
    for _ in range(n - 1):
        x = int(rand() * count)
        y, z = count, count + 1
        count += 2
        px = parent[x]
        if px < 0:
            root = y
        elif left[px] == x:
            left[px] = y
        else:
            right[px] = y
        parent[y] = px
        if rand() < 0.5:
            left[y], right[y] = x, z
        else:
            left[y], right[y] = z, x
        parent[x] = parent[z] = y
    tokens: list[str] = []
    emit = tokens.append
    stack = [root]
    while stack:
        v = stack.pop()
        if left[v] < 0:
            emit("0")
        else:
            emit("1")
            stack.append(right[v])
            stack.append(left[v])
    return from_tokens(tokens)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """Which random tree to draw.

    ``n`` is the leaf count for trie/patricia/beta_split/uniform_full and the
    node count of the underlying BST for bst/ebst/cbst.
    """
    model: str
    n: int
    p: float | Fraction | None = None
    beta: float | None = None

    def __post_init__(self) -> None:
        model = _ALIASES.get(self.model, self.model)
        if model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        object.__setattr__(self, "model", model)
        _check_n(self.n)
        if model in ("trie", "patricia"):
            if self.p is None:
                raise ValueError(f"model {model} needs p")
            _check_p(self.p)
        if model == "beta_split":
            if self.beta is None:
                object.__setattr__(self, "beta", -1.0)
            elif not float(self.beta) > -2.0:
                raise ValueError(f"beta must be > -2, got {self.beta}")

    def with_n(self, n: int) -> ModelSpec:
        return replace(self, n=n)

    @property
    def is_full(self) -> bool:
        return self.model not in ("trie", "bst")

    def to_dict(self) -> dict:
        d: dict = {"model": self.model, "n": self.n}
        if self.p is not None:
            d["p"] = str(self.p)
        if self.beta is not None:
            d["beta"] = self.beta
        return d


def sample(spec: ModelSpec, rng: RandomSource | int | None = None) -> Tree:
    """Draw one tree for ``spec``."""
    src = _as_source(rng)
    m = spec.model
    if m == "trie":
        return sample_trie(spec.n, spec.p, src)  # type: ignore[arg-type]
    if m == "patricia":
        return sample_patricia(spec.n, spec.p, src)  # type: ignore[arg-type]
    if m == "bst":
        return sample_bst(spec.n, src)
    if m == "ebst":
        return sample_ebst(spec.n, src)
    if m == "cbst":
        return sample_cbst(spec.n, src)
    if m == "beta_split":
        return sample_beta_split(spec.n, spec.beta, src)  # type: ignore[arg-type]
    return sample_uniform_full(spec.n, src)
