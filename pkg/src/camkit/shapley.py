"""Ground-truth Shapley machinery over activation-map channels.

A coalition is a subset of channels kept alive; its value is the target
logit of the head applied to the masked stack.  ``exact_shapley`` runs the
full 2^N enumeration with the combinatorial weights; ``shap_cam`` is the
Monte-Carlo permutation estimator.  Subset values are memoized by bitmask,
so permutations that revisit the same prefix cost nothing.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import graph
from .methods import CoefficientVector

EXACT_CHANNEL_CAP = 20

# sampling without replacement enumerates all n! orderings first; past this
# bound fall back to independent draws
_ENUMERATION_BOUND = 40320  # 8!


@dataclass
class OrderingSet:
    """A bag of channel orderings plus the seed that produced them."""

    orderings: list
    seed: int = None

    def __post_init__(self):
        if len(self.orderings) < 1:
            raise ValueError("ordering set must contain at least one ordering")
        n = len(self.orderings[0])
        for pi in self.orderings:
            if sorted(pi) != list(range(n)):
                raise ValueError(f"{tuple(pi)} is not a permutation of 0..{n - 1}")
        self.orderings = [tuple(int(i) for i in pi) for pi in self.orderings]

    @classmethod
    def sample(cls, num_channels, count, seed):
        """Draw ``count`` orderings of ``num_channels`` channels.

        Sampling is without replacement while all n! orderings are cheap to
        enumerate and count fits; otherwise orderings are drawn
        independently (unbiased either way).
        """
        if count < 1:
            raise ValueError("ordering count must be >= 1")
        rng = np.random.default_rng(seed)
        total = math.factorial(num_channels)
        if total <= _ENUMERATION_BOUND and count <= total:
            universe = list(itertools.permutations(range(num_channels)))
            picks = rng.choice(total, size=count, replace=False)
            orderings = [universe[i] for i in picks]
        else:
            orderings = [tuple(rng.permutation(num_channels)) for _ in range(count)]
        return cls(orderings=orderings, seed=seed)


@dataclass
class SubsetValueCache:
    """Memoized coalition values for one (model, stack, class) triple."""

    model: graph.ModelGraph
    activations: np.ndarray
    class_index: int
    _values: dict = field(default_factory=dict)

    def value(self, bits):
        v = self._values.get(bits)
        if v is None:
            n = self.model.num_maps
            mask = np.array([(bits >> k) & 1 for k in range(n)], dtype=np.float32)
            v = graph.forward_head(self.model, graph.mask_apply(self.activations, mask), self.class_index)
            self._values[bits] = v
        return v

    def __len__(self):
        return len(self._values)


def exact_shapley(model, a, class_index, cache=None):
    """Exact Shapley values of the activation maps via subset enumeration.

    Every coalition value is evaluated exactly once (2^N head forwards) and
    the marginals are combined with the (N-|S|)! (|S|-1)! / N! weights.
    """
    n = model.num_maps
    if n > EXACT_CHANNEL_CAP:
        raise ValueError(
            f"exact enumeration over {n} channels needs 2^{n} = {2 ** n} head forwards; "
            f"the cap is {EXACT_CHANNEL_CAP} channels"
        )
    if cache is None:
        cache = SubsetValueCache(model, a, class_index)
    values = np.empty(2 ** n, dtype=np.float64)
    for bits in range(2 ** n):
        values[bits] = cache.value(bits)

    masks = np.arange(2 ** n, dtype=np.uint32)
    popcount = np.bitwise_count(masks).astype(np.int64)
    # weight by |S u {k}| = m: (n - m)! (m - 1)! / n!
    size_weight = np.array(
        [0.0] + [math.factorial(n - m) * math.factorial(m - 1) / math.factorial(n) for m in range(1, n + 1)]
    )
    alpha = np.empty(n, dtype=np.float64)
    for k in range(n):
        bit = np.uint32(1 << k)
        without = masks[(masks & bit) == 0]
        w = size_weight[popcount[without] + 1]
        alpha[k] = np.sum(w * (values[without | bit] - values[without]))
    return CoefficientVector(alpha, "exact-shapley")


def shap_cam(model, a, class_index, orderings, cache=None):
    """Monte-Carlo Shapley estimate from a set of channel orderings.

    For each ordering the channels flip on one at a time and each channel
    accumulates its marginal logit gain; accumulators divide by the number
    of orderings.  Deterministic for a fixed ordering set.
    """
    if isinstance(orderings, OrderingSet):
        ordering_list = orderings.orderings
    else:
        ordering_list = OrderingSet(orderings=list(orderings)).orderings
    n = model.num_maps
    if len(ordering_list[0]) != n:
        raise ValueError(f"orderings cover {len(ordering_list[0])} channels, model has {n}")
    if cache is None:
        cache = SubsetValueCache(model, a, class_index)
    alpha = np.zeros(n, dtype=np.float64)
    for pi in ordering_list:
        bits = 0
        for k in pi:
            with_k = bits | (1 << k)
            alpha[k] += cache.value(with_k) - cache.value(bits)
            bits = with_k
    alpha /= len(ordering_list)
    return CoefficientVector(alpha, "shap-cam")
