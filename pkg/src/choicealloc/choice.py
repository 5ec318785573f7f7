"""Customer choice models and the operations built on them.

Three families are supported: attraction-form models (independent demands,
MNL, and general attraction, depending on which weights vanish), finite
mixtures of attraction models, and explicit probability tables for
adversarial test inputs.  Assortments are sets of product ids; the
no-purchase option (id 0) is implicit in every assortment and absorbs the
residual probability mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Mapping, Union

__all__ = [
    "AttractionChoiceModel",
    "MixtureChoiceModel",
    "TabulatedChoiceModel",
    "ChoiceModel",
    "choice_probability",
    "sample_choice",
    "expected_revenue",
    "prune_nonpositive",
]


def _as_assortment(assortment: Iterable[int]) -> frozenset[int]:
    s = frozenset(int(n) for n in assortment)
    if 0 in s:
        raise ValueError("the no-purchase option is implicit and never listed in an assortment")
    if any(n < 1 for n in s):
        raise ValueError("product ids are positive integers")
    return s


@dataclass(frozen=True)
class AttractionChoiceModel:
    """Attraction-form choice over products 1..N.

    A product ``n`` shown in assortment ``S`` is selected with probability
    ``(mu_n + nu_n) / (sum(mu) + sum(nu_i for i in S) + 1)``; the mu weights
    of *all* products enter the denominator whether offered or not, and the
    no-purchase weight is fixed at 1 (alternative outside options are
    expressed by rescaling nu).  mu == 0 gives MNL, nu == 0 gives
    independent demands.
    """

    mu: tuple[float, ...]
    nu: tuple[float, ...]

    def __post_init__(self):
        mu = tuple(float(w) for w in self.mu)
        nu = tuple(float(w) for w in self.nu)
        if len(mu) != len(nu):
            raise ValueError("mu and nu must have one weight per product")
        if any(w < 0 for w in mu) or any(w < 0 for w in nu):
            raise ValueError("attraction weights must be nonnegative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "nu", nu)

    @property
    def num_products(self) -> int:
        return len(self.nu)

    @cached_property
    def base_weight(self) -> float:
        """Denominator contribution independent of the assortment."""
        return 1.0 + math.fsum(self.mu)

    def weight(self, n: int) -> float:
        return self.mu[n - 1] + self.nu[n - 1]

    # Removing products never lowers the selection probability of the ones
    # that remain, so positive-price pruning cannot hurt expected revenue.
    is_removal_monotone = True


@dataclass(frozen=True)
class MixtureChoiceModel:
    """Finite mixture of attraction models (e.g. mixed MNL)."""

    segments: tuple[tuple[float, AttractionChoiceModel], ...]

    def __post_init__(self):
        segs = tuple((float(w), m) for w, m in self.segments)
        if not segs:
            raise ValueError("a mixture needs at least one segment")
        if any(w < 0 for w, _ in segs):
            raise ValueError("segment weights must be nonnegative")
        if abs(math.fsum(w for w, _ in segs) - 1.0) > 1e-9:
            raise ValueError("segment weights must sum to 1")
        sizes = {m.num_products for _, m in segs}
        if len(sizes) != 1:
            raise ValueError("all segments must cover the same product set")
        object.__setattr__(self, "segments", segs)

    @property
    def num_products(self) -> int:
        return self.segments[0][1].num_products

    is_removal_monotone = True


class TabulatedChoiceModel:
    """Explicit table of selection probabilities, one entry per assortment.

    ``table`` maps an assortment to a ``{product: probability}`` mapping over
    its members; the no-purchase option receives the residual mass.  Tables
    can encode behavior outside the random-utility class, so
    ``is_removal_monotone`` records (by enumerating nested assortment pairs)
    whether dropping products can ever lower a survivor's selection
    probability; consumers that rely on positive-price pruning must reject
    tables where this is False.
    """

    def __init__(self, table: Mapping[Iterable[int], Mapping[int, float]], num_products=None):
        normalized: dict[frozenset[int], dict[int, float]] = {}
        for S, probs in table.items():
            key = _as_assortment(S)
            entry = {int(n): float(p) for n, p in probs.items()}
            if any(n not in key for n in entry):
                raise ValueError(f"probabilities listed for products outside assortment {sorted(key)}")
            if any(p < -1e-12 for p in entry.values()):
                raise ValueError("negative selection probability")
            if math.fsum(entry.values()) > 1.0 + 1e-9:
                raise ValueError(f"probabilities for assortment {sorted(key)} exceed 1")
            normalized[key] = entry
        self.table = normalized
        if num_products is None:
            num_products = max((n for S in normalized for n in S), default=0)
        self.num_products = int(num_products)
        self.is_removal_monotone = self._check_removal_monotone()

    def _check_removal_monotone(self) -> bool:
        keys = sorted(self.table, key=lambda S: (len(S), tuple(sorted(S))))
        for small, large in combinations(keys, 2):
            if not small <= large:
                continue
            p_small, p_large = self.table[small], self.table[large]
            for n in small:
                if p_small.get(n, 0.0) < p_large.get(n, 0.0) - 1e-9:
                    return False
        return True

    def entry(self, S: frozenset[int]) -> dict[int, float]:
        try:
            return self.table[S]
        except KeyError:
            raise ValueError(f"assortment {sorted(S)} not present in the probability table") from None


ChoiceModel = Union[AttractionChoiceModel, MixtureChoiceModel, TabulatedChoiceModel]


def _distribution(model: ChoiceModel, S: frozenset[int]) -> list[tuple[int, float]]:
    """(product, probability) pairs over the members of ``S``, ascending id."""
    if not S:
        return []  # the empty offer always yields no purchase
    members = sorted(S)
    if isinstance(model, AttractionChoiceModel):
        den = model.base_weight + math.fsum(model.nu[n - 1] for n in members)
        return [(n, model.weight(n) / den) for n in members]
    if isinstance(model, MixtureChoiceModel):
        acc = [0.0] * len(members)
        for w, seg in model.segments:
            den = seg.base_weight + math.fsum(seg.nu[n - 1] for n in members)
            for i, n in enumerate(members):
                acc[i] += w * seg.weight(n) / den
        return list(zip(members, acc))
    if isinstance(model, TabulatedChoiceModel):
        entry = model.entry(S)
        return [(n, entry.get(n, 0.0)) for n in members]
    raise TypeError(f"unsupported choice model {type(model).__name__}")


def choice_probability(model: ChoiceModel, n: int, assortment: Iterable[int]) -> float:
    """Probability that a customer offered ``assortment`` selects product
    ``n`` (n = 0 for no purchase)."""
    S = _as_assortment(assortment)
    n = int(n)
    if n == 0:
        return 1.0 - math.fsum(p for _, p in _distribution(model, S))
    if n not in S:
        raise ValueError(f"product {n} is not in the offered assortment")
    for m, p in _distribution(model, S):
        if m == n:
            return p
    raise AssertionError("unreachable")


def sample_choice(model: ChoiceModel, assortment: Iterable[int], u: float) -> int:
    """Inverse-transform sample of the selected product.

    The CDF runs over the assortment in ascending product id, with no
    purchase last, so the outcome is deterministic given ``u``.
    """
    S = _as_assortment(assortment)
    cum = 0.0
    for n, p in _distribution(model, S):
        cum += p
        if u < cum:
            return n
    return 0


def expected_revenue(model: ChoiceModel, assortment: Iterable[int], price: Mapping[int, float]) -> float:
    """Expected revenue of showing ``assortment`` at the given prices."""
    S = _as_assortment(assortment)
    return math.fsum(p * price[n] for n, p in _distribution(model, S))


def prune_nonpositive(assortment: Iterable[int], price: Mapping[int, float]) -> frozenset[int]:
    """Members of the assortment with strictly positive price."""
    S = _as_assortment(assortment)
    return frozenset(n for n in S if price[n] > 0.0)
