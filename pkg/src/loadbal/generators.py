"""Instance families.

``hardness``        speeds 1 + 2**(i-m) with jobs of the same sizes arriving
                    in increasing order; every well-behaved schedule is bad.
``greedy_counter``  two machines (1, 1+eps) and jobs (1, 1/eps); earliest-finish
                    greedy leaves the faster machine with less work.
``random``          seeded speeds and log-spread sizes.
``bounded``         sizes uniform on [p_min, p_max].
``unit``            all sizes 1.

Random families are normalised so the slowest machine and the smallest job
both have size/speed 1.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from ._validation import InvalidInputError, Q, as_fraction
from .core import Instance

FAMILIES = ("hardness", "greedy_counter", "random", "bounded", "unit")
SIZE_GRANULARITY = 4


@dataclass(frozen=True)
class FamilySpec:
    family: str = "random"
    m: int = 4
    n: int = 8
    seed: int = 0
    eps: Q = Q(1, 4)
    p_min: Q = Q(1)
    p_max: Q = Q(64)
    speed_max_exp: int = 10
    raw_speeds: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"family must be one of {FAMILIES}")
        if self.m < 1 or self.n < 0:
            raise InvalidInputError("need m >= 1 and n >= 0")
        object.__setattr__(self, "eps", as_fraction(self.eps, "eps"))
        object.__setattr__(self, "p_min", as_fraction(self.p_min, "p_min"))
        object.__setattr__(self, "p_max", as_fraction(self.p_max, "p_max"))
        if not 0 < self.eps < 1:
            raise InvalidInputError("eps must lie in (0, 1)")
        if not 0 < self.p_min <= self.p_max:
            raise InvalidInputError("need 0 < p_min <= p_max")
        if self.speed_max_exp < 0:
            raise InvalidInputError("speed_max_exp must be >= 0")


def gen_hardness(m: int, seed: int = 0) -> Instance:
    if m < 1:
        raise InvalidInputError("m must be >= 1")
    speeds = [1 + Q(2) ** (i - m) for i in range(1, m + 1)]
    return Instance.from_values(speeds, speeds, seed)


def gen_greedy_counter(eps, seed: int = 0) -> Instance:
    eps = as_fraction(eps, "eps")
    if not 0 < eps < 1:
        raise InvalidInputError("eps must lie in (0, 1)")
    return Instance.from_values([1, 1 + eps], [1, 1 / eps], seed)


def _rng(spec: FamilySpec) -> random.Random:
    return random.Random(f"{spec.family}:{spec.m}:{spec.n}:{spec.seed}")


def _speeds(spec: FamilySpec, rng: random.Random) -> list[Q]:
    top = 2**spec.speed_max_exp
    if spec.raw_speeds:
        speeds = [Q(rng.randint(16, 16 * top), 16) for _ in range(spec.m)]
    else:
        speeds = [Q(2) ** rng.randint(0, spec.speed_max_exp) for _ in range(spec.m)]
    low = min(speeds)
    return [s / low for s in speeds]


def _sizes(spec: FamilySpec, rng: random.Random) -> list[Q]:
    n = spec.n
    if n == 0:
        return []
    if spec.family == "unit":
        return [Q(1)] * n
    if spec.family == "bounded":
        g = SIZE_GRANULARITY
        lo, hi = math.ceil(spec.p_min * g), math.floor(spec.p_max * g)
        if hi >= lo:
            sizes = [Q(rng.randint(lo, hi), g) for _ in range(n)]
        else:
            sizes = [spec.p_min] * n
        sizes[rng.randrange(n)] = spec.p_min
        return [p / spec.p_min for p in sizes]
    # random: mantissa in [1, 2) on a 1/8 grid times a power of two up to p_max
    top = max(int(spec.p_max).bit_length() - 1, 0)
    sizes = [Q(rng.randint(8, 15), 8) * 2 ** rng.randint(0, top) for _ in range(n)]
    low = min(sizes)
    return [p / low for p in sizes]


def gen_random(spec: FamilySpec) -> Instance:
    if spec.family in ("hardness", "greedy_counter"):
        raise InvalidInputError(f"use generate() for the {spec.family!r} family")
    rng = _rng(spec)
    speeds = _speeds(spec, rng)
    sizes = _sizes(spec, rng)
    return Instance.from_values(speeds, sizes, spec.seed)


def generate(spec: FamilySpec) -> Instance:
    if spec.family == "hardness":
        return gen_hardness(spec.m, spec.seed)
    if spec.family == "greedy_counter":
        return gen_greedy_counter(spec.eps, spec.seed)
    return gen_random(spec)
