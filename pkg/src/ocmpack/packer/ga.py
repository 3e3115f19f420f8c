"""Genetic bin packing of residual slices.

Slices with the same shape are interchangeable, so an individual is stored as a
multiset of bin *patterns* (sorted tuples of shape ids) instead of a per-slice
assignment vector. Recombination is grouping-style: bins from one parent are
injected into the other, clashing bins are dissolved and their slices re-inserted
best-fit. Concrete slices are bound to bins only once, at the end.
"""

from __future__ import annotations

import random
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from ..model import RamSpec
from .greedy import check_sliceable, greedy_groups
from .placement import fits_sorted, shape_key
from .slices import Slice
from .solution import PackingError, PackingSolution, solution_from_groups

Pattern = tuple  # sorted tuple of shape ids


@dataclass(frozen=True)
class GaParams:
    h_b: int = 4
    pop_size: int = 50
    tourney: int = 5
    p_adm_w: float = 0.0
    p_adm_h: float = 0.1
    p_mut: float = 0.3
    generations: int = 500
    seed: int = 0
    stagnation: int = 100

    def __post_init__(self):
        if self.h_b < 1 or self.pop_size < 1 or self.tourney < 1 or self.generations < 1:
            raise PackingError("h_b, pop_size, tourney and generations must be positive")
        if self.tourney > self.pop_size:
            raise PackingError(f"tournament size {self.tourney} exceeds population {self.pop_size}")
        for name in ("p_adm_w", "p_adm_h", "p_mut"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise PackingError(f"{name}={v} is not a probability")

    def with_(self, **kw) -> "GaParams":
        return replace(self, **kw)


# Hyperparameter rows used for the CIFAR-10 CNV and ResNet-50 accelerators.
CNV_PARAMS = GaParams(h_b=4, pop_size=50, tourney=5, p_adm_w=0.0, p_adm_h=0.1, p_mut=0.3)
RN50_PARAMS = GaParams(h_b=4, pop_size=75, tourney=5, p_adm_w=0.0, p_adm_h=0.1, p_mut=0.4)


class _Problem:
    def __init__(self, slices: Sequence[Slice], ram: RamSpec, h_b: int):
        self.ram = ram
        self.h_b = h_b
        self.cap = ram.capacity_bits
        by_shape = defaultdict(list)
        for s in slices:
            by_shape[s.shape].append(s)
        # shape ids ordered by decreasing area so that patterns sort canonically
        self.shapes = sorted(by_shape, key=lambda sh: (-sh[0] * sh[1], -sh[0], -sh[1]))
        self.area = [w * d for w, d in self.shapes]
        self.count = [len(by_shape[sh]) for sh in self.shapes]
        self.members = [sorted(by_shape[sh], key=lambda s: (s.buffer, s.index, s.part)) for sh in self.shapes]
        self._aspect: dict[Pattern, Optional[tuple]] = {}
        self._extend: dict[tuple, Optional[Pattern]] = {}

    def aspect(self, p: Pattern):
        a = self._aspect.get(p, 0)
        if a == 0:
            a = fits_sorted(shape_key(self.shapes[i] for i in p), self.ram.aspect_ratios)
            self._aspect[p] = a
        return a

    def extend(self, p: Pattern, s: int) -> Optional[Pattern]:
        key = (p, s)
        q = self._extend.get(key, 0)
        if q == 0:
            q = None
            if len(p) < self.h_b and self.bits(p) + self.area[s] <= self.cap:
                cand = tuple(sorted(p + (s,)))
                if self.aspect(cand) is not None:
                    q = cand
            self._extend[key] = q
        return q

    def bits(self, p: Pattern) -> int:
        return sum(self.area[i] for i in p)

    def fitness(self, sol: Counter):
        # fewer RAMs first, then prefer uneven fill (tight bins plus near-empty ones)
        n = sum(sol.values())
        sq = sum(c * self.bits(p) ** 2 for p, c in sol.items())
        return (n, -sq)

    def lower_bound(self) -> int:
        total = sum(a * c for a, c in zip(self.area, self.count))
        return max(-(-total // self.cap), -(-sum(self.count) // self.h_b))

    def coverage(self, sol: Counter) -> list[int]:
        cov = [0] * len(self.shapes)
        for p, c in sol.items():
            for i in p:
                cov[i] += c
        return cov


def _insert(prob: _Problem, sol: Counter, s: int, k: int, rng: Optional[random.Random], params: GaParams):
    """Add k slices of shape s to sol, best-fit into existing bins, else new bins."""
    while k > 0:
        best = None
        best_key = None
        explore = rng is not None
        for p in sorted(sol):
            q = prob.extend(p, s)
            if q is None:
                continue
            if explore and prob.aspect(q) != prob.aspect(p) and rng.random() >= params.p_adm_w:
                continue
            key = (prob.bits(p), p)
            if best_key is None or key > best_key:
                best, best_key = p, key
        if best is not None and explore and rng.random() < params.p_adm_h:
            best = None  # admitted height-raising move: fresh RAM instead of co-location
            k_new = 1
        else:
            k_new = k
        if best is None:
            stack = (s,)
            while True:
                nxt = prob.extend(stack, s)
                if nxt is None:
                    break
                stack = nxt
            j = len(stack)
            full, rest = divmod(k_new, j)
            if full:
                sol[stack] += full
            if rest:
                sol[tuple([s] * rest)] += 1
            k -= k_new
            continue
        m = min(sol[best], k)
        _sub(sol, best, m)
        sol[prob.extend(best, s)] += m
        k -= m


def _sub(sol: Counter, p: Pattern, m: int):
    sol[p] -= m
    if sol[p] <= 0:
        del sol[p]


def _reinsert(prob: _Problem, sol: Counter, orphans: Counter, rng, params):
    order = sorted(orphans, key=lambda s: (-prob.area[s], s))
    if rng is not None and len(order) > 1 and rng.random() < 0.5:
        # occasionally perturb the decreasing order
        i, j = rng.randrange(len(order)), rng.randrange(len(order))
        order[i], order[j] = order[j], order[i]
    for s in order:
        if orphans[s]:
            _insert(prob, sol, s, orphans[s], rng, params)


def _repair(prob: _Problem, sol: Counter, rng, params):
    cov = prob.coverage(sol)
    orphans = Counter({i: prob.count[i] - c for i, c in enumerate(cov) if prob.count[i] > c})
    _reinsert(prob, sol, orphans, rng, params)


def _crossover(prob: _Problem, a: Counter, b: Counter, rng: random.Random, params: GaParams) -> Counter:
    child = Counter(a)
    b_types = sorted(b)
    inject = Counter()
    for p in b_types:
        if rng.random() < 0.5:
            inject[p] = rng.randint(1, b[p])
    if not inject:
        return child
    need = [0] * len(prob.shapes)
    for p, c in inject.items():
        for i in p:
            need[i] += c
    cov = prob.coverage(child)
    for s in range(len(prob.shapes)):
        excess = cov[s] + need[s] - prob.count[s]
        if excess <= 0:
            continue
        # dissolve the emptiest bins holding shape s until enough copies are freed
        holders = sorted((p for p in child if s in p), key=lambda p: (prob.bits(p), p))
        for p in holders:
            if excess <= 0:
                break
            per = p.count(s)
            m = min(child[p], -(-excess // per))
            _sub(child, p, m)
            for i in p:
                cov[i] -= m
            excess -= m * per
    child.update(inject)
    _repair(prob, child, rng, params)
    return child


def _mutate(prob: _Problem, sol: Counter, rng: random.Random, params: GaParams) -> Counter:
    sol = Counter(sol)
    n = sum(sol.values())
    k = rng.randint(1, max(1, n // 20))
    types = sorted(sol)
    # bias toward poorly filled bins
    weights = [sol[p] * (prob.cap - prob.bits(p) + 1) for p in types]
    for _ in range(k):
        if not types:
            break
        p = rng.choices(types, weights)[0]
        if sol.get(p, 0) <= 0:
            continue
        _sub(sol, p, 1)
    _repair(prob, sol, rng, params)
    return sol


def _eliminate(prob: _Problem, sol: Counter) -> Counter:
    """Try to empty the least-filled bin into the others (no new RAMs allowed)."""
    if not sol:
        return sol
    worst = min(sol, key=lambda p: (prob.bits(p), p))
    trial = Counter(sol)
    _sub(trial, worst, 1)
    for s in sorted(worst, key=lambda i: (-prob.area[i], i)):
        best = None
        for p in sorted(trial):
            q = prob.extend(p, s)
            if q is not None and (best is None or prob.bits(p) > prob.bits(best)):
                best = p
        if best is None:
            return sol
        q = prob.extend(best, s)
        _sub(trial, best, 1)
        trial[q] += 1
    return trial


def _to_pattern_solution(prob: _Problem, groups) -> Counter:
    index = {sh: i for i, sh in enumerate(prob.shapes)}
    sol = Counter()
    for g in groups:
        sol[tuple(sorted(index[s.shape] for s in g))] += 1
    return sol


def _materialize(prob: _Problem, sol: Counter) -> list[list[Slice]]:
    pools = [list(m) for m in prob.members]
    cursor = [0] * len(pools)
    groups = []
    for p in sorted(sol):
        for _ in range(sol[p]):
            g = []
            for i in p:
                g.append(pools[i][cursor[i]])
                cursor[i] += 1
            groups.append(g)
    return groups


def ga_groups(slices: Sequence[Slice], ram: RamSpec, params: GaParams, log=None) -> list[list[Slice]]:
    check_sliceable(slices, ram)
    if not slices:
        return []
    prob = _Problem(slices, ram, params.h_b)
    rng = random.Random(params.seed)
    seed_sol = _to_pattern_solution(prob, greedy_groups(slices, ram, params.h_b))
    lb = prob.lower_bound()

    pop = [seed_sol]
    for _ in range(params.pop_size - 1):
        sol = Counter()
        _repair(prob, sol, rng, params)
        pop.append(sol)
    fits = [prob.fitness(s) for s in pop]
    best_i = min(range(len(pop)), key=lambda i: fits[i])
    best, best_fit = pop[best_i], fits[best_i]
    stale = 0

    def pick():
        contenders = [rng.randrange(len(pop)) for _ in range(params.tourney)]
        return pop[min(contenders, key=lambda i: fits[i])]

    for gen in range(params.generations):
        if best_fit[0] <= lb or stale >= params.stagnation:
            break
        children = [best]
        while len(children) < params.pop_size:
            child = _crossover(prob, pick(), pick(), rng, params)
            if rng.random() < params.p_mut:
                child = _mutate(prob, child, rng, params)
            child = _eliminate(prob, child)
            children.append(child)
        pop = children
        fits = [prob.fitness(s) for s in pop]
        i = min(range(len(pop)), key=lambda i: fits[i])
        if fits[i] < best_fit:
            if fits[i][0] < best_fit[0]:
                stale = 0
            else:
                stale += 1
            best, best_fit = pop[i], fits[i]
        else:
            stale += 1
        if log is not None:
            log(gen, best_fit[0])
    return _materialize(prob, best)


def pack_ga(slices: Sequence[Slice], ram: RamSpec, params: GaParams, *, island: str = "0") -> PackingSolution:
    groups = ga_groups(slices, ram, params)
    return solution_from_groups(groups, ram, island=island, seed=params.seed, engine="ga", h_b=params.h_b)
