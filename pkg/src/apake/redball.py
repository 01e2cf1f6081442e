"""The adaptive box-drawing game behind the dictionary-attack analysis.

n boxes hold a_1 <= ... <= a_n balls, one red per box.  A strategy draws t
balls without replacement, choosing a box each time; it wins when it has
collected ell reds.  The optimal win probability satisfies

    V(t, boxes, ell) = max_j [ (1/a_j) V(t-1, boxes \\ {j}, ell-1)
                             + (1 - 1/a_j) V(t-1, boxes with a_j - 1, ell) ]

with V(., ., 0) = 1 and V(0, ., ell>=1) = 0, and equals the tail probability
that ell independent uniforms on [a_1]..[a_ell] (the ell smallest boxes) sum
to at most t.  Both sides are computed here in exact rational arithmetic so
their equality can be asserted with zero tolerance; a Monte Carlo of the
box-by-box strategy and the exp(-2(0.5-alpha)^2 * ell) tail bound round out
the toolkit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import ceil, comb, exp

from .errors import DomainError, OracleUnavailable

# Cap on (t+1)*(ell+1)*#multisets before the memoized recursion is attempted.
DP_STATE_LIMIT = 10_000_000


@dataclass(frozen=True)
class RedBallInstance:
    """Box sizes (sorted ascending), draw budget t, target red count ell."""

    boxes: tuple[int, ...]
    t: int
    ell: int

    def __post_init__(self):
        if any(a < 1 for a in self.boxes):
            raise DomainError("box sizes must be positive")
        if self.t < 0:
            raise DomainError("draw budget must be nonnegative")
        if not 0 <= self.ell <= len(self.boxes):
            raise DomainError("target must satisfy 0 <= ell <= n")
        object.__setattr__(self, "boxes", tuple(sorted(self.boxes)))

    @classmethod
    def create(cls, boxes, t: int, ell: int) -> "RedBallInstance":
        return cls(boxes=tuple(boxes), t=t, ell=ell)


@dataclass(frozen=True)
class BoundParams:
    """alpha < 1/2 and the tail exponent beta = 2 (0.5 - alpha)^2."""

    alpha: Fraction

    def __post_init__(self):
        a = Fraction(self.alpha)
        if not 0 < a < Fraction(1, 2):
            raise DomainError("alpha must lie in (0, 1/2)")
        object.__setattr__(self, "alpha", a)

    @property
    def beta(self) -> Fraction:
        return 2 * (Fraction(1, 2) - self.alpha) ** 2

    def max_steps(self, ell: int, a: int) -> int:
        """Largest integer budget t with t < alpha * ell * a (exact arithmetic)."""
        return ceil(self.alpha * ell * a) - 1


def theta_optimal_dp(inst: RedBallInstance, state_limit: int = DP_STATE_LIMIT) -> Fraction:
    """Optimal win probability, exact, by memoized recursion over
    (budget, target, multiset of remaining box sizes)."""
    n = len(inst.boxes)
    a_max = max(inst.boxes, default=1)
    bound = comb(a_max + n - 1, n) * (inst.t + 1) * (inst.ell + 1) if n else 1
    if bound > state_limit:
        raise OracleUnavailable(f"estimated state space {bound} exceeds limit {state_limit}")
    return _theta(inst.t, inst.ell, inst.boxes)


@lru_cache(maxsize=None)
def _theta(t: int, ell: int, boxes: tuple[int, ...]) -> Fraction:
    if ell == 0:
        return Fraction(1)
    if t == 0 or ell > len(boxes) or t < ell:
        return Fraction(0)
    best = Fraction(0)
    for j, a in enumerate(boxes):
        if j > 0 and a == boxes[j - 1]:
            continue  # identical box, same value
        hit = Fraction(1, a)
        removed = boxes[:j] + boxes[j + 1 :]
        val = hit * _theta(t - 1, ell - 1, removed)
        if a > 1:
            shrunk = tuple(sorted(removed + (a - 1,)))
            val += (1 - hit) * _theta(t - 1, ell, shrunk)
        if val > best:
            best = val
    return best


def theta_closed_form(inst: RedBallInstance) -> Fraction:
    """Pr[x_1 + ... + x_ell <= t] for independent x_i uniform on {1..a_i},
    taking the ell smallest boxes; exact convolution."""
    if inst.ell == 0:
        return Fraction(1)
    sizes = inst.boxes[: inst.ell]
    # counts[s] = number of outcome tuples with sum ell..ell+len(counts)-1
    counts = [1]
    offset = 0
    for a in sizes:
        new = [0] * (len(counts) + a - 1)
        for s, c in enumerate(counts):
            if not c:
                continue
            for v in range(a):
                new[s + v] += c
        counts = new
        offset += 1
    total = 1
    for a in sizes:
        total *= a
    favorable = sum(c for s, c in enumerate(counts) if s + offset <= inst.t)
    return Fraction(favorable, total)


@dataclass(frozen=True)
class MonteCarloResult:
    trials: int
    successes: int

    @property
    def frequency(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def sigma(self) -> float:
        f = self.frequency
        return (f * (1 - f) / self.trials) ** 0.5 if self.trials else 0.0


def simulate_greedy(inst: RedBallInstance, trials: int, rng: random.Random) -> MonteCarloResult:
    """Monte Carlo of the sequential strategy: exhaust box 1, then box 2, ...

    Each box is simulated literally as draws without replacement (red found
    at step s with probability 1/(remaining balls)), not via the closed form.
    """
    if inst.ell == 0:
        return MonteCarloResult(trials=trials, successes=trials)
    sizes = inst.boxes[: inst.ell]
    successes = 0
    for _ in range(trials):
        budget = inst.t
        won = True
        for a in sizes:
            remaining = a
            found = False
            while remaining > 0 and budget > 0:
                budget -= 1
                if rng.randrange(remaining) == 0:
                    found = True
                    break
                remaining -= 1
            if not found:
                won = False
                break
        if won:
            successes += 1
    return MonteCarloResult(trials=trials, successes=successes)


def hoeffding_bound(bp: BoundParams, ell: int) -> float:
    """The tail bound exp(-2 (0.5 - alpha)^2 * ell), valid whenever the budget
    stays below alpha * ell * a on equal boxes of size a."""
    if ell < 1:
        raise DomainError("ell must be positive")
    return exp(-float(bp.beta) * ell)
