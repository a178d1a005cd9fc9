"""Polya-urn results for a single decision point.

Covers the limit laws for equal rewards (beta / Dirichlet), the mean
dynamics of the continuous-time embedding for triangular 2x2 schemas, the
two-edge transient with its exploration threshold, power-law and clock
exponents, and numeric checks of the survival arguments (the a/b/d schema
entries, the fixed-point identity, the induction step over truncated reward
functions, the one-walk supermartingale bracket and the auxiliary series
``g``).

Reward functions for the a/b/d machinery are described relative to the
minimum path length L through the decision point: ``f(L) = C`` and
``f(L + i) = C - deltas[i-1]`` for ``i >= 1``, with the last delta repeated
for every larger ``i``. Infinite sums therefore split into a finite part and
an exact geometric tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .rewards import RewardMode


class UrnDomainError(ValueError):
    """Parameters outside the validity domain of a formula."""


@dataclass(frozen=True)
class UrnSpec:
    """Initial weights ``w_i[0]`` and per-color rewards ``Delta_i`` of one decision point."""

    initial_weights: tuple[float, ...]
    rewards: tuple[float, ...]

    def __init__(self, initial_weights: Sequence[float], rewards: Sequence[float]):
        w = tuple(float(x) for x in initial_weights)
        r = tuple(float(x) for x in rewards)
        if len(w) != len(r) or not w:
            raise UrnDomainError("initial_weights and rewards must have the same non-zero length")
        if not all(x > 0 for x in w + r):
            raise UrnDomainError("weights and rewards must be positive")
        object.__setattr__(self, "initial_weights", w)
        object.__setattr__(self, "rewards", r)

    @property
    def alphas(self) -> np.ndarray:
        return np.array(self.initial_weights) / np.array(self.rewards)


def _equal_rewards(u: UrnSpec) -> bool:
    r = np.array(u.rewards)
    return bool(np.allclose(r, r[0], rtol=1e-12, atol=0))


@dataclass(frozen=True)
class BetaLimit:
    a: float
    b: float

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def var(self) -> float:
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1))

    @property
    def second_moment(self) -> float:
        return self.var + self.mean ** 2

    def dist(self):
        return stats.beta(self.a, self.b)


@dataclass(frozen=True)
class DirichletLimit:
    alphas: tuple[float, ...]

    def merge(self, i: int, j: int) -> "DirichletLimit":
        """Aggregate colors ``i`` and ``j`` into one, placed at position ``min(i, j)``."""
        if i == j:
            raise ValueError("cannot merge a color with itself")
        lo, hi = sorted((i, j))
        a = list(self.alphas)
        a[lo] += a.pop(hi)
        return DirichletLimit(tuple(a))

    def marginal(self, i: int) -> BetaLimit:
        return BetaLimit(self.alphas[i], sum(self.alphas) - self.alphas[i])

    @property
    def mean(self) -> np.ndarray:
        a = np.array(self.alphas)
        return a / a.sum()


def beta_limit(u: UrnSpec) -> BetaLimit:
    """Limit law of the normalized weight of color 1 when both rewards are equal."""
    if len(u.rewards) != 2:
        raise UrnDomainError("beta limit needs exactly two colors")
    if not _equal_rewards(u):
        raise UrnDomainError("beta limit requires equal rewards")
    a1, a2 = u.alphas
    return BetaLimit(float(a1), float(a2))


def dirichlet_limit(u: UrnSpec) -> DirichletLimit:
    if not _equal_rewards(u):
        raise UrnDomainError("Dirichlet limit requires equal rewards")
    return DirichletLimit(tuple(float(a) for a in u.alphas))


def poissonized_mean(A, w0, t):
    """Mean weights of the continuous-time urn with mean schema ``[[a, b], [0, d]]``.

    ``A`` is the transposed expected schema (upper triangular); returns an
    array of shape ``(2,)`` or ``(2, len(t))``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2) or A[1, 0] != 0:
        raise UrnDomainError("schema must be a 2x2 upper-triangular matrix")
    a, b, d = A[0, 0], A[0, 1], A[1, 1]
    w1, w2 = np.asarray(w0, dtype=float)
    t = np.asarray(t, dtype=float)
    x = (d - a) * t
    # b (e^{dt} - e^{at}) / (d - a) written so that a == d is the smooth limit
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(x == 0, 1.0, np.expm1(x) / np.where(x == 0, 1.0, x))
    cross = b * t * ratio * np.exp(a * t)
    return np.array([np.exp(a * t) * w1 + cross * w2, np.exp(d * t) * w2])


def _two_edge(u: UrnSpec) -> tuple[float, float, float, float]:
    if len(u.rewards) != 2:
        raise UrnDomainError("two-edge transient needs exactly two colors")
    (w1, w2), (D1, D2) = u.initial_weights, u.rewards
    if not D1 > D2:
        raise UrnDomainError("edge 1 must carry the larger reward")
    return w1, w2, D1, D2


def exploration_threshold(u: UrnSpec) -> float:
    """n* = w1[0] / Delta_1, end of the exploration plateau."""
    w1, _, D1, _ = _two_edge(u)
    return w1 / D1


def depoissonize_n_to_t(u: UrnSpec, n):
    """Mean continuous time at which the n-th draw happens, all draws credited to edge 1."""
    w1, _, D1, _ = _two_edge(u)
    n = np.asarray(n, dtype=float)
    if np.any(n <= 0):
        raise UrnDomainError("n must be positive")
    return np.log(n * D1 / w1) / D1


def transient_two_edge(u: UrnSpec, n):
    """Approximate mean normalized weight of the losing edge 2 after ``n`` walks.

    Plateau at its initial share up to ``n*``, then
    ``1 / (1 + (w1/w2) (n Delta_1 / w1) ** (1 - Delta_2/Delta_1))``. Both
    branches equal ``w2 / (w1 + w2)`` at ``n*``, so the curve is continuous
    with a kink there.
    """
    w1, w2, D1, D2 = _two_edge(u)
    n = np.asarray(n, dtype=float)
    nstar = w1 / D1
    late = 1.0 / (1.0 + (w1 / w2) * (np.maximum(n, nstar) * D1 / w1) ** (1.0 - D2 / D1))
    return np.where(n <= nstar, w2 / (w1 + w2), late)[()]


def decay_exponent(D1: float, D2: float) -> float:
    """Asymptotic log-log slope of the losing edge, ``Delta_2 / Delta_1 - 1``."""
    if not (D1 > D2 > 0):
        raise UrnDomainError("need Delta_1 > Delta_2 > 0")
    return D2 / D1 - 1.0


@dataclass(frozen=True)
class ExponentChain:
    beta_exponents: tuple[float, ...]
    clock_exponents: tuple[float, ...]
    reward_fn: Callable = field(repr=False, default=None)


def _non_increasing(f, upto: int) -> bool:
    vals = [float(f(L)) for L in range(1, upto + 1)]
    return all(a >= b for a, b in zip(vals, vals[1:]))


def exponent_chain(f, depth: int, clock_rule: str = "compound") -> ExponentChain:
    """Decay and clock exponents along a line of decision points.

    Decision point ``i`` sees a winning route of ``i`` hops and a losing one
    of ``i + 1`` hops, driven by its own clock ``n ** e_c[i]`` (``e_c[1] = 1``).
    Its losing edge decays as ``n ** e_beta[i]`` with
    ``e_beta[i] = e_c[i] * (f(i+1)/f(i) - 1)``.

    ``clock_rule="compound"`` integrates the hit rate of the next point,
    ``n ** (e_c[i] - 1) * n ** e_beta[i]``, giving ``e_c[i+1] = e_c[i] + e_beta[i]``.
    ``clock_rule="first_order"`` drops the upstream clock and uses
    ``e_c[i+1] = 1 + e_beta[i]``; it agrees with the compound rule for
    ``i = 1`` only (for f = 1/L it gives e_c[3] = 5/6, e_beta[3] = -5/24).

    A constant ``f`` gives all-zero decay exponents and unit clocks.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if clock_rule not in ("compound", "first_order"):
        raise ValueError("clock_rule must be 'compound' or 'first_order'")
    if not _non_increasing(f, depth + 1):
        raise UrnDomainError("exponent chain needs a non-increasing reward function")
    fv = lambda L: float(f(L))  # noqa: E731
    ec = [1.0]
    eb = []
    for i in range(1, depth + 1):
        eb.append(ec[-1] * (fv(i + 1) / fv(i) - 1.0))
        if i < depth:
            ec.append((ec[-1] if clock_rule == "compound" else 1.0) + eb[-1])
    return ExponentChain(tuple(eb), tuple(ec), f)


# ---------------------------------------------------------------------------
# a / b / d schema entries


@dataclass(frozen=True)
class AbdParams:
    """Inputs of the mean schema of a decision point with a merged beta-edge.

    ``z`` is the hypothesized limit share of the beta-edge, ``q`` its escape
    probability (1: never returns), ``C`` the reward at the minimum length
    and ``deltas`` the non-decreasing shortfalls ``C - f(L + i)``,
    ``i = 1..K`` (constant beyond ``K``). ``hop_distribution[m]`` is the
    probability of arriving at the decision point ``m`` hops later than the
    minimum; ``None`` means always at the minimum.
    """

    z: float
    q: float
    C: float = 1.0
    deltas: tuple[float, ...] = ()
    hop_distribution: tuple[float, ...] | None = None
    mode: RewardMode = RewardMode.MULTIPLE

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(x) for x in self.deltas))
        object.__setattr__(self, "mode", RewardMode(self.mode))
        if self.hop_distribution is not None:
            p = tuple(float(x) for x in self.hop_distribution)
            object.__setattr__(self, "hop_distribution", p)
            if min(p) < 0 or abs(sum(p) - 1) > 1e-9:
                raise UrnDomainError("hop distribution must be a pmf")
        if not 0 <= self.q <= 1:
            raise UrnDomainError("q must lie in [0, 1]")
        if not 0 <= self.z:
            raise UrnDomainError("z must be nonnegative")
        if self.C <= 0:
            raise UrnDomainError("C must be positive")
        d = self.deltas
        if any(x < 0 for x in d) or any(b < a for a, b in zip(d, d[1:])):
            raise UrnDomainError("deltas must be nonnegative and non-decreasing")
        if d and self.C - d[-1] <= 0:
            raise UrnDomainError("rewards C - delta_i must stay positive")

    @classmethod
    def from_reward(cls, f, L: int, depth: int, z: float, q: float, **kw) -> "AbdParams":
        """Tabulate ``f`` from length ``L`` up to ``L + depth``; constant afterwards."""
        C = float(f(L))
        deltas = tuple(C - float(f(L + i)) for i in range(1, depth + 1))
        return cls(z=z, q=q, C=C, deltas=deltas, **kw)

    def truncated(self, k: int) -> "AbdParams":
        """Parameters of ``f_k``: ``f`` up to ``L + k + 1``, constant ``C - delta_{k+1}`` after.

        ``f_0`` is the step function ``C`` then ``C - delta_1``.
        """
        d = self.deltas
        if not d:
            return self
        cut = d[: k + 1]
        return AbdParams(self.z, self.q, self.C, cut, self.hop_distribution, self.mode)

    def delta(self, j: int) -> float:
        if j <= 0 or not self.deltas:
            return 0.0
        return self.deltas[min(j, len(self.deltas)) - 1]


class AbdEntries(NamedTuple):
    a: float
    b: float
    d: float


def _geometric_sums(p: AbdParams, m: int, x: float) -> tuple[float, float]:
    """S0 = sum_i x^i f(L+m+i+1) and S1 = sum_i (i+1) x^i f(L+m+i+1)."""
    K = len(p.deltas)
    n_fin = max(0, K - m - 1)  # terms where m+i+1 < K still vary
    i = np.arange(n_fin)
    vals = p.C - np.array([p.delta(m + k + 1) for k in range(n_fin)])
    xi = x ** i
    s0 = float(np.sum(xi * vals))
    s1 = float(np.sum((i + 1) * xi * vals))
    c_tail = p.C - p.delta(m + n_fin + 1)
    # exact tails: sum_{i>=I} x^i and sum_{i>=I} (i+1) x^i
    I = n_fin
    t0 = x ** I / (1 - x)
    t1 = x ** I * (I + 1 - I * x) / (1 - x) ** 2
    return s0 + c_tail * t0, s1 + c_tail * t1


def abd_entries(p: AbdParams) -> AbdEntries:
    """Mean schema entries (a, b, d), averaged over the hop distribution if given.

    a: reward to the alpha*-edge when it is picked first; b: reward to the
    alpha*-edge when the beta-edge is picked first; d: reward to the
    beta-edge when it is picked first (counted per traversal in the
    multiple-reward model, once in the single-reward model).
    """
    z, q = p.z, p.q
    x = z * (1 - q)
    if x >= 1:
        raise UrnDomainError("z (1 - q) must be < 1 for the loop series to converge")
    pm = (1.0,) if p.hop_distribution is None else p.hop_distribution
    a = b = d = 0.0
    for m, w in enumerate(pm):
        if w == 0:
            continue
        s0, s1 = _geometric_sums(p, m, x)
        a += w * (p.C - p.delta(m))
        b += w * (1 - q) * (1 - z) * s0
        d += w * (1 - z + z * q) * (s1 if p.mode is RewardMode.MULTIPLE else s0)
    return AbdEntries(a, b, d)


def fixed_point_gap(p: AbdParams) -> float:
    """``(d - a) / (d - a + b) - z``; ``-inf`` when ``d <= a`` (no surviving share)."""
    a, b, d = abd_entries(p)
    if d <= a:
        return -math.inf
    return (d - a) / (d - a + b) - p.z


def induction_step_check(p: AbdParams, k: int, rtol: float = 1e-12) -> bool:
    """Whether ``b_k / (d_k - a_k) <= b_{k+1} / (d_{k+1} - a_{k+1})`` for ``f_k``, ``f_{k+1}``.

    Trivially true when either ``d <= a``.
    """
    ak, bk, dk = abd_entries(p.truncated(k))
    a1, b1, d1 = abd_entries(p.truncated(k + 1))
    if dk <= ak or d1 <= a1:
        return True
    lhs, rhs = bk / (dk - ak), b1 / (d1 - a1)
    return bool(lhs <= rhs * (1 + rtol) + 1e-300)


# ---------------------------------------------------------------------------
# supermartingale bracket and the auxiliary series


def lemma_bracket(w_hat: float, w_dot: float, L_hat: int, ell: int, q: float, f,
                  mode: RewardMode = RewardMode.MULTIPLE, tol: float = 1e-15,
                  max_terms: int = 10_000_000) -> float:
    """``E[Z'_{n+1} | F_n, ell] / Z_n`` for an alpha*-edge against a merged beta-edge.

    The beta-edge loops back (one hop) with probability ``1 - q`` and escapes
    to a route of ``L_hat + 1`` hops otherwise. After ``i`` loops the walk
    either takes the alpha*-edge (length ``ell + i + L_hat``) or escapes
    (length ``ell + i + L_hat + 1``, ``i + 1`` beta traversals). With
    ``q = 1`` this is the two-branch loop-free bracket.

    When the series needs more than ``max_terms`` terms the remaining tail
    is bounded and added, so the result never underestimates.
    """
    mode = RewardMode(mode)
    Z = w_dot / (w_dot + w_hat)
    x = (1 - q) * Z
    scale = w_hat / w_dot + q
    if x == 0:
        n_terms = 1
    else:
        n_terms = int(min(max_terms, max(1, math.ceil(math.log(tol * (1 - x) / scale) / math.log(x)) + 1)))
    i = np.arange(n_terms, dtype=float)
    D = np.asarray(f(ell + i + L_hat), dtype=float)
    Dp = np.asarray(f(ell + i + L_hat + 1), dtype=float)
    if mode is RewardMode.MULTIPLE:
        loop_gain, esc_gain = i * D, (i + 1) * Dp
    else:
        loop_gain, esc_gain = np.where(i >= 1, D, 0.0), Dp
    via_alpha = (w_hat / w_dot) * (w_dot + loop_gain) / (w_dot + loop_gain + w_hat + D)
    via_escape = q * (w_dot + esc_gain) / (w_dot + esc_gain + w_hat)
    with np.errstate(under="ignore"):
        weights = x ** i
    total = math.fsum(weights * (via_alpha + via_escape))
    if n_terms == max_terms and x > 0:
        total += x ** n_terms / (1 - x) * scale
    return total


def g_appendix(alpha: float, x: float, q: float = 0.0, tol: float = 1e-12,
               return_error: bool = False):
    """``sum_{k = x+1, x+2, ...} rho^{k-x} / k * P`` with ``rho = alpha (1-q) / (alpha+1)``.

    ``P = (alpha + 1 + x) / (alpha (1 - q)) + x q alpha``; for ``q = 0`` this
    is ``(x + alpha + 1) / alpha * sum rho^{k-x} / k``. Terms are summed until
    the geometric tail bound ``P rho^{J+1} / ((x+J+1)(1-rho))`` drops below
    ``tol``.
    """
    if not (alpha > 0 and x >= 0 and 0 <= q < 1):
        raise UrnDomainError("need alpha > 0, x >= 0 and 0 <= q < 1")
    rho = alpha * (1 - q) / (alpha + 1)
    P = (alpha + 1 + x) / (alpha * (1 - q)) + x * q * alpha
    # smallest J with P rho^{J+1} / ((x+J+1)(1-rho)) <= tol
    J = max(1, int(math.ceil(math.log(tol * (1 - rho) * (x + 1) / P) / math.log(rho))))
    while P * rho ** (J + 1) / ((x + J + 1) * (1 - rho)) > tol:
        J += 1
    j = np.arange(1, J + 1, dtype=float)
    val = P * math.fsum(rho ** j / (x + j))
    err = P * rho ** (J + 1) / ((x + J + 1) * (1 - rho))
    return (val, err) if return_error else val
