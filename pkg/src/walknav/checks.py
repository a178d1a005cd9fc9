"""Numeric sweeps over the survival inequalities and the auxiliary series."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rewards import Constant, InverseLinear, PowerLaw, RewardMode, Tabled
from .urn import AbdParams, fixed_point_gap, g_appendix, induction_step_check, lemma_bracket


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {info}"


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def appendix_check(seed: int = 0, samples: int = 1000) -> list[CheckResult]:
    alphas = np.round(np.arange(1, 101) * 0.1, 10)
    xs = np.arange(1, 101) * 0.5
    vals = np.empty((alphas.size, xs.size))
    errs = np.empty_like(vals)
    for i, a in enumerate(alphas):
        for j, x in enumerate(xs):
            vals[i, j], errs[i, j] = g_appendix(a, x, return_error=True)
    grid = CheckResult("g_at_least_one", bool(vals.min() >= 1 and errs.max() <= 1e-10),
                       {"min_g": float(vals.min()), "max_truncation": float(errs.max()),
                        "points": int(vals.size)})
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        a, x = rng.uniform(0.1, 10), rng.uniform(1.5, 50)
        lhs = g_appendix(a, x - 1)
        rhs = (x + a) / (a + 1) * (g_appendix(a, x) * a / (x + a + 1) + 1 / x)
        worst = max(worst, abs(lhs - rhs))
    ident = CheckResult("g_recursion_identity", worst <= 1e-9, {"max_abs_error": worst, "points": samples})
    # q-variant: the lower bound 1 - alpha q only says something when alpha q < 1
    slack = np.inf
    flagged = 0
    for a in (0.1, 0.5, 1.0, 2.0, 5.0):
        for q in (0.05, 0.1, 0.3, 0.6, 0.9):
            if a * q >= 1:
                continue
            flagged += 1
            for x in (0.5, 1.0, 5.0, 20.0):
                slack = min(slack, g_appendix(a, x, q) - (1 - a * q))
    qvar = CheckResult("g_q_variant_bound", bool(slack >= 0), {"min_slack": float(slack),
                                                                "informative_pairs": flagged})
    return [grid, ident, qvar]


def _random_reward(rng: np.random.Generator):
    kind = rng.integers(4)
    if kind == 0:
        return PowerLaw(float(rng.uniform(0.05, 3)))
    if kind == 1:
        return InverseLinear()
    if kind == 2:
        return Constant(float(rng.uniform(0.1, 2)))
    steps = rng.exponential(0.1, size=int(rng.integers(2, 30)))
    vals = 1.0 + steps.sum() - np.concatenate([[0.0], np.cumsum(steps)[:-1]])
    return Tabled(vals)


def lemma_check(seed: int = 0, samples: int = 10_000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst = -np.inf
    at = None
    for _ in range(samples):
        f = _random_reward(rng)
        w_hat, w_dot = np.exp(rng.uniform(-4, 4, size=2))
        L_hat, ell = int(rng.integers(1, 11)), int(rng.integers(0, 11))
        q = float(rng.uniform()) if rng.random() > 0.1 else float(rng.integers(2))
        mode = RewardMode.MULTIPLE if rng.random() < 0.5 else RewardMode.SINGLE
        v = lemma_bracket(w_hat, w_dot, L_hat, ell, q, f, mode)
        if v > worst:
            worst, at = v, dict(w_hat=float(w_hat), w_dot=float(w_dot), L_hat=L_hat, ell=ell, q=q,
                                f=repr(f), mode=mode.value)
    const = lemma_bracket(1.0, 1.0, 3, 2, 1.0, Constant(1.0))
    return [CheckResult("lemma_bracket_at_most_one", bool(worst <= 1 + 1e-12),
                        {"max_bracket": float(worst), "samples": samples, "argmax": at}),
            CheckResult("lemma_bracket_constant_equality", abs(const - 1) <= 1e-12, {"value": const})]


SWEEP_Z = tuple(np.round(np.arange(0.05, 1.0, 0.1), 10))
SWEEP_Q = tuple(np.round(np.arange(0.0, 1.0, 0.1), 10))


def fixed_point_check() -> list[CheckResult]:
    worst_const = 0.0
    for z in SWEEP_Z:
        for q in SWEEP_Q:
            worst_const = max(worst_const, abs(fixed_point_gap(AbdParams(z=z, q=q, C=1.0))))
    worst_dec = -np.inf
    for fn in (InverseLinear(), PowerLaw(0.5), PowerLaw(2.0), Tabled([1.0, 0.9, 0.85, 0.8])):
        # a Tabled f is constant from its last entry on, so start strictly inside the table
        starts = range(1, len(fn.values)) if isinstance(fn, Tabled) else range(1, 6)
        for L in starts:
            for z in SWEEP_Z:
                for q in SWEEP_Q:
                    for mode in RewardMode:
                        p = AbdParams.from_reward(fn, L, 10, z=z, q=q, mode=mode)
                        worst_dec = max(worst_dec, fixed_point_gap(p))
    single = fixed_point_gap(AbdParams(z=0.3, q=0.2, C=1.0, mode=RewardMode.SINGLE))
    return [CheckResult("fixed_point_constant", worst_const <= 1e-12, {"max_abs_gap": worst_const}),
            CheckResult("fixed_point_decreasing", bool(worst_dec < 0), {"max_gap": float(worst_dec)}),
            CheckResult("fixed_point_single_constant", single == -np.inf, {"gap": single})]


def induction_check() -> list[CheckResult]:
    bad = []
    total = 0
    for z in np.round(np.arange(0.1, 1.0, 0.1), 10):
        for q in (0.0, 0.3, 0.7):
            p = AbdParams.from_reward(InverseLinear(), 1, 10, z=float(z), q=q)
            for k in range(9):
                total += 1
                if not induction_step_check(p, k):
                    bad.append((float(z), q, k))
    return [CheckResult("induction_step", not bad, {"cases": total, "failures": len(bad)})]


CHECKS = {
    "appendix": appendix_check,
    "lemma": lemma_check,
    "fixed-point": fixed_point_check,
    "induction": induction_check,
}


def run_checks(which=None, seed: int = 0) -> list[CheckResult]:
    names = list(CHECKS) if not which or which == "all" else [which]
    out = []
    for name in names:
        fn = CHECKS[name]
        out.extend(fn(seed=seed) if name in ("appendix", "lemma") else fn())
    return out
