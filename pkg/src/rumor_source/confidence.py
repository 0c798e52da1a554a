"""Confidence sets for the diffusion source and their closed-form error bounds.

Two set constructions are supported on regular hosts: the K nodes with the
smallest max-subtree score, and the radius-L tree ball around the rumor
center(s).  On glued hosts the ball construction is applied to each half
separately and the union is returned.

Every bound evaluator reports the raw formula value and the value clamped
to one; raw values above one are flagged vacuous rather than hidden.
Natural logarithms throughout (e appears explicitly in the formulas).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln

from .diffusion import split_glued
from .estimators import ScoreTable, rumor_centers, score_all
from .trees import GLUED, REGULAR, InfectionTree, ball


@dataclass(frozen=True)
class ConfidenceSet:
    """A candidate-source set plus how it was built.

    method is one of "psi_top_k" (param = K), "phi_ball" (param = L, with
    the rumor centers used recorded in centers), or "glued_union"
    (param = L, centers from both halves, translated to original labels).
    """

    method: str
    param: int
    members: frozenset[int]
    centers: tuple[int, ...] = ()

    def __contains__(self, label: int) -> bool:
        return label in self.members


@dataclass(frozen=True)
class BoundReport:
    """A bound value with every input recorded.

    raw_value is the formula as written; clamped is min(raw, 1) since the
    quantity bounded is a probability.  extras carries labeled intermediate
    constants so nothing is an opaque magic number.
    """

    formula_id: str
    inputs: dict
    raw_value: float
    extras: dict = field(default_factory=dict)

    @property
    def clamped(self) -> float:
        return min(self.raw_value, 1.0)

    @property
    def vacuous(self) -> bool:
        return self.raw_value > 1.0

    def to_dict(self) -> dict:
        return {
            "formula_id": self.formula_id,
            "inputs": dict(self.inputs),
            "raw_value": self.raw_value,
            "clamped": self.clamped,
            "vacuous": self.vacuous,
            "extras": dict(self.extras),
        }


# ---------------------------------------------------------------------------
# set constructions


def confset_psi(table: ScoreTable, K: int) -> ConfidenceSet:
    """The K nodes of smallest max-subtree score.

    Ties at the boundary are broken by smaller subtree product, then by
    smaller label, so the set is deterministic and has exactly K members.
    """
    n = table.n
    if not 1 <= K <= n:
        raise ValueError(f"K={K} outside 1..{n}")
    labels = np.arange(1, n + 1)
    order = np.lexsort((labels, table.log_phi[1:], table.psi[1:]))
    members = frozenset(int(v) for v in labels[order[:K]])
    return ConfidenceSet(method="psi_top_k", param=K, members=members)


def confset_phi(tree: InfectionTree, table: ScoreTable, L: int) -> ConfidenceSet:
    """All nodes within tree distance L of a rumor center.

    With tied centers the union of both balls is taken; every bound proved
    for a single-center ball still applies to this superset.
    """
    if L < 0:
        raise ValueError("radius L must be nonnegative")
    centers = rumor_centers(table)
    members = ball(tree, centers, L)
    return ConfidenceSet(method="phi_ball", param=L, members=members,
                         centers=centers)


def confset_glued(tree: InfectionTree, L: int) -> ConfidenceSet:
    """Union of the radius-L ball confidence sets of the two glued halves."""
    if tree.spec.kind != GLUED:
        raise ValueError("glued union requires a glued host")
    split = split_glued(tree)
    members: set[int] = set()
    centers: list[int] = []
    for half, original in ((split.tree_d, split.original_d),
                           (split.tree_D, split.original_D)):
        if half.n == 0:
            continue
        cs = confset_phi(half, score_all(half), L)
        members.update(int(original[v]) for v in cs.members)
        centers.extend(int(original[v]) for v in cs.centers)
    return ConfidenceSet(method="glued_union", param=L,
                         members=frozenset(members),
                         centers=tuple(sorted(centers)))


def ball_size_bound(d: int, L: int) -> int:
    """Vertices of a radius-L ball in the d-regular host: (d(d-1)^L - 2)/(d-2)."""
    if d < 3 or L < 0:
        raise ValueError("need d >= 3 and L >= 0")
    return (d * (d - 1) ** L - 2) // (d - 2)


# ---------------------------------------------------------------------------
# bound evaluators


def _c1(d: int) -> float:
    a = (d - 1) / (d - 2)
    return 2.0 * (d - 2) / ((d - 1) * math.exp(betaln(a, a)))


def _topk_tail_constants(d: int, K: int) -> dict:
    """Constants behind the large-K tail term of the top-K bound.

    The tail of the limiting Beta mass below 1 - eta is bounded per early
    node k by (1/((K-1) beta(c1,c2))) (1-eta)^(K-1+1/(d-2)), where the Beta
    parameters depend on the (unknown) degree j of node k among the first K
    arrivals.  Saturated nodes (j = d) contribute nothing, so the worst
    admissible j is taken; the exact per-node constant and the Stirling
    upper-bound chain for 1/beta are both reported.
    """
    exact_inv_beta = 0.0
    worst_j = 0
    for j in range(1, min(d - 1, K - 1) + 1):
        c1k = K - 1 + j / (d - 2)
        c2k = (d - j) / (d - 2)
        inv_beta = math.exp(-betaln(c1k, c2k))
        if inv_beta > exact_inv_beta:
            exact_inv_beta = inv_beta
            worst_j = j
    # Stirling chain: 1/beta <= (8/7) e^(1/(12(K-1))) e^(d/(d-2))
    #                          (K-1+d/(d-2))^(d/(d-2)) / (K-1)^(1/(d-2))
    p = d / (d - 2)
    chain_inv_beta = ((8.0 / 7.0) * math.exp(1.0 / (12.0 * (K - 1)))
                      * math.exp(p) * (K - 1 + p) ** p
                      / (K - 1) ** (1.0 / (d - 2)))
    exponent = 1.0 + 1.0 / (d - 2)
    return {
        "worst_early_degree": worst_j,
        "exact_inv_beta": exact_inv_beta,
        "chain_inv_beta": chain_inv_beta,
        "per_node_exact": exact_inv_beta / (K - 1),
        "per_node_chain": chain_inv_beta / (K - 1),
        "C2_chain": chain_inv_beta / (K - 1) / K ** exponent,
    }


def psi_topk_error_bound(d: int, K: int, eta: float) -> BoundReport:
    """Error bound for the top-K max-subtree set at a split point eta.

    raw_value uses the exact per-node tail sum; the looser Stirling-chain
    variant (a K-free constant times K^(2+1/(d-2))) is reported in extras
    so the two can be compared.  The exact sum never exceeds the chain form.
    """
    if d < 3:
        raise ValueError("bound requires d >= 3")
    if K <= 3:
        raise ValueError("bound requires K > 3")
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie strictly inside (0, 1)")
    c1 = _c1(d)
    consts = _topk_tail_constants(d, K)
    head = c1 * eta ** (1.0 + 1.0 / (d - 2))
    decay = (1.0 - eta) ** (K - 1 + 1.0 / (d - 2))
    tail_exact = K * consts["per_node_exact"] * decay
    tail_chain = K * consts["per_node_chain"] * decay
    raw = head + tail_exact
    return BoundReport(
        formula_id="t1",
        inputs={"d": d, "K": K, "eta": eta},
        raw_value=raw,
        extras={
            "C1": c1,
            "head_term": head,
            "tail_exact_sum": tail_exact,
            "tail_chain": tail_chain,
            "raw_chain": head + tail_chain,
            **consts,
        },
    )


def optimize_psi_topk_bound(d: int, K: int,
                            tol: float = 1e-6) -> tuple[float, BoundReport]:
    """Minimize the top-K bound over eta by golden-section search.

    Both terms are convex in eta, so the search converges to the global
    minimizer; a coarse grid guard keeps the postcondition (no grid point
    beats the result) robust to any numeric edge case.
    """

    def f(eta: float) -> float:
        return psi_topk_error_bound(d, K, eta).raw_value

    lo, hi = 1e-9, 1.0 - 1e-9
    inv_gold = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - inv_gold * (b - a)
    x2 = a + inv_gold * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_gold * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_gold * (b - a)
            f2 = f(x2)
    eta_star = (a + b) / 2.0
    best = f(eta_star)
    for i in range(1, 100):
        eta = i / 100.0
        if f(eta) < best:
            eta_star, best = eta, f(eta)
    report = psi_topk_error_bound(d, K, eta_star)
    report = BoundReport(
        formula_id="t1opt",
        inputs={"d": d, "K": K, "eta": eta_star},
        raw_value=report.raw_value,
        extras=dict(report.extras, eta_star=eta_star),
    )
    return eta_star, report


def phi_displacement_bound(d: int, ell: int) -> BoundReport:
    """Bound on the chance that a vertex at distance ell from the source has
    a subtree product no larger than the source's.

    7 exp(-(ell/2) log(min(ell(d-2)/(4e log ell), ell/2))).
    """
    if d < 3:
        raise ValueError("bound requires d >= 3")
    if ell <= 1:
        raise ValueError("bound requires ell > 1 (log ell must be positive)")
    inner = min(ell * (d - 2) / (4.0 * math.e * math.log(ell)), ell / 2.0)
    raw = 7.0 * math.exp(-(ell / 2.0) * math.log(inner))
    return BoundReport(formula_id="t2", inputs={"d": d, "ell": ell},
                       raw_value=raw, extras={"log_argument": inner})


def phi_ball_error_bound(d: int, L: int) -> BoundReport:
    """Error bound for the radius-L rumor-center ball on a d-regular host.

    7 exp(-(L/2) log(min(L(d-2)/(4e d^2 log L), L/(2 d^2)))).
    """
    if d < 3:
        raise ValueError("bound requires d >= 3")
    if L < 2:
        raise ValueError("bound requires L >= 2")
    inner = min(L * (d - 2) / (4.0 * math.e * d * d * math.log(L)),
                L / (2.0 * d * d))
    raw = 7.0 * math.exp(-(L / 2.0) * math.log(inner))
    return BoundReport(formula_id="cor2", inputs={"d": d, "L": L},
                       raw_value=raw, extras={"log_argument": inner})


def glued_union_error_bound(d: int, D: int, L: int) -> BoundReport:
    """Error bound for the union set on a glued host: the ball bound with the
    larger degree D in place of d."""
    if not 3 <= d < D:
        raise ValueError("glued host requires 3 <= d < D")
    base = phi_ball_error_bound(D, L)
    return BoundReport(formula_id="prop2", inputs={"d": d, "D": D, "L": L},
                       raw_value=base.raw_value, extras=dict(base.extras))


# ---------------------------------------------------------------------------
# required set sizes


@dataclass(frozen=True)
class SizeSearchResult:
    """Smallest parameter meeting a target error, found numerically, next to
    the closed-form sufficient value (with its validity premises checked)."""

    value: int
    bound: BoundReport
    closed_form: int | None
    closed_form_conditions: dict

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "bound": self.bound.to_dict(),
            "closed_form": self.closed_form,
            "closed_form_conditions": dict(self.closed_form_conditions),
        }


def _check_eps(eps: float):
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie strictly inside (0, 1)")


def required_topk(d: int, eps: float, k_cap: int = 1_000_000) -> SizeSearchResult:
    """Smallest K > 3 whose optimized top-K bound is at most eps."""
    _check_eps(eps)

    def optimized(K: int) -> BoundReport:
        return optimize_psi_topk_bound(d, K)[1]

    hi = 4
    while optimized(hi).raw_value > eps:
        hi *= 2
        if hi > k_cap:
            raise ValueError(f"no K <= {k_cap} meets eps={eps}")
    lo = max(4, hi // 2)
    while lo < hi:
        mid = (lo + hi) // 2
        if optimized(mid).raw_value <= eps:
            hi = mid
        else:
            lo = mid + 1
    # the bound is monotone in practice; make the minimality claim exact
    while hi > 4 and optimized(hi - 1).raw_value <= eps:
        hi -= 1

    c1 = _c1(d)
    c2 = max(_topk_tail_constants(d, K)["C2_chain"] for K in range(4, 64))
    exp_ratio = (d - 1) / (d - 2)
    k_a = (2.0 * c1 / eps) * 12.0 ** exp_ratio
    k_b = (4.0 / eps) * (2.0 * c1) ** (1.0 / exp_ratio) * (2.0 * c2) ** (1.0 / (d - 1))
    closed = max(4, math.ceil(max(k_a, k_b)))
    conditions = {
        "eps_below_2C1": eps < 2.0 * c1,
        "logK_le_K_pow": math.log(closed) <= closed ** (1.0 / (d - 1)),
        "log2C2eps_le_pow": (math.log(2.0 * c2 / eps)
                             <= (2.0 * c2 / eps) ** (1.0 / (d - 1))),
    }
    return SizeSearchResult(value=hi, bound=optimized(hi),
                            closed_form=closed,
                            closed_form_conditions=conditions)


def required_radius(d: int, eps: float, l_cap: int = 1_000_000) -> SizeSearchResult:
    """Smallest L >= 2 whose ball bound is at most eps (linear scan; the
    bound is not monotone near its vacuous head)."""
    _check_eps(eps)
    L = 2
    while phi_ball_error_bound(d, L).raw_value > eps:
        L += 1
        if L > l_cap:
            raise ValueError(f"no L <= {l_cap} meets eps={eps}")
    log_term = math.log(7.0 / eps)
    c_big = 16.0 * math.e ** 2 * d ** 4
    l_a = c_big * 8.0 * log_term / math.log(4.0 * log_term)
    m2 = log_term / (d * d)
    valid = m2 > 1.0
    if valid:
        l_b = 4.0 * log_term / math.log(m2)
        closed = max(2, math.ceil(max(l_a, l_b)))
    else:
        closed = None
    conditions = {
        "log7eps_exceeds_d_squared": valid,
    }
    return SizeSearchResult(value=L, bound=phi_ball_error_bound(d, L),
                            closed_form=closed,
                            closed_form_conditions=conditions)
