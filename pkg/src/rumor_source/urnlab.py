"""Samplers and statistical checks for the limit laws behind the bounds.

The boundary-edge counts of the early-node subtrees evolve as a diagonal
Polya urn, which drives three families of checks:

  * subtree proportions against their limiting Dirichlet moments,
  * cumulative Beta products along a host path against the simulator,
  * a coupled two-urn construction whose pathwise order and product tail
    back the displacement bound.

Checks are seeded Monte Carlo with explicitly stated pass thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _kernels
from ._rng import derive_seed
from .diffusion import SimConfig, simulate
from .trees import REGULAR, GraphSpec, InfectionTree

MOMENT_MATCH = "moment_match"
CDF_DOMINATION = "empirical_cdf_domination"
PATHWISE_ORDER = "pathwise_order"


@dataclass
class PolyaUrn:
    """Urn with one color per tracked subtree and a diagonal replacement:
    each draw returns the drawn color's count plus a fixed increment."""

    counts: np.ndarray
    increment: int

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64).copy()
        if (self.counts < 1).any():
            raise ValueError("initial counts must be at least 1")
        if self.increment < 1:
            raise ValueError("increment must be positive")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def draw(self, rng: np.random.Generator) -> int:
        color = int(rng.choice(self.counts.shape[0],
                               p=self.counts / self.total))
        self.counts[color] += self.increment
        return color


@dataclass
class LimitCheckReport:
    """Outcome of one statistical check: what was compared, against what
    theory, with what slack, and whether everything landed inside it."""

    statistic: str
    empirical: dict
    theoretical: dict
    tolerance: dict
    passed: bool
    sample_size: int
    details: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "empirical": self.empirical,
            "theoretical": self.theoretical,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "sample_size": self.sample_size,
            "details": self.details,
        }


# ---------------------------------------------------------------------------
# tree-side quantities


def subtree_proportions(tree: InfectionTree, K: int) -> np.ndarray:
    """Fractions of the tree in each early node's piece of the cut forest.

    Cutting every edge between the first K arrivals splits the tree into K
    components, one containing each early node; component i's size over n
    is returned.  A saturated early node (host degree exhausted inside the
    first K) keeps the forced value 1/n forever.
    """
    if not 1 <= K <= tree.n:
        raise ValueError(f"K={K} outside 1..{tree.n}")
    comp = _kernels.component_labels(tree.parent, K)
    counts = np.bincount(comp[1:], minlength=K + 1)[1:K + 1]
    return counts / tree.n


def dirichlet_params(spec: GraphSpec, tree_K: InfectionTree) -> np.ndarray:
    """Limiting Dirichlet parameters of the subtree proportions:
    (host degree - degree among the first K) / (d - 2) per early node.

    A zero entry marks a saturated node whose component is excluded from
    the limit vector.
    """
    if spec != tree_K.spec:
        raise ValueError("spec does not match the tree")
    if spec.kind != REGULAR or spec.d < 3:
        raise ValueError("Dirichlet limit applies to regular hosts with d >= 3")
    K = tree_K.n
    params = np.empty(K, dtype=np.float64)
    for i in range(1, K + 1):
        params[i - 1] = (spec.d - tree_K.degree(i)) / (spec.d - 2)
    return params


def host_slot_chain(tree: InfectionTree, depth: int,
                    rng: np.random.Generator) -> list[int]:
    """Labels occupying one fixed chain of host child slots below the source.

    Which host slot each child occupies is an exchangeable decoration of
    the growth process (every attachment picks a slot uniformly among its
    parent's free ones), so redrawing the assignment uniformly reproduces
    the law at a fixed host vertex.  The walk stops early when the next
    slot on the chain is uninfected; a full-length result means the target
    host vertex at that depth is infected.
    """
    if tree.spec.kind != REGULAR:
        raise ValueError("host slot chains are defined on regular hosts")
    out: list[int] = []
    u = 1
    for level in range(depth):
        capacity = tree.spec.d if level == 0 else tree.spec.d - 1
        kids = tree.children(u)
        r = int(rng.integers(capacity))
        if r >= kids.shape[0]:
            break
        u = int(kids[r])
        out.append(u)
    return out


# ---------------------------------------------------------------------------
# samplers


def path_beta_sampler(d: int, ell: int, seed: int,
                      trials: int) -> np.ndarray:
    """Cumulative products of the limiting per-level Beta factors.

    Level 1 draws Beta(1/(d-2), (d-1)/(d-2)); deeper levels draw
    Beta(1/(d-2), 1); row i holds the running products, strictly
    decreasing along the row.
    """
    if d < 3 or ell < 1:
        raise ValueError("need d >= 3 and ell >= 1")
    rng = np.random.default_rng(seed)
    a = 1.0 / (d - 2)
    factors = np.empty((trials, ell))
    factors[:, 0] = rng.beta(a, (d - 1.0) / (d - 2.0), size=trials)
    if ell > 1:
        factors[:, 1:] = rng.beta(a, 1.0, size=(trials, ell - 1))
    return np.cumprod(factors, axis=1)


def product_tail_sampler(d: int, trials: int, seed: int) -> np.ndarray:
    """Samples of B = prod_i min(S_i, 1) with S_i partial sums of
    exponentials of mean d-2 (the negative logs of the per-level factors).

    Only the almost-surely-finite prefix with S_i < 1 contributes factors
    below one, so the infinite product is sampled exactly.
    """
    if d < 3:
        raise ValueError("need d >= 3")
    rng = np.random.default_rng(seed)
    b = np.ones(trials)
    s = np.zeros(trials)
    active = np.arange(trials)
    while active.size:
        u = rng.random(active.size)
        s[active] += -(d - 2) * np.log1p(-u)
        snew = s[active]
        below = snew < 1.0
        hit = active[below]
        b[hit] *= snew[below]
        active = hit
    return b


# ---------------------------------------------------------------------------
# checks


def coupled_dominance_check(d: int, steps: int, trials: int,
                            seed: int) -> LimitCheckReport:
    """Pathwise order of the two coupled urns behind the Beta domination.

    Both urns add d-2 on a hit and share the same uniforms; the urn started
    one ball lighter must stay ahead at every step of every trajectory
    (exact integer comparison).  Any violation would falsify the coupling
    implementation, so the report carries the first offending trajectory.
    """
    if d < 3:
        raise ValueError("need d >= 3")
    rng = np.random.default_rng(seed)
    inc = d - 2
    f_heavy = np.ones(trials, dtype=np.int64)  # companion weight d - 1
    f_light = np.ones(trials, dtype=np.int64)  # companion weight d - 2
    violations = 0
    first_violation: dict = {}
    for i in range(1, steps + 1):
        u = rng.random(trials)
        denom_heavy = 1 + (d - 1) + (i - 1) * inc
        denom_light = 1 + (d - 2) + (i - 1) * inc
        f_heavy += inc * (u <= f_heavy / denom_heavy)
        f_light += inc * (u <= f_light / denom_light)
        bad = f_heavy > f_light
        if bad.any():
            violations += int(bad.sum())
            if not first_violation:
                t = int(np.flatnonzero(bad)[0])
                first_violation = {"trial": t, "step": i,
                                   "heavy": int(f_heavy[t]),
                                   "light": int(f_light[t])}
    frac_heavy = f_heavy / (d + steps * inc)
    frac_light = f_light / (d - 1 + steps * inc)
    grid = np.linspace(0.0, 1.0, 21)
    ecdf_heavy = np.array([(frac_heavy <= t).mean() for t in grid])
    ecdf_light = np.array([(frac_light <= t).mean() for t in grid])
    cdf_dominated = bool((ecdf_heavy >= ecdf_light).all())
    return LimitCheckReport(
        statistic=PATHWISE_ORDER,
        empirical={"violations": violations,
                   "ecdf_gap_min": float((ecdf_heavy - ecdf_light).min())},
        theoretical={"violations": 0, "ecdf_gap_min": 0.0},
        tolerance={"violations": 0, "comparison": "exact integers"},
        passed=violations == 0 and cdf_dominated,
        sample_size=trials,
        details={"d": d, "steps": steps, "seed": seed,
                 "first_violation": first_violation},
        samples={"fraction_heavy": frac_heavy, "fraction_light": frac_light},
    )


def product_tail_check(d: int, trials: int, s_grid, seed: int) -> LimitCheckReport:
    """Empirical CDF of the exact product sampler against 6 s^(1/4).

    Pass requires ecdf(s) <= 6 s^(1/4) + 3 binomial standard errors at
    every grid point, and every sample inside (0, 1].
    """
    s_grid = np.asarray(sorted(float(s) for s in s_grid))
    b = product_tail_sampler(d, trials, seed)
    ecdf = np.array([(b <= s).mean() for s in s_grid])
    bound = 6.0 * s_grid ** 0.25
    se = np.sqrt(ecdf * (1.0 - ecdf) / trials)
    ok_range = bool((b > 0).all() and (b <= 1).all())
    passed = bool((ecdf <= bound + 3.0 * se).all() and ok_range)
    return LimitCheckReport(
        statistic=CDF_DOMINATION,
        empirical={"s_grid": s_grid.tolist(), "ecdf": ecdf.tolist(),
                   "all_in_unit_interval": ok_range},
        theoretical={"bound": bound.tolist()},
        tolerance={"slack": "3 binomial standard errors"},
        passed=passed,
        sample_size=trials,
        details={"d": d, "seed": seed},
        samples={"product": b},
    )


def sample_proportions(d: int, K: int, n: int, trials: int, seed: int
                       ) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Simulate `trials` trees and collect subtree proportions plus the
    parent vector of the first K arrivals (the conditioning shape)."""
    spec = GraphSpec(REGULAR, d)
    props = np.empty((trials, K))
    shapes: list[tuple[int, ...]] = []
    for t in range(trials):
        tree = simulate(SimConfig(spec=spec, n=n, seed=derive_seed(seed, t)))
        props[t] = subtree_proportions(tree, K)
        shapes.append(tuple(int(p) for p in tree.parent[2:K + 1]))
    return props, shapes


def dirichlet_moment_check(d: int, K: int, n: int, trials: int, seed: int,
                           min_group: int = 100,
                           z_tol: float = 3.5) -> LimitCheckReport:
    """Moments of the subtree proportions against their Dirichlet limit.

    Trials are grouped by the shape of the first K arrivals (the limit
    parameters depend on it); within each group, every mean, variance and
    pairwise covariance must sit within z_tol empirical standard errors of
    the Dirichlet value, and the first component must pass a KS test
    against its Beta marginal (threshold 0.01 + 4/sqrt(N), generous for
    the finite-n gap).  The default z_tol sits above three because the
    check takes a max over roughly K^2 simultaneous comparisons per group;
    3.5 keeps the familywise false-alarm rate under half a percent while a
    wrong parameterization still fails by tens of standard errors.
    """
    props, shapes = sample_proportions(d, K, n, trials, seed)
    spec = GraphSpec(REGULAR, d)
    groups: dict[tuple[int, ...], list[int]] = {}
    for idx, shape in enumerate(shapes):
        groups.setdefault(shape, []).append(idx)
    worst_z = 0.0
    ks_stats: dict[str, float] = {}
    checked = skipped = 0
    passed = True
    group_report = {}
    for shape, idxs in sorted(groups.items()):
        if len(idxs) < min_group:
            skipped += 1
            continue
        sample = props[idxs]
        m = len(idxs)
        parent = np.zeros(K + 1, dtype=np.int64)
        parent[2:] = shape
        params = dirichlet_params(spec, InfectionTree(spec=spec, parent=parent))
        a0 = params.sum()
        mean_th = params / a0
        z_here = 0.0
        for i in range(K):
            if params[i] == 0.0:
                continue  # saturated: forced 1/n, excluded from the limit
            se = sample[:, i].std(ddof=1) / math.sqrt(m)
            z_here = max(z_here, abs(sample[:, i].mean() - mean_th[i]) / se)
            var_th = params[i] * (a0 - params[i]) / (a0 * a0 * (a0 + 1.0))
            dev = (sample[:, i] - sample[:, i].mean()) ** 2
            se_var = dev.std(ddof=1) / math.sqrt(m)
            z_here = max(z_here, abs(sample[:, i].var(ddof=1) - var_th) / se_var)
            for j in range(i + 1, K):
                if params[j] == 0.0:
                    continue
                cov_th = -params[i] * params[j] / (a0 * a0 * (a0 + 1.0))
                prod = ((sample[:, i] - sample[:, i].mean())
                        * (sample[:, j] - sample[:, j].mean()))
                se_cov = prod.std(ddof=1) / math.sqrt(m)
                cov_emp = prod.sum() / (m - 1)
                z_here = max(z_here, abs(cov_emp - cov_th) / se_cov)
        ks = stats.kstest(sample[:, 0], stats.beta(params[0], a0 - params[0]).cdf)
        ks_limit = 0.01 + 4.0 / math.sqrt(m)
        ks_stats[str(shape)] = float(ks.statistic)
        group_report[str(shape)] = {"size": m, "max_z": z_here,
                                    "ks": float(ks.statistic),
                                    "ks_limit": ks_limit}
        worst_z = max(worst_z, z_here)
        passed = passed and z_here <= z_tol and ks.statistic <= ks_limit
        checked += 1
    return LimitCheckReport(
        statistic=MOMENT_MATCH,
        empirical={"worst_z": worst_z, "ks": ks_stats},
        theoretical={"moments": "Dirichlet((host - early degree)/(d-2))"},
        tolerance={"z": z_tol, "ks": "0.01 + 4/sqrt(N)"},
        passed=passed and checked > 0,
        sample_size=trials,
        details={"d": d, "K": K, "n": n, "seed": seed,
                 "groups": group_report, "groups_skipped": skipped},
        samples={"proportions": props},
    )


def path_beta_check(d: int, n: int, trials: int, seed: int,
                    sampler_trials: int = 100_000,
                    moment_tol: float = 0.01) -> LimitCheckReport:
    """Simulator versus sampler for the first path factor, plus independence.

    The fraction of the tree below one fixed host child slot of the source
    is compared with the level-1 sampler marginal: first two moments must
    agree within moment_tol.  The correlation between the level-1 fraction
    and the level-2 ratio must be below 3/sqrt(N) in magnitude (the factors
    are independent in the limit).
    """
    spec = GraphSpec(REGULAR, d)
    frac1 = np.empty(trials)
    ratios: list[float] = []
    pairs: list[tuple[float, float]] = []
    for t in range(trials):
        tree_seed = derive_seed(seed, t)
        tree = simulate(SimConfig(spec=spec, n=n, seed=tree_seed))
        down = _kernels.down_sizes(tree.parent)
        rng = np.random.default_rng(derive_seed(tree_seed, 1))
        chain = host_slot_chain(tree, 2, rng)
        s1 = down[chain[0]] if len(chain) >= 1 else 0
        frac1[t] = s1 / n
        if len(chain) == 2 and s1 > 0:
            ratio = down[chain[1]] / s1
            ratios.append(ratio)
            pairs.append((s1 / n, ratio))
    ref = path_beta_sampler(d, 1, derive_seed(seed, 0xBE7A), sampler_trials)[:, 0]
    mean_gap = abs(frac1.mean() - ref.mean())
    var_gap = abs(frac1.var(ddof=1) - ref.var(ddof=1))
    pair_arr = np.asarray(pairs)
    if pair_arr.shape[0] >= 10:
        corr = float(np.corrcoef(pair_arr[:, 0], pair_arr[:, 1])[0, 1])
        corr_limit = 3.0 / math.sqrt(pair_arr.shape[0])
    else:
        corr, corr_limit = 0.0, 1.0
    passed = bool(mean_gap <= moment_tol and var_gap <= moment_tol
                  and abs(corr) <= corr_limit)
    a = 1.0 / (d - 2)
    b = (d - 1.0) / (d - 2.0)
    return LimitCheckReport(
        statistic=MOMENT_MATCH,
        empirical={"sim_mean": float(frac1.mean()),
                   "sim_var": float(frac1.var(ddof=1)),
                   "sampler_mean": float(ref.mean()),
                   "sampler_var": float(ref.var(ddof=1)),
                   "level_corr": corr},
        theoretical={"mean": a / (a + b),
                     "var": a * b / ((a + b) ** 2 * (a + b + 1.0))},
        tolerance={"moments": moment_tol, "corr": corr_limit},
        passed=passed,
        sample_size=trials,
        details={"d": d, "n": n, "seed": seed,
                 "level2_pairs": int(pair_arr.shape[0])},
        samples={"sim_fraction": frac1, "sampler_fraction": ref,
                 "level2_ratio": np.asarray(ratios)},
    )
