"""Monte Carlo campaign driver: simulate, estimate, collect failure rates.

A campaign runs repeated simulate -> score -> confidence-set pipelines,
counts failures (source outside the set) or event frequencies per method
and checkpoint, pairs them with the matching theoretical bound, and emits
CSV/JSON artifacts.  Per-trial seeds are derived from the base seed, and
aggregation is a sum of integer counts, so results are identical for any
worker count.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, field
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from ._rng import derive_seed
from .confidence import (BoundReport, confset_glued, confset_phi, confset_psi,
                         glued_union_error_bound, optimize_psi_topk_bound,
                         phi_ball_error_bound, phi_displacement_bound)
from .diffusion import SimConfig, SourcePlacement, simulate
from .estimators import PHI_TIE_TOL, score_all
from .trees import GLUED, REGULAR, GraphSpec
from .urnlab import host_slot_chain

WILSON_Z = 1.959963984540054  # two-sided 95%

PSI_TOP_K = "psi_top_k"
PHI_BALL = "phi_ball"
GLUED_UNION = "glued_union"
EVENT_PHI_DISTANT = "event_phi_leq_source"
EVENT_PHI_BRIDGE = "event_phi_bridge"
EVENT_PSI_BRIDGE = "event_psi_bridge"

_METHOD_KINDS = (PSI_TOP_K, PHI_BALL, GLUED_UNION, EVENT_PHI_DISTANT,
                 EVENT_PHI_BRIDGE, EVENT_PSI_BRIDGE)


def wilson_interval(failures: int, trials: int,
                    z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval; well behaved in the rare-event regime."""
    if trials < 1:
        raise ValueError("need at least one trial")
    p = failures / trials
    z2 = z * z
    center = (p + z2 / (2 * trials)) / (1 + z2 / trials)
    half = (z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
            / (1 + z2 / trials))
    return center - half, center + half


@dataclass(frozen=True)
class MethodSpec:
    """One measured quantity: a confidence-set construction or a score event.

    param is K for psi_top_k, the radius L for phi_ball/glued_union, and
    the target depth for event_phi_leq_source; it is ignored by the two
    bridge events.
    """

    kind: str
    param: int = 0

    def __post_init__(self):
        if self.kind not in _METHOD_KINDS:
            raise ValueError(f"unknown method kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "param": self.param}

    @staticmethod
    def from_dict(doc: dict) -> "MethodSpec":
        return MethodSpec(doc["kind"], int(doc.get("param", 0)))


@dataclass(frozen=True)
class Campaign:
    spec: GraphSpec
    n: int
    trials: int
    base_seed: int
    checkpoints: tuple[int, ...]
    methods: tuple[MethodSpec, ...]
    source_placement: SourcePlacement | None = None
    name: str = "campaign"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        object.__setattr__(self, "checkpoints",
                           tuple(int(c) for c in self.checkpoints))
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.checkpoints:
            raise ValueError("need at least one checkpoint")
        if any(b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
            raise ValueError("checkpoints must be strictly ascending")
        if self.checkpoints[-1] > self.n:
            raise ValueError("checkpoints may not exceed n")
        for m in self.methods:
            if m.kind in (GLUED_UNION, EVENT_PHI_BRIDGE, EVENT_PSI_BRIDGE):
                if self.spec.kind != GLUED:
                    raise ValueError(f"{m.kind} requires a glued host")
            elif self.spec.kind != REGULAR:
                raise ValueError(f"{m.kind} requires a regular host")

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "spec": self.spec.to_dict(),
            "n": self.n,
            "trials": self.trials,
            "seed": self.base_seed,
            "checkpoints": list(self.checkpoints),
            "methods": [m.to_dict() for m in self.methods],
        }
        if self.source_placement is not None:
            out["source_placement"] = self.source_placement.to_dict()
        return out

    @staticmethod
    def from_dict(doc: dict) -> "Campaign":
        placement = doc.get("source_placement")
        return Campaign(
            spec=GraphSpec.from_dict(doc["spec"]),
            n=int(doc["n"]),
            trials=int(doc["trials"]),
            base_seed=int(doc["seed"]),
            checkpoints=tuple(int(c) for c in doc["checkpoints"]),
            methods=tuple(MethodSpec.from_dict(m) for m in doc["methods"]),
            source_placement=None if placement is None
            else SourcePlacement.from_dict(placement),
            name=doc.get("name", "campaign"),
        )


@dataclass(frozen=True)
class MethodRow:
    """One (method, checkpoint) cell of a campaign result."""

    method: str
    param: int
    n: int
    trials: int
    failures: int
    fail_rate: float
    wilson_lo: float
    wilson_hi: float
    bound_raw: float | None
    bound_clamped: float | None
    vacuous: bool | None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "method", "param", "n", "trials", "failures", "fail_rate",
            "wilson_lo", "wilson_hi", "bound_raw", "bound_clamped", "vacuous")}

    @staticmethod
    def from_dict(doc: dict) -> "MethodRow":
        return MethodRow(**{k: doc[k] for k in (
            "method", "param", "n", "trials", "failures", "fail_rate",
            "wilson_lo", "wilson_hi", "bound_raw", "bound_clamped", "vacuous")})


@dataclass(frozen=True)
class CampaignResult:
    campaign: Campaign
    rows: tuple[MethodRow, ...]
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {"campaign": self.campaign.to_dict(),
                "rows": [r.to_dict() for r in self.rows],
                "wall_time": self.wall_time}

    @staticmethod
    def from_dict(doc: dict) -> "CampaignResult":
        return CampaignResult(
            campaign=Campaign.from_dict(doc["campaign"]),
            rows=tuple(MethodRow.from_dict(r) for r in doc["rows"]),
            wall_time=float(doc.get("wall_time", 0.0)))

    def row(self, kind: str, n: int) -> MethodRow:
        for r in self.rows:
            if r.method == kind and r.n == n:
                return r
        raise KeyError(f"no row for method {kind!r} at n={n}")


def method_bound(campaign: Campaign, method: MethodSpec) -> BoundReport | None:
    """The theoretical bound paired with a method, when one applies."""
    spec = campaign.spec
    try:
        if method.kind == PSI_TOP_K and spec.kind == REGULAR:
            return optimize_psi_topk_bound(spec.d, method.param)[1]
        if method.kind == PHI_BALL and spec.kind == REGULAR:
            return phi_ball_error_bound(spec.d, method.param)
        if method.kind == EVENT_PHI_DISTANT and spec.kind == REGULAR:
            return phi_displacement_bound(spec.d, method.param)
        if method.kind == GLUED_UNION and spec.kind == GLUED:
            return glued_union_error_bound(spec.d, spec.D, method.param)
    except ValueError:
        return None  # parameters outside the bound's validity range
    return None


def _far_bridge_label(campaign: Campaign, snapshot) -> int | None:
    placement = campaign.source_placement or SourcePlacement()
    return snapshot.bridge_D if placement.half == "d" else snapshot.bridge_d


def evaluate_trial(campaign: Campaign, trial: int) -> np.ndarray:
    """Indicator matrix (methods x checkpoints) for one trial.

    Reproducible in isolation: everything derives from the trial seed, and
    the auxiliary slot-assignment stream is consumed in a fixed order.
    """
    seed = derive_seed(campaign.base_seed, trial)
    cfg = SimConfig(spec=campaign.spec, n=campaign.checkpoints[-1], seed=seed,
                    source_placement=campaign.source_placement)
    final = simulate(cfg)
    slot_rng = np.random.default_rng(derive_seed(seed, 1))
    out = np.zeros((len(campaign.methods), len(campaign.checkpoints)),
                   dtype=np.int64)
    for ci, size in enumerate(campaign.checkpoints):
        snap = final.prefix(size)
        table = score_all(snap)
        for mi, m in enumerate(campaign.methods):
            if m.kind == PSI_TOP_K:
                cs = confset_psi(table, min(m.param, size))
                out[mi, ci] = 1 not in cs
            elif m.kind == PHI_BALL:
                cs = confset_phi(snap, table, m.param)
                out[mi, ci] = 1 not in cs
            elif m.kind == GLUED_UNION:
                cs = confset_glued(snap, m.param)
                out[mi, ci] = 1 not in cs
            elif m.kind == EVENT_PHI_DISTANT:
                chain = host_slot_chain(snap, m.param, slot_rng)
                if len(chain) == m.param:
                    v = chain[-1]
                    out[mi, ci] = table.log_phi[v] <= table.log_phi[1] + PHI_TIE_TOL
                # an uninfected target counts as event-false
            elif m.kind == EVENT_PHI_BRIDGE:
                far = _far_bridge_label(campaign, snap)
                if far is not None:
                    out[mi, ci] = table.log_phi[far] < table.log_phi[1]
            elif m.kind == EVENT_PSI_BRIDGE:
                far = _far_bridge_label(campaign, snap)
                if far is not None:
                    out[mi, ci] = table.psi[far] < table.psi[1]
    return out


def _worker(args) -> np.ndarray:
    doc, lo, hi = args
    campaign = Campaign.from_dict(doc)
    counts = np.zeros((len(campaign.methods), len(campaign.checkpoints)),
                      dtype=np.int64)
    for t in range(lo, hi):
        counts += evaluate_trial(campaign, t)
    return counts


def resolve_workers(workers: int | None = None) -> int:
    """Worker count: the RUMOR_SOURCE_WORKERS variable overrides everything."""
    env = os.environ.get("RUMOR_SOURCE_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, workers or 1)


def run_campaign(campaign: Campaign, workers: int | None = None
                 ) -> CampaignResult:
    """Run every trial, aggregate counts, and pair rows with their bounds.

    Deterministic for a fixed base seed regardless of the worker count:
    trial t always draws the same derived seed and counts add commutatively.
    """
    workers = resolve_workers(workers)
    start = time.perf_counter()
    counts = np.zeros((len(campaign.methods), len(campaign.checkpoints)),
                      dtype=np.int64)
    if workers == 1:
        doc = campaign.to_dict()
        counts = _worker((doc, 0, campaign.trials))
    else:
        doc = campaign.to_dict()
        chunk = max(1, -(-campaign.trials // (workers * 4)))
        jobs = [(doc, lo, min(lo + chunk, campaign.trials))
                for lo in range(0, campaign.trials, chunk)]
        with get_context("fork").Pool(workers) as pool:
            for part in pool.imap_unordered(_worker, jobs):
                counts += part
    rows = []
    for mi, m in enumerate(campaign.methods):
        bound = method_bound(campaign, m)
        for ci, size in enumerate(campaign.checkpoints):
            failures = int(counts[mi, ci])
            lo, hi = wilson_interval(failures, campaign.trials)
            rows.append(MethodRow(
                method=m.kind, param=m.param, n=size,
                trials=campaign.trials, failures=failures,
                fail_rate=failures / campaign.trials,
                wilson_lo=lo, wilson_hi=hi,
                bound_raw=None if bound is None else bound.raw_value,
                bound_clamped=None if bound is None else bound.clamped,
                vacuous=None if bound is None else bound.vacuous))
    return CampaignResult(campaign=campaign, rows=tuple(rows),
                          wall_time=time.perf_counter() - start)


def prop1_experiment(d: int, D: int, checkpoints, trials: int, seed: int,
                     source_distance: int = 1,
                     workers: int | None = None) -> CampaignResult:
    """Glued-host drift experiment: how often the far bridge endpoint beats
    the source under each score, per checkpoint.

    The far endpoint is found through the bridge; trials where it is still
    uninfected count as event-false.
    """
    campaign = Campaign(
        spec=GraphSpec(GLUED, d, D),
        n=max(int(c) for c in checkpoints),
        trials=trials, base_seed=seed,
        checkpoints=tuple(sorted(int(c) for c in checkpoints)),
        methods=(MethodSpec(EVENT_PHI_BRIDGE), MethodSpec(EVENT_PSI_BRIDGE)),
        source_placement=SourcePlacement.at_bridge_distance(source_distance),
        name="prop1")
    return run_campaign(campaign, workers=workers)


def prop2_experiment(d: int, D: int, n: int, L: int, trials: int, seed: int,
                     source_distance: int = 1,
                     workers: int | None = None) -> CampaignResult:
    """Coverage of the glued union set at radius L against its bound."""
    if L < 2:
        raise ValueError("union set bound needs L >= 2")
    campaign = Campaign(
        spec=GraphSpec(GLUED, d, D),
        n=n, trials=trials, base_seed=seed,
        checkpoints=(n,),
        methods=(MethodSpec(GLUED_UNION, L),),
        source_placement=SourcePlacement.at_bridge_distance(source_distance),
        name="prop2")
    return run_campaign(campaign, workers=workers)


# ---------------------------------------------------------------------------
# artifacts

CSV_HEADER = ("method,param,n,trials,fail_rate,wilson_lo,wilson_hi,"
              "bound_raw,bound_clamped,vacuous")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def result_csv(result: CampaignResult) -> str:
    lines = [CSV_HEADER]
    for r in result.rows:
        lines.append(",".join(_csv_cell(v) for v in (
            r.method, r.param, r.n, r.trials, r.fail_rate,
            r.wilson_lo, r.wilson_hi, r.bound_raw, r.bound_clamped,
            r.vacuous)))
    return "\n".join(lines) + "\n"


def emit(result: CampaignResult, out_dir, stem: str | None = None,
         formats=("csv", "json"), plots: bool = True) -> dict[str, Path]:
    """Write the campaign artifacts: CSV rows, a JSON mirror with the full
    config, and (unless disabled) a rate-versus-bound figure."""
    import json

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = stem or result.campaign.name
    written: dict[str, Path] = {}
    if "csv" in formats:
        path = out_dir / f"{stem}.csv"
        path.write_text(result_csv(result))
        written["csv"] = path
    if "json" in formats:
        path = out_dir / f"{stem}.json"
        path.write_text(json.dumps(result.to_dict(), indent=2))
        written["json"] = path
    if plots:
        from .plots import campaign_figure

        path = out_dir / f"{stem}.png"
        campaign_figure(result, path)
        written["png"] = path
    return written
