"""The two cutting-plane loops: add-only, and add-all-then-remove.

Add-only: solve (H u P_k), read the Gomory pool off the tableau, stop on an
integral optimum, otherwise append the one cut the policy picks.

Removal: generate the pool C_k for (H u P_k), solve (H u P_k u C_k) outright,
stop on integrality, otherwise keep the k+1 best-scoring cuts of P_k u C_k and
append the bound constraint c @ x >= ceil(c @ x_k*), which is what makes the
recorded LP values nondecreasing even though earlier cuts get dropped.  Old
bound cuts stay in the candidate set like any other cut; the newest one
dominates them.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gomory import BOUND, Cut, CutPool, apply_cuts, bound_cut, generate_cutpool
from .lp import (
    DEFAULT_TOLS,
    FLOAT,
    OPTIMAL,
    CycleLimitExceeded,
    LinearProgram,
    Tolerances,
    is_integral,
    solve_simplex,
    to_standard_form,
)
from . import policies as _policies

logger = logging.getLogger(__name__)

ADD_ONLY = "add_only"
REMOVAL = "removal"

INTEGRAL_FOUND = "integral_found"
ITER_LIMIT = "iter_limit"
NUMERICAL_FAILURE = "numerical_failure"

TRAJECTORY_FORMAT_VERSION = 1


@dataclass
class RunConfig:
    max_iters: int = 30
    mode: str = ADD_ONLY
    integrality_tol: float = 1e-6
    arithmetic: str = FLOAT
    seed: int = 0
    tols: Tolerances = DEFAULT_TOLS
    record_scores: bool = False  # record one-cut-added LP values for every pool cut

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.mode not in (ADD_ONLY, REMOVAL):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class CutPlaneState:
    """Everything a policy may look at during one iteration.

    In add-only mode ``x_star``/``lp_value`` belong to (H u P_k); in removal
    mode they belong to (H u P_k u C_k), the all-cuts LP of the iteration.
    """

    base: LinearProgram
    active_cuts: list[Cut]
    pool: CutPool
    iter: int
    x_star: np.ndarray
    lp_value: float
    arithmetic: str = FLOAT
    tols: Tolerances = DEFAULT_TOLS

    def candidates(self) -> list[Cut]:
        return list(self.active_cuts) + list(self.pool.cuts)


@dataclass
class IterationRecord:
    k: int
    lp_value: float
    pool_size: int
    n_active: int
    active_ids: list[int]
    pool_ids: list[int]
    selected_ids: list[int]
    removed_ids: list[int]
    x_star: list[float]
    pool_scores: Optional[list[float]] = None  # raw LP value with each pool cut added alone


@dataclass
class Trajectory:
    instance_id: str
    policy_id: str
    mode: str
    status: str
    records: list[IterationRecord]
    cuts: dict[int, Cut]
    seed: int = 0
    arithmetic: str = FLOAT

    @property
    def lp_values(self) -> np.ndarray:
        return np.array([r.lp_value for r in self.records])


def _solve(lp: LinearProgram, cfg: RunConfig):
    sf = to_standard_form(lp)
    try:
        sol = solve_simplex(sf, lp.objective, cfg.arithmetic, cfg.tols)
    except CycleLimitExceeded as exc:
        logger.warning("%s: simplex pivot cap hit (%s)", lp.name, exc)
        return sf, None
    if sol.status != OPTIMAL:
        logger.warning("%s: LP ended %s inside the cutting-plane loop", lp.name, sol.status)
        return sf, None
    return sf, sol


def run_add_only(
    lp: LinearProgram,
    policy: "_policies.AdditionPolicy",
    cfg: RunConfig,
    instance_id: str = "",
) -> Trajectory:
    """Classical cutting-plane loop: one policy-chosen cut per iteration."""
    ids = itertools.count()
    P: list[Cut] = []
    registry: dict[int, Cut] = {}
    records: list[IterationRecord] = []
    status = ITER_LIMIT
    for k in range(1, cfg.max_iters + 1):
        lp_k = apply_cuts(lp, P)
        sf, sol = _solve(lp_k, cfg)
        if sol is None:
            status = NUMERICAL_FAILURE
            break
        vk = float(sol.value)
        xk = np.asarray(sol.x, dtype=float)
        pool = generate_cutpool(sol, sf, lp_k, cfg.integrality_tol, ids, k, cfg.tols)
        registry.update({c.id: c for c in pool.cuts})
        state = CutPlaneState(lp, P, pool, k, xk, vk, cfg.arithmetic, cfg.tols)
        if is_integral(xk, cfg.integrality_tol):
            records.append(_record(k, vk, pool, P, [], [], xk, None))
            status = INTEGRAL_FOUND
            break
        if not pool.cuts:
            records.append(_record(k, vk, pool, P, [], [], xk, None))
            status = NUMERICAL_FAILURE
            break
        raw = None
        if cfg.record_scores or policy.kind == _policies.LOOKAHEAD:
            raw = _policies.lookahead_add_scores(pool, state)
        chosen_id = _policies.select_addition(pool, state, policy, precomputed_scores=raw)
        records.append(_record(k, vk, pool, P, [chosen_id], [], xk,
                               raw.tolist() if raw is not None else None))
        P = P + [registry[chosen_id]]
    return Trajectory(instance_id, policy.kind, ADD_ONLY, status, records, registry,
                      cfg.seed, cfg.arithmetic)


def run_removal(
    lp: LinearProgram,
    scorer: "_policies.CutScorer",
    cfg: RunConfig,
    instance_id: str = "",
) -> Trajectory:
    """Cut removal loop: add the whole pool, keep the k+1 best, add the bound cut."""
    ids = itertools.count()
    P: list[Cut] = []
    registry: dict[int, Cut] = {}
    records: list[IterationRecord] = []
    status = ITER_LIMIT
    for k in range(1, cfg.max_iters + 1):
        lp_k = apply_cuts(lp, P)
        sf_k, sol_base = _solve(lp_k, cfg)
        if sol_base is None:
            status = NUMERICAL_FAILURE
            break
        pool = generate_cutpool(sol_base, sf_k, lp_k, cfg.integrality_tol, ids, k, cfg.tols)
        registry.update({c.id: c for c in pool.cuts})
        if pool.cuts:
            lp_full = apply_cuts(lp_k, pool.cuts)
            _, sol_full = _solve(lp_full, cfg)
            if sol_full is None:
                status = NUMERICAL_FAILURE
                break
        else:
            sol_full = sol_base
        vk = float(sol_full.value)
        xk = np.asarray(sol_full.x, dtype=float)
        state = CutPlaneState(lp, P, pool, k, xk, vk, cfg.arithmetic, cfg.tols)
        if is_integral(xk, cfg.integrality_tol):
            records.append(_record(k, vk, pool, P, [], [], xk, None))
            status = INTEGRAL_FOUND
            break
        if not pool.cuts:
            records.append(_record(k, vk, pool, P, [], [], xk, None))
            status = NUMERICAL_FAILURE
            break
        cands = state.candidates()
        scores = _policies.score_candidates(cands, state, scorer)
        retained = _policies.select_retained(cands, scores, budget=k + 1)
        retained_set = set(retained)
        bc = bound_cut(lp.objective, vk, next(ids), k, cfg.integrality_tol)
        registry[bc.id] = bc
        removed = [c.id for c in cands if c.id not in retained_set]
        records.append(_record(k, vk, pool, P, retained + [bc.id], removed, xk, None))
        P = [c for c in cands if c.id in retained_set] + [bc]
    return Trajectory(instance_id, scorer.kind, REMOVAL, status, records, registry,
                      cfg.seed, cfg.arithmetic)


def _record(k, vk, pool, P, selected, removed, xk, pool_scores) -> IterationRecord:
    return IterationRecord(
        k=k,
        lp_value=vk,
        pool_size=len(pool.cuts),
        n_active=len(P),
        active_ids=[c.id for c in P],
        pool_ids=[c.id for c in pool.cuts],
        selected_ids=list(selected),
        removed_ids=list(removed),
        x_star=[float(v) for v in xk],
        pool_scores=pool_scores,
    )


def run_policy(lp: LinearProgram, policy_name: str, cfg: RunConfig,
               instance_id: str = "", model=None) -> Trajectory:
    """Dispatch a policy name (CLI vocabulary) to the right loop."""
    seed = cfg.seed
    if policy_name in _policies.ADDITION_KINDS:
        pol = _policies.AdditionPolicy(policy_name, rng_seed=seed, model=model)
        run_cfg = cfg if cfg.mode == ADD_ONLY else _with_mode(cfg, ADD_ONLY)
        return run_add_only(lp, pol, run_cfg, instance_id)
    if policy_name in _policies.REMOVAL_KINDS:
        scorer = _policies.CutScorer(policy_name, rng_seed=seed, model=model)
        run_cfg = cfg if cfg.mode == REMOVAL else _with_mode(cfg, REMOVAL)
        return run_removal(lp, scorer, run_cfg, instance_id)
    raise ValueError(f"unknown policy {policy_name!r}")


def _with_mode(cfg: RunConfig, mode: str) -> RunConfig:
    return RunConfig(cfg.max_iters, mode, cfg.integrality_tol, cfg.arithmetic,
                     cfg.seed, cfg.tols, cfg.record_scores)


def compute_igc(traj: Trajectory, z_int: float) -> np.ndarray:
    """Integrality gap closure per iteration: (v_k - v_1) / (z_int - v_1) in [0, 1].

    A zero initial gap defines IGC as 1 everywhere; values are clamped to [0, 1]
    after a 1e-9 tolerance.
    """
    v = traj.lp_values
    if v.size == 0:
        return np.array([])
    denom = float(z_int) - float(v[0])
    if denom <= 1e-9:
        return np.ones(v.size)
    igc = (v - v[0]) / denom
    igc[np.abs(igc) <= 1e-9] = 0.0
    igc[np.abs(igc - 1.0) <= 1e-9] = 1.0
    return np.clip(igc, 0.0, 1.0)


def extend_curve(values: np.ndarray, length: int) -> np.ndarray:
    """Pad a per-iteration curve to a fixed axis by carrying the last value forward."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return np.zeros(length)
    if values.size >= length:
        return values[:length]
    return np.concatenate([values, np.full(length - values.size, values[-1])])


# ---------------------------------------------------------------------------
# trajectory (de)serialization
# ---------------------------------------------------------------------------


def _cut_to_dict(c: Cut) -> dict:
    return {
        "alpha": [float(v) for v in c.alpha],
        "beta": float(c.beta),
        "id": c.id,
        "born_iter": c.born_iter,
        "kind": c.kind,
        "basic_var": c.basic_var,
        "row_norm": c.row_norm,
        "frac_dist": c.frac_dist,
    }


def _cut_from_dict(d: dict) -> Cut:
    return Cut(
        alpha=np.array(d["alpha"], dtype=float),
        beta=float(d["beta"]),
        id=int(d["id"]),
        born_iter=int(d["born_iter"]),
        kind=d["kind"],
        basic_var=d.get("basic_var"),
        row_norm=d.get("row_norm"),
        frac_dist=d.get("frac_dist"),
    )


def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "format_version": TRAJECTORY_FORMAT_VERSION,
        "instance_id": traj.instance_id,
        "policy_id": traj.policy_id,
        "mode": traj.mode,
        "status": traj.status,
        "seed": traj.seed,
        "arithmetic": traj.arithmetic,
        "records": [
            {
                "k": r.k,
                "lp_value": r.lp_value,
                "pool_size": r.pool_size,
                "n_active": r.n_active,
                "active_ids": r.active_ids,
                "pool_ids": r.pool_ids,
                "selected_ids": r.selected_ids,
                "removed_ids": r.removed_ids,
                "x_star": r.x_star,
                "pool_scores": r.pool_scores,
            }
            for r in traj.records
        ],
        "cuts": {str(i): _cut_to_dict(c) for i, c in sorted(traj.cuts.items())},
    }


def trajectory_from_dict(doc: dict) -> Trajectory:
    if doc.get("format_version") != TRAJECTORY_FORMAT_VERSION:
        raise ValueError(f"unsupported trajectory format {doc.get('format_version')!r}")
    records = [
        IterationRecord(
            k=r["k"],
            lp_value=r["lp_value"],
            pool_size=r["pool_size"],
            n_active=r["n_active"],
            active_ids=list(r["active_ids"]),
            pool_ids=list(r["pool_ids"]),
            selected_ids=list(r["selected_ids"]),
            removed_ids=list(r["removed_ids"]),
            x_star=list(r["x_star"]),
            pool_scores=r.get("pool_scores"),
        )
        for r in doc["records"]
    ]
    cuts = {int(i): _cut_from_dict(d) for i, d in doc["cuts"].items()}
    return Trajectory(
        instance_id=doc["instance_id"],
        policy_id=doc["policy_id"],
        mode=doc["mode"],
        status=doc["status"],
        records=records,
        cuts=cuts,
        seed=doc.get("seed", 0),
        arithmetic=doc.get("arithmetic", FLOAT),
    )


def save_trajectory(traj: Trajectory, path) -> None:
    with open(path, "w") as fh:
        json.dump(trajectory_to_dict(traj), fh, sort_keys=True)


def load_trajectory(path) -> Trajectory:
    with open(path) as fh:
        return trajectory_from_dict(json.load(fh))
