"""Cut-selection behaviors: heuristic baselines, look-ahead experts, neural scorers.

Addition policies pick one cut of the newest pool; removal scorers rate every
candidate (old and new cuts alike) so the engine can keep the top k+1.  MV, MNV
and lexicographic are defined on the fractional variable a cut priced out, so
they exist only for pool cuts and are never offered as removal scorers.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .features import encode_many
from .gomory import Cut, CutPool, apply_cuts
from .lp import CycleLimitExceeded, OPTIMAL, solve_lp
from .model import MlpParams, forward

if TYPE_CHECKING:  # pragma: no cover
    from .engine import CutPlaneState

logger = logging.getLogger(__name__)

RANDOM = "random"
MAX_VIOLATION = "mv"
MAX_NORM_VIOLATION = "mnv"
LEXICOGRAPHIC = "lex"
MIN_SIMILAR = "minsim"
LOOKAHEAD = "lookahead"
NEURAL = "neural"
ADDITION_KINDS = (RANDOM, MAX_VIOLATION, MAX_NORM_VIOLATION, LEXICOGRAPHIC,
                  MIN_SIMILAR, LOOKAHEAD, NEURAL)

REMOVE_LOOKAHEAD = "remove-lookahead"
REMOVE_NEURAL = "remove-neural"
REMOVE_RANDOM = "remove-random"
REMOVAL_KINDS = (REMOVE_LOOKAHEAD, REMOVE_NEURAL, REMOVE_RANDOM)


class EmptyPool(ValueError):
    """Addition policies need at least one candidate cut."""


@dataclass
class AdditionPolicy:
    kind: str
    rng_seed: int = 0
    model: Optional[MlpParams] = None
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ADDITION_KINDS:
            raise ValueError(f"unknown addition policy {self.kind!r}")
        if self.kind == NEURAL and self.model is None:
            raise ValueError("neural addition policy requires a model")
        self._rng = np.random.default_rng(self.rng_seed)


@dataclass
class CutScorer:
    kind: str
    rng_seed: int = 0
    model: Optional[MlpParams] = None
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in REMOVAL_KINDS:
            raise ValueError(f"unknown removal scorer {self.kind!r}")
        if self.kind == REMOVE_NEURAL and self.model is None:
            raise ValueError("neural removal scorer requires a model")
        self._rng = np.random.default_rng(self.rng_seed)


def _solve_value(lp, state) -> float:
    """LP value of an augmented instance, or -inf on solver failure (logged)."""
    try:
        sol = solve_lp(lp, mode=state.arithmetic, tols=state.tols)
    except CycleLimitExceeded as exc:
        logger.warning("scoring LP hit the pivot cap: %s", exc)
        return -math.inf
    if sol.status != OPTIMAL:
        logger.warning("scoring LP ended %s", sol.status)
        return -math.inf
    return float(sol.value)


def lookahead_add_scores(pool: CutPool, state: "CutPlaneState") -> np.ndarray:
    """Score of a cut = LP value of (H u P_k u {cut}); one solve per cut."""
    base = apply_cuts(state.base, state.active_cuts)
    return np.array([_solve_value(apply_cuts(base, [c]), state) for c in pool.cuts])


def lookahead_remove_scores(candidates: Sequence[Cut], state: "CutPlaneState") -> np.ndarray:
    """Leave-one-out value drop: full LP value minus the value without the cut.

    The state must be solved over H u P_k u C_k; removing a constraint can only
    lower a minimum, so scores are clamped at zero against float noise.
    """
    full = float(state.lp_value)
    scores = np.empty(len(candidates))
    for i in range(len(candidates)):
        rest = [c for j, c in enumerate(candidates) if j != i]
        val = _solve_value(apply_cuts(state.base, rest), state)
        scores[i] = -math.inf if val == -math.inf else max(0.0, full - val)
    return scores


def _neural_scores(cuts: Sequence[Cut], state: "CutPlaneState", model: MlpParams) -> np.ndarray:
    feats = encode_many(list(cuts), state)
    return np.atleast_1d(forward(model, feats))


def select_addition(
    pool: CutPool,
    state: "CutPlaneState",
    policy: AdditionPolicy,
    precomputed_scores: Optional[np.ndarray] = None,
) -> int:
    """Pick one cut id from the pool; ties always break toward the lowest id."""
    cuts = pool.cuts
    if not cuts:
        raise EmptyPool("cannot select from an empty cutpool")
    kind = policy.kind
    if kind == RANDOM:
        return cuts[int(policy._rng.integers(len(cuts)))].id
    if kind == MAX_VIOLATION:
        return _argbest(cuts, [c.frac_dist for c in cuts])
    if kind == MAX_NORM_VIOLATION:
        return _argbest(cuts, [c.frac_dist / c.row_norm if c.row_norm else 0.0 for c in cuts])
    if kind == LEXICOGRAPHIC:
        return _argbest(cuts, [-(c.basic_var if c.basic_var is not None else math.inf)
                               for c in cuts])
    if kind == MIN_SIMILAR:
        c_obj = np.asarray(state.base.objective, dtype=float)
        cn = np.linalg.norm(c_obj)
        sims = []
        for c in cuts:
            an = np.linalg.norm(c.alpha)
            sims.append(float(c.alpha @ c_obj) / (an * cn) if an * cn > 1e-12 else 0.0)
        return _argbest(cuts, [-s for s in sims])
    if kind == LOOKAHEAD:
        scores = precomputed_scores
        if scores is None:
            scores = lookahead_add_scores(pool, state)
        return _argbest(cuts, scores)
    if kind == NEURAL:
        return _argbest(cuts, _neural_scores(cuts, state, policy.model))
    raise ValueError(f"unknown addition policy {kind!r}")


def _argbest(cuts: Sequence[Cut], scores) -> int:
    """argmax score with lowest-id tie break."""
    best = max(range(len(cuts)), key=lambda i: (scores[i], -cuts[i].id))
    return cuts[best].id


def score_candidates(candidates: Sequence[Cut], state: "CutPlaneState",
                     scorer: CutScorer) -> np.ndarray:
    if scorer.kind == REMOVE_LOOKAHEAD:
        return lookahead_remove_scores(candidates, state)
    if scorer.kind == REMOVE_NEURAL:
        return _neural_scores(candidates, state, scorer.model)
    if scorer.kind == REMOVE_RANDOM:
        return scorer._rng.random(len(candidates))
    raise ValueError(f"unknown removal scorer {scorer.kind!r}")


def select_retained(candidates: Sequence[Cut], scores: Sequence[float], budget: int) -> list[int]:
    """Ids of the ``budget`` highest-scoring cuts; ties prefer newer cuts, then lower id.

    When the budget exceeds the candidate count, everything is retained.
    """
    order = sorted(
        range(len(candidates)),
        key=lambda i: (-float(scores[i]), -candidates[i].born_iter, candidates[i].id),
    )
    keep = order[: min(budget, len(candidates))]
    return [candidates[i].id for i in keep]
