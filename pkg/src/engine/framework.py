#!/usr/bin/env python3
"""
Redescribe Multi-view Framework
Pairwise mining followed by completion on the remaining views

For every view pair (i, j) the two-view miner fills a shared redescription
store. Each remaining view k then gets a model trained with all current
redescriptions as targets; its rules complete the members lacking view k.
The store is normalised after every completion step. At the end only
complete redescriptions survive; they are minimized and reduced to one
output set per weight row.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from engine.completion import complete_redescriptions
from engine.gclusrm import GclusRM
from engine.minimize import minimize_queries
from engine.redescription import GENERATING, SUPPLEMENTING, Redescription, Rule
from engine.selection import grsc
from engine.store import Monitor, RedescriptionStore, normalize_memory
from trees.forest import train_forest
from trees.pct import TreeParams
from trees.rules import extract_rules, merge_rules
from utils.config_parser import Constraints, Settings
from utils.dataset import Dataset
from utils.seeding import child_seed, make_rng
from utils.tracing import OfflineTracer, Tracer


@dataclass
class FrameworkResult:
    sets: List[List[Redescription]]
    complete: List[Redescription]
    pairs: List[Tuple[int, int]]
    store_peak: int = 0
    stats: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.complete


def select_view_pairs(
    n_views: int, count: Optional[int], seed: int
) -> List[Tuple[int, int]]:
    """All pairs i < j, or ``count`` of them sampled with the run seed."""
    pairs = list(itertools.combinations(range(n_views), 2))
    if count is None or count >= len(pairs):
        return pairs
    rng = make_rng(seed, 'pairs')
    chosen = np.sort(rng.choice(len(pairs), size=count, replace=False))
    return [pairs[i] for i in chosen]


def deduplicate(members: List[Redescription]) -> List[Redescription]:
    """One redescription per (views, support); the most accurate, first seen on ties."""
    best: Dict[Any, int] = {}
    kept: List[Redescription] = []
    for red in members:
        key = red.key()
        if key not in best:
            best[key] = len(kept)
            kept.append(red)
        elif red.jaccard > kept[best[key]].jaccard:
            kept[best[key]] = red
    return kept


class MultiViewMiner:
    """Runs the framework with one shared store across restarts and pairs."""

    def __init__(
        self,
        dataset: Dataset,
        constraints: Constraints,
        settings: Settings,
        seed: int,
        tracer: Optional[Tracer] = None,
        monitor: Optional[Monitor] = None,
        n_jobs: int = 1,
    ):
        if dataset.n_views < 2:
            raise ValueError(f"Need at least 2 views, got {dataset.n_views}")
        self.dataset = dataset
        self.constraints = constraints.resolve(dataset.n_entities)
        self.settings = settings
        self.seed = seed
        self.tracer = tracer or OfflineTracer()
        self.n_jobs = n_jobs
        self.store = RedescriptionStore(
            dataset.n_entities, self.constraints.max_expansion_size, monitor
        )
        self.params = TreeParams(
            max_depth=settings.tree_depth(self.constraints),
            min_leaf=settings.min_leaf,
            num_target_batch=self.constraints.num_target_batch,
        )
        self.gclus_peak = 0
        self.stats: List[Dict[str, Any]] = []
        self.logger = logging.getLogger('MultiViewMiner')

    def _event(self, stage: str, **fields: Any):
        self.stats.append({'stage': stage, **fields})
        self.tracer.record(stage, **fields)

    def _completion_rules(self, view: int, targets: np.ndarray, seed: int) -> List[Rule]:
        def learn(spec, model_seed, origin):
            trees = train_forest(
                self.dataset.views[view], targets, spec, self.params,
                model_seed, self.n_jobs,
            )
            return extract_rules(
                trees, self.dataset, view, self.constraints.max_rule_len,
                origin=origin,
            )

        rules = learn(
            self.settings.generating_model, child_seed(seed, 'model', view), GENERATING
        )
        if self.settings.supplementing_model is not None:
            for s in range(self.constraints.num_supplement_models):
                rules = merge_rules(rules, learn(
                    self.settings.supplementing_model,
                    child_seed(seed, 'supplement', view, s),
                    SUPPLEMENTING,
                ))
        return rules

    def _complete_view(self, view: int, seed: int, pair: Tuple[int, int]):
        n_views = self.dataset.n_views
        # Targets: every current redescription, complete ones included
        targets = self.store.supports.T.astype(float)
        rules = self._completion_rules(view, targets, seed)
        outcome = complete_redescriptions(
            self.store, rules, view, self.constraints, n_views
        )
        self._event(
            'complete', pair=f"{pair[0]}-{pair[1]}", rules=len(rules),
            size=len(self.store), **outcome.as_dict(),
        )
        # Supplementing rules are discarded with the step's rule list
        memory = normalize_memory(
            self.store,
            n_views,
            self.constraints.work_set_size,
            self.constraints.threshold,
            self.settings.output_set_size,
            self.settings.weights[0],
            self.settings.expected_out_size,
            self.settings.k_c,
        )
        self._event('normalize', view=view, **memory)

    def run_restart(self, restart: int, pairs: List[Tuple[int, int]]):
        for i, j in pairs:
            pair_seed = child_seed(self.seed, 'restart', restart, 'pair', i, j)
            miner = GclusRM(
                self.dataset, i, j, self.constraints, self.settings,
                pair_seed, self.tracer, self.n_jobs,
            )
            found = miner.run()
            self.gclus_peak = max(self.gclus_peak, miner.store.peak_size)
            inserted = sum(self.store.add_discard_or_replace(red) for red in found)
            self._event(
                'pair', restart=restart, pair=f"{i}-{j}", found=len(found),
                inserted=inserted, size=len(self.store),
            )
            for k in range(self.dataset.n_views):
                if k in (i, j) or len(self.store) == 0:
                    continue
                self._complete_view(k, child_seed(pair_seed, 'view', k), (i, j))

    def finish(self) -> Tuple[List[Redescription], List[List[Redescription]]]:
        n_views = self.dataset.n_views
        complete = self.store.complete_members(n_views)
        dropped = len(self.store) - len(complete)
        complete = minimize_queries(complete, self.dataset, self.constraints)
        complete = [
            red for red in deduplicate(complete)
            if self.constraints.accepts(red.jaccard, red.pvalue, red.support_size)
        ]
        self._event('finish', incomplete_dropped=dropped, complete=len(complete))
        if not complete:
            return [], [[] for _ in self.settings.weights]
        sets = grsc(
            complete,
            self.settings.weights,
            self.settings.output_set_size,
            self.settings.expected_out_size,
            self.settings.k_c,
        )
        return complete, sets

    def run(self, n_restarts: int = 1) -> FrameworkResult:
        pairs = select_view_pairs(
            self.dataset.n_views, self.settings.view_pairs, self.seed
        )
        self.logger.info(
            f"Mining {self.dataset.n_views} views over pairs {pairs} "
            f"({n_restarts} restart(s), seed {self.seed})"
        )
        for restart in range(n_restarts):
            self.run_restart(restart, pairs)
        complete, sets = self.finish()
        if not complete:
            self.logger.warning("No complete redescription satisfies the constraints")
        return FrameworkResult(
            sets=sets,
            complete=complete,
            pairs=pairs,
            store_peak=max(self.store.peak_size, self.gclus_peak),
            stats=self.stats,
        )


def run_framework(
    dataset: Dataset,
    constraints: Constraints,
    settings: Settings,
    seed: Optional[int] = None,
    tracer: Optional[Tracer] = None,
    n_restarts: int = 1,
    monitor: Optional[Monitor] = None,
    n_jobs: int = 1,
) -> FrameworkResult:
    """Mine complete multi-view redescriptions; one reduced set per weight row."""
    miner = MultiViewMiner(
        dataset, constraints, settings,
        settings.rng_seed if seed is None else seed,
        tracer, monitor, n_jobs,
    )
    return miner.run(n_restarts)
