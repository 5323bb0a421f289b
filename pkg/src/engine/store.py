#!/usr/bin/env python3
"""
Redescribe Redescription Store
Bounded container for the work set / diversity set memory model

The store never holds more than ``capacity`` redescriptions. Supports are
mirrored in a preallocated boolean matrix so that superset, duplicate and
similarity queries are single matrix operations.
"""

import logging
from typing import Callable, Iterator, List, Optional, Sequence

import numpy as np

from engine.metrics import elem_jaccard_to_all
from engine.redescription import Redescription
from engine.selection import grsc

Monitor = Callable[[str, int], None]


class RedescriptionStore:
    """Ordered, bounded redescription container with cached supports."""

    def __init__(
        self,
        n_entities: int,
        capacity: int,
        monitor: Optional[Monitor] = None,
    ):
        if capacity < 1:
            raise ValueError(f"Store capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.members: List[Redescription] = []
        self._matrix = np.zeros((capacity, n_entities), dtype=bool)
        self.peak_size = 0
        self.monitor = monitor
        self.logger = logging.getLogger('RedescriptionStore')

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Redescription]:
        return iter(list(self.members))

    def __getitem__(self, index: int) -> Redescription:
        return self.members[index]

    @property
    def is_full(self) -> bool:
        return len(self.members) >= self.capacity

    @property
    def supports(self) -> np.ndarray:
        return self._matrix[:len(self.members)]

    def _notify(self, event: str):
        self.peak_size = max(self.peak_size, len(self.members))
        if self.monitor is not None:
            self.monitor(event, len(self.members))

    def add(self, red: Redescription) -> bool:
        if self.is_full:
            return False
        self._matrix[len(self.members)] = red.support
        self.members.append(red)
        self._notify('add')
        return True

    def replace(self, index: int, red: Redescription):
        self.members[index] = red
        self._matrix[index] = red.support
        self._notify('replace')

    def remove_indices(self, indices: Sequence[int]):
        drop = set(int(i) for i in indices)
        if not drop:
            return
        keep = [i for i in range(len(self.members)) if i not in drop]
        self._matrix[:len(keep)] = self._matrix[keep]
        self._matrix[len(keep):len(self.members)] = False
        self.members = [self.members[i] for i in keep]
        self._notify('remove')

    def reset(self, members: Sequence[Redescription]):
        """Replace the whole content, keeping order."""
        self.members = []
        self._matrix[:] = False
        for red in members[:self.capacity]:
            self._matrix[len(self.members)] = red.support
            self.members.append(red)
        self._notify('reset')

    def index_of(self, red: Redescription) -> Optional[int]:
        for i, member in enumerate(self.members):
            if member is red:
                return i
        return None

    def superset_indices(self, support: np.ndarray) -> np.ndarray:
        """Members whose support contains ``support``."""
        if not self.members:
            return np.zeros(0, dtype=int)
        covered = self.supports @ support.astype(np.int64)
        return np.flatnonzero(covered == int(np.count_nonzero(support)))

    def duplicate_index(self, red: Redescription) -> Optional[int]:
        """A member with the same view set and the same support, if any."""
        if not self.members:
            return None
        same = np.flatnonzero((self.supports == red.support).all(axis=1))
        for i in same:
            if self.members[i].views == red.views:
                return int(i)
        return None

    def elem_jaccard(self, red: Redescription) -> np.ndarray:
        return elem_jaccard_to_all(red, self.supports)

    def jaccards(self) -> np.ndarray:
        return np.array([m.jaccard for m in self.members])

    def incomplete_indices(self, n_views: int) -> List[int]:
        return [i for i, m in enumerate(self.members) if m.n_views < n_views]

    def complete_members(self, n_views: int) -> List[Redescription]:
        return [m for m in self.members if m.n_views == n_views]

    def add_discard_or_replace(self, red: Redescription) -> bool:
        """Insert ``red`` if room remains; else replace the most similar weaker member.

        The replaced member has the largest entity Jaccard to ``red`` among the
        members with strictly lower accuracy; ties go to the largest accuracy gap.
        A same-support member on the same views is replaced only when weaker.
        """
        duplicate = self.duplicate_index(red)
        if duplicate is not None:
            if self.members[duplicate].jaccard >= red.jaccard:
                return False
            self.replace(duplicate, red)
            return True
        if self.add(red):
            return True
        jaccards = self.jaccards()
        eligible = np.flatnonzero(jaccards < red.jaccard)
        if len(eligible) == 0:
            return False
        similarity = self.elem_jaccard(red)[eligible]
        gap = red.jaccard - jaccards[eligible]
        order = np.lexsort((eligible, -gap, -similarity))
        self.replace(int(eligible[order[0]]), red)
        return True


def normalize_memory(
    store: RedescriptionStore,
    n_views: int,
    work_set_size: int,
    threshold: int,
    output_set_size: int,
    weights: Sequence[float],
    expected_out_size: int = 200,
    k_c: int = 20,
) -> dict:
    """Shrink the store at the end of a completion step.

    (a) Over the work set size: drop every incomplete 2-view member.
    (b) Over the threshold: drop incomplete members, fewest views first
        (least accurate first within a view count).
    (c) Complete members alone over the threshold: reduce them to a selected
        set of at most ``output_set_size``.
    """
    stats = {'before': len(store), 'two_view': 0, 'incomplete': 0, 'selected': 0}
    if len(store) > work_set_size:
        two_view = [
            i for i, m in enumerate(store.members)
            if m.n_views == 2 and m.n_views < n_views
        ]
        store.remove_indices(two_view)
        stats['two_view'] = len(two_view)

    if len(store) > threshold:
        incomplete = sorted(
            store.incomplete_indices(n_views),
            key=lambda i: (store[i].n_views, store[i].jaccard, i),
        )
        excess = len(store) - threshold
        drop = incomplete[:excess]
        store.remove_indices(drop)
        stats['incomplete'] = len(drop)

    complete = store.complete_members(n_views)
    if len(complete) > threshold:
        selected = grsc(complete, [weights], output_set_size, expected_out_size, k_c)[0]
        store.reset(selected)
        stats['selected'] = len(selected)

    stats['after'] = len(store)
    return stats
