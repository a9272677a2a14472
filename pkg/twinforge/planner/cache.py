from __future__ import annotations

__all__ = ["CacheType", "InternalCache"]

import typing as t
from enum import Enum

from ..abc.modals import RewardBreakdown


class CacheType(Enum):
    """
    Class that represents different cache data-types.
    """

    ACTIONS = "actions"
    """
    Every action executed since the plan started, in plan space.
    """
    BREAKDOWNS = "breakdowns"
    """
    The reward breakdown of every executed step.
    """
    BEST_SCORES = "best_scores"
    """
    The best elite score of every CEM iteration, in order.
    """
    STEP_TIMES = "step_times"
    """
    Wall time spent planning each executed step, seconds.
    """


CacheItem = t.Union[t.List[float], RewardBreakdown, float]


class InternalCache:
    """
    A class to manage an internal cache of what a plan has produced so far.
    """

    def __init__(self) -> None:
        self.internal_memory_map: t.Dict[CacheType, t.List[CacheItem]] = {}

    def build_cache(self) -> None:
        """
        Builds the initial cache structure with empty lists for every cache type.
        """
        self.internal_memory_map.update({cache_type: [] for cache_type in CacheType})

    def reset_cache(self) -> None:
        """
        Clears every list; called at the start of each plan.
        """
        self.internal_memory_map = {cache_type: [] for cache_type in CacheType}

    def add_item_to_cache(self, cache_type: CacheType, item: CacheItem) -> None:
        """
        Adds an item to the internal cache.

        Parameters
        ----------
        cache_type : CacheType
            The type of cache to add the item to.
        item : Union[List[float], RewardBreakdown, float]
            The item to add to the cache.
        """
        self.internal_memory_map.setdefault(cache_type, []).append(item)

    def get_actions(self) -> t.Optional[t.List[t.List[float]]]:
        """
        Retrieves the executed actions.

        Returns
        -------
        Optional[List[List[float]]]
            The actions, or None when the cache was never built.
        """
        base = self.internal_memory_map.get(CacheType.ACTIONS)
        if base is None:
            return None
        return [item for item in base if isinstance(item, list)]

    def get_breakdowns(self) -> t.Optional[t.List[RewardBreakdown]]:
        base = self.internal_memory_map.get(CacheType.BREAKDOWNS)
        if base is None:
            return None
        return [item for item in base if isinstance(item, RewardBreakdown)]

    def get_best_scores(self) -> t.Optional[t.List[float]]:
        base = self.internal_memory_map.get(CacheType.BEST_SCORES)
        if base is None:
            return None
        return [float(item) for item in base if isinstance(item, float)]

    def get_step_times(self) -> t.Optional[t.List[float]]:
        base = self.internal_memory_map.get(CacheType.STEP_TIMES)
        if base is None:
            return None
        return [float(item) for item in base if isinstance(item, float)]
