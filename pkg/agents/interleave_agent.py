# Interleaved checking (Int): modules become the planner's transition hook
import logging
from typing import Sequence

from checks.cache import CheckCache
from checks.modules import CheckModule
from planning.model import State, Step
from planning.planner import FEASIBLE, HookVerdict

logger = logging.getLogger(__name__)


class ModuleHook:
    """Checks every key of a transition through the shared cache and rejects
    on the first failing key."""

    def __init__(self, modules: Sequence[CheckModule], cache: CheckCache):
        self.modules = list(modules)
        self.cache = cache
        self.rejections = {m.module_id: 0 for m in self.modules}

    def __call__(self, before: State, step: Step, after: State) -> HookVerdict:
        for module in self.modules:
            for key in sorted(module.extract_keys(before, step, after)):
                if not self.cache.feasible(module, key):
                    self.rejections[module.module_id] += 1
                    logger.debug("Int rejects %s: %s", sorted(str(a) for a in step), key)
                    return HookVerdict(frozenset([key]))
        return FEASIBLE

    def __bool__(self):
        return bool(self.modules)
