# Uniform interface for low-level feasibility modules
import logging
import time
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

from planning.model import ActionInstance, Constraint, State

logger = logging.getLogger(__name__)


class PrecomputationUnsupported(ValueError):
    def __init__(self, module_id: str):
        super().__init__(f"Module {module_id} has no finite input space to precompute")
        self.module_id = module_id


class CheckUnavailable(RuntimeError):
    def __init__(self, key, cause: BaseException):
        super().__init__(f"Check {key} could not be evaluated: {cause}")
        self.key = key
        self.cause = cause


@dataclass(frozen=True, order=True)
class CheckKey:
    module: str
    values: Tuple[int, ...]

    def __str__(self):
        return f"{self.module}({','.join(str(v) for v in self.values)})"


@dataclass(frozen=True)
class CheckResult:
    feasible: bool
    elapsed: float = 0.0


class CheckModule:
    """A low-level reasoning module L.

    Subclasses read a transition <S_i, A_i, S_i+1>, produce the keys of the
    checks it requires, and decide a key with `check`. A module is
    precomputable iff `input_space` returns an iterator.
    """

    module_id = "L"

    def extract_keys(self, before: State, actions: Iterable[ActionInstance], after: State) -> Set[CheckKey]:
        raise NotImplementedError

    def check(self, key: CheckKey) -> bool:
        raise NotImplementedError

    def evaluate(self, key: CheckKey) -> CheckResult:
        start = time.perf_counter()
        feasible = bool(self.check(key))
        return CheckResult(feasible, time.perf_counter() - start)

    def input_space(self) -> Optional[Iterator[CheckKey]]:
        return None

    def input_space_size(self) -> Optional[int]:
        return None

    @property
    def precomputable(self) -> bool:
        return self.input_space_size() is not None

    def key_constraints(self, key: CheckKey) -> List[Constraint]:
        """Constraints that rule out every transition producing `key`."""
        return []

    def blame(self, key: CheckKey, before: State, actions: Iterable[ActionInstance], after: State) -> Constraint:
        """Constraint forbidding the producers of `key` in the context it was read from."""
        raise NotImplementedError

    def dedicated_table(self) -> Optional[Dict[CheckKey, bool]]:
        return None

    def key(self, *values: int) -> CheckKey:
        return CheckKey(self.module_id, tuple(int(v) for v in values))

    def __repr__(self):
        return f"<{type(self).__name__} {self.module_id}>"


def enumerate_input_space(module: CheckModule) -> Iterator[CheckKey]:
    # modules are bound to their instance when the domain builds them
    space = module.input_space()
    if space is None:
        raise PrecomputationUnsupported(module.module_id)
    return space
