# Domain lookup by name, file extension or instance type
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from checks.modules import CheckModule
from domains import locomotion, manipulation
from planning.model import PlanningProblem


@dataclass(frozen=True)
class DomainSpec:
    name: str
    extension: str
    instance_type: type
    build: Callable[..., PlanningProblem]
    modules: Callable[..., List[CheckModule]]
    default_horizon: int


DOMAINS: Dict[str, DomainSpec] = {
    "locomotion": DomainSpec("locomotion", ".loc", locomotion.LocomotionInstance,
                             locomotion.build_locomotion, locomotion.locomotion_modules,
                             locomotion.DEFAULT_HORIZON),
    "manipulation": DomainSpec("manipulation", ".man", manipulation.ManipulationInstance,
                               manipulation.build_manipulation, manipulation.manipulation_modules,
                               manipulation.DEFAULT_HORIZON),
}


def get_domain(name: str) -> DomainSpec:
    try:
        return DOMAINS[name]
    except KeyError:
        raise ValueError(f"Unknown domain: {name}. Supported: {sorted(DOMAINS)}")


def domain_for_extension(extension: str) -> DomainSpec:
    for spec in DOMAINS.values():
        if spec.extension == extension.lower():
            return spec
    raise ValueError(f"Unsupported instance extension: {extension}. "
                     f"Supported: {[d.extension for d in DOMAINS.values()]}")


def domain_of(instance) -> DomainSpec:
    for spec in DOMAINS.values():
        if isinstance(instance, spec.instance_type):
            return spec
    raise TypeError(f"Not a planning instance: {type(instance).__name__}")


def default_horizon(instance) -> int:
    return instance.horizon or domain_of(instance).default_horizon


def build_problem(instance, horizon_max: Optional[int] = None) -> PlanningProblem:
    return domain_of(instance).build(instance, horizon_max=horizon_max)


def build_modules(instance) -> List[CheckModule]:
    return domain_of(instance).modules(instance)
