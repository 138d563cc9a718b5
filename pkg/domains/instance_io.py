"""
Line-oriented instance files.

    locomotion 10 7
    occupied:
    3,4
    legs:
    1,1,1
    ...
    cm:
    2,2
    goal:
    5,6
    params:
    reach=2.5

The header is `domain grid seed`; each section header ends in a colon and is
followed by one comma-separated record per line. `#` starts a comment line.
Printing a parsed instance reproduces the instance exactly.
"""

from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from domains.errors import InstanceParseError, InvalidInstance
from domains.locomotion import LocomotionInstance
from domains.manipulation import ManipulationInstance

Instance = Union[LocomotionInstance, ManipulationInstance]

SECTIONS = {
    "locomotion": {"occupied": 2, "legs": 3, "cm": 2, "goal": 2, "params": None},
    "manipulation": {"occupied": 2, "bases": 2, "payloads": 4, "goal": 4, "params": None},
}
REQUIRED = {
    "locomotion": ("legs", "cm", "goal"),
    "manipulation": ("payloads", "goal"),
}
PARAMS = {
    "locomotion": {"reach": float, "horizon": int},
    "manipulation": {"link_len": float, "swept": bool, "samples": int, "horizon": int},
}


def _format_float(value: float) -> str:
    return repr(float(value))


def format_instance(instance: Instance) -> str:
    lines: List[str] = []
    if isinstance(instance, LocomotionInstance):
        lines.append(f"locomotion {instance.grid} {instance.seed}")
        lines.append("occupied:")
        lines.extend(f"{x},{y}" for x, y in instance.occupied)
        lines.append("legs:")
        lines.extend(f"{x},{y},{int(attached)}" for x, y, attached in instance.legs)
        lines.append("cm:")
        lines.append("{},{}".format(*instance.cm))
        lines.append("goal:")
        lines.append("{},{}".format(*instance.goal))
        lines.append("params:")
        lines.append(f"reach={_format_float(instance.reach)}")
    else:
        lines.append(f"manipulation {instance.grid} {instance.seed}")
        lines.append("occupied:")
        lines.extend(f"{x},{y}" for x, y in instance.obstacles)
        if instance.bases is not None:
            lines.append("bases:")
            lines.extend(f"{x},{y}" for x, y in instance.bases)
        lines.append("payloads:")
        lines.extend(",".join(str(v) for v in pose) for pose in instance.payloads)
        lines.append("goal:")
        lines.extend(",".join(str(v) for v in pose) for pose in instance.goal)
        lines.append("params:")
        lines.append(f"link_len={_format_float(instance.link_len)}")
        lines.append(f"swept={int(instance.swept)}")
        lines.append(f"samples={instance.samples}")
    if instance.horizon is not None:
        lines.append(f"horizon={instance.horizon}")
    return "\n".join(lines) + "\n"


def _parse_param(domain: str, text: str, line: int, source: str) -> Tuple[str, object]:
    if "=" not in text:
        raise InstanceParseError(f"expected key=value, got {text!r}", line, source)
    key, raw = (part.strip() for part in text.split("=", 1))
    kinds = PARAMS[domain]
    if key not in kinds:
        raise InstanceParseError(f"unknown parameter {key!r} for {domain}", line, source)
    kind = kinds[key]
    try:
        if kind is bool:
            if raw not in ("0", "1"):
                raise ValueError(raw)
            return key, raw == "1"
        return key, kind(raw)
    except ValueError:
        raise InstanceParseError(f"parameter {key} expects {kind.__name__}, got {raw!r}", line, source)


def parse_instance(text: str, name: Optional[str] = None, source: str = "<instance>",
                   expected_domain: Optional[str] = None) -> Instance:
    records = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            records.append((line_no, stripped))
    if not records:
        raise InstanceParseError("empty instance file", 1, source)

    header_line, header = records[0]
    parts = header.split()
    if len(parts) != 3:
        raise InstanceParseError(f"header must be 'domain grid seed', got {header!r}", header_line, source)
    domain = parts[0]
    if domain not in SECTIONS:
        raise InstanceParseError(f"unknown domain {domain!r}", header_line, source)
    if expected_domain is not None and domain != expected_domain:
        raise InstanceParseError(f"expected a {expected_domain} instance, got {domain}", header_line, source)
    try:
        grid, seed = int(parts[1]), int(parts[2])
    except ValueError:
        raise InstanceParseError(f"grid and seed must be integers in {header!r}", header_line, source)

    sections: Dict[str, list] = {}
    params: Dict[str, object] = {}
    current: Optional[str] = None
    for line_no, record in records[1:]:
        if record.endswith(":"):
            current = record[:-1].strip()
            if current not in SECTIONS[domain]:
                raise InstanceParseError(f"unknown section {current!r}", line_no, source)
            if current in sections or (current == "params" and params):
                raise InstanceParseError(f"section {current!r} appears twice", line_no, source)
            sections[current] = []
            continue
        if current is None:
            raise InstanceParseError("record outside of any section", line_no, source)
        if current == "params":
            key, value = _parse_param(domain, record, line_no, source)
            params[key] = value
            continue
        arity = SECTIONS[domain][current]
        try:
            values = tuple(int(v) for v in record.split(","))
        except ValueError:
            raise InstanceParseError(f"non-integer value in {record!r}", line_no, source)
        if len(values) != arity:
            raise InstanceParseError(f"section {current} expects {arity} values per line, got {len(values)}",
                                     line_no, source)
        sections[current].append(values)

    for required in REQUIRED[domain]:
        if not sections.get(required):
            raise InstanceParseError(f"missing section {required!r}", records[-1][0], source)

    fields = {"grid": grid, "seed": seed, **params}
    if name is not None:
        fields["name"] = name
    try:
        if domain == "locomotion":
            if len(sections["cm"]) != 1 or len(sections["goal"]) != 1:
                raise InstanceParseError("cm and goal take exactly one cell", records[-1][0], source)
            return LocomotionInstance(
                occupied=tuple(sections.get("occupied", [])),
                legs=tuple((x, y, bool(a)) for x, y, a in sections["legs"]),
                cm=sections["cm"][0],
                goal=sections["goal"][0],
                **fields,
            )
        bases = sections.get("bases")
        if bases is not None and len(bases) != 2:
            raise InstanceParseError("bases takes exactly two cells", records[-1][0], source)
        return ManipulationInstance(
            obstacles=tuple(sections.get("occupied", [])),
            bases=tuple(bases) if bases is not None else None,
            payloads=tuple(sections["payloads"]),
            goal=tuple(sections["goal"]),
            **fields,
        )
    except ValidationError as e:
        first = e.errors()[0]
        raise InvalidInstance(name or source, f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}")


def read_instance(path, expected_domain: Optional[str] = None) -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(), name=path.stem, source=str(path),
                          expected_domain=expected_domain)


def write_instance(path, instance: Instance) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_instance(instance))
    return path
