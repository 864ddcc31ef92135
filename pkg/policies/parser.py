"""Policy mini-language used on the command line.

Examples::

    ll:d=2
    lldk:d=4,k=2
    mix:d=1,2;p=0.5,0.5
    red:d=2
    mem:d=2,m=1
    ll:d=2:sq          (queue-length discipline)
"""

import re

from core.exceptions import PolicySpecError
from policies.models import Discipline, PolicyKind, PolicySpec

# key=value pairs; a value runs until the next ",key=" / ";key=" or the end
_PARAM_PATTERN = re.compile(r"([a-z]+)=([^;=]*?)(?=[;,][a-z]+=|$)")

_ALLOWED_KEYS: dict[PolicyKind, set[str]] = {
    PolicyKind.LL_D: {"d"},
    PolicyKind.LL_DK: {"d", "k"},
    PolicyKind.LL_MIX: {"d", "p"},
    PolicyKind.RED_D: {"d"},
    PolicyKind.MEM_LL_D: {"d", "m"},
}


def _parse_params(text: str, params: str) -> dict[str, str]:
    matches = list(_PARAM_PATTERN.finditer(params))
    consumed = sum(len(m.group(0)) for m in matches) + max(len(matches) - 1, 0)
    if not matches or consumed != len(params):
        raise PolicySpecError(
            f"Cannot parse policy parameters in {text!r}", details={"policy": text}
        )
    parsed: dict[str, str] = {}
    for m in matches:
        if m.group(1) in parsed:
            raise PolicySpecError(f"Duplicate key {m.group(1)!r} in {text!r}")
        parsed[m.group(1)] = m.group(2)
    return parsed


def _int(text: str, value: str) -> int:
    try:
        return int(value)
    except ValueError as e:
        raise PolicySpecError(f"Expected an integer, got {value!r} in {text!r}") from e


def _float_list(text: str, value: str) -> list[float]:
    try:
        return [float(v) for v in value.split(",")]
    except ValueError as e:
        raise PolicySpecError(f"Expected numbers, got {value!r} in {text!r}") from e


def parse_policy(text: str) -> PolicySpec:
    """Parse a policy string such as ``lldk:d=4,k=2`` or ``ll:d=2:sq``.

    Args:
        text: Policy in the mini-language

    Returns:
        PolicySpec

    Raises:
        PolicySpecError: If the string is malformed or describes an invalid policy
    """
    parts = text.strip().lower().split(":")
    discipline = Discipline.WORKLOAD
    if len(parts) == 3 and parts[2] == "sq":
        discipline = Discipline.QUEUE_LENGTH
        parts = parts[:2]
    if len(parts) != 2:
        raise PolicySpecError(f"Expected '<kind>:<params>[:sq]', got {text!r}")

    try:
        kind = PolicyKind(parts[0])
    except ValueError as e:
        raise PolicySpecError(
            f"Unknown policy kind {parts[0]!r}",
            details={"allowed": [k.value for k in PolicyKind]},
        ) from e

    params = _parse_params(text, parts[1])
    unknown = set(params) - _ALLOWED_KEYS[kind]
    missing = _ALLOWED_KEYS[kind] - set(params)
    if unknown or missing:
        raise PolicySpecError(
            f"Bad keys for {kind.value} policy in {text!r}",
            details={"unknown": sorted(unknown), "missing": sorted(missing)},
        )

    if kind == PolicyKind.RED_D and discipline == Discipline.QUEUE_LENGTH:
        raise PolicySpecError("Red(d) has no queue-length variant")

    match kind:
        case PolicyKind.LL_D:
            return PolicySpec.ll(_int(text, params["d"]), discipline)
        case PolicyKind.LL_DK:
            return PolicySpec.lldk(_int(text, params["d"]), _int(text, params["k"]), discipline)
        case PolicyKind.LL_MIX:
            ds = [_int(text, v) for v in params["d"].split(",")]
            return PolicySpec.mix(ds, _float_list(text, params["p"]), discipline)
        case PolicyKind.RED_D:
            return PolicySpec.red(_int(text, params["d"]))
        case PolicyKind.MEM_LL_D:
            return PolicySpec.mem(_int(text, params["d"]), _int(text, params["m"]), discipline)
    raise PolicySpecError(f"Unsupported policy kind {kind}")


def format_policy(policy: PolicySpec) -> str:
    """Render a policy back into the mini-language (inverse of parse_policy)."""
    match policy.kind:
        case PolicyKind.LL_D | PolicyKind.RED_D:
            body = f"d={policy.d}"
        case PolicyKind.LL_DK:
            body = f"d={policy.d},k={policy.k}"
        case PolicyKind.LL_MIX:
            assert policy.choices is not None
            ds = ",".join(str(d) for d, _ in policy.choices)
            ps = ",".join(repr(p) for _, p in policy.choices)
            body = f"d={ds};p={ps}"
        case PolicyKind.MEM_LL_D:
            body = f"d={policy.d},m={policy.memory_size}"
    suffix = ":sq" if policy.discipline == Discipline.QUEUE_LENGTH else ""
    return f"{policy.kind.value}:{body}{suffix}"
