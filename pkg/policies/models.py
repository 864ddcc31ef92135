"""Policy descriptions and fixed-point results."""

from enum import StrEnum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.exceptions import PolicySpecError

MAX_PROBES = 64
PROBABILITY_SUM_TOLERANCE = 1e-12


class PolicyKind(StrEnum):
    """Load-balancing policy families."""

    LL_D = "ll"
    LL_DK = "lldk"
    LL_MIX = "mix"
    RED_D = "red"
    MEM_LL_D = "mem"


class Discipline(StrEnum):
    """Whether servers are ranked by workload (ODE) or queue length (recursion)."""

    WORKLOAD = "workload"
    QUEUE_LENGTH = "queue_length"


class PolicySpec(BaseModel):
    """One policy instance.

    Frozen and hashable, so it can key memoised computations.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: PolicyKind
    d: int | None = Field(None, ge=1, le=MAX_PROBES, description="Probe count")
    k: int | None = Field(None, ge=1, description="Batch size (LL(d,K))")
    choices: tuple[tuple[int, float], ...] | None = Field(
        None, description="(d_i, p_i) pairs of a mixed policy, sorted by d_i"
    )
    memory_size: int | None = Field(None, ge=0, description="Dispatcher memory M")
    discipline: Discipline = Discipline.WORKLOAD

    @field_validator("choices")
    @classmethod
    def sort_choices(cls, v: tuple[tuple[int, float], ...] | None):
        if v is None:
            return v
        return tuple(sorted(((int(d), float(p)) for d, p in v), key=lambda c: c[0]))

    @model_validator(mode="after")
    def check_kind_fields(self) -> "PolicySpec":
        if self.kind == PolicyKind.LL_MIX:
            if not self.choices:
                raise ValueError("mix policy needs at least one (d, p) choice")
            for d_i, p_i in self.choices:
                if not 1 <= d_i <= MAX_PROBES:
                    raise ValueError(f"d_i must lie in [1, {MAX_PROBES}], got {d_i}")
                if p_i < 0:
                    raise ValueError(f"p_i must be nonnegative, got {p_i}")
            total = sum(p for _, p in self.choices)
            if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
                raise ValueError(f"mix probabilities must sum to 1, got {total!r}")
            if sum(d * p for d, p in self.choices) <= 1.0:
                raise ValueError("mix policy needs sum(p_i * d_i) > 1")
            return self

        if self.d is None:
            raise ValueError(f"{self.kind.value} policy needs d")
        if self.kind == PolicyKind.LL_DK:
            if self.k is None or not 1 <= self.k < self.d:
                raise ValueError(f"LL(d,K) needs 1 <= k < d, got d={self.d}, k={self.k}")
        if self.kind == PolicyKind.MEM_LL_D and self.memory_size is None:
            raise ValueError("memory policy needs memory_size")
        return self

    # -- constructors ------------------------------------------------------

    @classmethod
    def build(cls, **fields: Any) -> "PolicySpec":
        """Validate fields, raising PolicySpecError instead of a pydantic error."""
        try:
            return cls(**fields)
        except ValidationError as e:
            raise PolicySpecError(
                "Invalid policy specification",
                details={
                    "fields": {k: str(v) for k, v in fields.items()},
                    "errors": [err["msg"] for err in e.errors()],
                },
            ) from e

    @classmethod
    def ll(cls, d: int, discipline: Discipline = Discipline.WORKLOAD) -> "PolicySpec":
        return cls.build(kind=PolicyKind.LL_D, d=d, discipline=discipline)

    @classmethod
    def lldk(cls, d: int, k: int, discipline: Discipline = Discipline.WORKLOAD) -> "PolicySpec":
        return cls.build(kind=PolicyKind.LL_DK, d=d, k=k, discipline=discipline)

    @classmethod
    def mix(
        cls,
        d: list[int] | tuple[int, ...],
        p: list[float] | tuple[float, ...],
        discipline: Discipline = Discipline.WORKLOAD,
    ) -> "PolicySpec":
        if len(d) != len(p):
            raise PolicySpecError(
                "mix policy needs as many probabilities as probe counts",
                details={"d": list(d), "p": list(p)},
            )
        return cls.build(
            kind=PolicyKind.LL_MIX, choices=tuple(zip(d, p, strict=True)), discipline=discipline
        )

    @classmethod
    def red(cls, d: int) -> "PolicySpec":
        return cls.build(kind=PolicyKind.RED_D, d=d)

    @classmethod
    def mem(cls, d: int, m: int, discipline: Discipline = Discipline.WORKLOAD) -> "PolicySpec":
        return cls.build(kind=PolicyKind.MEM_LL_D, d=d, memory_size=m, discipline=discipline)

    # -- derived quantities ------------------------------------------------

    @property
    def d_max(self) -> int:
        """Largest probe count used by the policy."""
        if self.kind == PolicyKind.LL_MIX:
            assert self.choices is not None
            return max(d for d, _ in self.choices)
        assert self.d is not None
        return self.d

    @property
    def batch_size(self) -> int:
        return self.k if self.kind == PolicyKind.LL_DK and self.k is not None else 1

    @property
    def mean_probes(self) -> float:
        """Average number of probes per job (sum p_i d_i for mixes, d/K for LL(d,K))."""
        if self.kind == PolicyKind.LL_MIX:
            assert self.choices is not None
            return sum(d * p for d, p in self.choices)
        assert self.d is not None
        return self.d / self.batch_size

    @property
    def label(self) -> str:
        """Human-readable name, e.g. ``LL(3,K=2)`` or ``SQ(2)``."""
        prefix = "SQ" if self.discipline == Discipline.QUEUE_LENGTH else "LL"
        match self.kind:
            case PolicyKind.LL_D:
                return f"{prefix}({self.d})"
            case PolicyKind.LL_DK:
                return f"{prefix}({self.d},K={self.k})"
            case PolicyKind.LL_MIX:
                assert self.choices is not None
                ds = ",".join(str(d) for d, _ in self.choices)
                ps = ",".join(f"{p:g}" for _, p in self.choices)
                return f"{prefix}({ds};{ps})"
            case PolicyKind.RED_D:
                return f"Red({self.d})"
            case PolicyKind.MEM_LL_D:
                return f"{prefix}({self.d},M={self.memory_size})"
        return str(self.kind)


class FixedPointResult(BaseModel):
    """The minimal root u_lambda of T(u) = u on (1, u_max]."""

    model_config = ConfigDict(frozen=True)

    u_lambda: float = Field(..., gt=1.0)
    residual: float = Field(..., description="|T(u_lambda) - u_lambda|")
    bracket_lo: float
    bracket_hi: float
    iterations: int
