"""Scenario configuration: population, schedule, cadence, economics knobs.

The on-disk form is a JSON object mirroring ScenarioConfig one-to-one;
parse errors name the offending field so the CLI can exit with a usable
diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields as dc_fields
from typing import Any, Mapping

from .errors import ConfigFieldError, ConfigurationError
from .ledger import EconomicsConfig
from .nodes import NodeId, NodeRole
from .policies import CHALLENGER_KINDS, OPERATOR_KINDS, NodePolicy, PolicyKind
from .schedule import FinalitySchedule

_POLICY_PARAM_FIELDS = (
    "p_fraud_attempt",
    "deterrence_scale",
    "p_online",
    "p_verify",
    "p_suppress",
    "budget",
    "suppress_sign_offs",
    "suppress_challenges",
)


@dataclass(frozen=True)
class NodeSpec:
    node: NodeId
    policy: NodePolicy
    balance: int


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    duration_ms: int
    schedule: FinalitySchedule
    population: tuple[NodeSpec, ...]
    commitment_cadence_ms: int = 1000
    dispute_latency_ms: int = 100
    probe_rate: float = 0.0
    accounts_per_delegation: int = 2
    txns_per_commitment: int = 2
    min_challenger_bond: int = 1
    challenge_bond: int = 10
    operator_bond: int = 1000
    operator_slash: int | None = None  # None slashes the full operator escrow
    challenger_stake: int = 200
    lazy_slash: int = 50
    probe_reward: int = 25
    reward_share: float = 0.5
    verification_latency_ms: int = 0
    max_virtual_time_ms: int | None = None

    def __post_init__(self):
        if not self.population:
            raise ConfigurationError("population must not be empty")
        names = [spec.node.name for spec in self.population]
        if len(set(names)) != len(names):
            raise ConfigurationError("population node names must be unique")
        if not self.operators():
            raise ConfigurationError("population needs at least one operator")
        for spec in self.population:
            self._check_pairing(spec)
        if len(self.challenger_pool()) < self.schedule.c0:
            raise ConfigurationError(
                f"challenger pool of {len(self.challenger_pool())} cannot satisfy c0={self.schedule.c0}"
            )
        if not 0.0 <= self.probe_rate <= 1.0:
            raise ConfigurationError(f"probe_rate must be in [0, 1], got {self.probe_rate}")
        for name in ("duration_ms", "commitment_cadence_ms", "accounts_per_delegation", "txns_per_commitment"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0")
        for name in ("dispute_latency_ms", "verification_latency_ms", "operator_bond",
                     "challenger_stake", "lazy_slash", "probe_reward", "challenge_bond"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0")
        for spec in self.operators():
            if self.operator_bond > spec.balance:
                raise ConfigurationError(
                    f"operator {spec.node.name} balance {spec.balance} below operator_bond {self.operator_bond}"
                )

    @staticmethod
    def _check_pairing(spec: NodeSpec) -> None:
        kind, role = spec.policy.kind, spec.node.role
        if role is NodeRole.OPERATOR and kind not in OPERATOR_KINDS:
            raise ConfigurationError(f"{spec.node.name}: operator role needs an operator policy")
        if role is NodeRole.CHALLENGER and kind not in CHALLENGER_KINDS:
            raise ConfigurationError(f"{spec.node.name}: challenger role needs a challenger policy")
        if role is NodeRole.OBSERVER and kind in OPERATOR_KINDS:
            raise ConfigurationError(f"{spec.node.name}: observers cannot run operator policies")

    def operators(self) -> tuple[NodeSpec, ...]:
        return tuple(s for s in self.population if s.node.role is NodeRole.OPERATOR)

    def challenger_pool(self) -> tuple[NodeId, ...]:
        """Security-committee members eligible for sign-off sampling."""
        return tuple(s.node for s in self.population if s.node.role is NodeRole.CHALLENGER)

    def responders(self) -> tuple[NodeSpec, ...]:
        """Every node that watches commitments, committee or outside observer."""
        return tuple(s for s in self.population if s.policy.kind in CHALLENGER_KINDS)

    def censors(self) -> tuple[NodeSpec, ...]:
        return tuple(s for s in self.population if s.policy.kind is PolicyKind.CENSORING_ADVERSARY)

    def economics(self) -> EconomicsConfig:
        return EconomicsConfig(
            min_challenger_bond=self.min_challenger_bond,
            operator_bond=self.operator_bond,
            operator_slash=self.operator_slash,
            lazy_slash=self.lazy_slash,
            probe_reward=self.probe_reward,
            reward_share=self.reward_share,
        )


# -- serialization ---------------------------------------------------------

_SCALAR_FIELDS = {
    "seed": int,
    "duration_ms": int,
    "commitment_cadence_ms": int,
    "dispute_latency_ms": int,
    "probe_rate": (int, float),
    "accounts_per_delegation": int,
    "txns_per_commitment": int,
    "min_challenger_bond": int,
    "challenge_bond": int,
    "operator_bond": int,
    "challenger_stake": int,
    "lazy_slash": int,
    "probe_reward": int,
    "reward_share": (int, float),
    "verification_latency_ms": int,
}

_REQUIRED = ("seed", "duration_ms", "schedule", "population")


def _expect(mapping: Mapping, key: str, types, where: str):
    value = mapping[key]
    if types is int and isinstance(value, bool):
        raise ConfigFieldError(where, "expected an integer, got a bool")
    if not isinstance(value, types):
        raise ConfigFieldError(where, f"expected {types}, got {type(value).__name__}")
    return value


def parse_scenario(data: Mapping[str, Any]) -> ScenarioConfig:
    """Build a ScenarioConfig from a plain mapping (e.g. loaded JSON)."""
    if not isinstance(data, Mapping):
        raise ConfigFieldError("<root>", "config must be a JSON object")
    known = {f.name for f in dc_fields(ScenarioConfig)}
    for key in data:
        if key not in known:
            raise ConfigFieldError(key, "unknown field")
    for key in _REQUIRED:
        if key not in data:
            raise ConfigFieldError(key, "required field missing")

    sched_raw = data["schedule"]
    if not isinstance(sched_raw, Mapping):
        raise ConfigFieldError("schedule", "expected an object")
    sched_known = {"t0_ms", "r_t", "c0", "r_c", "max_step"}
    for key in sched_raw:
        if key not in sched_known:
            raise ConfigFieldError(f"schedule.{key}", "unknown field")
    try:
        schedule = FinalitySchedule(
            t0_ms=sched_raw.get("t0_ms", 500),
            r_t=sched_raw.get("r_t", 4),
            c0=sched_raw.get("c0", 0),
            r_c=sched_raw.get("r_c", 1),
            max_step=sched_raw.get("max_step", 10),
        )
    except ConfigurationError as exc:
        raise ConfigFieldError("schedule", str(exc)) from exc

    pop_raw = data["population"]
    if not isinstance(pop_raw, list) or not pop_raw:
        raise ConfigFieldError("population", "expected a non-empty array")
    population = tuple(_parse_node(entry, i) for i, entry in enumerate(pop_raw))

    kwargs: dict[str, Any] = {}
    for name, types in _SCALAR_FIELDS.items():
        if name in data:
            kwargs[name] = _expect(data, name, types, name)
    if "operator_slash" in data:
        value = data["operator_slash"]
        if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
            raise ConfigFieldError("operator_slash", "expected an integer or null")
        kwargs["operator_slash"] = value
    if "max_virtual_time_ms" in data:
        value = data["max_virtual_time_ms"]
        if value is not None and (isinstance(value, bool) or not isinstance(value, int)):
            raise ConfigFieldError("max_virtual_time_ms", "expected an integer or null")
        kwargs["max_virtual_time_ms"] = value

    try:
        return ScenarioConfig(schedule=schedule, population=population, **kwargs)
    except ConfigurationError as exc:
        if isinstance(exc, ConfigFieldError):
            raise
        raise ConfigFieldError("<config>", str(exc)) from exc


def _parse_node(entry: Any, index: int) -> NodeSpec:
    where = f"population[{index}]"
    if not isinstance(entry, Mapping):
        raise ConfigFieldError(where, "expected an object")
    for key in entry:
        if key not in {"name", "role", "balance", "policy"}:
            raise ConfigFieldError(f"{where}.{key}", "unknown field")
    for key in ("name", "role", "policy"):
        if key not in entry:
            raise ConfigFieldError(f"{where}.{key}", "required field missing")
    name = _expect(entry, "name", str, f"{where}.name")
    try:
        role = NodeRole(entry["role"])
    except ValueError:
        raise ConfigFieldError(f"{where}.role", f"unknown role {entry['role']!r}") from None
    balance = _expect(entry, "balance", int, f"{where}.balance") if "balance" in entry else 0
    policy_raw = entry["policy"]
    if not isinstance(policy_raw, Mapping) or "kind" not in policy_raw:
        raise ConfigFieldError(f"{where}.policy", "expected an object with a 'kind'")
    try:
        kind = PolicyKind(policy_raw["kind"])
    except ValueError:
        raise ConfigFieldError(
            f"{where}.policy.kind", f"unknown policy kind {policy_raw['kind']!r}"
        ) from None
    params = {}
    for key, value in policy_raw.items():
        if key == "kind":
            continue
        if key not in _POLICY_PARAM_FIELDS:
            raise ConfigFieldError(f"{where}.policy.{key}", "unknown field")
        params[key] = value
    try:
        policy = NodePolicy(kind=kind, **params)
    except (ConfigurationError, TypeError) as exc:
        raise ConfigFieldError(f"{where}.policy", str(exc)) from exc
    return NodeSpec(node=NodeId(name, role), policy=policy, balance=balance)


def scenario_to_dict(config: ScenarioConfig) -> dict:
    """Round-trippable plain-dict form, used for provenance echoes."""
    out: dict[str, Any] = {
        "seed": config.seed,
        "duration_ms": config.duration_ms,
        "schedule": {
            "t0_ms": config.schedule.t0_ms,
            "r_t": _ratio_out(config.schedule.r_t),
            "c0": config.schedule.c0,
            "r_c": _ratio_out(config.schedule.r_c),
            "max_step": config.schedule.max_step,
        },
        "population": [
            {
                "name": spec.node.name,
                "role": spec.node.role.value,
                "balance": spec.balance,
                "policy": _policy_out(spec.policy),
            }
            for spec in config.population
        ],
    }
    for name in _SCALAR_FIELDS:
        if name in ("seed", "duration_ms"):
            continue
        out[name] = getattr(config, name)
    out["operator_slash"] = config.operator_slash
    out["max_virtual_time_ms"] = config.max_virtual_time_ms
    return out


def _ratio_out(value):
    return int(value) if value.denominator == 1 else float(value)


def _policy_out(policy: NodePolicy) -> dict:
    defaults = NodePolicy(kind=policy.kind)
    out: dict[str, Any] = {"kind": policy.kind.value}
    for name in _POLICY_PARAM_FIELDS:
        if getattr(policy, name) != getattr(defaults, name):
            out[name] = getattr(policy, name)
    return out


# -- convenience builders (tests and scripts) --------------------------------


def operator_spec(name: str, balance: int = 100_000, fraud_rate: float = 0.0,
                  deterrence_scale: int = 0) -> NodeSpec:
    if fraud_rate > 0:
        policy = NodePolicy(
            kind=PolicyKind.FRAUDULENT_OPERATOR,
            p_fraud_attempt=fraud_rate,
            deterrence_scale=deterrence_scale,
        )
    else:
        policy = NodePolicy(kind=PolicyKind.HONEST_OPERATOR)
    return NodeSpec(NodeId(name, NodeRole.OPERATOR), policy, balance)


def challenger_spec(name: str, balance: int = 10_000, p_online: float = 1.0) -> NodeSpec:
    policy = NodePolicy(kind=PolicyKind.HONEST_CHALLENGER, p_online=p_online)
    return NodeSpec(NodeId(name, NodeRole.CHALLENGER), policy, balance)


def lazy_spec(name: str, balance: int = 10_000, p_verify: float = 0.0) -> NodeSpec:
    policy = NodePolicy(kind=PolicyKind.LAZY_CHALLENGER, p_verify=p_verify)
    return NodeSpec(NodeId(name, NodeRole.CHALLENGER), policy, balance)


def observer_spec(name: str, balance: int = 10_000, p_online: float = 1.0) -> NodeSpec:
    """An outside watchdog: never sampled, but free to challenge."""
    policy = NodePolicy(kind=PolicyKind.HONEST_CHALLENGER, p_online=p_online)
    return NodeSpec(NodeId(name, NodeRole.OBSERVER), policy, balance)


def censor_spec(name: str, budget: int, p_suppress: float = 1.0,
                suppress_sign_offs: bool = True, suppress_challenges: bool = False) -> NodeSpec:
    policy = NodePolicy(
        kind=PolicyKind.CENSORING_ADVERSARY,
        p_suppress=p_suppress,
        budget=budget,
        suppress_sign_offs=suppress_sign_offs,
        suppress_challenges=suppress_challenges,
    )
    return NodeSpec(NodeId(name, NodeRole.OBSERVER), policy, 0)
