"""Participant identities."""

from __future__ import annotations

import enum
from dataclasses import dataclass


class NodeRole(enum.Enum):
    OPERATOR = "operator"
    CHALLENGER = "challenger"
    OBSERVER = "observer"


@dataclass(frozen=True)
class NodeId:
    """Opaque node identity; unique per scenario."""

    name: str
    role: NodeRole

    def __repr__(self) -> str:
        return f"NodeId({self.name}/{self.role.value})"
