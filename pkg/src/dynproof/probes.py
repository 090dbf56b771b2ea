"""Lazy-challenger probing: decoys with deliberately wrong diffs.

A probe goes through the ordinary commitment pipeline (same sampling,
same window) so challenger policies cannot tell it from a real
commitment, but the protocol marks it internally non-finalizable.
Whoever signs the decoy gets slashed; whoever challenges it gets paid
out of the prober's own operator escrow.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import StateError
from .ledger import BondLedger, BondPurpose, EconomicsConfig, SlashEvent, SlashReason
from .nodes import NodeId


class ProbeResponse(enum.Enum):
    SIGNED_OFF = "signed_off"
    CHALLENGED = "challenged"
    ABSTAINED = "abstained"


@dataclass
class Probe:
    probe_id: int
    commitment_id: int
    operator: NodeId
    targets: frozenset[NodeId]
    issued_at: int
    assessed: bool = False
    slashes: list[SlashEvent] = field(default_factory=list)


def assess_probe(
    ledger: BondLedger,
    probe: Probe,
    responses: Mapping[NodeId, ProbeResponse],
    econ: EconomicsConfig,
) -> list[SlashEvent]:
    """Settle a probe once its response window has elapsed.

    Targets that signed the decoy are slashed (capped at their escrow, so
    an empty stake yields a recorded zero-amount slash). Targets that
    challenged it are rewarded from the prober's operator escrow; in the
    integrated pipeline that payout normally happens through the dispute
    path instead, so callers pass signers only.
    """
    if probe.assessed:
        raise StateError(f"probe {probe.probe_id} already assessed")
    events: list[SlashEvent] = []
    for target in sorted(probe.targets, key=lambda n: n.name):
        response = responses.get(target, ProbeResponse.ABSTAINED)
        if response is ProbeResponse.SIGNED_OFF:
            amount = min(econ.lazy_slash, ledger.escrowed(target, BondPurpose.CHALLENGER_BOND))
            events.append(
                ledger.apply_verdict(
                    SlashEvent(
                        party=target,
                        amount=amount,
                        reason=SlashReason.LAZY_PROBE_FAILURE,
                    )
                )
            )
        elif response is ProbeResponse.CHALLENGED:
            amount = min(econ.probe_reward, ledger.escrowed(probe.operator, BondPurpose.OPERATOR_BOND))
            events.append(
                ledger.apply_verdict(
                    SlashEvent(
                        party=probe.operator,
                        amount=amount,
                        reason=SlashReason.FRAUD_PROVEN,
                        reward_to=target,
                        reward_share=Fraction(1),
                    )
                )
            )
    probe.assessed = True
    probe.slashes.extend(events)
    return events
