"""Dynamic challenge-window settlement: protocol, economics, security model, simulator."""

from .accounts import AccountDiff, AccountId, AccountState
from .errors import (
    BundleRevertError,
    ConfigFieldError,
    ConfigurationError,
    ConflictError,
    InvariantViolation,
    ProtocolError,
    ScheduleExhaustedError,
)
from .execution import DaRecord, EphemeralTxn, VerifyOutcome, honest_diffs, verify_diff
from .ledger import BondLedger, BondPurpose, EconomicsConfig, SlashEvent, SlashReason
from .nodes import NodeId, NodeRole
from .policies import Action, NodePolicy, PolicyKind, decide_action, fraud_probability
from .probes import Probe, ProbeResponse, assess_probe
from .protocol import (
    Challenge,
    ChallengeStatus,
    ChallengeWindow,
    Commitment,
    CommitmentStatus,
    DelegationRecord,
    DelegationStatus,
    DisputeOutcome,
    DisputeVerdict,
    WindowOutcome,
    World,
)
from .sampling import sample_challengers
from .scenario import (
    NodeSpec,
    ScenarioConfig,
    censor_spec,
    challenger_spec,
    lazy_spec,
    observer_spec,
    operator_spec,
    parse_scenario,
    scenario_to_dict,
)
from .schedule import (
    FinalitySchedule,
    cumulative_duration,
    format_duration,
    required_challengers,
    required_raw,
    schedule_rows,
    window_duration,
)
from .security import (
    MonteCarloEstimate,
    SecurityParams,
    SettlementDistribution,
    expected_settlement_time,
    monte_carlo_p_challenge,
    p_at_least_one_challenge,
    p_challenge,
    p_fast_finality,
)
from .simulator import SimReport, Simulator, run_scenario
from .trace import TraceLog

__version__ = "0.1.0"
