"""Shared builders for protocol-level tests."""

from __future__ import annotations

import dynproof as dp

DEFAULT_SCHEDULE = dp.FinalitySchedule(t0_ms=500, r_t=4, c0=3, r_c=0.7, max_step=6)


def make_world(
    n_challengers: int = 3,
    schedule: dp.FinalitySchedule = DEFAULT_SCHEDULE,
    n_accounts: int = 2,
    econ: dp.EconomicsConfig | None = None,
    seed: int = 0,
):
    """World with one funded operator, a funded challenger pool, and one
    active delegation over fresh accounts."""
    if econ is None:
        econ = dp.EconomicsConfig(operator_bond=1000, reward_share=0.5, lazy_slash=50, probe_reward=25)
    world = dp.World(econ=econ, seed=seed)
    operator = dp.NodeId("op", dp.NodeRole.OPERATOR)
    pool = [dp.NodeId(f"ch-{i}", dp.NodeRole.CHALLENGER) for i in range(n_challengers)]
    world.ledger.mint(operator, 100_000)
    for node in pool:
        world.ledger.mint(node, 10_000)
        world.ledger.post_bond(node, 200, dp.BondPurpose.CHALLENGER_BOND)
    accounts = [dp.AccountId.from_label(f"acct-{i}") for i in range(n_accounts)]
    for account in accounts:
        world.create_account(account)
    record = world.delegate(accounts, operator, schedule, pool, max_lifetime_ms=10**9, now=0)
    return world, record, operator, pool, accounts


def submit_valid(world, record, operator, accounts, now=0, pointer="da-1", n_accounts=1):
    """Submit an honestly computed commitment over the first n accounts."""
    txns = tuple(dp.EphemeralTxn(accounts[i], f"payload-{i}".encode()) for i in range(n_accounts))
    world.register_da(dp.DaRecord(pointer, txns))
    pre = {accounts[i]: world.accounts[accounts[i]] for i in range(n_accounts)}
    diffs = dp.honest_diffs(pre, txns)
    return world.submit_commitment(record, operator, diffs, pointer, now)
