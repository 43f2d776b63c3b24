"""Scenario files: explicit, replayable block scripts.

A scenario is a JSON document:

    {
      "users":  {"alice": 1000000, "bob": 500},
      "blocks": [
        [
          {"type": "deploy", "from": "alice", "name": "token",
           "contract": "fa2", "amount": 0,
           "setup": "{ledger: {(@alice, 0): 1000}}"},
          {"type": "call", "from": "alice", "to": "token", "amount": 0,
           "msg": "transfer({from: @alice, to: @bob, tokenId: 0, value: 5})"},
          {"type": "transfer", "from": "alice", "to": "bob", "amount": 100}
        ]
      ]
    }

Users are assigned addresses @u0.. in declaration order; each deploy's
"name" is bound to the deterministic address it will be minted at, so
later actions (and payload texts, via @name) can refer to it.  Message
and setup payloads use the canonical payload grammar.

Executing a scenario produces one line-delimited JSON record per chain
event (see docs/trace-format.md), plus a record per rejected block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from . import cpmm, fa2, fa12
from .address import NULL_ADDRESS, Address, contract, user
from .chain import (
    Action,
    BlockError,
    Call,
    ChainState,
    Deploy,
    DeployedEvent,
    Event,
    ExecOrder,
    Transfer,
    TxEvent,
    add_block,
    empty_chain,
)
from .harness import Snapshot, Wiring, make_sink_contract
from .payload import PayloadSyntaxError, parse, render


class ScenarioError(ValueError):
    pass


CONTRACT_REGISTRY = {
    "cpmm": cpmm.make_contract,
    "fa12": fa12.make_contract,
    "fa2": fa2.make_contract,
    "sink": make_sink_contract,
}


@dataclass
class Scenario:
    aliases: dict[str, Address]
    users: list[tuple[Address, int]]
    blocks: list[list[Action]]


def load_scenario(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict) or "blocks" not in doc:
        raise ScenarioError("scenario must be an object with a 'blocks' list")

    aliases: dict[str, Address] = {}
    users: list[tuple[Address, int]] = []
    for i, (name, balance) in enumerate(doc.get("users", {}).items()):
        if not isinstance(balance, int) or balance < 0:
            raise ScenarioError(f"user {name}: balance must be a non-negative integer")
        a = user(i)
        aliases[name] = a
        users.append((a, balance))

    blocks: list[list[Action]] = []
    next_contract = 1
    for bi, raw_block in enumerate(doc["blocks"]):
        if not isinstance(raw_block, list):
            raise ScenarioError(f"block {bi} must be a list of actions")
        actions: list[Action] = []
        for ai, raw in enumerate(raw_block):
            where = f"block {bi} action {ai}"
            if not isinstance(raw, dict) or "type" not in raw:
                raise ScenarioError(f"{where}: action must be an object with 'type'")
            sender = _resolve(aliases, raw.get("from"), where)
            amount = raw.get("amount", 0)
            if not isinstance(amount, int) or amount < 0:
                raise ScenarioError(f"{where}: bad amount")
            kind = raw["type"]
            if kind == "deploy":
                ref_name = raw.get("contract")
                factory = CONTRACT_REGISTRY.get(ref_name)
                if factory is None:
                    raise ScenarioError(f"{where}: unknown contract {ref_name!r}")
                name = raw.get("name")
                if not isinstance(name, str) or not name:
                    raise ScenarioError(f"{where}: deploy requires a 'name'")
                if name in aliases:
                    raise ScenarioError(f"{where}: duplicate name {name!r}")
                setup = _payload(aliases, raw.get("setup", "unit"), where)
                aliases[name] = contract(next_contract)
                next_contract += 1
                actions.append(Action(sender, sender, Deploy(amount, factory(), setup)))
            elif kind == "transfer":
                to = _resolve(aliases, raw.get("to"), where)
                actions.append(Action(sender, sender, Transfer(to, amount)))
            elif kind == "call":
                to = _resolve(aliases, raw.get("to"), where)
                msg = _payload(aliases, raw.get("msg", "unit"), where)
                actions.append(Action(sender, sender, Call(to, amount, msg)))
            else:
                raise ScenarioError(f"{where}: unknown action type {kind!r}")
        blocks.append(actions)
    return Scenario(aliases, users, blocks)


def _resolve(aliases: dict[str, Address], name, where: str) -> Address:
    if not isinstance(name, str) or name not in aliases:
        raise ScenarioError(f"{where}: unknown address alias {name!r}")
    return aliases[name]


def _payload(aliases: dict[str, Address], text, where: str):
    if not isinstance(text, str):
        raise ScenarioError(f"{where}: payload must be a string")
    try:
        return parse(text, aliases)
    except PayloadSyntaxError as e:
        raise ScenarioError(f"{where}: {e}") from None


# -- execution ---------------------------------------------------------------


@dataclass
class ScenarioResult:
    final_state: ChainState
    records: list[dict]
    snapshots: list[Snapshot]
    rejected_blocks: int = 0


def event_record(block: int, ev: Event) -> dict:
    if isinstance(ev, DeployedEvent):
        return {
            "block": block,
            "event": "deployed",
            "at": str(ev.at),
            "by": str(ev.by),
            "amount": ev.amount,
            "setup": render(ev.setup),
        }
    assert isinstance(ev, TxEvent)
    return {
        "block": block,
        "event": "tx",
        "from": str(ev.sender),
        "to": str(ev.to),
        "amount": ev.amount,
        "payload": None if ev.payload is None else render(ev.payload),
    }


def run_scenario(scenario: Scenario, order: ExecOrder) -> ScenarioResult:
    state = empty_chain(scenario.users)
    records: list[dict] = []
    snapshots: list[Snapshot] = []

    for bi, roots in enumerate(scenario.blocks):
        collected: list[Snapshot] = []

        def observer(work: ChainState, action: Action, pre_balance: int) -> None:
            collected.append(
                Snapshot(bi, len(collected), work.clone(), action, pre_balance, False)
            )

        log_before = len(state.log)
        try:
            state = add_block(state, roots, order, observer)
        except BlockError as e:
            records.append(
                {"block": bi, "event": "rejected", "index": e.index, "reason": e.reason}
            )
            continue
        for ev in state.log[log_before:]:
            records.append(event_record(bi, ev))
        snapshots.extend(collected)
        snapshots.append(Snapshot(bi, -1, state.clone(), None, 0, True))

    rejected = sum(1 for r in records if r["event"] == "rejected")
    return ScenarioResult(state, records, snapshots, rejected)


def exchange_wirings(result: ScenarioResult, scenario: Scenario) -> list[Wiring]:
    """One wiring per deployed exchange instance, with its paired token and
    liquidity contracts read from its own state."""
    state = result.final_state
    users = tuple(a for a, _ in scenario.users)
    wirings = []
    for a in state.deployed_contracts():
        if not state.contracts[a].name.startswith("cpmm"):
            continue
        ms = cpmm.decode_state(state.states[a])
        if ms is None:
            continue
        wirings.append(Wiring(a, ms.lqtAddress, ms.tokenAddress, NULL_ADDRESS, users))
    return wirings


def check_scenario(result: ScenarioResult, scenario: Scenario) -> list:
    from .checks import run_checks_for

    reports = []
    for w in exchange_wirings(result, scenario):
        reports.extend(run_checks_for(w, result.snapshots))
    return reports
