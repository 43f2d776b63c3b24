"""Executable checkers for the exchange's safety properties.

Each checker is a pure predicate over a trace (or a single snapshot) and
reports violations with enough context to replay them.  The arithmetic
oracles here deliberately avoid the integer operators the contracts use:
expected amounts are recomputed with exact rationals and floored/ceiled
independently, so a checker and the code it checks never share a bug.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

from . import cpmm, fa12
from .address import Address
from .chain import Action, Call, ChainState, Transfer
from .harness import CheckReport, Snapshot, Trace, Wiring
from .payload import Payload, Tag, as_addr, as_int, as_nat, rec_get


def _fail(report: CheckReport, msg: str) -> None:
    report.passed = False
    if len(report.violations) < 10:
        report.violations.append(msg)


def _where(s: Snapshot) -> str:
    return f"block {s.block} step {s.step}"


def minted_and_burned(payload: Optional[Payload]) -> int:
    """The signed quantity of a mint_or_burn call payload, 0 otherwise."""
    if not isinstance(payload, Tag) or payload.name != "mint_or_burn":
        return 0
    q = rec_get(payload.arg, "quantity")
    v = as_int(q) if q is not None else None
    return v if v is not None else 0


def _queued_to(state: ChainState, sender: Address, to: Address) -> list[Action]:
    out = []
    for a in state.outgoing_acts(sender):
        target = getattr(a.body, "to", None)
        if target == to:
            out.append(a)
    return out


def _initial_amounts(state: ChainState, w: Wiring) -> tuple[int, int]:
    """(i_M, i_L) read from the two deployment setups."""
    dep_main = state.deployment_info(w.main)
    dep_lqt = state.deployment_info(w.lqt)
    assert dep_main is not None and dep_lqt is not None
    i_m = as_nat(rec_get(dep_main[2], "lqtTotal_"))
    i_l = as_nat(rec_get(dep_lqt[2], "initial_pool"))
    assert i_m is not None and i_l is not None
    return i_m, i_l


# -- incoming equals outgoing ------------------------------------------------


def check_incoming_outgoing(state: ChainState, a: Address, b: Address) -> CheckReport:
    """Executed calls received by b from a equal the executed transactions
    a sent to b, as ordered lists."""
    report = CheckReport("incoming_outgoing", True, [])
    inc = state.incoming_calls(a, b)
    out = state.outgoing_txs(a, b)
    if inc != out:
        _fail(report, f"incoming({a}->{b}) != outgoing: {len(inc)} vs {len(out)} events")
    return report


def check_incoming_outgoing_all(state: ChainState) -> CheckReport:
    report = CheckReport("incoming_outgoing", True, [])
    contracts = state.deployed_contracts()
    senders = sorted(set(state.balances) | set(contracts))
    for b in contracts:
        for a in senders:
            sub = check_incoming_outgoing(state, a, b)
            if not sub.passed:
                report.passed = False
                report.violations.extend(sub.violations)
    return report


# -- tez pool correct --------------------------------------------------------


def check_tez_pool(snapshot: Snapshot, main: Address) -> CheckReport:
    report = CheckReport("tez_pool", True, [])
    state = snapshot.state
    ms = cpmm.decode_state(state.states[main])
    if ms is None:
        _fail(report, f"{_where(snapshot)}: undecodable main state")
        return report
    pending = sum(a.amount for a in state.outgoing_acts(main))
    balance = state.balance(main)
    if ms.xtzPool != balance - pending:
        _fail(
            report,
            f"{_where(snapshot)}: xtzPool {ms.xtzPool} != balance {balance} - pending {pending}",
        )
    if snapshot.committed and ms.xtzPool != balance:
        _fail(report, f"{_where(snapshot)}: committed xtzPool {ms.xtzPool} != balance {balance}")
    return report


# -- No overdraft ------------------------------------------------------------


def check_no_overdraft(snapshot: Snapshot, main: Address) -> CheckReport:
    report = CheckReport("no_overdraft", True, [])
    a = snapshot.action
    if a is not None and a.sender == main and a.amount > snapshot.pre_sender_balance:
        _fail(
            report,
            f"{_where(snapshot)}: main emitted {a.amount} with balance {snapshot.pre_sender_balance}",
        )
    return report


# -- liquidity token condition -----------------------------------------------


def check_lqt_condition(state: ChainState, w: Wiring) -> CheckReport:
    report = CheckReport("lqt_condition", True, [])
    ls = fa12.decode_state(state.states[w.lqt])
    if ls is None:
        _fail(report, "undecodable lqt state")
        return report
    _, i_l = _initial_amounts(state, w)
    folded = i_l + sum(minted_and_burned(tx.payload) for tx in state.incoming_calls(w.main, w.lqt))
    if ls.total_supply != folded:
        _fail(report, f"total_supply {ls.total_supply} != folded history {folded}")
    ledger_sum = sum(v for _, v in ls.tokens)
    if ledger_sum != ls.total_supply:
        _fail(report, f"ledger sum {ledger_sum} != total_supply {ls.total_supply}")
    return report


# -- main contract liquidity counter -----------------------------------------


def check_main_counter(snapshot: Snapshot, w: Wiring) -> CheckReport:
    report = CheckReport("main_counter", True, [])
    state = snapshot.state
    ms = cpmm.decode_state(state.states[w.main])
    if ms is None:
        _fail(report, f"{_where(snapshot)}: undecodable main state")
        return report
    i_m, _ = _initial_amounts(state, w)
    executed = sum(minted_and_burned(tx.payload) for tx in state.outgoing_txs(w.main, w.lqt))
    queued = sum(
        minted_and_burned(getattr(a.body, "payload", None))
        for a in _queued_to(state, w.main, w.lqt)
    )
    expected = i_m + executed + queued
    if ms.lqtTotal != expected:
        _fail(report, f"{_where(snapshot)}: lqtTotal {ms.lqtTotal} != {expected}")
    return report


# -- liquidity supply correct ------------------------------------------------


def check_lqt_supply(state: ChainState, w: Wiring) -> CheckReport:
    """Direct form: with no pending main->lqt actions and correct pairing,
    the two counters agree."""
    report = CheckReport("lqt_supply_direct", True, [])
    ms = cpmm.decode_state(state.states[w.main])
    ls = fa12.decode_state(state.states[w.lqt])
    if ms is None or ls is None:
        _fail(report, "undecodable state")
        return report
    i_m, i_l = _initial_amounts(state, w)
    paired = ms.lqtAddress == w.lqt and ls.admin == w.main and i_m == i_l
    pending = _queued_to(state, w.main, w.lqt)
    if paired and not pending and ms.lqtTotal != ls.total_supply:
        _fail(report, f"lqtTotal {ms.lqtTotal} != total_supply {ls.total_supply}")
    return report


def check_lqt_supply_composed(snapshot: Snapshot, w: Wiring) -> CheckReport:
    """Counter-equality derived from its decomposition: the main-counter
    invariant, the liquidity token condition, and incoming = outgoing.
    Must never disagree with the direct check."""
    report = CheckReport("lqt_supply_composed", True, [])
    state = snapshot.state
    ms = cpmm.decode_state(state.states[w.main])
    ls = fa12.decode_state(state.states[w.lqt])
    if ms is None or ls is None:
        _fail(report, f"{_where(snapshot)}: undecodable state")
        return report
    i_m, i_l = _initial_amounts(state, w)
    paired = ms.lqtAddress == w.lqt and ls.admin == w.main and i_m == i_l
    pending = _queued_to(state, w.main, w.lqt)
    if not paired or pending:
        return report
    premises = (
        check_main_counter(snapshot, w).passed
        and check_lqt_condition(state, w).passed
        and check_incoming_outgoing(state, w.main, w.lqt).passed
    )
    if premises and ms.lqtTotal != ls.total_supply:
        _fail(
            report,
            f"{_where(snapshot)}: premises hold but lqtTotal {ms.lqtTotal}"
            f" != total_supply {ls.total_supply}",
        )
    return report


# -- Constant product --------------------------------------------------------

TRADE_TAGS = ("xtz_to_token", "token_to_xtz", "token_to_token")


def _dexter_msg(action: Optional[Action], main: Address) -> Optional[Tag]:
    """The unwrapped entrypoint message of a successful call to main."""
    if action is None or not isinstance(action.body, Call) or action.body.to != main:
        return None
    p = action.body.payload
    if isinstance(p, Tag) and p.name == "other_msg" and isinstance(p.arg, Tag):
        return p.arg
    return None


def check_constant_product(
    pre: cpmm.CpmmState, snapshot: Snapshot, main: Address
) -> CheckReport:
    report = CheckReport("constant_product", True, [])
    msg = _dexter_msg(snapshot.action, main)
    if msg is None or msg.name not in TRADE_TAGS:
        return report
    post = cpmm.decode_state(snapshot.state.states[main])
    assert post is not None
    if post.tokenPool * post.xtzPool < pre.tokenPool * pre.xtzPool:
        _fail(
            report,
            f"{_where(snapshot)}: k decreased on {msg.name}:"
            f" {pre.tokenPool}*{pre.xtzPool} -> {post.tokenPool}*{post.xtzPool}",
        )
    return report


# -- Entrypoint arithmetic oracle -------------------------------------------


def _oracle_trade(amount_in: int, pool_in: int, pool_out: int) -> Optional[int]:
    den = pool_in * 1000 + amount_in * 997
    if den == 0:
        return None
    return math.floor(Fraction(amount_in * 997 * pool_out, den))


def check_entrypoint_arith(
    pre: cpmm.CpmmState, snapshot: Snapshot, main: Address
) -> CheckReport:
    """Recompute every trade and liquidity formula with exact rationals and
    compare with the state transition the contract actually performed,
    including the slippage guards."""
    report = CheckReport("entrypoint_arith", True, [])
    action = snapshot.action
    post = cpmm.decode_state(snapshot.state.states[main])
    if post is None:
        return report
    where = _where(snapshot)

    # Donations: plain transfer or explicit default tag.
    msg = _dexter_msg(action, main)
    if action is not None and isinstance(action.body, Transfer) and action.body.to == main:
        if post.xtzPool != pre.xtzPool + action.amount:
            _fail(report, f"{where}: donation of {action.amount} not credited to xtzPool")
        return report
    if msg is None:
        return report
    arg = msg.arg
    amount = action.amount if action is not None else 0

    if msg.name == "default":
        if post.xtzPool != pre.xtzPool + amount:
            _fail(report, f"{where}: donation of {amount} not credited to xtzPool")
    elif msg.name == "xtz_to_token":
        bought = _oracle_trade(amount, pre.xtzPool, pre.tokenPool)
        min_bought = as_nat(rec_get(arg, "minTokensBought"))
        if bought is None or min_bought is None:
            _fail(report, f"{where}: xtz_to_token committed on undefined input")
            return report
        if bought < min_bought:
            _fail(report, f"{where}: bought {bought} below minTokensBought {min_bought}")
        if (post.xtzPool, post.tokenPool) != (pre.xtzPool + amount, pre.tokenPool - bought):
            _fail(report, f"{where}: xtz_to_token pools moved off-oracle")
    elif msg.name in ("token_to_xtz", "token_to_token"):
        sold = as_nat(rec_get(arg, "tokensSold"))
        if sold is None:
            return report
        bought = _oracle_trade(sold, pre.tokenPool, pre.xtzPool)
        if bought is None:
            _fail(report, f"{where}: {msg.name} committed on undefined input")
            return report
        if msg.name == "token_to_xtz":
            min_bought = as_nat(rec_get(arg, "minXtzBought"))
            if min_bought is not None and bought < min_bought:
                _fail(report, f"{where}: bought {bought} below minXtzBought {min_bought}")
        if (post.tokenPool, post.xtzPool) != (pre.tokenPool + sold, pre.xtzPool - bought):
            _fail(report, f"{where}: {msg.name} pools moved off-oracle")
    elif msg.name == "add_liquidity":
        if pre.xtzPool == 0:
            _fail(report, f"{where}: add_liquidity committed with empty xtz pool")
            return report
        minted = math.floor(Fraction(amount * pre.lqtTotal, pre.xtzPool))
        deposited = math.ceil(Fraction(amount * pre.tokenPool, pre.xtzPool))
        expected = (pre.xtzPool + amount, pre.tokenPool + deposited, pre.lqtTotal + minted)
        actual = (post.xtzPool, post.tokenPool, post.lqtTotal)
        if actual != expected:
            _fail(report, f"{where}: add_liquidity moved to {actual}, oracle says {expected}")
        max_dep = as_nat(rec_get(arg, "maxTokensDeposited"))
        min_minted = as_nat(rec_get(arg, "minLqtMinted"))
        if max_dep is not None and deposited > max_dep:
            _fail(report, f"{where}: deposited {deposited} above max {max_dep}")
        if min_minted is not None and minted < min_minted:
            _fail(report, f"{where}: minted {minted} below min {min_minted}")
    elif msg.name == "remove_liquidity":
        burned = as_nat(rec_get(arg, "lqtBurned"))
        if burned is None or pre.lqtTotal == 0:
            _fail(report, f"{where}: remove_liquidity committed on undefined input")
            return report
        xtz_out = math.floor(Fraction(burned * pre.xtzPool, pre.lqtTotal))
        tokens_out = math.floor(Fraction(burned * pre.tokenPool, pre.lqtTotal))
        expected = (pre.xtzPool - xtz_out, pre.tokenPool - tokens_out, pre.lqtTotal - burned)
        actual = (post.xtzPool, post.tokenPool, post.lqtTotal)
        if actual != expected:
            _fail(report, f"{where}: remove_liquidity moved to {actual}, oracle says {expected}")
    return report


# -- Share value (pro-pool rounding) ----------------------------------------


def check_share_value(
    pre: cpmm.CpmmState, snapshot: Snapshot, main: Address
) -> CheckReport:
    """The pool value per liquidity share never decreases on deposits and
    withdrawals: x'*t'*l^2 >= x*t*l'^2."""
    report = CheckReport("share_value", True, [])
    msg = _dexter_msg(snapshot.action, main)
    if msg is None or msg.name not in ("add_liquidity", "remove_liquidity"):
        return report
    post = cpmm.decode_state(snapshot.state.states[main])
    assert post is not None
    lhs = post.xtzPool * post.tokenPool * pre.lqtTotal**2
    rhs = pre.xtzPool * pre.tokenPool * post.lqtTotal**2
    if lhs < rhs:
        _fail(report, f"{_where(snapshot)}: share value decreased on {msg.name}")
    return report


# -- FA1.2 allowance ledger --------------------------------------------------


def check_allowance_ledger(state: ChainState, w: Wiring) -> CheckReport:
    """Refold the allowance map from the lqt contract's incoming call
    history and compare with its actual state."""
    report = CheckReport("allowance_ledger", True, [])
    expected: dict[tuple[Address, Address], int] = {}
    for tx in state.incoming.get(w.lqt, []):
        p = tx.payload
        if not isinstance(p, Tag):
            continue
        if p.name == "approve":
            spender = as_addr(rec_get(p.arg, "spender") or Tag("x"))
            value = as_nat(rec_get(p.arg, "value") or Tag("x"))
            if spender is not None and value is not None:
                expected[(tx.sender, spender)] = value
        elif p.name == "transfer":
            from_ = as_addr(rec_get(p.arg, "from") or Tag("x"))
            value = as_nat(rec_get(p.arg, "value") or Tag("x"))
            if from_ is not None and value is not None and from_ != tx.sender:
                expected[(from_, tx.sender)] = expected.get((from_, tx.sender), 0) - value
    expected = {k: v for k, v in expected.items() if v != 0}
    ls = fa12.decode_state(state.states[w.lqt])
    if ls is None:
        _fail(report, "undecodable lqt state")
        return report
    actual = dict(ls.allowances)
    if expected != actual:
        _fail(report, f"allowances {actual} != refolded history {expected}")
    return report


# -- whole-trace driver ------------------------------------------------------


def run_all_checks(trace: Trace) -> list[CheckReport]:
    return run_checks_for(trace.wiring, trace.snapshots)


def run_checks_for(w: Wiring, snapshots: list[Snapshot]) -> list[CheckReport]:
    reports: list[CheckReport] = []
    # The cpmm state just before the snapshot's action; None until deployed.
    pre_cpmm: Optional[cpmm.CpmmState] = None

    for snap in snapshots:
        main_up = w.main in snap.state.states
        lqt_up = w.lqt in snap.state.states
        if main_up:
            reports.append(check_tez_pool(snap, w.main))
        reports.append(check_no_overdraft(snap, w.main))
        if main_up and lqt_up:
            reports.append(check_main_counter(snap, w))
            reports.append(check_lqt_supply_composed(snap, w))
            if pre_cpmm is not None and not snap.committed:
                reports.append(check_constant_product(pre_cpmm, snap, w.main))
                reports.append(check_entrypoint_arith(pre_cpmm, snap, w.main))
                reports.append(check_share_value(pre_cpmm, snap, w.main))
        if snap.committed:
            state = snap.state
            reports.append(check_incoming_outgoing_all(state))
            if lqt_up:
                reports.append(check_lqt_condition(state, w))
                reports.append(check_allowance_ledger(state, w))
                if main_up:
                    reports.append(check_lqt_supply(state, w))
            if state.queue:
                reports.append(
                    CheckReport("queue_empty", False, [f"block {snap.block}: non-empty queue"])
                )
        pre_cpmm = cpmm.decode_state(snap.state.states[w.main]) if main_up else None
    return reports


def summarize(reports: list[CheckReport]) -> dict[str, CheckReport]:
    out: dict[str, CheckReport] = {}
    for r in reports:
        m = out.setdefault(r.name, CheckReport(r.name, True, []))
        m.passed = m.passed and r.passed
        for v in r.violations:
            if len(m.violations) < 10:
                m.violations.append(v)
    return out


def check_order_robustness(trace: Trace) -> tuple[Trace, list[CheckReport]]:
    """Replay the trace's root actions under the opposite execution order and
    check all invariants there too."""
    from .chain import ExecOrder
    from .harness import replay_trace

    other = (
        ExecOrder.BREADTH_FIRST
        if trace.order is ExecOrder.DEPTH_FIRST
        else ExecOrder.DEPTH_FIRST
    )
    replayed = replay_trace(trace.config, trace.root_blocks, other)
    return replayed, run_all_checks(replayed)
