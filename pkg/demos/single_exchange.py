"""Walk through one exchange: deploy, trade, add and remove liquidity.

Run with: python3 demos/single_exchange.py
"""

from dexsim import cpmm, fa2, fa12
from dexsim.chain import ExecOrder, add_block
from dexsim.checks import run_all_checks, summarize
from dexsim.harness import ScenarioConfig, Trace, dexter_call, wire_exchange
from dexsim.payload import addr, nat, record


def show(label, state, w):
    ms = cpmm.decode_state(state.states[w.main])
    ls = fa12.decode_state(state.states[w.lqt])
    print(f"{label}:")
    print(f"  xtzPool={ms.xtzPool}  tokenPool={ms.tokenPool}  lqtTotal={ms.lqtTotal}")
    print(f"  main balance={state.balance(w.main)}  lqt supply={ls.total_supply}")


def main():
    config = ScenarioConfig(seed=0, users=2, initial_xtz_pool=10_000, initial_token_pool=10_000)
    state, w, snapshots, root_blocks = wire_exchange(config, ExecOrder.DEPTH_FIRST)
    show("after wiring", state, w)
    alice, bob = w.users
    deadline = state.chain.current_slot + 2

    # Bob buys tokens with 500 mutez.
    trade = dexter_call(
        bob, w.main, 500, "xtz_to_token",
        record(to=addr(bob), minTokensBought=nat(1), deadline=nat(deadline)),
    )
    state = add_block(state, [trade], ExecOrder.DEPTH_FIRST)
    show("after bob's 500 mutez trade", state, w)
    ts = fa2.decode_state(state.states[w.token])
    print(f"  bob now holds {fa2.ledger_balance(ts, bob, 0) - config.initial_user_tokens:+d} tokens")

    # Alice deposits liquidity.
    deadline = state.chain.current_slot + 2
    deposit = dexter_call(
        alice, w.main, 2_000, "add_liquidity",
        record(owner=addr(alice), minLqtMinted=nat(1),
               maxTokensDeposited=nat(10**9), deadline=nat(deadline)),
    )
    state = add_block(state, [deposit], ExecOrder.DEPTH_FIRST)
    show("after alice adds 2000 mutez of liquidity", state, w)

    # And withdraws half of her new shares.
    ls = fa12.decode_state(state.states[w.lqt])
    held = fa12.balance_of(ls, alice)
    deadline = state.chain.current_slot + 2
    withdraw = dexter_call(
        alice, w.main, 0, "remove_liquidity",
        record(to=addr(alice), lqtBurned=nat(held // 2), minXtzWithdrawn=nat(0),
               minTokensWithdrawn=nat(0), deadline=nat(deadline)),
    )
    state = add_block(state, [withdraw], ExecOrder.DEPTH_FIRST)
    show(f"after alice burns {held // 2} shares", state, w)

    # Every safety checker still holds on the recorded snapshots.
    trace = Trace(config, ExecOrder.DEPTH_FIRST, w, root_blocks, snapshots, [], state)
    summary = summarize(run_all_checks(trace))
    print("checkers:", ", ".join(f"{n}={'ok' if r.passed else 'FAIL'}" for n, r in sorted(summary.items())))


if __name__ == "__main__":
    main()
