"""Message-passing smart-contract execution simulator with an executable
constant-product exchange and property-checked inter-contract invariants."""

from .address import NULL_ADDRESS, Address, contract, user
from .chain import (
    Action,
    BlockError,
    Call,
    Chain,
    ChainState,
    ContractCallContext,
    ContractRef,
    Deploy,
    DeployedEvent,
    ExecOrder,
    SimulationError,
    Transfer,
    TxEvent,
    add_block,
    empty_chain,
)
from .payload import Payload, parse, render, wrap_receiver

__all__ = [
    "Action",
    "Address",
    "BlockError",
    "Call",
    "Chain",
    "ChainState",
    "ContractCallContext",
    "ContractRef",
    "Deploy",
    "DeployedEvent",
    "ExecOrder",
    "NULL_ADDRESS",
    "Payload",
    "SimulationError",
    "Transfer",
    "TxEvent",
    "add_block",
    "contract",
    "empty_chain",
    "parse",
    "render",
    "user",
    "wrap_receiver",
]

__version__ = "0.1.0"
