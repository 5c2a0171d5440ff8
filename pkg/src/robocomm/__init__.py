"""Decentralized identity and pay-per-unit energy trading for robot swarms."""

from .identity import Did, DidDocument, KeyPair, create_did, generate_keypair, parse_did, sign, verify
from .credentials import issue_vc, present, verify_presentation
from .ledger import Ledger, LedgerConfig
from .trade import Behavior, MessageBus, TradePolicy, discover, run_trade, select_seller

__version__ = "0.1.0"

__all__ = [
    "Behavior",
    "Did",
    "DidDocument",
    "KeyPair",
    "Ledger",
    "LedgerConfig",
    "MessageBus",
    "TradePolicy",
    "create_did",
    "discover",
    "generate_keypair",
    "issue_vc",
    "parse_did",
    "present",
    "run_trade",
    "select_seller",
    "sign",
    "verify",
    "verify_presentation",
]
