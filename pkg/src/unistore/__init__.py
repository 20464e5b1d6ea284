"""Simulated geo-replicated key-value store mixing causal and strong transactions."""

from .metadata import LamportStamp, TxId, VectorTimestamp
from .scenario import Scenario, builtin, run
from .trace import Trace

__all__ = ["LamportStamp", "Scenario", "Trace", "TxId", "VectorTimestamp", "builtin", "run"]
