"""Constant-depth parallel query evaluation on a simulated CRCW PRAM."""
from .kernel import NONE, Machine, MachineConfig, Metrics, SharedArray, WriteMode

__all__ = ["NONE", "Machine", "MachineConfig", "Metrics", "SharedArray", "WriteMode"]
