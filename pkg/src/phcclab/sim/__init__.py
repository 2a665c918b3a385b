from .engine import Engine, RunStats, NS_PER_S, to_ns, to_seconds
from .network import Packet, Link, DropTailQueue, LossModel, DATA, ACK
from .topology import DumbbellConfig, Topology, build_dumbbell

__all__ = [
    "Engine", "RunStats", "NS_PER_S", "to_ns", "to_seconds",
    "Packet", "Link", "DropTailQueue", "LossModel", "DATA", "ACK",
    "DumbbellConfig", "Topology", "build_dumbbell",
]
