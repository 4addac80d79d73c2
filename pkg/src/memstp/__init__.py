"""memstp: volatile-memristor short-term plasticity simulation toolkit."""

from . import cli, device, fitting, network, neuron, protocols, tm
from .trace import Trace

__version__ = "0.1.0"

__all__ = [
    "cli",
    "device",
    "fitting",
    "network",
    "neuron",
    "protocols",
    "tm",
    "Trace",
    "__version__",
]
