"""Multi-agent retail inventory simulator with internal trading and reverse auctions."""

from retail_mas.engine import SimulationConfig, SimulationResult, run
from retail_mas.market import Scenario, load_scenario, sample_initial_state
from retail_mas.metrics import MetricsAccumulator, TradeRecord

__all__ = [
    "MetricsAccumulator",
    "Scenario",
    "SimulationConfig",
    "SimulationResult",
    "TradeRecord",
    "load_scenario",
    "run",
    "sample_initial_state",
]

__version__ = "0.1.0"
