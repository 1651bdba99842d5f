"""Dynamic multi-agent path finding on grids with an incremental SAT encoding."""

from .costs import CostBreakdown, aggregate, traversal_costs
from .engine import METHODS, RunConfig, Session, StageRecord, run
from .grid import Coord, GridMap, Tunnel, compute_tunnel, manhattan, neighbors
from .model import (Agent, DmapfInstance, Event, EventSequence, MapfInstance, PlanSet,
                    Traversal, active_agents, active_obstacles, detect_conflicts,
                    validate_events, validate_solution)

__version__ = "0.1.0"
