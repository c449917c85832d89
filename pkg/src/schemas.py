from typing import TypeAlias
from enum import Enum

# (robot id, horizon index)
VarKey: TypeAlias = tuple[int, int]

class Method(str, Enum):
    WT = "WT"
    PT = "PT"

class PlannerKind(str, Enum):
    RRT_STAR = "rrt_star"
    STRUCTURED = "structured"
    MANUAL = "manual"

class FactorKind(str, Enum):
    POSE = "pose"
    DYNAMICS = "dynamics"
    OBSTACLE = "obstacle"
    INTERROBOT = "interrobot"
    TRACKING = "tracking"
    LINEAR = "linear"

class RobotStatus(str, Enum):
    ACTIVE = "active"
    FINISHED = "finished"
    FAULTED = "faulted"

class Schedule(str, Enum):
    INTERLEAVED = "interleaved"
    SEQUENTIAL = "sequential"

class SpawnModel(str, Enum):
    JUNCTION_RANDOM_SIDES = "junction-random-sides"
    FIXED_LIST = "fixed-list"
