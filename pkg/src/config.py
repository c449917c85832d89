from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]

# Data directories
DATA_DIR = PROJECT_ROOT / "data"
ENVIRONMENTS_DIR = DATA_DIR / "environments"
SCENARIOS_DIR = DATA_DIR / "scenarios"

DATA_DIRS = [
    DATA_DIR,
    ENVIRONMENTS_DIR,
    SCENARIOS_DIR,
]

# Artifacts directories
ARTIFACTS_DIR = PROJECT_ROOT / "artifacts"
RUNS_DIR = ARTIFACTS_DIR / "runs"
SWEEPS_DIR = ARTIFACTS_DIR / "sweeps"

ARTIFACTS_DIRS = [
    RUNS_DIR,
    SWEEPS_DIR,
]

# Required directories exist before any execution
REQUIRED_DIRS = DATA_DIRS + ARTIFACTS_DIRS

# Seed fallback when neither the CLI nor the scenario file gives one
SEED_ENV_VAR = "GBP_SIM_SEED"
RANDOM_STATE = 42

# Simulation defaults. None means "derived from another knob" (see SimParams.from_dict)
SIMULATION_CONFIG = {
    "robot_radius": 2.0,            # r_R [m]
    "comms_radius": 20.0,           # r_comms [m]
    "gamma": 0.0,                   # communication failure probability
    "target_speed": 5.0,            # v_t [m/s]
    "horizon": 5.0,                 # t_{K-1} [s]
    "num_variables": 10,            # K
    "internal_iters": 10,           # T_I
    "external_iters": 10,           # T_E
    "dt_sim": 0.1,                  # [s]
    "schedule": "interleaved",      # interleaved | sequential

    # Factor noise
    "sigma_pose": 1e-15,
    "sigma_dynamics": 0.1,
    "sigma_interrobot": 0.005,
    "sigma_obstacle": 0.005,
    "sigma_tracking": 0.15,

    # Heuristic knobs
    "r_switch": None,               # -> robot_radius
    "s_v": None,                    # -> target_speed
    "d_a": None,                    # -> 2 * robot_radius
    "d_i": 10.0,
    "d_o": None,                    # -> robot_radius

    "clearance_margin": 0.5,
    "duration": 300.0,
}

GBP_CONFIG = {
    "damping": 0.0,                 # beta, <= 0.7
    "max_damping": 0.7,
    "max_condition": 1e12,          # singular threshold for solves
    "h_min": 1e-6,                  # tracking factor guard
    "headon_cone_deg": 5.0,         # interrobot pair closing within this angle of the line between them
    "headon_deflection_deg": 15.0,  # repulsion turned this far so both robots keep right
}

SDF_CONFIG = {
    "cell_size": 0.5,
}

PLANNER_CONFIG = {
    "rrt_star": {
        "step": 2.0,
        "max_iters": 10_000,
        "goal_bias": 0.05,
        "rewire_gamma": None,       # -> 2 * step
    },
    "structured": {
        "snap_radius": 5.0,
    },
    "simplify": False,
}

SPAWN_CONFIG = {
    "count": 60,
    "rate": 4.0,                    # robots per second
    "occupancy_factor": 2.0,        # spawn point busy within factor * r_R (+ margin)
}

SWEEP_CONFIG = {
    "gammas": [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
    "runs": 5,
}

METRICS_CONFIG = {
    "ppd_literal": False,
    "csv_columns": [
        "scenario", "seed", "gamma", "method", "planner",
        "inter_robot_collisions", "environment_collisions",
        "ppd_rmse_mean", "ppd_rmse_std",
    ],
}

# Debug configuration
DEBUG_CONFIG = {
    "gbp": {
        "graph": {
            "print_singular": False,
        },
        "tracking": {
            "print_guard": False,
        },
    },
    "robots": {
        "robot": {
            "print_waypoints": False,
            "print_faults": True,
        },
        "comms": {
            "print_offline": False,
        },
    },
    "planning": {
        "rrt_star": {
            "print_progress": False,
        },
    },
    "sim": {
        "runner": {
            "print_spawns": False,
            "print_progress": True,
        },
        "sweep": {
            "print_runs": True,
        },
    },
    "fs": {
        "log_writes": False,
    },
}
