import os
from dotenv import load_dotenv

load_dotenv()

_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
CONFIG_DIR = os.path.join(_DATA_DIR, "configs")
OUTPUT_DIR = os.getenv("MIXING_OUTPUT_DIR", os.path.join(os.path.dirname(__file__), "output"))
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")

# Probabilities are scaled to integers before max-flow so augmenting paths stay exact.
FLOW_SCALE = int(os.getenv("FLOW_SCALE", str(10**12)))

# Up-set enumeration above this size switches to the min-cut formulation.
ENUM_MAX_STATES = int(os.getenv("ENUM_MAX_STATES", "20"))

# Guards for the augmented-chain exact engines (n² · (j+1) states).
EXACT_MAX_STATES = int(os.getenv("EXACT_MAX_STATES", "30"))
EXACT_MAX_VISITS = int(os.getenv("EXACT_MAX_VISITS", "10"))

DIST_TOL = float(os.getenv("DIST_TOL", "1e-12"))
SOLVER_TOL = float(os.getenv("SOLVER_TOL", "1e-9"))
MARGINAL_TOL = float(os.getenv("MARGINAL_TOL", "1e-10"))
UNDERFLOW = float(os.getenv("UNDERFLOW", "1e-300"))

# Monte Carlo acceptance band, in standard errors.
MC_SIGMAS = float(os.getenv("MC_SIGMAS", "3"))
MC_CHUNK_SIZE = int(os.getenv("MC_CHUNK_SIZE", "100000"))
MC_WORKERS = int(os.getenv("MC_WORKERS", str(min(8, os.cpu_count() or 1))))


def get_mc_config() -> tuple[int, int, float]:
    """Return (chunk_size, workers, sigmas) for Monte Carlo estimators.

    Chunk size fixes the substream layout, so changing it changes the
    random numbers; changing the worker count does not.
    """
    return (MC_CHUNK_SIZE, MC_WORKERS, MC_SIGMAS)
