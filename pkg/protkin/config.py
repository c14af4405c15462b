import math
import os

APP_NAME = os.getenv("APP_NAME", "protkin")
VERSION = os.getenv("BUILD_VERSION") or "0.1.0"
ENV = os.getenv("ENV", "dev")
OUTPUT_DIR: str = os.getenv("PROTKIN_OUTPUT_DIR", ".")

# finite differences
FD_STEP = 1e-6
FD_RELATIVE_TOLERANCE = 1e-5
FD_ABSOLUTE_FLOOR = 1e-9

# benchmarks
DEFAULT_BATCH_SIZE = 32
DEFAULT_REPS = 10
DEFAULT_THREADS = 1
PRECISION_MAX_LEN = 700
PRECISION_THRESHOLD = 1e-2

# chemistry
TRANS_OMEGA = math.pi
SIDECHAIN_ROTATION_DEG = 122.686
