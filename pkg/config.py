import os
from dotenv import load_dotenv
load_dotenv()

# Tolleranze numeriche (witness)
EIG_TOL = float(os.getenv("DYNMAP_EIG_TOL", "1e-9"))
SV_THRESHOLD = float(os.getenv("DYNMAP_SV_THRESHOLD", "1e-10"))
FD_STEP = float(os.getenv("DYNMAP_FD_STEP", "1e-4"))
GENERATOR_NORM_CAP = float(os.getenv("DYNMAP_GENERATOR_NORM_CAP", "1e6"))
SMOOTHNESS_MISMATCH = float(os.getenv("DYNMAP_SMOOTHNESS_MISMATCH", "0.1"))

# Griglie
STEPS = int(os.getenv("DYNMAP_STEPS", "512"))                  # scan per-t
PAIRWISE_STEPS = int(os.getenv("DYNMAP_PAIRWISE_STEPS", "128"))  # scan a coppie (s, t)

# Esecuzione
THREADS = int(os.getenv("DYNMAP_THREADS", "0"))  # 0 = parallelismo disponibile
SEED = int(os.getenv("DYNMAP_SEED", "0"))
LOG_LEVEL = os.getenv("DYNMAP_LOG_LEVEL", "WARNING").upper()
