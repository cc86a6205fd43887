import numpy as np


def make_rng(seed):
    """Counter-based generator; identical streams across platforms for a seed."""
    return np.random.Generator(np.random.Philox(seed))


def derive_seed(seed, *path):
    """Stable child seed for (seed, *path), e.g. one per trial or instance."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))
