SEED_MASK = (1 << 64) - 1
# 2**64 / golden ratio, odd
SEED_MULTIPLIER = 0x9E3779B97F4A7C15


def derive_seed(master_seed: int, counter: int) -> int:
    """Per-trial / per-repeat seed: ``master XOR (counter * odd constant)`` modulo 2**64.

    ``counter`` starts at 1 for the first trial so it never equals the master seed.
    """
    return (int(master_seed) ^ (int(counter) * SEED_MULTIPLIER)) & SEED_MASK
