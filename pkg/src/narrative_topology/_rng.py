"""Tiny counter-based RNG usable inside numba kernels.

splitmix64 is enough for walk steps, negative sampling and layout noise, and
unlike ``np.random`` inside ``njit`` code it gives the same stream for a seed
on every platform.  State lives in a one-element ``uint64`` array.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(inline="always")
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(inline="always")
def next_u64(state):
    state[0] = state[0] + _GOLDEN
    return mix64(state[0])


@njit(inline="always")
def next_double(state):
    """Uniform double in [0, 1)."""
    return float(next_u64(state) >> _S11) * _INV53


@njit(inline="always")
def derive_seed(seed, index):
    return mix64(np.uint64(seed) ^ mix64(np.uint64(index) + _GOLDEN))


def make_state(seed: int, index: int = 0) -> np.ndarray:
    state = np.empty(1, dtype=np.uint64)
    state[0] = derive_seed(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index))
    return state
