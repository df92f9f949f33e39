"""Crowding clustering of a program population around a random reference."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .genome import DecodedProgram, ProgramShape, decode, random_position


@dataclass(frozen=True)
class NicheAssignment:
    niches: list[list[int]]
    reference: DecodedProgram
    seeds: list[int]  # the program each niche grew around


def niche_count(S: int, NS: int) -> int:
    if S < 1 or not 1 <= NS <= S:
        raise ValueError(f"niche size must lie in [1, {S}], got {NS}")
    return math.ceil(S / NS)


def niche_sizes(S: int, NS: int) -> list[int]:
    A = niche_count(S, NS)
    return [NS] * (A - 1) + [S - (A - 1) * NS]


def _closest(dist: np.ndarray, pool: np.ndarray, k: int) -> np.ndarray:
    # lexsort sorts by the last key first: distance, then population index
    order = np.lexsort((pool, dist[pool]))
    return pool[order[:k]]


def crowding_cluster(population: list[DecodedProgram], NS: int, rng: np.random.Generator,
                     shape: ProgramShape) -> NicheAssignment:
    """Split ``population`` into ``ceil(S/NS)`` niches of size ``NS`` (last may be smaller).

    The reference is a fresh random program of ``shape``. Each niche is the
    unclustered program nearest the reference plus its ``ns - 1`` nearest
    unclustered neighbours; distance ties go to the lower index.
    """
    S = len(population)
    if S == 0:
        raise ValueError("empty population")
    sizes = niche_sizes(S, NS)
    keys = np.stack([p.key for p in population])
    reference = decode(random_position(shape, rng), shape)

    to_ref = kernels.hamming_rows(keys, reference.key)
    pool = np.arange(S)
    niches, seeds = [], []
    for ns in sizes:
        z = int(_closest(to_ref, pool, 1)[0])
        pool = pool[pool != z]
        to_z = kernels.hamming_rows(keys, keys[z])
        members = _closest(to_z, pool, ns - 1)
        niches.append([z] + [int(m) for m in members])
        seeds.append(z)
        pool = pool[~np.isin(pool, members)]
    return NicheAssignment(niches, reference, seeds)
