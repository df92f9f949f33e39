"""Round-based simulation of federated feature construction.

Clients own their data and a persistent program population. Each round they
cluster the population into niches, run a few local GSA iterations per niche,
and report one champion per niche. The edge server pools every champion, runs
one GSA step over the pool and routes the moved programs back to their owners.
Only positions, velocities, fitness scalars, indices and ids cross the
boundary; see :class:`ChampionReport` and :class:`GlobalUpdate`.
"""
from __future__ import annotations

import logging
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels
from .data import LocalData
from .genome import (
    OPERATORS,
    EmptyMask,
    ProgramShape,
    build_tree,
    canonical_string,
    compile_postfix,
    decode,
    random_position,
)
from .gsa import GsaParams, step_arrays
from .niching import crowding_cluster, niche_count

log = logging.getLogger(__name__)

REAL_BYTES = 8
INDEX_BYTES = 4

# random stream tags; streams are keyed, never consumed in execution order
_INIT, _CLUSTER, _NICHE, _SERVER, _NS = range(5)


def stream(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


@dataclass
class RunConfig:
    n_clients: int = 10
    pop_size: int = 30
    local_iters: int = 5
    global_rounds: int = 100
    ns_min: int = 3
    ns_max: int = 10
    depth: int = 3
    arity: int = 2
    operators: tuple[str, ...] = OPERATORS
    n_bins: int = 10
    beta_max: int | None = None
    igr_threshold: float = 0.01
    master_seed: int = 42
    G0: float = 100.0
    alpha: float = 20.0
    epsilon: float = 1e-9

    def __post_init__(self):
        self.operators = tuple(self.operators)
        problems = []
        if self.n_clients < 2:
            problems.append("federation needs M >= 2 clients")
        if self.global_rounds < 1:
            problems.append("need at least 1 round (global_rounds >= 1)")
        for name in ("pop_size", "local_iters", "ns_min", "depth"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if not self.ns_min <= self.ns_max <= self.pop_size:
            problems.append("need ns_min <= ns_max <= pop_size")
        if self.arity < 2:
            problems.append("arity must be >= 2")
        if self.n_bins < 2:
            problems.append("n_bins must be >= 2")
        if self.beta_max is not None and self.beta_max < 1:
            problems.append("beta_max must be >= 1")
        if self.igr_threshold < 0:
            problems.append("igr_threshold must be >= 0")
        if min(self.G0, self.alpha, self.epsilon) <= 0:
            problems.append("G0, alpha and epsilon must be positive")
        if problems:
            raise ValueError("; ".join(problems))

    def resolved_beta(self, n_features: int) -> int:
        return self.beta_max if self.beta_max is not None else max(3, math.ceil(n_features / 4))

    def shape(self, n_features: int) -> ProgramShape:
        return ProgramShape(n_features, self.depth, self.arity, self.operators)

    def gsa(self, horizon: int) -> GsaParams:
        return GsaParams(self.G0, self.alpha, self.epsilon, horizon)

    def to_dict(self, n_features: int | None = None) -> dict:
        d = asdict(self)
        d["operators"] = list(self.operators)
        if n_features is not None:
            d["beta_max"] = self.resolved_beta(n_features)
        return d


# -- messages ---------------------------------------------------------------

@dataclass
class Champion:
    position: np.ndarray
    velocity: np.ndarray
    fitness: float
    local_index: int


@dataclass
class ChampionReport:
    client_id: int
    champions: list[Champion]

    def to_dict(self) -> dict:
        return {
            "client_id": self.client_id,
            "champions": [
                {"position": c.position.tolist(), "velocity": c.velocity.tolist(),
                 "fitness": float(c.fitness), "local_index": int(c.local_index)}
                for c in self.champions
            ],
        }

    def to_bytes(self) -> bytes:
        parts = [struct.pack("<i", self.client_id)]
        for c in self.champions:
            parts.append(np.asarray(c.position, "<f8").tobytes())
            parts.append(np.asarray(c.velocity, "<f8").tobytes())
            parts.append(struct.pack("<di", c.fitness, c.local_index))
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes, dimension: int) -> "ChampionReport":
        per = 2 * dimension * REAL_BYTES + REAL_BYTES + INDEX_BYTES
        body = len(data) - INDEX_BYTES
        if body < 0 or body % per:
            raise ValueError("report length does not match the program dimension")
        (client_id,) = struct.unpack_from("<i", data, 0)
        champions, off = [], INDEX_BYTES
        for _ in range(body // per):
            pos = np.frombuffer(data, "<f8", dimension, off).copy()
            vel = np.frombuffer(data, "<f8", dimension, off + dimension * REAL_BYTES).copy()
            fit, idx = struct.unpack_from("<di", data, off + 2 * dimension * REAL_BYTES)
            champions.append(Champion(pos, vel, fit, idx))
            off += per
        return cls(client_id, champions)

    @staticmethod
    def expected_size(n_champions: int, dimension: int) -> int:
        return INDEX_BYTES + n_champions * (2 * dimension * REAL_BYTES + REAL_BYTES + INDEX_BYTES)


@dataclass
class UpdateEntry:
    position: np.ndarray
    velocity: np.ndarray
    local_index: int


@dataclass
class GlobalUpdate:
    entries: dict[int, list[UpdateEntry]] = field(default_factory=dict)

    def for_client(self, client_id: int) -> list[UpdateEntry]:
        return self.entries.get(client_id, [])

    def to_dict(self) -> dict:
        return {
            "clients": {
                str(m): [{"position": e.position.tolist(), "velocity": e.velocity.tolist(),
                          "local_index": int(e.local_index)} for e in items]
                for m, items in sorted(self.entries.items())
            }
        }

    def to_bytes(self) -> bytes:
        parts = []
        for m, items in sorted(self.entries.items()):
            parts.append(struct.pack("<i", m))
            for e in items:
                parts.append(np.asarray(e.position, "<f8").tobytes())
                parts.append(np.asarray(e.velocity, "<f8").tobytes())
                parts.append(struct.pack("<i", e.local_index))
        return b"".join(parts)

    @staticmethod
    def expected_size(n_clients: int, per_client: int, dimension: int) -> int:
        return n_clients * (INDEX_BYTES + per_client * (2 * dimension * REAL_BYTES + INDEX_BYTES))


# -- client side ------------------------------------------------------------

@dataclass
class ClientState:
    client_id: int
    data: LocalData
    shape: ProgramShape
    positions: np.ndarray
    velocities: np.ndarray
    fitness: np.ndarray  # NaN marks a stale agent

    @classmethod
    def initial(cls, client_id: int, data: LocalData, shape: ProgramShape, pop_size: int,
                master_seed: int) -> "ClientState":
        if len(data) == 0:
            raise ValueError(f"client {client_id} has no training samples")
        rng = stream(master_seed, _INIT, client_id)
        X = np.stack([random_position(shape, rng) for _ in range(pop_size)])
        return cls(client_id, data, shape, X, np.zeros_like(X), np.full(pop_size, np.nan))


def program_fitness(position, shape: ProgramShape, data: LocalData, n_bins: int) -> float:
    """Gain ratio of the feature a position decodes to; 0 for an empty mask."""
    try:
        tree = build_tree(decode(position, shape), shape)
    except EmptyMask:
        return 0.0
    code = compile_postfix(tree, shape.operators)
    return kernels.program_igr(code, data.X, data.y, data.n_classes, n_bins)


def _evaluate_stale(state: ClientState, n_bins: int) -> None:
    for i in np.flatnonzero(np.isnan(state.fitness)):
        state.fitness[i] = program_fitness(state.positions[i], state.shape, state.data, n_bins)


def local_phase(state: ClientState, A: int, NS: int, incoming: Sequence[UpdateEntry],
                round_idx: int, config: RunConfig) -> ChampionReport:
    S = state.positions.shape[0]
    for e in incoming:
        if not 0 <= e.local_index < S:
            raise IndexError(f"update for client {state.client_id} targets index {e.local_index}")
        state.positions[e.local_index] = e.position
        state.velocities[e.local_index] = e.velocity
        state.fitness[e.local_index] = np.nan

    shape = state.shape
    lower, upper = shape.bounds
    population = [decode(x, shape) for x in state.positions]
    clusters = crowding_cluster(population, NS, stream(config.master_seed, _CLUSTER, state.client_id, round_idx), shape)
    if len(clusters.niches) != A:
        raise ValueError(f"clustering produced {len(clusters.niches)} niches, expected {A}")
    niches = [np.asarray(members) for members in clusters.niches]
    rngs = [stream(config.master_seed, _NICHE, state.client_id, round_idx, k) for k in range(A)]
    params = config.gsa(config.local_iters)

    for it in range(config.local_iters):
        _evaluate_stale(state, config.n_bins)
        for idx, rng in zip(niches, rngs):
            X, V = step_arrays(state.positions[idx], state.velocities[idx], state.fitness[idx],
                               it, params, rng, lower, upper)
            state.positions[idx] = X
            state.velocities[idx] = V
            state.fitness[idx] = np.nan
    # champions are reported with fitness that matches their final position
    _evaluate_stale(state, config.n_bins)

    champions = []
    for idx in niches:
        ordered = np.sort(idx)
        best = int(ordered[np.argmax(state.fitness[ordered])])
        champions.append(Champion(state.positions[best].copy(), state.velocities[best].copy(),
                                  float(state.fitness[best]), best))
    return ChampionReport(state.client_id, champions)


# -- server side ------------------------------------------------------------

def global_phase(reports: Sequence[ChampionReport], round_idx: int, params: GsaParams,
                 rng: np.random.Generator, shape: ProgramShape, n_clients: int | None = None,
                 A: int | None = None) -> GlobalUpdate:
    ids = [r.client_id for r in reports]
    expected = list(range(n_clients if n_clients is not None else len(reports)))
    if sorted(ids) != expected:
        raise ValueError(f"missing or duplicate reports: got clients {sorted(ids)}")
    reports = sorted(reports, key=lambda r: r.client_id)
    if A is not None:
        bad = [r.client_id for r in reports if len(r.champions) != A]
        if bad:
            raise ValueError(f"clients {bad} did not report {A} champions")

    owners = [(r.client_id, c.local_index) for r in reports for c in r.champions]
    X = np.stack([c.position for r in reports for c in r.champions])
    V = np.stack([c.velocity for r in reports for c in r.champions])
    fit = np.array([c.fitness for r in reports for c in r.champions])
    lower, upper = shape.bounds
    X, V = step_arrays(X, V, fit, round_idx, params, rng, lower, upper)

    update = GlobalUpdate({r.client_id: [] for r in reports})
    for (m, idx), x, v in zip(owners, X, V):
        update.entries[m].append(UpdateEntry(x, v, idx))
    return update


# -- orchestration ----------------------------------------------------------

@dataclass(frozen=True)
class FinalFeature:
    tree: object
    expr: str
    fitness: float
    client: int
    round: int

    def to_dict(self) -> dict:
        return {"expr": self.expr, "fitness": self.fitness, "client": self.client, "round": self.round}


@dataclass
class FfcResult:
    features: list[FinalFeature]
    round_log: list[dict]
    shape: ProgramShape
    messages: list[tuple[int, list[ChampionReport], GlobalUpdate]] = field(default_factory=list)


def select_final_features(reports: Sequence[ChampionReport], shape: ProgramShape, config: RunConfig,
                          round_idx: int) -> list[FinalFeature]:
    pool: dict[str, FinalFeature] = {}
    fallback = None
    for r in sorted(reports, key=lambda r: r.client_id):
        for c in r.champions:
            dp = decode(c.position, shape)
            try:
                tree = build_tree(dp, shape)
            except EmptyMask:
                if fallback is None:
                    fallback = (dp, c, r.client_id)
                continue
            expr = canonical_string(tree, shape.operators)
            feat = FinalFeature(tree, expr, float(c.fitness), r.client_id, round_idx)
            if expr not in pool or feat.fitness > pool[expr].fitness:
                pool[expr] = feat
    if not pool:
        # every champion is degenerate: reuse the first one with all features enabled
        dp, c, m = fallback
        dp = type(dp)(np.ones_like(dp.mask), dp.op_genes, dp.link_genes)
        tree = build_tree(dp, shape)
        return [FinalFeature(tree, canonical_string(tree, shape.operators), float(c.fitness), m, round_idx)]
    ranked = sorted(pool.values(), key=lambda f: (-f.fitness, f.expr))
    kept = [f for f in ranked if f.fitness >= config.igr_threshold][:config.resolved_beta(shape.n_features)]
    return kept or ranked[:1]


def run_ffc(config: RunConfig, client_data: Sequence[LocalData], threads: int = 1,
            keep_messages: bool = False) -> FfcResult:
    if len(client_data) != config.n_clients:
        raise ValueError(f"config expects {config.n_clients} clients, got {len(client_data)} partitions")
    n_features = client_data[0].X.shape[1]
    shape = config.shape(n_features)
    states = [ClientState.initial(m, d, shape, config.pop_size, config.master_seed)
              for m, d in enumerate(client_data)]
    server_params = config.gsa(config.global_rounds)
    D = shape.dimension

    round_log, messages = [], []
    update = GlobalUpdate()
    reports: list[ChampionReport] = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for t in range(config.global_rounds):
            NS = int(stream(config.master_seed, _NS, t).integers(config.ns_min, config.ns_max + 1))
            A = niche_count(config.pop_size, NS)

            def work(state, t=t, NS=NS, A=A, update=update):
                return local_phase(state, A, NS, update.for_client(state.client_id), t, config)

            reports = list(pool.map(work, states)) if pool else [work(s) for s in states]
            update = global_phase(reports, t, server_params, stream(config.master_seed, _SERVER, t),
                                  shape, config.n_clients, A)
            fits = np.array([c.fitness for r in reports for c in r.champions])
            entry = {
                "round": t,
                "ns": NS,
                "a": A,
                "best_fitness": float(fits.max()),
                "mean_fitness": float(fits.mean()),
                "bytes_up": sum(len(r.to_bytes()) for r in reports),
                "bytes_down": len(update.to_bytes()),
            }
            round_log.append(entry)
            log.debug("round %d: NS=%d A=%d best=%.4f", t, NS, A, entry["best_fitness"])
            if keep_messages:
                messages.append((t, reports, update))
    finally:
        if pool:
            pool.shutdown()

    features = select_final_features(reports, shape, config, config.global_rounds - 1)
    assert all(s.positions.shape == (config.pop_size, D) for s in states)
    return FfcResult(features, round_log, shape, messages)
