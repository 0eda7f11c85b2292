"""Prover/verifier timing sweep over (nx, np, k) and its CSV export."""

from __future__ import annotations

import csv
import gc
import random
import statistics
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

from .algebra import CircuitParams, make_quiz_equation, sample_orthonym
from .circuit import DicStatement, build_circuit, instance_vector, synthesize_witness
from .snark import keygen, prove, verify

DEFAULT_NX = (2, 4, 8, 16)
DEFAULT_NP = (2, 4, 8, 16, 32, 64, 128, 256)
DEFAULT_TRIALS = 100
WARMUP = 5

CSV_HEADER = ["nx", "np", "k", "keygen_ms", "tp_ms", "tp_sd", "tv_ms", "tv_sd", "proof_bytes", "constraints", "trials"]


def default_grid(k: int = 1) -> list[CircuitParams]:
    return [CircuitParams(nx, np, k) for nx in DEFAULT_NX for np in DEFAULT_NP]


def parse_grid(text: str) -> list[CircuitParams]:
    """``"default"`` or ``;``-separated ``nx,np[,k]`` triples."""
    if text.strip() == "default":
        return default_grid()
    return [CircuitParams.parse(part) for part in text.split(";") if part.strip()]


@dataclass(frozen=True)
class BenchRecord:
    nx: int
    np: int
    k: int
    keygen_ms: float
    tp_ms: float
    tp_sd: float
    tv_ms: float
    tv_sd: float
    proof_bytes: int
    constraints: int
    trials: int
    tp_mom_ms: float = float("nan")  # median of means; not part of the CSV
    tv_mom_ms: float = float("nan")

    @property
    def params(self) -> CircuitParams:
        return CircuitParams(self.nx, self.np, self.k)

    def csv_row(self) -> list[str]:
        return [
            str(self.nx), str(self.np), str(self.k),
            f"{self.keygen_ms:.4f}", f"{self.tp_ms:.4f}", f"{self.tp_sd:.4f}",
            f"{self.tv_ms:.4f}", f"{self.tv_sd:.4f}",
            str(self.proof_bytes), str(self.constraints), str(self.trials),
        ]  # fmt: skip


def median_of_means(samples: Sequence[float], blocks: int = 5) -> float:
    size = max(1, len(samples) // blocks)
    means = [statistics.fmean(samples[i : i + size]) for i in range(0, len(samples) - size + 1, size)]
    return statistics.median(means)


def _fixture(params: CircuitParams, rng: random.Random):
    """A fresh honest statement with its orthonym."""
    s = sample_orthonym(params, rng.randbytes(32))
    own = make_quiz_equation(rng.randbytes(32), s, params)
    neighbors = tuple(
        make_quiz_equation(rng.randbytes(32), sample_orthonym(params, rng.randbytes(32)), params) for _ in range(params.k)
    )
    return DicStatement(own, neighbors), s


class _Point:
    """Keys, fixtures and collected samples for one grid point."""

    def __init__(self, params: CircuitParams, trials: int, rng: random.Random):
        self.params = params
        self.trials = trials
        self.cs = build_circuit(params)
        t0 = time.perf_counter()
        self.pk, self.vk = keygen(self.cs, rng)
        self.keygen_ms = (time.perf_counter() - t0) * 1e3
        self.fixtures = [_fixture(params, rng) for _ in range(trials + WARMUP)]
        self.tp: list[float] = []
        self.tv: list[float] = []
        self.sizes: set[int] = set()

    def run_trial(self, i: int, rng: random.Random) -> None:
        statement, s = self.fixtures[i]
        instance = instance_vector(statement)
        t0 = time.perf_counter()
        proof = prove(self.pk, instance, synthesize_witness(statement, s), rng)
        t1 = time.perf_counter()
        ok = verify(self.vk, instance, proof)
        t2 = time.perf_counter()
        if not ok:
            raise RuntimeError(f"honest proof rejected at {self.params}")
        self.sizes.add(len(proof.to_bytes()))
        if i >= WARMUP:
            self.tp.append((t1 - t0) * 1e3)
            self.tv.append((t2 - t1) * 1e3)

    def record(self) -> BenchRecord:
        if len(self.sizes) != 1:
            raise RuntimeError(f"proof size varied within {self.params}: {self.sizes}")
        tp, tv = self.tp, self.tv
        return BenchRecord(
            self.params.nx, self.params.np, self.params.k, self.keygen_ms,
            statistics.fmean(tp), statistics.stdev(tp), statistics.fmean(tv), statistics.stdev(tv),
            next(iter(self.sizes)), self.cs.num_constraints, self.trials, median_of_means(tp), median_of_means(tv),
        )  # fmt: skip


def _timed(points: list[_Point], rng: random.Random) -> None:
    """Run every trial with GC paused, one round across all points at a time.

    Round-robin order spreads slow drifts of the machine (frequency scaling,
    background load) over every point instead of letting them land on one.
    """
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        for i in range(WARMUP + points[0].trials if points else 0):
            for point in points:
                point.run_trial(i, rng)
    finally:
        if gc_was_enabled:
            gc.enable()


def _check_trials(trials: int) -> None:
    if trials < 30:
        raise ValueError("at least 30 trials are required")


def bench_point(params: CircuitParams, trials: int = DEFAULT_TRIALS, rng: random.Random | None = None) -> BenchRecord:
    """Time keygen once, then ``trials`` prove/verify rounds on fresh statements.

    Tp covers witness synthesis plus proving; Tv is the proof check alone.
    """
    _check_trials(trials)
    rng = rng or random.Random()
    point = _Point(params, trials, rng)
    _timed([point], rng)
    return point.record()


def run_sweep(grid: Iterable[CircuitParams], trials: int = DEFAULT_TRIALS, seed: int | None = None, progress=None) -> list[BenchRecord]:
    """One record per grid point; trials are interleaved across points."""
    _check_trials(trials)
    rng = random.Random(seed)
    points = [_Point(params, trials, rng) for params in grid]
    _timed(points, rng)
    records = []
    for point in points:
        records.append(point.record())
        if progress:
            progress(records[-1])
    return records


def emit_csv(records: Iterable[BenchRecord], path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(rec.csv_row())


def read_csv(path) -> list[BenchRecord]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            BenchRecord(
                int(row["nx"]), int(row["np"]), int(row["k"]),
                float(row["keygen_ms"]), float(row["tp_ms"]), float(row["tp_sd"]),
                float(row["tv_ms"]), float(row["tv_sd"]),
                int(row["proof_bytes"]), int(row["constraints"]), int(row["trials"]),
            )  # fmt: skip
            for row in reader
        ]


def summary(records: Sequence[BenchRecord]) -> str:
    lines = [f"{'nx':>3} {'np':>4} {'k':>2} {'cons':>5} {'Tp ms':>9} {'Tp mom':>9} {'Tv ms':>8} {'Tv mom':>8} {'Tp/Tv':>6}"]
    for r in records:
        lines.append(
            f"{r.nx:>3} {r.np:>4} {r.k:>2} {r.constraints:>5} {r.tp_ms:>9.3f} {r.tp_mom_ms:>9.3f} "
            f"{r.tv_ms:>8.3f} {r.tv_mom_ms:>8.3f} {r.tp_ms / r.tv_ms:>6.2f}"
        )
    return "\n".join(lines)
