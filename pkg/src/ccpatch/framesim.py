"""Monte-Carlo Pauli-frame sampling of Clifford measurement circuits.

Shots are processed 64 per machine word: the frame is a pair of bit
matrices (one word row per qubit) and every gate is a handful of word
XORs, so the cost per instruction is independent of the shot count
within a block.  Noise channels are drawn sparsely — a binomial count
of hit lanes, then a uniform distinct subset of lane indices — which is
exactly equivalent to independent per-lane draws and keeps the random
stream small at low error rates.

Blocks of `LANES` shots form independent substreams of a counter-based
generator, so shots can be partitioned across workers at block
granularity and the concatenated output is identical for any worker
count.  Identical (circuit, shots, seed) always yields identical bits.

The binary serialization is an 8-byte little-endian header — shots as
u32, detector count and observable count as u16 each — followed by one
packed row per shot (detector bits then observable bits, LSB-first,
padded to whole bytes).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .circuits import GATES_NOISE, Circuit
from .errors import ConfigError

LANES = 1 << 16          # shots per block; fixed so substreams never move
_WORD = 64

_OP_H, _OP_S, _OP_CX, _OP_CXSWAP, _OP_M, _OP_R, _OP_D1, _OP_D2, \
    _OP_FM, _OP_FR, _OP_DET, _OP_OBS, _OP_EX, _OP_EZ = range(14)

# x/z parts of I, X, Y, Z
_XPART = (0, 1, 1, 0)
_ZPART = (0, 0, 1, 1)


@dataclass(frozen=True)
class SampleBatch:
    """Detector and observable bits for a batch of shots."""

    shots: int
    detectors: np.ndarray    # bool, shots x n_det
    observables: np.ndarray  # bool, shots x n_obs
    seed: int

    @property
    def n_det(self) -> int:
        return self.detectors.shape[1]

    @property
    def n_obs(self) -> int:
        return self.observables.shape[1]

    def to_bytes(self) -> bytes:
        head = struct.pack("<IHH", self.shots, self.n_det, self.n_obs)
        rows = np.concatenate(
            [self.detectors, self.observables], axis=1).astype(np.uint8)
        packed = np.packbits(rows, axis=1, bitorder="little")
        return head + packed.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes, seed: int = 0) -> "SampleBatch":
        if len(blob) < 8:
            raise ConfigError("batch blob shorter than its header")
        shots, n_det, n_obs = struct.unpack("<IHH", blob[:8])
        stride = (n_det + n_obs + 7) // 8
        body = np.frombuffer(blob, np.uint8, offset=8)
        if body.size != shots * stride:
            raise ConfigError("batch blob length does not match header")
        rows = np.unpackbits(body.reshape(shots, stride), axis=1,
                             bitorder="little")[:, :n_det + n_obs]
        return cls(shots, rows[:, :n_det].astype(bool),
                   rows[:, n_det:].astype(bool), seed)

    def to_csv(self) -> str:
        lines = ["kind,index,flips,shots,rate"]
        for kind, mat in (("detector", self.detectors),
                          ("observable", self.observables)):
            flips = mat.sum(axis=0)
            for i, f in enumerate(flips):
                lines.append(
                    f"{kind},{i},{int(f)},{self.shots},"
                    f"{f / self.shots if self.shots else 0.0:.8g}")
        return "\n".join(lines) + "\n"


def _compile(circuit: Circuit, inject):
    """Flatten instructions into dispatch tuples with resolved records."""
    by_tick: dict = {}
    for after_tick, pauli, qubit in inject:
        if pauli not in ("X", "Y", "Z"):
            raise ConfigError(f"cannot inject pauli {pauli!r}")
        by_tick.setdefault(after_tick, []).append((pauli, qubit))

    ops = []

    def place(tick):
        for pauli, q in by_tick.pop(tick, ()):
            if pauli in ("X", "Y"):
                ops.append((_OP_EX, q))
            if pauli in ("Z", "Y"):
                ops.append((_OP_EZ, q))

    last: dict = {}
    nrec = n_det = 0
    n_obs = 0
    tick = 0
    place(0)
    for ins in circuit.instructions:
        name = ins.name
        if name == "TICK":
            tick += 1
            place(tick)
        elif name == "H":
            for q in ins.targets:
                ops.append((_OP_H, q))
        elif name in ("S", "S_DAG"):
            for q in ins.targets:
                ops.append((_OP_S, q))
        elif name in ("CX", "CZ", "CXSWAP"):
            a, b = ins.targets
            if name == "CZ":
                ops.append((_OP_H, b))
                ops.append((_OP_CX, a, b))
                ops.append((_OP_H, b))
            else:
                ops.append((_OP_CX if name == "CX" else _OP_CXSWAP, a, b))
        elif name == "M":
            for q in ins.targets:
                ops.append((_OP_M, q, nrec))
                last[q] = ("M", nrec)
                nrec += 1
        elif name == "R":
            ops.append((_OP_R, ins.targets))
            for q in ins.targets:
                last[q] = ("R", q)
        elif name == "DEPOL1":
            for q in ins.targets:
                ops.append((_OP_D1, q, ins.arg))
        elif name == "DEPOL2":
            a, b = ins.targets
            ops.append((_OP_D2, a, b, ins.arg))
        elif name == "FLIP":
            for q in ins.targets:
                bound = last.get(q)
                if bound is None:
                    raise ConfigError(f"FLIP on {q} without an M or R")
                kind, ref = bound
                ops.append((_OP_FM if kind == "M" else _OP_FR, ref, ins.arg))
        elif name == "DETECTOR":
            refs = []
            for t in ins.targets:
                r = nrec + t
                if not 0 <= r < nrec:
                    raise ConfigError(f"record reference {t} out of range")
                refs.append(r)
            ops.append((_OP_DET, n_det, tuple(refs)))
            n_det += 1
        elif name == "OBSERVABLE":
            j = int(ins.arg)
            refs = []
            for t in ins.targets:
                r = nrec + t
                if not 0 <= r < nrec:
                    raise ConfigError(f"record reference {t} out of range")
                refs.append(r)
            ops.append((_OP_OBS, j, tuple(refs)))
            n_obs = max(n_obs, j + 1)
        else:
            raise ConfigError(f"cannot sample instruction {name!r}")
    if by_tick:
        raise ConfigError(f"injection past the last tick: {sorted(by_tick)}")
    return ops, nrec, n_det, n_obs


def _distinct(rng, n, k):
    """First k distinct values of an iid uniform stream over range(n)."""
    if k == 0:
        return np.empty(0, np.int64)
    found = np.empty(0, np.int64)
    while found.size < k:
        need = k - found.size
        draw = rng.integers(0, n, size=need + 16 + need // 8)
        both = np.concatenate([found, draw])
        vals, first = np.unique(both, return_index=True)
        found = vals[np.argsort(first)][:k]
    return found


def _scatter(words, idx):
    np.bitwise_or.at(words, idx >> 6,
                     np.uint64(1) << (idx & 63).astype(np.uint64))


def sample(circuit: Circuit, shots: int, seed: int,
           inject=()) -> SampleBatch:
    """Sample detector and observable bits over `shots` Pauli frames.

    inject: optional (after_tick, pauli, qubit) triples applied
    deterministically in every shot once that many TICK markers have
    passed; used to trace specific error patterns.
    """
    if shots < 1:
        raise ConfigError("shots must be positive")
    ops, nrec, n_det, n_obs = _compile(circuit, inject)
    det_out = np.zeros((shots, n_det), bool)
    obs_out = np.zeros((shots, n_obs), bool)

    done = 0
    block = 0
    while done < shots:
        # every block simulates the full lane count so block b is the same
        # bits for any requested shot total (workers split at blocks)
        lanes = LANES
        w = lanes // _WORD
        rng = np.random.Generator(np.random.Philox(
            key=seed, counter=[0, 0, 0, block]))
        x = [np.zeros(w, np.uint64) for _ in range(circuit.n_qubits)]
        z = [np.zeros(w, np.uint64) for _ in range(circuit.n_qubits)]
        recs = np.zeros((max(nrec, 1), w), np.uint64)
        dets = np.zeros((max(n_det, 1), w), np.uint64)
        obss = np.zeros((max(n_obs, 1), w), np.uint64)

        for op in ops:
            code = op[0]
            if code == _OP_CX:
                _, a, b = op
                x[b] ^= x[a]
                z[a] ^= z[b]
            elif code == _OP_H:
                q = op[1]
                x[q], z[q] = z[q], x[q]
            elif code == _OP_M:
                _, q, r = op
                recs[r] = x[q]
            elif code == _OP_D1:
                _, q, p = op
                k = rng.binomial(lanes, p)
                idx = _distinct(rng, lanes, k)
                kind = rng.integers(0, 3, size=k)
                _scatter(x[q], idx[kind != 2])
                _scatter(z[q], idx[kind != 0])
            elif code == _OP_D2:
                _, a, b, p = op
                k = rng.binomial(lanes, p)
                idx = _distinct(rng, lanes, k)
                kind = rng.integers(0, 15, size=k) + 1
                pa, pb = kind >> 2, kind & 3
                _scatter(x[a], idx[(pa == 1) | (pa == 2)])
                _scatter(z[a], idx[pa >= 2])
                _scatter(x[b], idx[(pb == 1) | (pb == 2)])
                _scatter(z[b], idx[pb >= 2])
            elif code == _OP_FM:
                _, r, p = op
                k = rng.binomial(lanes, p)
                _scatter(recs[r], _distinct(rng, lanes, k))
            elif code == _OP_FR:
                _, q, p = op
                k = rng.binomial(lanes, p)
                _scatter(x[q], _distinct(rng, lanes, k))
            elif code == _OP_R:
                for q in op[1]:
                    x[q].fill(0)
                    z[q].fill(0)
            elif code == _OP_CXSWAP:
                _, a, b = op
                x[b] ^= x[a]
                z[a] ^= z[b]
                x[a], x[b] = x[b], x[a]
                z[a], z[b] = z[b], z[a]
            elif code == _OP_S:
                q = op[1]
                z[q] ^= x[q]
            elif code == _OP_DET:
                _, d, refs = op
                acc = dets[d]
                for r in refs:
                    acc ^= recs[r]
                dets[d] = acc
            elif code == _OP_OBS:
                _, j, refs = op
                acc = obss[j]
                for r in refs:
                    acc ^= recs[r]
                obss[j] = acc
            elif code == _OP_EX:
                x[op[1]] ^= np.uint64(0xFFFFFFFFFFFFFFFF)
            else:  # _OP_EZ
                z[op[1]] ^= np.uint64(0xFFFFFFFFFFFFFFFF)

        take = min(shots - done, lanes)
        if n_det:
            bits = np.unpackbits(dets.view(np.uint8), axis=1,
                                 bitorder="little")
            det_out[done:done + take] = bits[:, :take].T
        if n_obs:
            bits = np.unpackbits(obss.view(np.uint8), axis=1,
                                 bitorder="little")
            obs_out[done:done + take] = bits[:, :take].T
        done += take
        block += 1

    return SampleBatch(shots, det_out, obs_out, seed)


def logical_error_rate(batch: SampleBatch, corrections) -> tuple:
    """Fraction of shots whose corrected observable is wrong, with the
    binomial standard error sqrt(rate (1-rate) / shots)."""
    pred = np.asarray(corrections, bool)
    if pred.ndim == 1:
        pred = pred[:, None]
    if pred.shape != batch.observables.shape:
        raise ConfigError(
            f"corrections shape {pred.shape} does not match "
            f"observables {batch.observables.shape}")
    wrong = (pred ^ batch.observables).any(axis=1)
    rate = float(wrong.mean())
    err = float(np.sqrt(rate * (1.0 - rate) / batch.shots))
    return rate, err
