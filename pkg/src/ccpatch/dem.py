"""Detector error models extracted from noisy circuits.

Every noise channel outcome (3 Paulis per one-qubit depolarizing, 15 per
two-qubit, 1 per flip) is assigned its own bit lane, injected into a
Pauli frame at the channel's position, and propagated forward through
the Clifford instructions in a single word-packed pass.  Each lane's
detector/observable signature becomes a mechanism; identical signatures
merge with the exclusive-or probability combination
p ⊕ q = p + q − 2pq, and outcomes that flip nothing are dropped.

The text form is one mechanism per line after a two-line header::

    detectors 24
    observables 1
    error(0.00066622225) D3 D7 L0

Probabilities are written with full round-trip precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .circuits import Circuit
from .errors import ConfigError, ResourceError
from .framesim import (_OP_CX, _OP_CXSWAP, _OP_D1, _OP_D2, _OP_DET, _OP_EX,
                       _OP_EZ, _OP_FM, _OP_FR, _OP_H, _OP_M, _OP_OBS, _OP_R,
                       _OP_S, _compile)


@dataclass(frozen=True)
class Mechanism:
    probability: float
    detectors: Tuple[int, ...]
    observables: Tuple[int, ...]


@dataclass(frozen=True)
class DetectorErrorModel:
    mechanisms: Tuple[Mechanism, ...]
    n_det: int
    n_obs: int

    def to_text(self) -> str:
        lines = [f"detectors {self.n_det}", f"observables {self.n_obs}"]
        for m in self.mechanisms:
            parts = [f"error({m.probability!r})"]
            parts += [f"D{d}" for d in m.detectors]
            parts += [f"L{o}" for o in m.observables]
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DetectorErrorModel":
        n_det = n_obs = None
        mechs = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("detectors "):
                n_det = int(line.split()[1])
            elif line.startswith("observables "):
                n_obs = int(line.split()[1])
            elif line.startswith("error("):
                head, *rest = line.split()
                p = float(head[len("error("):-1])
                dets = tuple(int(t[1:]) for t in rest if t[0] == "D")
                obss = tuple(int(t[1:]) for t in rest if t[0] == "L")
                if not 0.0 < p < 1.0:
                    raise ConfigError(f"mechanism probability {p} invalid")
                mechs.append(Mechanism(p, dets, obss))
            else:
                raise ConfigError(f"bad model line: {line!r}")
        if n_det is None or n_obs is None:
            raise ConfigError("model text is missing its header")
        for m in mechs:
            if any(d >= n_det for d in m.detectors) or \
                    any(o >= n_obs for o in m.observables):
                raise ConfigError("mechanism references a missing detector")
        return cls(tuple(mechs), n_det, n_obs)

    def detector_marginals(self) -> np.ndarray:
        """Per-detector flip probability under independent mechanisms."""
        signed = np.ones(self.n_det)
        for m in self.mechanisms:
            for d in m.detectors:
                signed[d] *= 1.0 - 2.0 * m.probability
        return (1.0 - signed) / 2.0

    def parity_expectation(self, detector_ids) -> float:
        """P(XOR of the given detectors is 1)."""
        wanted = set(detector_ids)
        signed = 1.0
        for m in self.mechanisms:
            if len(wanted.intersection(m.detectors)) % 2:
                signed *= 1.0 - 2.0 * m.probability
        return (1.0 - signed) / 2.0


# one lane per outcome; outcome tables for the depolarizing channels
_D1_XZ = ((1, 0), (1, 1), (0, 1))  # X, Y, Z
_D2_XZ = tuple(
    ((a in (1, 2)) * 1, (a >= 2) * 1, (b in (1, 2)) * 1, (b >= 2) * 1)
    for a in range(4) for b in range(4) if (a, b) != (0, 0))


def _outcomes_of(op) -> int:
    code = op[0]
    if code == _OP_D1:
        return 3
    if code == _OP_D2:
        return 15
    if code in (_OP_FM, _OP_FR):
        return 1
    return 0


def extract_dem(circuit: Circuit) -> DetectorErrorModel:
    """Propagate every channel outcome to its signature and merge."""
    if not circuit.has_noise():
        raise ConfigError("circuit has no noise channels to model")
    from .noise import strip_noise
    from .verify import check_circuit
    check_circuit(strip_noise(circuit))

    ops, nrec, n_det, n_obs = _compile(circuit, ())
    lanes = sum(_outcomes_of(op) for op in ops)
    probs: List[float] = []
    w = (lanes + 63) // 64

    def lane_mask(lane):
        m = np.zeros(w, np.uint64)
        m[lane >> 6] = np.uint64(1) << np.uint64(lane & 63)
        return m

    x = [np.zeros(w, np.uint64) for _ in range(circuit.n_qubits)]
    z = [np.zeros(w, np.uint64) for _ in range(circuit.n_qubits)]
    recs = np.zeros((max(nrec, 1), w), np.uint64)
    dets = np.zeros((max(n_det, 1), w), np.uint64)
    obss = np.zeros((max(n_obs, 1), w), np.uint64)

    lane = 0
    for op in ops:
        code = op[0]
        if code == _OP_H:
            q = op[1]
            x[q], z[q] = z[q], x[q]
        elif code == _OP_S:
            q = op[1]
            z[q] ^= x[q]
        elif code == _OP_CX:
            _, a, b = op
            x[b] ^= x[a]
            z[a] ^= z[b]
        elif code == _OP_CXSWAP:
            _, a, b = op
            x[b] ^= x[a]
            z[a] ^= z[b]
            x[a], x[b] = x[b], x[a]
            z[a], z[b] = z[b], z[a]
        elif code == _OP_M:
            _, q, r = op
            recs[r] = x[q]
        elif code == _OP_R:
            for q in op[1]:
                x[q].fill(0)
                z[q].fill(0)
        elif code == _OP_D1:
            _, q, p = op
            for xs, zs in _D1_XZ:
                m = lane_mask(lane)
                if xs:
                    x[q] ^= m
                if zs:
                    z[q] ^= m
                probs.append(p / 3.0)
                lane += 1
        elif code == _OP_D2:
            _, a, b, p = op
            for xa, za, xb, zb in _D2_XZ:
                m = lane_mask(lane)
                if xa:
                    x[a] ^= m
                if za:
                    z[a] ^= m
                if xb:
                    x[b] ^= m
                if zb:
                    z[b] ^= m
                probs.append(p / 15.0)
                lane += 1
        elif code == _OP_FM:
            _, r, p = op
            recs[r] ^= lane_mask(lane)
            probs.append(p)
            lane += 1
        elif code == _OP_FR:
            _, q, p = op
            x[q] ^= lane_mask(lane)
            probs.append(p)
            lane += 1
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

    det_sig = [0] * lanes
    obs_sig = [0] * lanes
    det_bits = np.unpackbits(dets.view(np.uint8), axis=1, bitorder="little")
    obs_bits = np.unpackbits(obss.view(np.uint8), axis=1, bitorder="little")
    for d in range(n_det):
        for ln in np.flatnonzero(det_bits[d, :lanes]):
            det_sig[ln] |= 1 << d
    for j in range(n_obs):
        for ln in np.flatnonzero(obs_bits[j, :lanes]):
            obs_sig[ln] |= 1 << j

    merged: Dict[Tuple[int, int], float] = {}
    for ln in range(lanes):
        key = (det_sig[ln], obs_sig[ln])
        if key == (0, 0):
            continue
        p, q = merged.get(key, 0.0), probs[ln]
        merged[key] = p + q - 2.0 * p * q

    mechanisms = tuple(
        Mechanism(merged[key],
                  tuple(_bits(key[0])), tuple(_bits(key[1])))
        for key in sorted(merged))
    return DetectorErrorModel(mechanisms, n_det, n_obs)


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def min_undetectable_weight(dem: DetectorErrorModel, w_max: int,
                            budget: int = 20_000_000):
    """Smallest count of mechanisms whose detector flips cancel while an
    observable still flips; None when nothing at weight ≤ w_max exists.

    The search peels the lowest set detector at each step, so only
    mechanisms covering it are candidates — the hypergraph locality
    keeps the branching narrow.  `budget` caps expanded nodes.
    """
    mechs = [(sum(1 << d for d in m.detectors),
              sum(1 << o for o in m.observables)) for m in dem.mechanisms]
    by_det: Dict[int, List[int]] = {}
    maxdeg = 1
    for i, (dsig, _) in enumerate(mechs):
        maxdeg = max(maxdeg, dsig.bit_count())
        for d in _bits(dsig):
            by_det.setdefault(d, []).append(i)

    nodes = 0

    def dfs(state_d, state_o, root, depth_left):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise ResourceError(
                f"distance search exceeded {budget} nodes")
        if state_d == 0:
            return state_o != 0
        if depth_left == 0:
            return False
        if (state_d.bit_count() + maxdeg - 1) // maxdeg > depth_left:
            return False
        low = (state_d & -state_d).bit_length() - 1
        for j in by_det.get(low, ()):
            if j <= root:
                continue
            dj, oj = mechs[j]
            if dfs(state_d ^ dj, state_o ^ oj, root, depth_left - 1):
                return True
        return False

    for weight in range(1, w_max + 1):
        for i, (dsig, osig) in enumerate(mechs):
            if dfs(dsig, osig, i, weight - 1):
                return weight
    return None
