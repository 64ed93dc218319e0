"""Circuit-level noise injection.

Every operation gets exactly one channel: single-qubit depolarizing
after each one-qubit gate, two-qubit depolarizing after each two-qubit
gate, and a flip attached to every measurement and reset.  The flip
behind an M toggles the recorded outcome; the flip behind an R is an X
error on the freshly reset qubit.  Idle locations stay noiseless.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuits import GATES_1Q, GATES_2Q, GATES_NOISE, Circuit, Instruction
from .errors import ConfigError, DoubleNoiseError


@dataclass(frozen=True)
class NoiseParams:
    """Uniform strength applied to every channel kind."""

    p: float

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise ConfigError(f"noise strength {self.p!r} outside [0, 1)")


def apply_noise(circuit: Circuit, params: NoiseParams) -> Circuit:
    """Return a copy of the circuit with a channel behind every op."""
    if circuit.has_noise():
        raise DoubleNoiseError("circuit already carries noise channels")
    p = params.p
    if p == 0.0:
        # zero-strength channels are elided; the circuit is unchanged
        return circuit
    out = []
    for ins in circuit.instructions:
        out.append(ins)
        if ins.name in GATES_1Q:
            out.append(Instruction("DEPOL1", ins.targets, p))
        elif ins.name in GATES_2Q:
            out.append(Instruction("DEPOL2", ins.targets, p))
        elif ins.name in ("M", "R"):
            out.append(Instruction("FLIP", ins.targets, p))
    meta = dict(circuit.metadata)
    meta["noise_p"] = p
    return Circuit(circuit.n_qubits, tuple(out), meta)


def strip_noise(circuit: Circuit) -> Circuit:
    """Drop every channel, returning the bare gate sequence."""
    kept = tuple(i for i in circuit.instructions
                 if i.name not in GATES_NOISE)
    meta = {k: v for k, v in circuit.metadata.items() if k != "noise_p"}
    return Circuit(circuit.n_qubits, kept, meta)
