"""Correctness gate for emitted circuits.

Runs the noiseless circuit on a symbolic stabilizer tableau in which
every measurement outcome is an affine expression over coin variables.
A circuit passes when every detector's record parity is independent of
every coin (deterministic) and equal to zero, and the observable parity
is deterministic as well.  Schedule legality (one gate per qubit per
timestep) is checked on the way.
"""

from typing import Dict, List, Tuple

from .circuits import (Circuit, GATES_2Q, GATES_NOISE, layers_of,
                       resolve_references)
from .errors import ScheduleError, VerificationError
from .tableau import Tableau

_TABLEAU_GATE = {
    "H": "h", "S": "s", "S_DAG": "sdg",
    "CX": "cx", "CZ": "cz", "CXSWAP": "cxswap",
}


def check_schedule(circuit: Circuit) -> None:
    """Each qubit may appear in at most one gate per TICK layer.

    Exception: a measurement followed by a reset of the same qubit in one
    layer is a single combined measure-reset operation and is legal.
    """
    for i, group in enumerate(layers_of(circuit)):
        used: dict = {}
        for ins in group:
            if ins.name in GATES_NOISE or ins.name in ("DETECTOR",
                                                       "OBSERVABLE"):
                continue
            if ins.name in GATES_2Q and ins.targets[0] == ins.targets[1]:
                raise ScheduleError(f"{ins.name} with equal targets")
            for q in ins.targets:
                if not 0 <= q < circuit.n_qubits:
                    raise ScheduleError(f"qubit {q} out of range")
                prev = used.get(q)
                if prev is not None and not (prev == "M" and ins.name == "R"):
                    raise ScheduleError(
                        f"qubit {q} used twice in timestep {i}")
                used[q] = ins.name


def run_ideal(circuit: Circuit) -> Tuple[List[tuple], Tableau]:
    """Execute the circuit without noise; returns the record expressions."""
    t = Tableau(circuit.n_qubits)
    for ins in circuit.instructions:
        if ins.name in _TABLEAU_GATE:
            method = getattr(t, _TABLEAU_GATE[ins.name])
            if ins.name in GATES_2Q:
                method(*ins.targets)
            else:
                for q in ins.targets:
                    method(q)
        elif ins.name == "M":
            for q in ins.targets:
                t.measure(q)
        elif ins.name == "R":
            for q in ins.targets:
                t.reset(q)
    return list(t.records), t


def check_circuit(circuit: Circuit) -> Dict[str, int]:
    """Full gate: schedule legality, deterministic and zero detectors,
    deterministic observables.  Raises on any violation."""
    check_schedule(circuit)
    records, _ = run_ideal(circuit)
    detectors, observables = resolve_references(circuit)
    for i, det in enumerate(detectors):
        const, mask = 0, 0
        for r in det:
            const ^= records[r][0]
            mask ^= records[r][1]
        if mask:
            raise VerificationError(f"detector {i} depends on a coin")
        if const:
            raise VerificationError(f"detector {i} fires without noise")
    for i, obs in enumerate(observables):
        const, mask = 0, 0
        for r in obs:
            const ^= records[r][0]
            mask ^= records[r][1]
        if mask:
            raise VerificationError(f"observable {i} depends on a coin")
        if const:
            raise VerificationError(f"observable {i} is one without noise")
    return {
        "measurements": circuit.num_measurements,
        "detectors": len(detectors),
        "observables": len(observables),
    }
