"""Measurement-circuit emission for patched codes.

Circuits are flat instruction lists over an explicit gate set, separated
into timestep layers by TICK markers.  Every builder follows the same
session template: each face's ancilla pair is Bell-prepared, fans out to
the face's data qubits over three two-qubit-gate slots, un-Bells, and is
measured and reset in one slot.  Detector and observable annotations
reference earlier measurement records by negative offsets.

The text form is line-oriented and whitespace separated:

    R 0 1 2
    TICK
    H 7
    CX 7 8
    DEPOL2(0.001) 7 8
    M 7
    FLIP(0.001) 7
    DETECTOR rec[-1] rec[-3]
    OBSERVABLE(0) rec[-2]

`#` starts a comment.  FLIP binds to the latest M (record flip) or R
(reset followed by an X error) on its target qubit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import ConfigError, ScheduleError, UnsupportedConfigError
from .lattice import DefectMap, Layout, to_code
from .paulis import CheckMatrix, PauliOperator, SubsystemCode

GATES_1Q = ("H", "S", "S_DAG")
GATES_2Q = ("CX", "CZ", "CXSWAP")
GATES_NOISE = ("DEPOL1", "DEPOL2", "FLIP")
GATES_OTHER = ("M", "R", "TICK", "DETECTOR", "OBSERVABLE")
ALL_GATES = GATES_1Q + GATES_2Q + GATES_NOISE + GATES_OTHER


@dataclass(frozen=True)
class Instruction:
    name: str
    targets: Tuple[int, ...] = ()
    arg: Optional[float] = None

    def to_text(self) -> str:
        head = self.name
        if self.arg is not None:
            if self.name == "OBSERVABLE":
                head += f"({int(self.arg)})"
            else:
                head += f"({self.arg:g})"
        if self.name in ("DETECTOR", "OBSERVABLE"):
            parts = [f"rec[{t}]" for t in self.targets]
        else:
            parts = [str(t) for t in self.targets]
        return " ".join([head] + parts)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    instructions: Tuple[Instruction, ...]
    metadata: dict = field(default_factory=dict)

    @property
    def num_measurements(self) -> int:
        return sum(len(i.targets) for i in self.instructions if i.name == "M")

    @property
    def num_detectors(self) -> int:
        return sum(1 for i in self.instructions if i.name == "DETECTOR")

    @property
    def num_observables(self) -> int:
        return sum(1 for i in self.instructions if i.name == "OBSERVABLE")

    def has_noise(self) -> bool:
        return any(i.name in GATES_NOISE for i in self.instructions)

    def to_text(self) -> str:
        lines = []
        for key in sorted(self.metadata):
            lines.append(f"# {key}: {self.metadata[key]}")
        lines.append(f"# qubits: {self.n_qubits}")
        lines.extend(i.to_text() for i in self.instructions)
        return "\n".join(lines) + "\n"


_HEAD_RE = re.compile(r"^([A-Z_0-9]+)(?:\(([^)]*)\))?$")
_REC_RE = re.compile(r"^rec\[(-\d+)\]$")


def parse_circuit(text: str, n_qubits: Optional[int] = None) -> Circuit:
    """Parse the line-oriented text format back into a Circuit."""
    instructions: List[Instruction] = []
    max_q = -1
    declared = n_qubits
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip() if "#" in raw else raw.strip()
        if raw.strip().startswith("# qubits:"):
            declared = int(raw.split(":", 1)[1])
        if not line:
            continue
        parts = line.split()
        m = _HEAD_RE.match(parts[0])
        if not m:
            raise ConfigError(f"bad instruction: {line!r}")
        name, argtext = m.group(1), m.group(2)
        if name not in ALL_GATES:
            raise ConfigError(f"unknown gate {name!r}")
        arg = float(argtext) if argtext is not None else None
        if name in ("DETECTOR", "OBSERVABLE"):
            targets = []
            for p in parts[1:]:
                rm = _REC_RE.match(p)
                if not rm:
                    raise ConfigError(f"bad record reference {p!r}")
                targets.append(int(rm.group(1)))
        else:
            targets = [int(p) for p in parts[1:]]
            if targets:
                max_q = max(max_q, max(targets))
        instructions.append(Instruction(name, tuple(targets), arg))
    n = declared if declared is not None else max_q + 1
    return Circuit(n, tuple(instructions))


def layers_of(circuit: Circuit) -> List[List[Instruction]]:
    """Split the instruction stream into TICK-delimited groups."""
    groups: List[List[Instruction]] = [[]]
    for ins in circuit.instructions:
        if ins.name == "TICK":
            groups.append([])
        else:
            groups[-1].append(ins)
    if not groups[-1]:
        groups.pop()
    return groups


def layer_counts(circuit: Circuit) -> dict:
    """Count two-qubit-gate layers and combined measure/reset layers.

    A measure/reset layer must contain both an M and an R so that the
    final data readout (M only) and the initialization layer (R only)
    stay out of the per-round tally.
    """
    two_q = 0
    mr = 0
    for group in layers_of(circuit):
        names = {i.name for i in group}
        if names & set(GATES_2Q):
            two_q += 1
        if "M" in names and "R" in names:
            mr += 1
    return {"two_qubit": two_q, "measure_reset": mr}


def resolve_references(circuit: Circuit):
    """Return (detectors, observables) as tuples of absolute record indices."""
    detectors: List[Tuple[int, ...]] = []
    observables: Dict[int, List[int]] = {}
    seen = 0
    for ins in circuit.instructions:
        if ins.name == "M":
            seen += len(ins.targets)
        elif ins.name == "DETECTOR":
            idx = tuple(seen + off for off in ins.targets)
            if any(i < 0 for i in idx):
                raise ConfigError("detector references a missing record")
            detectors.append(idx)
        elif ins.name == "OBSERVABLE":
            which = int(ins.arg or 0)
            idx = [seen + off for off in ins.targets]
            if any(i < 0 for i in idx):
                raise ConfigError("observable references a missing record")
            observables.setdefault(which, []).extend(idx)
    obs = [tuple(observables[k]) for k in sorted(observables)]
    return detectors, obs


# -- session scheduling -----------------------------------------------------

# data-qubit positions of a face relative to its lower (a) ancilla
ROLE_OFFSETS = {
    "S": (0, -1),
    "SW": (-1, 0),
    "SE": (1, 0),
    "NW": (-1, 1),
    "NE": (1, 1),
    "N": (0, 2),
}
# ancilla a serves the lower three roles, b the upper three; opposite
# roles share a fan-out slot, which never collides on this lattice
SLOT_ROLES = (("S", "N"), ("SW", "NE"), ("SE", "NW"))
A_ROLES = ("S", "SW", "SE")


class _Emitter:
    """Accumulates instructions, tracking measurement records."""

    def __init__(self, n_qubits: int):
        self.n = n_qubits
        self.ins: List[Instruction] = []
        self.rec_meta: List[tuple] = []  # free-form labels, one per record
        self._open_group = False

    def add(self, name: str, targets: Iterable[int] = (), arg=None) -> None:
        self.ins.append(Instruction(name, tuple(targets), arg))
        self._open_group = True

    def tick(self) -> None:
        if self._open_group:
            self.ins.append(Instruction("TICK"))
            self._open_group = False

    def measure(self, q: int, label: tuple) -> int:
        self.add("M", (q,))
        self.rec_meta.append(label)
        return len(self.rec_meta) - 1

    def detector(self, record_ids: Sequence[int]) -> None:
        total = len(self.rec_meta)
        offsets = sorted(r - total for r in record_ids)
        if any(o >= 0 for o in offsets):
            raise ConfigError("detector built from a future record")
        self.add("DETECTOR", tuple(offsets))

    def observable(self, record_ids: Sequence[int], index: int = 0) -> None:
        total = len(self.rec_meta)
        offsets = sorted(r - total for r in record_ids)
        self.add("OBSERVABLE", tuple(offsets), float(index))

    def finish(self, metadata: dict) -> Circuit:
        self.tick()
        while self.ins and self.ins[-1].name == "TICK":
            self.ins.pop()
        return Circuit(self.n, tuple(self.ins), metadata)


@dataclass
class _Session:
    """One face's syndrome-extraction schedule within a block.

    kind: "X" or "Z".  members: role -> data qubit id for the gates to
    emit (reduced faces simply omit roles).  window: starting two-qubit
    layer within the block.  slot_order: permutation of the three
    fan-out slots.
    """

    face_id: int
    kind: str
    anc_a: int
    anc_b: int
    members: Dict[str, int]
    window: int = 0
    slot_order: Tuple[int, int, int] = (0, 1, 2)
    label: str = "syn"

    def place(self, grid: "_BlockGrid") -> None:
        w = self.window
        grid.pre1q[w].append(("H", self.anc_a))
        grid.twoq[w].append(("CX", self.anc_a, self.anc_b))
        for i, slot in enumerate(self.slot_order):
            r1, r2 = SLOT_ROLES[slot]
            layer = grid.twoq[w + 1 + i]
            for role in (r1, r2):
                q = self.members.get(role)
                if q is None:
                    continue
                anc = self.anc_a if role in A_ROLES else self.anc_b
                if self.kind == "X":
                    layer.append(("CX", anc, q))
                else:
                    layer.append(("CX", q, anc))
        grid.twoq[w + 4].append(("CX", self.anc_a, self.anc_b))
        grid.post1q[w + 4].append(("H", self.anc_a))
        grid.mr.append((self.face_id, self.kind, self.anc_a, self.anc_b,
                        self.label))


class _BlockGrid:
    """Fixed-depth block of two-qubit layers with 1q slots in between."""

    def __init__(self, depth: int):
        self.depth = depth
        self.pre1q: List[list] = [[] for _ in range(depth)]
        self.twoq: List[list] = [[] for _ in range(depth)]
        self.post1q: List[list] = [[] for _ in range(depth)]
        self.mr: List[tuple] = []  # sessions to measure at block end
        self.pre_mr_1q: List[tuple] = []
        self.extra_measures: List[tuple] = []  # (qubit, label) at block end

    def check_legal(self) -> None:
        for layer in range(self.depth):
            for group in (self.pre1q[layer], self.twoq[layer],
                          self.post1q[layer]):
                used = set()
                for gate in group:
                    for q in gate[1:]:
                        if q in used:
                            raise ScheduleError(
                                f"qubit {q} used twice in one timestep")
                        used.add(q)

    def emit(self, em: _Emitter, round_tag: tuple) -> Dict[tuple, int]:
        """Append this block; returns (face, kind, label) -> record id."""
        self.check_legal()
        for layer in range(self.depth):
            for name, *targets in sorted(self.pre1q[layer]):
                em.add(name, targets)
            em.tick()
            for name, *targets in sorted(self.twoq[layer],
                                         key=lambda g: g[1:]):
                em.add(name, targets)
            em.tick()
            for name, *targets in sorted(self.post1q[layer]):
                em.add(name, targets)
            em.tick()
        for name, *targets in sorted(self.pre_mr_1q):
            em.add(name, targets)
        em.tick()
        recs: Dict[tuple, int] = {}
        reset_targets = []
        flag_recs = []
        for fid, kind, a, b, label in sorted(self.mr):
            syn_anc, flag_anc = (a, b) if kind == "X" else (b, a)
            r_syn = em.measure(syn_anc, (label, fid, kind) + round_tag)
            flag_recs.append(
                em.measure(flag_anc, ("flag", fid, kind) + round_tag))
            recs[(fid, kind, label)] = r_syn
            reset_targets.extend((a, b))
        # the pair's internal correlation ends up on the flag ancilla, so
        # its outcome is fixed regardless of the data state; checking it
        # every block catches hook errors that enter through the pair
        for r_flag in flag_recs:
            em.detector([r_flag])
        for q, label in sorted(self.extra_measures):
            recs[label] = em.measure(q, label + round_tag)
            reset_targets.append(q)
        em.add("R", tuple(sorted(reset_targets)))
        em.tick()
        return recs


def role_map(layout: Layout, face_id: int) -> Dict[str, int]:
    """Role name -> data qubit id for one face."""
    f = layout.face_by_id[face_id]
    ax, ay = layout.anchor_of_face[face_id]
    coord_to_id = {xy: q for q, xy in layout.coord_of.items()}
    out = {}
    for role, (dx, dy) in ROLE_OFFSETS.items():
        q = coord_to_id.get((ax + dx, ay + dy))
        if q is not None and q in f.data_members:
            out[role] = q
    return out


def _face_sessions(layout: Layout, kind: str,
                   include: Optional[Dict[int, Iterable[int]]] = None,
                   skip: Iterable[int] = ()) -> List[_Session]:
    """Standard full-width sessions for every face, minus skips.

    include maps face id -> subset of data members to touch (reduced
    faces); faces absent from include use all members.
    """
    skip_set = set(skip)
    sessions = []
    for f in sorted(layout.faces, key=lambda f: f.id):
        if f.id in skip_set:
            continue
        wanted = None if include is None or f.id not in include else \
            set(include[f.id])
        members = {role: q for role, q in role_map(layout, f.id).items()
                   if wanted is None or q in wanted}
        sessions.append(_Session(f.id, kind, f.ancilla_a, f.ancilla_b,
                                 members))
    return sessions


def _standard_half(layout: Layout, kind: str,
                   include=None, skip=()) -> _BlockGrid:
    grid = _BlockGrid(5)
    for s in _face_sessions(layout, kind, include, skip):
        s.place(grid)
    return grid


def assert_hardware_legal(circuit: Circuit, layout: Layout,
                          defects=None, active_qubits: int = -1) -> None:
    """Every gate must stay on working hardware: two-qubit gates only
    across existing healthy couplers, nothing touching a retired qubit."""
    dead = set() if defects is None else set(defects.ancilla_defects)
    bad_couplers = (set() if defects is None
                    else set(defects.coupler_defects))
    data_set = set(layout.data_ids)
    for ins in circuit.instructions:
        if ins.name in GATES_2Q:
            u, v = ins.targets
            try:
                cid = layout.coupler_id(u, v)
            except ConfigError:
                raise ScheduleError(f"gate {ins.name} {u} {v} off-coupler")
            if cid in bad_couplers:
                raise ScheduleError(f"gate crosses broken coupler {cid}")
        if ins.name in GATES_2Q + GATES_1Q + ("M", "R"):
            for q in ins.targets:
                if q in dead:
                    raise ScheduleError(f"gate touches dead ancilla {q}")
                if q in data_set and active_qubits >= 0 and \
                        not active_qubits >> q & 1:
                    raise ScheduleError(f"gate touches retired data {q}")


def _final_readout(em: _Emitter, layout: Layout,
                   active_data: Iterable[int]) -> Dict[int, int]:
    em.tick()
    recs = {}
    for q in sorted(active_data):
        recs[q] = em.measure(q, ("data", q))
    return recs


# -- baseline ----------------------------------------------------------------

def baseline_circuit(layout: Layout, rounds: int) -> Circuit:
    """Defect-free memory experiment: per round one X then one Z half."""
    if rounds < 1:
        raise ConfigError("rounds must be at least 1")
    n = len(layout.data_ids) + len(layout.ancilla_ids)
    em = _Emitter(n)
    em.add("R", tuple(range(n)))
    em.tick()

    face_ids = sorted(f.id for f in layout.faces)
    prev: Dict[tuple, int] = {}
    for r in range(1, rounds + 1):
        for kind in ("X", "Z"):
            grid = _standard_half(layout, kind)
            recs = grid.emit(em, (r,))
            for fid in face_ids:
                cur = recs[(fid, kind, "syn")]
                if kind == "Z" and r == 1:
                    em.detector([cur])
                elif r > 1:
                    em.detector([prev[(fid, kind)], cur])
                prev[(fid, kind)] = cur

    data_recs = _final_readout(em, layout, layout.data_ids)
    for fid in face_ids:
        members = layout.face_by_id[fid].data_members
        em.detector([prev[(fid, "Z")]] + [data_recs[q] for q in members])
    em.observable([data_recs[q] for q in layout.logical_support])

    return em.finish({
        "scheme": "baseline",
        "rounds": rounds,
        "two_qubit_layers_per_round": 10,
        "mr_layers_per_round": 2,
    })


# -- superstabilizer ---------------------------------------------------------

def superstabilizer_circuit(adapted, rounds: int) -> Circuit:
    """Same schedule as baseline on an adapted patch.

    Intact faces keep their usual detectors.  Faces merged into
    superstabilizers are measured as gauge checks; only the
    superstabilizer-level parities (products of the member gauge records
    across consecutive rounds) become detectors, Z first-round absolute.
    """
    if rounds < 1:
        raise ConfigError("rounds must be at least 1")
    for tag in adapted.scheme_tags.values():
        if tag != "superstabilizer":
            raise UnsupportedConfigError(
                f"schedule only covers superstabilizer clusters, got {tag}")
    layout = adapted.layout
    code = adapted.code
    n = len(layout.data_ids) + len(layout.ancilla_ids)

    active_data = [q for q in layout.data_ids
                   if code.active_qubits >> q & 1]
    active_set = set(active_data)
    dead_anc = set(adapted.disabled.ancilla_defects)

    live_faces = [f.id for f in layout.faces
                  if adapted.face_status.get(f.id) == "live"]
    gauge_by = {}  # (face id, kind) -> gauge-check support
    for g in adapted.gauge_checks:
        gauge_by[(g.face_id, g.kind)] = set(g.op.support())

    # superstabilizers as (member face ids, kind, operator)
    supers = []
    for s in adapted.superstabilizers:
        faces = tuple(sorted({adapted.gauge_checks[i].face_id
                              for i in s.parts}))
        supers.append((faces, s.op.kind, s.op))

    used_ancillas = sorted(
        a for f in layout.faces
        if f.id in live_faces or (f.id, "X") in gauge_by
        or (f.id, "Z") in gauge_by
        for a in (f.ancilla_a, f.ancilla_b))
    for a in used_ancillas:
        if a in dead_anc:
            raise ScheduleError(f"measured face relies on dead ancilla {a}")

    em = _Emitter(n)
    em.add("R", tuple(sorted(active_data + used_ancillas)))
    em.tick()

    prev: Dict[tuple, int] = {}
    prev_super: Dict[int, List[int]] = {}
    for r in range(1, rounds + 1):
        for kind in ("X", "Z"):
            include = {fid: supp for (fid, k), supp in gauge_by.items()
                       if k == kind}
            skip = [f.id for f in layout.faces
                    if f.id not in live_faces and f.id not in include]
            grid = _standard_half(layout, kind, include, skip)
            recs = grid.emit(em, (r,))
            for fid in live_faces:
                cur = recs[(fid, kind, "syn")]
                if kind == "Z" and r == 1:
                    em.detector([cur])
                elif r > 1:
                    em.detector([prev[(fid, kind)], cur])
                prev[(fid, kind)] = cur
            for si, (faces, skind, _op) in enumerate(supers):
                if skind != kind:
                    continue
                cur_ids = [recs[(fid, kind, "syn")] for fid in faces]
                if kind == "Z" and r == 1:
                    em.detector(cur_ids)
                elif r > 1:
                    em.detector(prev_super[si] + cur_ids)
                prev_super[si] = cur_ids

    data_recs = _final_readout(em, layout, active_data)
    for fid in live_faces:
        members = [q for q in layout.face_by_id[fid].data_members
                   if q in active_set]
        em.detector([prev[(fid, "Z")]] + [data_recs[q] for q in members])
    for si, (faces, skind, op) in enumerate(supers):
        if skind != "Z":
            continue
        em.detector(prev_super[si] + [data_recs[q] for q in op.support()])

    lz = code.logicals[0][1]
    em.observable([data_recs[q] for q in lz.support()])

    circuit = em.finish({
        "scheme": "superstabilizer",
        "rounds": rounds,
        "two_qubit_layers_per_round": 10,
        "mr_layers_per_round": 2,
    })
    assert_hardware_legal(circuit, layout, adapted.disabled,
                          code.active_qubits)
    return circuit


# -- neighbor-assisted -------------------------------------------------------

# face anchors of the six edge-sharing neighbors, relative to a face anchor
RING_OFFSETS = {
    "W": (-2, 0), "E": (2, 0),
    "SW": (-1, -2), "SE": (1, -2), "NW": (-1, 2), "NE": (1, 2),
}
# the two alternating-color trios around a face, and the two data qubits
# (as roles of the center face) each trio member shares with it
TRIO_POSITIONS = (("W", "NE", "SE"), ("E", "NW", "SW"))
EDGE_ROLES = {
    "W": ("SW", "NW"), "E": ("SE", "NE"),
    "NE": ("NE", "N"), "SE": ("SE", "S"),
    "NW": ("NW", "N"), "SW": ("SW", "S"),
}


def ring_faces(layout: Layout, face_id: int) -> Dict[str, Optional[int]]:
    """Position name -> neighboring face id (None where the lattice ends)."""
    ax, ay = layout.anchor_of_face[face_id]
    by_anchor = {layout.anchor_of_face[f.id]: f.id for f in layout.faces}
    return {pos: by_anchor.get((ax + dx, ay + dy))
            for pos, (dx, dy) in RING_OFFSETS.items()}


def _na_plan(layout: Layout, defect_face: int):
    """Pick the lender trio and the merged group for one defective face."""
    if defect_face not in layout.face_by_id:
        raise ConfigError(f"no face {defect_face}")
    f0 = layout.face_by_id[defect_face]
    if len(f0.data_members) != 6:
        raise UnsupportedConfigError(
            "neighbor-assisted readout needs an interior face")
    ring = ring_faces(layout, defect_face)
    trio = None
    for positions in TRIO_POSITIONS:
        if all(ring.get(p) is not None for p in positions):
            trio = positions
            break
    if trio is None:
        raise UnsupportedConfigError("no complete trio of edge neighbors")
    f0_roles = role_map(layout, defect_face)
    lenders = {}
    for p in trio:
        lenders[ring[p]] = {f0_roles[r] for r in EDGE_ROLES[p]}
    merged = sorted(ring[p] for p in RING_OFFSETS
                    if p not in trio and ring.get(p) is not None)
    return lenders, merged


def na_effective_code(layout: Layout, defect_face: int) -> SubsystemCode:
    """Gauge-group view of the neighbor-assisted scheme for distance checks.

    The borrowed two-qubit checks and the individually-measured stabilizers
    of the merged group become gauge operators; the merged group only
    contributes its product as a stabilizer.
    """
    lenders, merged = _na_plan(layout, defect_face)
    base = to_code(layout)
    n = base.n
    merged_set = set(merged)
    keep = []
    merged_ops = {"X": [], "Z": []}
    for f in layout.faces:
        for kind in ("X", "Z"):
            op = PauliOperator.from_type_support(n, kind, f.data_members)
            if f.id in merged_set:
                merged_ops[kind].append(op)
            else:
                keep.append(op)
    gauge = []
    for edge in lenders.values():
        gauge.append(PauliOperator.from_type_support(n, "X", edge))
        gauge.append(PauliOperator.from_type_support(n, "Z", edge))
    for kind in ("X", "Z"):
        ops = merged_ops[kind]
        gauge.extend(ops)
        if len(ops) == 3:
            prod = ops[0] * ops[1] * ops[2]
            keep.append(PauliOperator(n, prod.x_bits, prod.z_bits))
    return SubsystemCode(
        n=n,
        stabilizers=CheckMatrix(n, tuple(keep)),
        gauge_extra=tuple(gauge),
        logicals=base.logicals,
        active_qubits=base.active_qubits,
    )


def neighbor_assisted_circuit(layout: Layout, defect_face: int,
                              rounds: int) -> Circuit:
    """Patch a face whose own ancilla pair is broken by borrowing its
    edge neighbors' ancillas on every second cycle.

    Odd cycles run the plain schedule without the defective face.  On
    even cycles each lender face restricts its fan-out to the two data
    qubits it shares with the defective face, so its ancilla pair
    measures a two-qubit check; the product of the three checks of one
    kind recovers the defective face's syndrome.  The other three edge
    neighbors are measured every cycle but their outcomes are only
    compared across the boundaries that stay deterministic; when all
    three exist their product bridges the remaining boundary.
    """
    if rounds < 2 or rounds % 2:
        raise ConfigError("rounds must be even and at least 2")
    lenders, merged = _na_plan(layout, defect_face)
    trio_complete = len(merged) == 3
    f0 = layout.face_by_id[defect_face]
    n = len(layout.data_ids) + len(layout.ancilla_ids)

    em = _Emitter(n)
    working = [q for q in range(n)
               if q not in (f0.ancilla_a, f0.ancilla_b)]
    em.add("R", tuple(working))
    em.tick()

    lender_ids = sorted(lenders)
    other = [f.id for f in layout.faces
             if f.id != defect_face and f.id not in lenders
             and f.id not in merged]

    last: Dict[tuple, int] = {}        # (fid, kind) -> most recent record
    last_full: Dict[tuple, int] = {}   # lenders: most recent full-face record
    gauge_recs: Dict[tuple, List[int]] = {}  # kind -> trio records, per even c

    for c in range(1, rounds + 1):
        even = c % 2 == 0
        for kind in ("X", "Z"):
            include = {lid: lenders[lid] for lid in lender_ids} if even \
                else None
            grid = _standard_half(layout, kind, include,
                                  skip=[defect_face])
            recs = grid.emit(em, (c,))
            for fid in other:
                cur = recs[(fid, kind, "syn")]
                if kind == "Z" and c == 1:
                    em.detector([cur])
                elif c > 1:
                    em.detector([last[(fid, kind)], cur])
                last[(fid, kind)] = cur
            for fid in lender_ids:
                cur = recs[(fid, kind, "syn")]
                if even:
                    gauge_recs.setdefault(kind, []).append(cur)
                else:
                    if kind == "Z" and c == 1:
                        em.detector([cur])
                    elif c > 2:
                        em.detector([last_full[(fid, kind)], cur])
                    last_full[(fid, kind)] = cur
            cur_merged = [recs[(fid, kind, "syn")] for fid in merged]
            prev_merged = [last.get((fid, kind)) for fid in merged]
            for prev, cur in zip(prev_merged, cur_merged):
                if kind == "Z" and c == 1:
                    em.detector([cur])
                elif even and kind == "X":
                    em.detector([prev, cur])
                elif not even and kind == "Z" and c > 1:
                    em.detector([prev, cur])
            # the individual comparison the borrowing randomizes is
            # bridged by the group product, which commutes with every
            # borrowed check when the group is complete
            if trio_complete and c > 1 and (even == (kind == "Z")):
                em.detector(prev_merged + cur_merged)
            for fid, cur in zip(merged, cur_merged):
                last[(fid, kind)] = cur
            if even:
                trio_now = gauge_recs.pop(kind)
                key = ("f0", kind)
                if kind == "Z" and c == 2:
                    em.detector(trio_now)
                elif c > 2:
                    em.detector(list(last[key]) + trio_now)
                last[key] = trio_now

    data_recs = _final_readout(em, layout, layout.data_ids)
    for fid in other + merged:
        members = layout.face_by_id[fid].data_members
        em.detector([last[(fid, "Z")]] + [data_recs[q] for q in members])
    for fid in lender_ids:
        members = layout.face_by_id[fid].data_members
        em.detector([last_full[(fid, "Z")]] +
                    [data_recs[q] for q in members])
    em.detector(list(last[("f0", "Z")]) +
                [data_recs[q] for q in f0.data_members])
    # the borrowed checks are measured one at a time, so the tracked
    # representative must commute with each of them individually
    from .adapter import update_logicals  # deferred: adapter is heavier
    eff = update_logicals(na_effective_code(layout, defect_face), ())
    em.observable([data_recs[q] for q in eff.logicals[0][1].support()])

    circuit = em.finish({
        "scheme": "neighbor-assisted",
        "rounds": rounds,
        "two_qubit_layers_per_round": 10,
        "mr_layers_per_round": 2,
    })
    assert_hardware_legal(
        circuit, layout,
        DefectMap(ancilla_defects=frozenset({f0.ancilla_a, f0.ancilla_b})))
    return circuit


# -- swap-mediated readout ----------------------------------------------------

# probe workspace: the near ancilla of each diagonal neighbor, as grid
# offsets from the patched face's anchor
STATION_OFFSETS = {
    "bSWf": (-1, -1), "bSEf": (1, -1), "aNWf": (-1, 2), "aNEf": (1, 2),
}

# Probe choreography for the middle blocks of a cycle, over two-qubit
# layers 0..7 of a depth-10 block.  Entries are (layer, gate, control
# position, target position).  CXSWAP entries exchange which qubit sits
# at which position.  Both middle blocks run the identical choreography;
# every carried data state is back home by layer 7.
_DANCE = (
    (0, "CXSWAP", "bSWf", "SW"),
    (0, "CXSWAP", "aNWf", "NW"),
    (0, "CXSWAP", "bSEf", "SE"),
    (0, "CXSWAP", "aNEf", "NE"),
    (1, "CX", "SW", "NW"),
    (1, "CX", "SE", "NE"),
    (2, "CXSWAP", "SW", "bSWf"),
    (2, "CXSWAP", "NW", "aNWf"),
    (2, "CXSWAP", "bSEf", "SE"),
    (2, "CXSWAP", "aNEf", "NE"),
    (3, "CX", "bSWf", "S"),
    (3, "CX", "aNWf", "N"),
    (4, "CXSWAP", "S", "bSWf"),
    (4, "CXSWAP", "N", "aNWf"),
    (5, "CXSWAP", "bSEf", "S"),
    (5, "CXSWAP", "aNEf", "N"),
    (6, "CX", "bSEf", "SE"),
    (6, "CXSWAP", "bSWf", "S"),
    (6, "CX", "aNEf", "NE"),
    (6, "CXSWAP", "aNWf", "N"),
    (7, "CX", "SW", "bSWf"),
    (7, "CX", "NW", "aNWf"),
)


def _dance_into(grid: _BlockGrid, home: Dict[str, int]) -> None:
    """Lay the probe choreography into a depth-10 grid.

    home maps position names (four stations plus the patched face's six
    data roles) to the physical qubits there.  Gates address physical
    qubits; the swaps move the carried states around, so which station
    ends up holding which probe is tracked to aim the readout bases.
    """
    state = {name: name for name in home}
    for layer, gate, pa, pb in _DANCE:
        if layer == 1 and not grid.pre1q[1]:
            grid.pre1q[1].extend([("H", home["SW"]), ("H", home["SE"])])
        grid.twoq[layer].append((gate, home[pa], home[pb]))
        if gate == "CXSWAP":
            state[pa], state[pb] = state[pb], state[pa]
    stations = ("bSWf", "aNWf", "bSEf", "aNEf")
    for role in ROLE_OFFSETS:
        if state[role] != role:
            raise ScheduleError(f"data state at {role} not returned home")
    west_born = {"bSWf", "aNWf"}
    x_pos = sorted(s for s in stations if state[s] in west_born)
    z_pos = sorted(s for s in stations if s not in x_pos)
    grid.pre_mr_1q.extend(("H", home[s]) for s in x_pos)
    grid.extra_measures.extend(
        [(home[s], ("probe", "X", i)) for i, s in enumerate(x_pos)] +
        [(home[s], ("probe", "Z", i)) for i, s in enumerate(z_pos)])


def iswap_circuit(layout: Layout, defect_face: int, cycles: int) -> Circuit:
    """Measure a face whose ancilla pair is broken by walking Bell-paired
    probes through it on borrowed neighbor ancillas.

    Each cycle runs four blocks: a plain X half for every other face, two
    ten-layer blocks in which the probes collect the patched face's X and
    Z syndromes while the rest of the patch keeps measuring around them,
    and a plain Z half.  The diagonal neighbors lend their near ancilla
    as probe workspace for the middle blocks, so they are only read out
    in the first and last block of each cycle.
    """
    if cycles < 1:
        raise ConfigError("cycles must be at least 1")
    if defect_face not in layout.face_by_id:
        raise ConfigError(f"no face {defect_face}")
    f0 = layout.face_by_id[defect_face]
    defects = DefectMap(ancilla_defects=frozenset(
        {f0.ancilla_a, f0.ancilla_b}))
    from .adapter import iswap_eligible  # deferred: adapter is heavier
    if not iswap_eligible(layout, defect_face, defects):
        raise UnsupportedConfigError(
            "face does not meet the swap-mediated layout conditions")

    ring = ring_faces(layout, defect_face)
    side_ids = sorted(ring[p] for p in ("W", "E") if ring[p] is not None)
    ring_ids = {fid for fid in ring.values() if fid is not None}
    nonring = sorted(f.id for f in layout.faces
                     if f.id != defect_face and f.id not in ring_ids)

    ax, ay = layout.anchor_of_face[defect_face]
    coord_to_id = {xy: q for q, xy in layout.coord_of.items()}
    home = {name: coord_to_id[(ax + dx, ay + dy)]
            for name, (dx, dy) in STATION_OFFSETS.items()}
    f0_roles = role_map(layout, defect_face)
    home.update(f0_roles)

    n = len(layout.data_ids) + len(layout.ancilla_ids)
    em = _Emitter(n)
    working = [q for q in range(n)
               if q not in (f0.ancilla_a, f0.ancilla_b)]
    em.add("R", tuple(working))
    em.tick()

    def middle_block(session_kind: str, cyc: int, block_tag: str):
        grid = _BlockGrid(10)
        _dance_into(grid, home)
        # sides run early (layers 3-5) so their fan-out never overlaps the
        # late nonring windows; the shared edge data are home there
        for p in ("W", "E"):
            fid = ring.get(p)
            if fid is None:
                continue
            f = layout.face_by_id[fid]
            _Session(fid, session_kind, f.ancilla_a, f.ancilla_b,
                     role_map(layout, fid), window=2).place(grid)
        other_kind = "Z" if session_kind == "X" else "X"
        for fid in nonring:
            f = layout.face_by_id[fid]
            _Session(fid, other_kind, f.ancilla_a, f.ancilla_b,
                     role_map(layout, fid), window=5).place(grid)
        return grid.emit(em, (cyc, block_tag))

    last: Dict[tuple, object] = {}

    def face_det(fid, kind, cur, absolute=False):
        if absolute:
            em.detector([cur])
        else:
            em.detector([last[(fid, kind)], cur])
        last[(fid, kind)] = cur

    # The probe walk leaves marks: the X readouts of the probes scramble
    # the Z record of every face they brush on the east flank, and the
    # parked Z probes scramble the X record of the west flank.  Single-face
    # comparisons break there; only face products completed by the probe
    # records themselves stay deterministic, and those products are the
    # detectors emitted below.
    w_side = ring["W"]
    e_side = ring["E"]
    if e_side is None:
        raise UnsupportedConfigError(
            "swap-mediated readout needs an east side neighbor")
    diag_w = [ring["SW"], ring["NW"]]
    diag_e = [ring["SE"], ring["NE"]]

    zpair_b3: list = []      # probe Z pair of the previous middle block
    xpair_b3: list = []
    xprobes_prev: list = []  # all four probe X records of the previous cycle
    wx_prev: list = []       # west diagonal X records of the previous cycle
    trio_prev: list = []     # east diagonal Z trio of the previous cycle

    for c in range(1, cycles + 1):
        # block 1: X half everywhere but the patched face
        recs = _standard_half(layout, "X", skip=[defect_face]).emit(
            em, (c, "b1"))
        for fid in sorted(nonring + [e_side] + diag_e):
            if c > 1:
                face_det(fid, "X", recs[(fid, "X", "syn")])
            else:
                last[(fid, "X")] = recs[(fid, "X", "syn")]
        wx_cur = [recs[(fid, "X", "syn")] for fid in diag_w]
        if c > 1:
            em.detector(wx_cur + wx_prev + xprobes_prev)
            if w_side is not None:
                em.detector([recs[(w_side, "X", "syn")],
                             last[(w_side, "X")]] + xprobes_prev)
        if w_side is not None:
            last[(w_side, "X")] = recs[(w_side, "X", "syn")]
        wx_prev = wx_cur

        # block 2: probes collect the patched face's halves, sides take Z
        recs = middle_block("Z", c, "b2")
        for fid in nonring:
            face_det(fid, "X", recs[(fid, "X", "syn")])
        for fid in side_ids:
            face_det(fid, "Z", recs[(fid, "Z", "syn")], absolute=c == 1)
        zpair_b2 = [recs[("probe", "Z", 0)], recs[("probe", "Z", 1)]]
        xpair_b2 = [recs[("probe", "X", 0)], recs[("probe", "X", 1)]]
        if c == 1:
            em.detector(list(zpair_b2))
        else:
            em.detector(zpair_b3 + zpair_b2)
            em.detector(xpair_b3 + xpair_b2)
        ze_b2 = recs[(e_side, "Z", "syn")]

        # block 3: identical choreography and session kinds
        recs = middle_block("Z", c, "b3")
        for fid in nonring:
            face_det(fid, "X", recs[(fid, "X", "syn")])
        if w_side is not None:
            face_det(w_side, "Z", recs[(w_side, "Z", "syn")])
        ze_b3 = recs[(e_side, "Z", "syn")]
        zpair_b3 = [recs[("probe", "Z", 0)], recs[("probe", "Z", 1)]]
        xpair_b3 = [recs[("probe", "X", 0)], recs[("probe", "X", 1)]]
        em.detector(zpair_b2 + [ze_b2] + zpair_b3 + [ze_b3])
        last[(e_side, "Z")] = ze_b3
        last[("f0", "Z")] = zpair_b3
        xprobes_prev = xpair_b2 + xpair_b3

        # block 4: Z half everywhere but the patched face
        recs = _standard_half(layout, "Z", skip=[defect_face]).emit(
            em, (c, "b4"))
        for fid in nonring:
            face_det(fid, "Z", recs[(fid, "Z", "syn")], absolute=c == 1)
        for fid in side_ids:
            face_det(fid, "Z", recs[(fid, "Z", "syn")])
        for fid in diag_w:
            face_det(fid, "Z", recs[(fid, "Z", "syn")], absolute=c == 1)
        trio_cur = [recs[(fid, "Z", "syn")] for fid in diag_e]
        trio_cur.append(recs[(e_side, "Z", "syn")])
        if c == 1:
            em.detector(list(trio_cur))
        else:
            em.detector(trio_prev + trio_cur)
        trio_prev = trio_cur
        for fid in diag_e:
            last[(fid, "Z")] = recs[(fid, "Z", "syn")]

    data_recs = _final_readout(em, layout, layout.data_ids)
    for f in sorted(layout.faces, key=lambda f: f.id):
        if f.id == defect_face:
            continue
        em.detector([last[(f.id, "Z")]] +
                    [data_recs[q] for q in f.data_members])
    em.detector(list(last[("f0", "Z")]) +
                [data_recs[q] for q in f0.data_members])
    em.observable([data_recs[q] for q in layout.logical_support])

    circuit = em.finish({
        "scheme": "swap-mediated",
        "cycles": cycles,
        "two_qubit_layers_per_cycle": 30,
        "mr_layers_per_cycle": 4,
    })
    assert_hardware_legal(circuit, layout, defects)
    return circuit
