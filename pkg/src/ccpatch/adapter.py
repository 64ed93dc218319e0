"""Deform a triangular-lattice code around broken hardware.

Broken data qubits are retired through gauge expansion; broken ancillas and
couplers idle whole face measurements, whose syndrome content is recovered by
merging the surrounding faces: the restrictions of the neighbouring
stabilizers become gauge checks and the commuting products of those checks
become superstabilizers.  Faces whose pair can be measured by probe qubits
borrowed from the diagonal neighbours may instead be tagged for mediated
measurement and keep the code intact.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .errors import CodeLostError, ConfigError, LogicalLossError
from .lattice import DefectMap, Layout, to_code
from .paulis import (
    CheckMatrix,
    PauliOperator,
    SubsystemCode,
    _null_space,
    _solve_affine,
    commutes,
    gauge_expand,
)

__all__ = [
    "AdaptedCode",
    "GaugeCheck",
    "Superstabilizer",
    "adapt",
    "adapted_to_json",
    "handle_data_defect",
    "iswap_eligible",
    "reduce_remaining",
    "screen_corners",
    "update_logicals",
]


@dataclass(frozen=True)
class GaugeCheck:
    id: int
    face_id: int
    kind: str
    op: PauliOperator


@dataclass(frozen=True)
class Superstabilizer:
    op: PauliOperator
    parts: tuple  # gauge-check ids whose product is op


@dataclass(frozen=True)
class AdaptedCode:
    layout: Layout
    code: SubsystemCode
    gauge_checks: tuple
    superstabilizers: tuple
    disabled: DefectMap
    scheme_tags: dict       # cluster key -> "superstabilizer" | "iswap-mediated"
    face_status: dict       # face id -> "live" | "merged" | "dead" | "discarded"
    iswap_faces: tuple


# ---------------------------------------------------------------------------
# Single-defect primitives
# ---------------------------------------------------------------------------


def handle_data_defect(code: SubsystemCode, q: int) -> SubsystemCode:
    """Retire data qubit q from an otherwise working code."""
    if not (code.active_qubits >> q) & 1:
        raise ConfigError(f"data qubit {q} is already inactive")
    mask = 1 << q
    touched = any((r.x_bits | r.z_bits) & mask for r in code.stabilizers.rows) or any(
        (g.x_bits | g.z_bits) & mask for g in code.gauge_extra
    )
    if not touched:
        warnings.warn(
            f"data qubit {q} touches no generator; detaching it without merges",
            RuntimeWarning,
            stacklevel=2,
        )
    return gauge_expand(code, q)


def _face_status_from_code(code: SubsystemCode, layout: Layout) -> dict:
    """Classify faces of a possibly deformed code by what is still measured."""
    full_pairs = set()
    for r in code.stabilizers.rows:
        full_pairs.add((r.kind, frozenset(r.support())))
    status = {}
    for f in layout.faces:
        members = frozenset(f.data_members)
        active = [q for q in f.data_members if (code.active_qubits >> q) & 1]
        if ("X", members) in full_pairs and ("Z", members) in full_pairs:
            status[f.id] = "live"
        elif active:
            status[f.id] = "merged"
        else:
            status[f.id] = "dead"
    return status


def screen_corners(
    code: SubsystemCode,
    layout: Layout,
    defects: DefectMap,
    face_status: "dict | None" = None,
):
    """Convert ancilla/coupler defects on corner stabilizers to data defects.

    A face with a data member supported by no other measured face holds a
    corner stabilizer: losing its readout cannot be repaired by merging, so
    the face is dropped and that member is retired instead.  Dropping a face
    can expose a new corner on a neighbour, hence the restart loop.  Returns
    the reduced defect map and the stabilizer rows of the dropped faces; the
    code itself is left untouched.
    """
    if face_status is None:
        face_status = _face_status_from_code(code, layout)
    gone = {fid for fid, st in face_status.items() if st in ("dead", "discarded")}
    data_def = set(defects.data_defects)
    anc_def = set(defects.ancilla_defects)
    kpl_def = set(defects.coupler_defects)
    active = code.active_qubits
    removed = []

    def private_count(q):
        return sum(1 for fid in layout.faces_of_data[q] if fid not in gone)

    while True:
        cand_faces = set()
        for a in anc_def:
            cand_faces.add(layout.ancilla_info[a][1])
        for cid in kpl_def:
            for end in layout.couplers[cid]:
                info = layout.ancilla_info.get(end)
                if info is not None:
                    cand_faces.add(info[1])
        trigger = None
        for fid in sorted(cand_faces):
            if fid in gone or face_status.get(fid, "live") != "live":
                continue
            face = layout.face_by_id[fid]
            corner = [
                q
                for q in sorted(face.data_members)
                if (active >> q) & 1 and q not in data_def and private_count(q) == 1
            ]
            if corner:
                trigger = (fid, corner[0])
                break
        if trigger is None:
            break
        fid, c = trigger
        face = layout.face_by_id[fid]
        support = frozenset(face.data_members)
        for row in code.stabilizers.rows:
            if frozenset(row.support()) == support:
                removed.append(row)
        gone.add(fid)
        data_def.add(c)
        pair = {face.ancilla_a, face.ancilla_b}
        anc_def -= pair
        kpl_def = {cid for cid in kpl_def if not set(layout.couplers[cid]) & pair}
    return (
        DefectMap(
            data_defects=frozenset(data_def),
            ancilla_defects=frozenset(anc_def),
            coupler_defects=frozenset(kpl_def),
        ),
        removed,
    )


def reduce_remaining(defects: DefectMap, layout: Layout) -> frozenset:
    """Express leftover ancilla and coupler defects as data-qubit retirements.

    A broken coupler to an ancilla idles only that ancilla's side of the
    measurement, so its data endpoint is retired; a broken ancilla idles the
    whole face.  Data-data couplers carry no measurement and reduce to
    nothing.
    """
    defects.validate(layout)
    data = set(defects.data_defects)
    ancillas = set(defects.ancilla_defects)
    for cid in sorted(defects.coupler_defects):
        u, v = layout.couplers[cid]
        u_anc = u in layout.ancilla_info
        v_anc = v in layout.ancilla_info
        if u_anc and v_anc:
            ancillas.update((u, v))
        elif u_anc:
            data.add(v)
        elif v_anc:
            data.add(u)
    for a in sorted(ancillas):
        fid = layout.ancilla_info[a][1]
        data.update(layout.face_by_id[fid].data_members)
    return frozenset(data)


# ---------------------------------------------------------------------------
# Logical re-routing
# ---------------------------------------------------------------------------


def update_logicals(code: SubsystemCode, removed) -> SubsystemCode:
    """Re-route logical representatives off the inactive qubits.

    The multiplier pool per type holds the surviving same-type stabilizers,
    same-type gauge generators, the removed stabilizers, and single-qubit
    operators on inactive qubits (legal because those qubits are detached).
    """
    inactive = [q for q in range(code.n) if not (code.active_qubits >> q) & 1]
    new_pairs = []
    for lx, lz in code.logicals:
        fx = _reroute(code, removed, inactive, lx, "X", partner=None)
        fz = _reroute(code, removed, inactive, lz, "Z", partner=fx)
        new_pairs.append((fx, fz))
    return SubsystemCode(
        n=code.n,
        stabilizers=code.stabilizers,
        gauge_extra=code.gauge_extra,
        logicals=tuple(new_pairs),
        active_qubits=code.active_qubits,
        removals=code.removals,
    )


def _reroute(code, removed, inactive, logical, kind, partner):
    if logical.kind != kind:
        raise ConfigError("update_logicals requires pure-type logical representatives")
    own = "x_bits" if kind == "X" else "z_bits"
    pool = [getattr(r, own) for r in code.stabilizers.rows if r.kind == kind]
    pool += [getattr(g, own) for g in code.gauge_extra if g.kind == kind]
    pool += [getattr(r, own) for r in removed if r.kind == kind]
    pool += [1 << q for q in inactive]
    base = getattr(logical, own)

    # constraint masks live in qubit space; rows are built over pool variables
    targets = [(1 << q, 0) for q in inactive]
    other = [r for r in code.stabilizers.rows if r.kind not in (kind, "I")]
    other += [g for g in code.gauge_extra if g.kind not in (kind, "I")]
    for op in other:
        targets.append((getattr(op, "z_bits" if kind == "X" else "x_bits"), 0))
    if partner is not None:
        targets.append((getattr(partner, "x_bits" if kind == "Z" else "z_bits"), 1))
    rows = []
    for m, want in targets:
        var_mask = 0
        for i, p in enumerate(pool):
            if (p & m).bit_count() & 1:
                var_mask |= 1 << i
        rows.append((var_mask, want ^ ((base & m).bit_count() & 1)))
    sol = _solve_affine(rows)
    if sol is None:
        raise LogicalLossError(f"no {kind} logical representative clears the inactive set")
    out = base
    c = sol
    while c:
        i = (c & -c).bit_length() - 1
        out ^= pool[i]
        c &= c - 1
    if out == 0:
        raise LogicalLossError(f"{kind} logical representative vanished into the group")
    if out == base:
        return logical
    if kind == "X":
        return PauliOperator(code.n, out, 0)
    return PauliOperator(code.n, 0, out)


# ---------------------------------------------------------------------------
# Mediated-measurement screening
# ---------------------------------------------------------------------------

_ROLE_OFFSETS = {
    "S": (0, -1),
    "SW": (-1, 0),
    "SE": (1, 0),
    "NW": (-1, 1),
    "NE": (1, 1),
    "N": (0, 2),
}

# probe way-stations: nearest ancilla of each diagonal neighbour, keyed by
# the face-relative offset from the anchor
_STATION_OFFSETS = (("bSW", (-1, -1)), ("bSE", (1, -1)), ("aNW", (-1, 2)), ("aNE", (1, 2)))

# two-qubit hops the probe choreography uses besides the face's own couplers
_DANCE_HOPS = (
    ("bSW", "SW"),
    ("bSW", "S"),
    ("bSE", "SE"),
    ("bSE", "S"),
    ("aNW", "NW"),
    ("aNW", "N"),
    ("aNE", "NE"),
    ("aNE", "N"),
    ("SW", "NW"),
    ("SE", "NE"),
)


def iswap_eligible(layout: Layout, face_id: int, defects: DefectMap) -> bool:
    """True when face_id's pair can be measured by travelling probe pairs.

    Requires a full-weight face with healthy members, all four diagonal
    neighbours present with healthy ancilla pairs (east/west neighbours are
    optional but must be healthy when present), and every coupler on the
    probe paths working.
    """
    face = layout.face_by_id.get(face_id)
    if face is None:
        raise ConfigError(f"unknown face id {face_id}")
    if len(face.data_members) != 6:
        return False
    if set(face.data_members) & defects.data_defects:
        return False
    coord_to_id = {xy: qid for qid, xy in layout.coord_of.items()}
    anchor_to_face = {xy: fid for fid, xy in layout.anchor_of_face.items()}
    ax, ay = layout.anchor_of_face[face_id]

    neighbours = []
    for dx, dy in ((-1, -2), (1, -2), (-1, 2), (1, 2)):
        fid2 = anchor_to_face.get((ax + dx, ay + dy))
        if fid2 is None:
            return False
        neighbours.append(fid2)
    for dx in (-2, 2):
        fid2 = anchor_to_face.get((ax + dx, ay))
        if fid2 is not None:
            neighbours.append(fid2)
    for fid2 in neighbours:
        f2 = layout.face_by_id[fid2]
        if {f2.ancilla_a, f2.ancilla_b} & defects.ancilla_defects:
            return False

    cells = {}
    for name, (dx, dy) in _STATION_OFFSETS:
        qid = coord_to_id.get((ax + dx, ay + dy))
        if qid is None or qid not in layout.ancilla_info:
            return False
        if qid in defects.ancilla_defects:
            return False
        cells[name] = qid
    for name, (dx, dy) in _ROLE_OFFSETS.items():
        qid = coord_to_id.get((ax + dx, ay + dy))
        if qid is None:
            return False
        cells[name] = qid
    for u, v in _DANCE_HOPS:
        pair = tuple(sorted((cells[u], cells[v])))
        cid = layout.coupler_index.get(pair)
        if cid is None or cid in defects.coupler_defects:
            return False
    return True


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


def _clusters(layout: Layout, defects: DefectMap) -> list:
    """Group defects whose footprints touch (Chebyshev-free: Manhattan <= 1).

    Items are ("a", ancilla), ("d", data), ("k", coupler); a coupler occupies
    both endpoint cells.  Returns [(key, sorted items)] ordered by the
    lexicographically smallest item; the key renders that item as e.g. "a12".
    """
    items = (
        [("a", a) for a in sorted(defects.ancilla_defects)]
        + [("d", q) for q in sorted(defects.data_defects)]
        + [("k", c) for c in sorted(defects.coupler_defects)]
    )

    def cells(item):
        letter, ident = item
        if letter == "k":
            u, v = layout.couplers[ident]
            return (layout.coord_of[u], layout.coord_of[v])
        return (layout.coord_of[ident],)

    cell_lists = [cells(it) for it in items]
    parent = list(range(len(items)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            near = any(
                abs(x1 - x2) + abs(y1 - y2) <= 1
                for x1, y1 in cell_lists[i]
                for x2, y2 in cell_lists[j]
            )
            if near:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i, item in enumerate(items):
        groups.setdefault(find(i), []).append(item)
    out = []
    for members in groups.values():
        members.sort()
        out.append((f"{members[0][0]}{members[0][1]}", members))
    out.sort(key=lambda kv: kv[1][0])
    return out


def _mediated_face(layout: Layout, members) -> "int | None":
    """The single face whose pair/intra-coupler makes up the whole cluster."""
    fids = set()
    for letter, ident in members:
        if letter == "a":
            fids.add(layout.ancilla_info[ident][1])
        elif letter == "k":
            found = False
            for end in layout.couplers[ident]:
                info = layout.ancilla_info.get(end)
                if info is not None:
                    fids.add(info[1])
                    found = True
            if not found:
                return None
        else:
            return None
    if len(fids) != 1:
        return None
    fid = fids.pop()
    face = layout.face_by_id[fid]
    allowed = {("a", face.ancilla_a), ("a", face.ancilla_b)}
    pair = tuple(sorted((face.ancilla_a, face.ancilla_b)))
    intra = layout.coupler_index.get(pair)
    if intra is not None:
        allowed.add(("k", intra))
    return fid if set(members) <= allowed else None


def adapt(layout: Layout, defects: DefectMap, use_iswap: bool = False) -> AdaptedCode:
    """Rebuild the code around a defect map.

    Pipeline: close ancilla defects over Bell partners, cluster the defects,
    peel off mediated-measurement clusters when allowed, retire broken data
    qubits, screen corner stabilizers, reduce leftover ancilla/coupler
    defects to data retirements, then read the merged-face structure back out
    as gauge checks and superstabilizers.
    """
    defects.validate(layout)
    anc_closed = set(defects.ancilla_defects)
    for a in defects.ancilla_defects:
        anc_closed.add(layout.partner_of[a])
    closed = DefectMap(
        data_defects=defects.data_defects,
        ancilla_defects=frozenset(anc_closed),
        coupler_defects=defects.coupler_defects,
    )

    scheme_tags = {}
    iswap_faces = []
    work_anc = set(closed.ancilla_defects)
    work_kpl = set(closed.coupler_defects)
    for key, members in _clusters(layout, closed):
        tag = "superstabilizer"
        if use_iswap:
            fid = _mediated_face(layout, members)
            if fid is not None and iswap_eligible(layout, fid, closed):
                tag = "iswap-mediated"
                iswap_faces.append(fid)
                for letter, ident in members:
                    if letter == "a":
                        work_anc.discard(ident)
                    else:
                        work_kpl.discard(ident)
        scheme_tags[key] = tag

    code = to_code(layout)
    face_status = {f.id: "live" for f in layout.faces}

    def retire(current, q):
        for fid in layout.faces_of_data[q]:
            if face_status[fid] == "live":
                face_status[fid] = "merged"
        return gauge_expand(current, q)

    try:
        for q in sorted(closed.data_defects):
            if (code.active_qubits >> q) & 1:
                code = retire(code, q)

        pending = DefectMap(
            data_defects=frozenset(),
            ancilla_defects=frozenset(work_anc),
            coupler_defects=frozenset(work_kpl),
        )
        reduced, removed_rows = screen_corners(code, layout, pending, dict(face_status))
        support_to_face = {frozenset(f.data_members): f.id for f in layout.faces}
        for row in removed_rows:
            face_status[support_to_face[frozenset(row.support())]] = "discarded"

        for q in sorted(reduce_remaining(reduced, layout)):
            if (code.active_qubits >> q) & 1:
                code = retire(code, q)
    except LogicalLossError:
        raise
    except CodeLostError:
        raise
    if code.n_active == 0:
        raise CodeLostError("no active data qubits remain")

    for f in layout.faces:
        if face_status[f.id] == "discarded":
            continue
        if not any((code.active_qubits >> q) & 1 for q in f.data_members):
            face_status[f.id] = "dead"

    checks = []  # (face_id, kind, op) ordered by (face_id, kind)
    for f in layout.faces:
        if face_status[f.id] != "merged":
            continue
        rest = tuple(q for q in f.data_members if (code.active_qubits >> q) & 1)
        for kind in ("X", "Z"):
            checks.append((f.id, kind, PauliOperator.from_type_support(code.n, kind, rest)))

    supers = []
    referenced = set()
    for kind in ("X", "Z"):
        mine = [(i, op) for i, (_fid, kd, op) in enumerate(checks) if kd == kind]
        others = [op for _fid, kd, op in checks if kd != kind]
        masks = []
        for other in others:
            var_mask = 0
            for pos, (_i, op) in enumerate(mine):
                if not commutes(op, other):
                    var_mask |= 1 << pos
            masks.append(var_mask)
        for coeffs in _null_space(masks, len(mine)):
            op = None
            parts = []
            c = coeffs
            while c:
                pos = (c & -c).bit_length() - 1
                gi, gop = mine[pos]
                op = gop if op is None else op * gop
                parts.append(gi)
                c &= c - 1
            if op is None or op.weight() == 0:
                continue
            supers.append((op, tuple(parts)))
            referenced.update(parts)

    # a merged face whose unreferenced restriction has odd weight anticommutes
    # with its own partner and repairs nothing: drop the face entirely
    drop = set()
    for f in layout.faces:
        if face_status[f.id] != "merged":
            continue
        idxs = [i for i, (fid, _kd, _op) in enumerate(checks) if fid == f.id]
        if any(i in referenced for i in idxs):
            continue
        if checks[idxs[0]][2].weight() % 2 == 1:
            drop.add(f.id)
            face_status[f.id] = "discarded"

    kept = [i for i, (fid, _kd, _op) in enumerate(checks) if fid not in drop]
    renumber = {old: new for new, old in enumerate(kept)}
    gauge_checks = tuple(
        GaugeCheck(id=renumber[i], face_id=checks[i][0], kind=checks[i][1], op=checks[i][2])
        for i in kept
    )
    superstabilizers = tuple(
        Superstabilizer(op=op, parts=tuple(renumber[p] for p in parts))
        for op, parts in supers
    )

    inactive = frozenset(q for q in layout.data_ids if not (code.active_qubits >> q) & 1)
    dead_anc = set(closed.ancilla_defects)
    for f in layout.faces:
        if face_status[f.id] in ("dead", "discarded"):
            dead_anc.update((f.ancilla_a, f.ancilla_b))
    disabled = DefectMap(
        data_defects=inactive,
        ancilla_defects=frozenset(dead_anc),
        coupler_defects=defects.coupler_defects,
    )

    if code.k == 0:
        raise CodeLostError("the logical qubit did not survive adaptation")
    # bare representatives: schedules measure gauge checks one at a time, so
    # the exported logicals must commute with every individual check
    code = update_logicals(code, ())
    code.validate()
    return AdaptedCode(
        layout=layout,
        code=code,
        gauge_checks=gauge_checks,
        superstabilizers=superstabilizers,
        disabled=disabled,
        scheme_tags=scheme_tags,
        face_status=face_status,
        iswap_faces=tuple(sorted(iswap_faces)),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _op_json(op: PauliOperator) -> dict:
    return {"type": op.kind, "support": list(op.support())}


def adapted_to_json(adapted: AdaptedCode) -> dict:
    code = adapted.code
    lx, lz = code.logicals[0]
    return {
        "n": code.n,
        "d": adapted.layout.d,
        "stabilizers": [_op_json(r) for r in code.stabilizers.rows],
        "gauge_checks": [
            {"type": gc.kind, "support": list(gc.op.support()), "face": gc.face_id}
            for gc in adapted.gauge_checks
        ],
        "superstabilizers": [
            {"support": list(ss.op.support()), "parts": list(ss.parts)}
            for ss in adapted.superstabilizers
        ],
        "logicals": [_op_json(lx), _op_json(lz)],
        "disabled": {
            "data": sorted(adapted.disabled.data_defects),
            "ancilla": sorted(adapted.disabled.ancilla_defects),
            "coupler": sorted(adapted.disabled.coupler_defects),
        },
        "scheme_tags": {k: adapted.scheme_tags[k] for k in sorted(adapted.scheme_tags)},
    }
