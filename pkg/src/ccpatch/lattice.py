"""Triangular 6.6.6 color-code patches embedded on a square qubit grid.

Construction happens in two steps.  An abstract triangular lattice puts one
face site on every third column of each row; its data sites are the remaining
grid points.  Each face is then embedded onto square-grid hardware as a
two-ancilla column (roles ``a`` below ``b``) with the face's data qubits on
the six surrounding cells, so every gate the syndrome schedule needs is
nearest-neighbor.  The embedding is rigid; tests freeze the d=3 coordinates.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

from .errors import ConfigError
from .paulis import CheckMatrix, PauliOperator, SubsystemCode

__all__ = [
    "Face",
    "Layout",
    "DefectMap",
    "build_triangular_code",
    "classify",
    "to_code",
    "layout_to_json",
    "layout_from_json",
    "sample_defect_map",
]

# abstract rows cycle green/blue/red; the face column offset cycles with them
_COLOR_BY_ROW = ("green", "blue", "red")
_POS_BY_ROW = (2, 0, 1)

# grid images of the abstract lattice vectors u=(3,1), v=(0,2)
_U = (1, -2)
_V = (2, 0)
_BASE_FACE = (4, 0)
_BASE_ANCHOR = (0, 1)

# abstract data offset from a face site -> grid offset from the a ancilla
_ROLE_MAP = {
    (2, 0): (0, -1),    # E  -> S
    (-2, 0): (0, 2),    # W  -> N
    (1, 1): (1, 0),     # NE -> SE
    (-1, 1): (1, 1),    # NW -> NE
    (1, -1): (-1, 0),   # SE -> SW
    (-1, -1): (-1, 1),  # SW -> NW
}

# clockwise from the north-west cell; fixes data_members ordering
_CW_ROLES = ((-1, 1), (0, 2), (1, 1), (1, 0), (0, -1), (-1, 0))


@dataclass(frozen=True)
class Face:
    id: int
    color: str
    data_members: tuple
    ancilla_a: int
    ancilla_b: int


@dataclass(frozen=True)
class Layout:
    d: int
    data_qubits: tuple   # ((id, (x, y)), ...) ids dense, row-major by (y, x)
    faces: tuple
    ancillas: tuple      # ((id, (x, y), face_id, role), ...)
    couplers: tuple      # ((lo_id, hi_id), ...) every grid-adjacent placed pair
    boundary_color: dict

    # -- lookups -------------------------------------------------------------

    @cached_property
    def coord_of(self) -> dict:
        m = {qid: xy for qid, xy in self.data_qubits}
        for aid, xy, _fid, _role in self.ancillas:
            m[aid] = xy
        return m

    @cached_property
    def data_ids(self) -> tuple:
        return tuple(qid for qid, _ in self.data_qubits)

    @cached_property
    def ancilla_ids(self) -> tuple:
        return tuple(aid for aid, _xy, _fid, _role in self.ancillas)

    @cached_property
    def face_by_id(self) -> dict:
        return {f.id: f for f in self.faces}

    @cached_property
    def faces_of_data(self) -> dict:
        m = {qid: [] for qid in self.data_ids}
        for f in self.faces:
            for q in f.data_members:
                m[q].append(f.id)
        return {q: tuple(fids) for q, fids in m.items()}

    @cached_property
    def ancilla_info(self) -> dict:
        return {aid: (xy, fid, role) for aid, xy, fid, role in self.ancillas}

    @cached_property
    def partner_of(self) -> dict:
        m = {}
        for f in self.faces:
            m[f.ancilla_a] = f.ancilla_b
            m[f.ancilla_b] = f.ancilla_a
        return m

    @cached_property
    def coupler_index(self) -> dict:
        return {pair: i for i, pair in enumerate(self.couplers)}

    def coupler_id(self, u: int, v: int) -> int:
        pair = (u, v) if u < v else (v, u)
        try:
            return self.coupler_index[pair]
        except KeyError:
            raise ConfigError(f"no coupler between qubits {u} and {v}")

    @cached_property
    def anchor_of_face(self) -> dict:
        return {f.id: self.coord_of[f.ancilla_a] for f in self.faces}

    @cached_property
    def logical_support(self) -> tuple:
        return tuple(qid for qid, (x, _y) in self.data_qubits if x == 0)


@dataclass(frozen=True)
class DefectMap:
    data_defects: frozenset = frozenset()
    ancilla_defects: frozenset = frozenset()
    coupler_defects: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "data_defects", frozenset(self.data_defects))
        object.__setattr__(self, "ancilla_defects", frozenset(self.ancilla_defects))
        object.__setattr__(self, "coupler_defects", frozenset(self.coupler_defects))

    def validate(self, layout: Layout) -> None:
        data = set(layout.data_ids)
        anc = set(layout.ancilla_ids)
        if not self.data_defects <= data:
            raise ConfigError(f"unknown data-defect ids {sorted(self.data_defects - data)}")
        if not self.ancilla_defects <= anc:
            raise ConfigError(
                f"unknown ancilla-defect ids {sorted(self.ancilla_defects - anc)}"
            )
        n_coup = len(layout.couplers)
        bad = {c for c in self.coupler_defects if not (0 <= c < n_coup)}
        if bad:
            raise ConfigError(f"unknown coupler-defect ids {sorted(bad)}")

    def is_empty(self) -> bool:
        return not (self.data_defects or self.ancilla_defects or self.coupler_defects)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _abstract_sites(d: int):
    """Face sites and data sites of the abstract triangular lattice."""
    big_l = 3 * (d - 1) // 2
    face_sites = []
    data_sites = []
    for y in range(big_l + 1):
        for x in range(y, 2 * big_l - y + 1, 2):
            if ((x - y) // 2) % 3 == _POS_BY_ROW[y % 3]:
                face_sites.append((x, y))
            else:
                data_sites.append((x, y))
    return face_sites, data_sites


def _anchor_raw(fx: int, fy: int) -> tuple:
    if (fx - _BASE_FACE[0]) % 3:
        raise ConfigError(f"face site {(fx, fy)} off the face sublattice")
    s = (fx - _BASE_FACE[0]) // 3
    if (fy - _BASE_FACE[1] - s) % 2:
        raise ConfigError(f"face site {(fx, fy)} off the face sublattice")
    t = (fy - _BASE_FACE[1] - s) // 2
    return (
        _BASE_ANCHOR[0] + s * _U[0] + t * _V[0],
        _BASE_ANCHOR[1] + s * _U[1] + t * _V[1],
    )


def build_triangular_code(d: int) -> Layout:
    if d < 3 or d % 2 == 0:
        raise ConfigError(f"code distance must be an odd integer >= 3, got {d}")
    face_sites, data_sites = _abstract_sites(d)
    data_set = set(data_sites)

    n_expect = (3 * d * d + 1) // 4
    if len(data_sites) != n_expect or len(face_sites) != (n_expect - 1) // 2:
        raise ConfigError("abstract lattice census failed")

    # grid positions: each data site inherits its cell from every face that
    # contains it; the embedding must agree across faces
    grid_of_data: dict = {}
    face_records = []  # (abstract site, raw anchor, member abstract sites)
    for fx, fy in face_sites:
        anchor = _anchor_raw(fx, fy)
        members = []
        for delta, role in _ROLE_MAP.items():
            site = (fx + delta[0], fy + delta[1])
            if site not in data_set:
                continue
            pos = (anchor[0] + role[0], anchor[1] + role[1])
            if grid_of_data.setdefault(site, pos) != pos:
                raise ConfigError(f"inconsistent embedding for data site {site}")
            members.append(site)
        if len(members) not in (4, 6):
            raise ConfigError(f"face at {(fx, fy)} has weight {len(members)}")
        face_records.append(((fx, fy), anchor, members))
    if set(grid_of_data) != data_set:
        raise ConfigError("some data sites are not covered by any face")

    # translate to non-negative coordinates
    ys = [y for _x, y in grid_of_data.values()]
    ys += [a[1] for _s, a, _m in face_records]
    xs = [x for x, _y in grid_of_data.values()]
    xs += [a[0] for _s, a, _m in face_records]
    dx, dy = -min(xs), -min(ys)

    def shift(pos):
        return (pos[0] + dx, pos[1] + dy)

    data_coords = sorted((shift(p) for p in grid_of_data.values()), key=lambda c: (c[1], c[0]))
    data_id = {xy: i for i, xy in enumerate(data_coords)}

    anc_coords = []
    for _site, anchor, _members in face_records:
        a = shift(anchor)
        anc_coords.append(a)
        anc_coords.append((a[0], a[1] + 1))
    anc_coords.sort(key=lambda c: (c[1], c[0]))
    n_data = len(data_coords)
    anc_id = {xy: n_data + i for i, xy in enumerate(anc_coords)}

    face_records.sort(key=lambda rec: (shift(rec[1])[1], shift(rec[1])[0]))
    faces = []
    ancillas = []
    for fid, ((fx, fy), anchor, _members) in enumerate(face_records):
        a_pos = shift(anchor)
        b_pos = (a_pos[0], a_pos[1] + 1)
        members = []
        for role in _CW_ROLES:
            cell = (a_pos[0] + role[0], a_pos[1] + role[1])
            if cell in data_id:
                members.append(data_id[cell])
        color = _COLOR_BY_ROW[fy % 3]
        faces.append(
            Face(
                id=fid,
                color=color,
                data_members=tuple(members),
                ancilla_a=anc_id[a_pos],
                ancilla_b=anc_id[b_pos],
            )
        )
        ancillas.append((anc_id[a_pos], a_pos, fid, "a"))
        ancillas.append((anc_id[b_pos], b_pos, fid, "b"))
    ancillas.sort(key=lambda rec: rec[0])

    all_coord = {xy: qid for xy, qid in data_id.items()}
    all_coord.update(anc_id)
    couplers = []
    for (x, y), qid in all_coord.items():
        for nbr in ((x + 1, y), (x, y + 1)):
            if nbr in all_coord:
                pair = tuple(sorted((qid, all_coord[nbr])))
                couplers.append(pair)
    couplers.sort()

    layout = Layout(
        d=d,
        data_qubits=tuple((data_id[xy], xy) for xy in data_coords),
        faces=tuple(faces),
        ancillas=tuple(ancillas),
        couplers=tuple(couplers),
        boundary_color={"left": "red", "top": "green", "bottom": "blue"},
    )

    # the schedule relies on these seven couplers per face; assert, don't assume
    pair_set = set(layout.couplers)
    for f in layout.faces:
        ax, ay = layout.coord_of[f.ancilla_a]
        for delta, anc in (
            ((0, -1), f.ancilla_a),
            ((-1, 0), f.ancilla_a),
            ((1, 0), f.ancilla_a),
            ((-1, 1), f.ancilla_b),
            ((1, 1), f.ancilla_b),
            ((0, 2), f.ancilla_b),
        ):
            cell = (ax + delta[0], ay + delta[1])
            if cell in data_id:
                if tuple(sorted((anc, data_id[cell]))) not in pair_set:
                    raise ConfigError("schedule coupler missing from grid")
        if tuple(sorted((f.ancilla_a, f.ancilla_b))) not in pair_set:
            raise ConfigError("intra-face ancilla coupler missing from grid")

    if len(layout.logical_support) != d:
        raise ConfigError("left boundary column does not have d data qubits")
    return layout


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

_DATA_LABELS = {0: "isolated", 1: "corner", 2: "boundary", 3: "interior"}


def classify(layout: Layout, faces: Optional[Iterable[Face]] = None) -> dict:
    """Label data qubits by how many current faces touch them, and ancillas by
    whether their face is a corner stabilizer.  ``faces`` defaults to the
    layout's faces; pass the surviving subset after deformation."""
    current = tuple(faces) if faces is not None else layout.faces
    counts = {qid: 0 for qid in layout.data_ids}
    for f in current:
        for q in f.data_members:
            counts[q] += 1
    data_labels = {}
    for qid, c in counts.items():
        if c > 3:
            raise ConfigError(f"data qubit {qid} on {c} faces")
        data_labels[qid] = _DATA_LABELS[c]

    present = {f.id for f in current}
    anc_labels = {}
    for f in current:
        corner_face = any(data_labels[q] == "corner" for q in f.data_members)
        label = "corner" if corner_face else "standard"
        anc_labels[f.ancilla_a] = label
        anc_labels[f.ancilla_b] = label
    for aid, _xy, fid, _role in layout.ancillas:
        if fid not in present:
            anc_labels.setdefault(aid, "idle")
    return {"data": data_labels, "ancillas": anc_labels}


def to_code(layout: Layout) -> SubsystemCode:
    n = len(layout.data_qubits)
    rows = []
    for kind in ("X", "Z"):
        for f in layout.faces:
            rows.append(PauliOperator.from_type_support(n, kind, f.data_members))
    lx = PauliOperator.from_type_support(n, "X", layout.logical_support)
    lz = PauliOperator.from_type_support(n, "Z", layout.logical_support)
    return SubsystemCode(
        n=n,
        stabilizers=CheckMatrix(n, tuple(rows)),
        gauge_extra=(),
        logicals=((lx, lz),),
        active_qubits=(1 << n) - 1,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def layout_to_json(layout: Layout, defects: Optional[DefectMap] = None) -> dict:
    defects = defects or DefectMap()
    return {
        "d": layout.d,
        "data": [{"id": qid, "x": x, "y": y} for qid, (x, y) in layout.data_qubits],
        "faces": [
            {
                "id": f.id,
                "color": f.color,
                "members": list(f.data_members),
                "ancillas": [f.ancilla_a, f.ancilla_b],
            }
            for f in layout.faces
        ],
        "defects": {
            "data": sorted(defects.data_defects),
            "ancilla": sorted(defects.ancilla_defects),
            "coupler": sorted(defects.coupler_defects),
        },
    }


def layout_from_json(doc: dict) -> tuple:
    """Rebuild the canonical layout for doc["d"] and verify the document
    matches it exactly; geometry is never trusted from the file."""
    try:
        layout = build_triangular_code(doc["d"])
        reference = layout_to_json(layout)
        if doc["data"] != reference["data"] or doc["faces"] != reference["faces"]:
            raise ConfigError("layout document does not match canonical construction")
        defects = DefectMap(
            data_defects=frozenset(doc["defects"]["data"]),
            ancilla_defects=frozenset(doc["defects"]["ancilla"]),
            coupler_defects=frozenset(doc["defects"]["coupler"]),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed layout document: {exc}")
    defects.validate(layout)
    return layout, defects


def sample_defect_map(layout: Layout, rate: float, rng: random.Random) -> DefectMap:
    """Draw each data and each ancilla qubit defective independently."""
    if not 0.0 <= rate <= 1.0:
        raise ConfigError(f"defect rate must be in [0, 1], got {rate}")
    data = frozenset(q for q in layout.data_ids if rng.random() < rate)
    anc = frozenset(a for a in layout.ancilla_ids if rng.random() < rate)
    return DefectMap(data_defects=data, ancilla_defects=anc)
