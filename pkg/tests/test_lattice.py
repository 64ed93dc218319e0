"""Lattice construction oracles.

The d=3 tables below were derived by hand from the abstract triangular
lattice (rows y=0..3, ancilla sites on every third column) and the square-grid
embedding (face anchors at the a-ancilla, data on the six surrounding cells),
then frozen.  Any change to orientation, id assignment, or member ordering
must show up here as a diff.
"""

import dataclasses
import json
import random

import pytest

from ccpatch.errors import ConfigError
from ccpatch.lattice import (
    DefectMap,
    Layout,
    build_triangular_code,
    classify,
    layout_from_json,
    layout_to_json,
    sample_defect_map,
    to_code,
)
from ccpatch.paulis import min_logical_weight

# Frozen d=3 embedding: id -> (x, y), ids row-major by (y, x).
D3_DATA = {0: (0, 0), 1: (1, 1), 2: (1, 2), 3: (3, 2), 4: (0, 3), 5: (2, 3), 6: (0, 4)}
D3_ANCILLAS = {7: (0, 1), 8: (2, 1), 9: (0, 2), 10: (2, 2), 11: (1, 3), 12: (1, 4)}
# face id -> (color, members clockwise from NW, ancilla_a, ancilla_b)
D3_FACES = {
    0: ("green", (4, 2, 1, 0), 7, 9),
    1: ("red", (2, 5, 3, 1), 8, 10),
    2: ("blue", (6, 5, 2, 4), 11, 12),
}
D3_LOGICAL = (0, 4, 6)

EXPECTED_COUNTS = {3: (7, 3), 5: (19, 9), 7: (37, 18), 9: (61, 30)}


def coord_map(layout: Layout) -> dict:
    m = {qid: xy for qid, xy in layout.data_qubits}
    for aid, xy, _fid, _role in layout.ancillas:
        m[aid] = xy
    return m


def test_counts_small_d():
    for d, (n, f) in EXPECTED_COUNTS.items():
        layout = build_triangular_code(d)
        assert len(layout.data_qubits) == n
        assert len(layout.faces) == f
        assert len(layout.ancillas) == 2 * f
        assert layout.d == d


def test_rejects_bad_d():
    for d in (2, 4, 1, -3, 0):
        with pytest.raises(ConfigError):
            build_triangular_code(d)


def test_frozen_d3_embedding():
    layout = build_triangular_code(3)
    assert dict(layout.data_qubits) == D3_DATA
    got_anc = {aid: xy for aid, xy, _f, _r in layout.ancillas}
    assert got_anc == D3_ANCILLAS
    for face in layout.faces:
        color, members, a, b = D3_FACES[face.id]
        assert face.color == color
        assert tuple(face.data_members) == members
        assert (face.ancilla_a, face.ancilla_b) == (a, b)
    assert layout.boundary_color == {"left": "red", "top": "green", "bottom": "blue"}


def test_ancilla_roles_and_positions():
    layout = build_triangular_code(5)
    coords = coord_map(layout)
    for face in layout.faces:
        ax, ay = coords[face.ancilla_a]
        bx, by = coords[face.ancilla_b]
        assert (bx, by) == (ax, ay + 1)
    roles = {aid: role for aid, _xy, _f, role in layout.ancillas}
    for face in layout.faces:
        assert roles[face.ancilla_a] == "a"
        assert roles[face.ancilla_b] == "b"


def test_face_weights_and_membership_counts():
    for d in (3, 5, 7):
        layout = build_triangular_code(d)
        per_qubit = {qid: 0 for qid, _ in layout.data_qubits}
        for face in layout.faces:
            assert len(face.data_members) in (4, 6)
            assert len(set(face.data_members)) == len(face.data_members)
            for q in face.data_members:
                per_qubit[q] += 1
        assert all(1 <= c <= 3 for c in per_qubit.values())
        # interior qubits sit on three faces of three distinct colors
        for qid, count in per_qubit.items():
            if count == 3:
                colors = {f.color for f in layout.faces if qid in f.data_members}
                assert colors == {"red", "green", "blue"}


def test_adjacent_faces_share_two_qubits_and_differ_in_color():
    for d in (3, 5, 7):
        layout = build_triangular_code(d)
        faces = layout.faces
        for i in range(len(faces)):
            for j in range(i + 1, len(faces)):
                shared = set(faces[i].data_members) & set(faces[j].data_members)
                assert len(shared) in (0, 2)
                if shared:
                    assert faces[i].color != faces[j].color


def test_d5_face_neighbor_census():
    layout = build_triangular_code(5)

    def n_neighbors(face):
        return sum(
            1
            for other in layout.faces
            if other.id != face.id
            and set(other.data_members) & set(face.data_members)
        )

    counts = sorted(n_neighbors(f) for f in layout.faces)
    assert max(counts) == 5  # no d=5 face has a full six-face ring
    weight6 = [f for f in layout.faces if len(f.data_members) == 6]
    assert len(weight6) == 3
    assert {n_neighbors(f) for f in weight6} == {5}


def test_couplers_are_nearest_neighbor_and_complete():
    for d in (3, 5):
        layout = build_triangular_code(d)
        coords = coord_map(layout)
        degree = {qid: 0 for qid in coords}
        seen = set()
        for u, v in layout.couplers:
            assert u < v
            (ux, uy), (vx, vy) = coords[u], coords[v]
            assert abs(ux - vx) + abs(uy - vy) == 1
            degree[u] += 1
            degree[v] += 1
            seen.add((u, v))
        assert all(deg <= 4 for deg in degree.values())
        # every grid-adjacent placed pair is a coupler
        by_coord = {xy: qid for qid, xy in coords.items()}
        for (x, y), qid in by_coord.items():
            for nx, ny in ((x + 1, y), (x, y + 1)):
                if (nx, ny) in by_coord:
                    pair = tuple(sorted((qid, by_coord[(nx, ny)])))
                    assert pair in seen


def test_per_face_circuit_couplers_exist():
    # the syndrome schedule needs a->{S,SW,SE,b} and b->{NW,NE,N}
    for d in (3, 5, 7):
        layout = build_triangular_code(d)
        coords = coord_map(layout)
        pairs = {tuple(sorted(c)) for c in layout.couplers}
        for face in layout.faces:
            ax, ay = coords[face.ancilla_a]
            role_of = {}
            for q in face.data_members:
                dx, dy = coords[q][0] - ax, coords[q][1] - ay
                role_of[(dx, dy)] = q
            for delta, anc in (
                ((0, -1), face.ancilla_a),
                ((-1, 0), face.ancilla_a),
                ((1, 0), face.ancilla_a),
                ((-1, 1), face.ancilla_b),
                ((1, 1), face.ancilla_b),
                ((0, 2), face.ancilla_b),
            ):
                if delta in role_of:
                    assert tuple(sorted((anc, role_of[delta]))) in pairs
            assert tuple(sorted((face.ancilla_a, face.ancilla_b))) in pairs


def test_classify_d3():
    layout = build_triangular_code(3)
    labels = classify(layout)
    assert {q for q, l in labels["data"].items() if l == "corner"} == {0, 3, 6}
    assert {q for q, l in labels["data"].items() if l == "interior"} == {2}
    assert {q for q, l in labels["data"].items() if l == "boundary"} == {1, 4, 5}
    # every d=3 face contains a corner qubit, so every ancilla is a corner ancilla
    assert set(labels["ancillas"].values()) == {"corner"}


def test_classify_d7_center_interior():
    layout = build_triangular_code(7)
    labels = classify(layout)
    coords = dict(layout.data_qubits)
    interior = [q for q, l in labels["data"].items() if l == "interior"]
    assert len(interior) > 0
    xs = [x for x, _ in coords.values()]
    ys = [y for _, y in coords.values()]
    cx, cy = sum(xs) / len(xs), sum(ys) / len(ys)
    central = min(coords, key=lambda q: (coords[q][0] - cx) ** 2 + (coords[q][1] - cy) ** 2)
    assert labels["data"][central] == "interior"
    corner_ancillas = {a for a, l in labels["ancillas"].items() if l == "corner"}
    assert len(corner_ancillas) == 6  # three corner faces, two ancillas each


def test_classify_after_face_removal():
    # discarding a corner face's stabilizers promotes a boundary qubit to corner
    layout = build_triangular_code(5)
    labels0 = classify(layout)
    corner_q = next(q for q, l in labels0["data"].items() if l == "corner")
    corner_face = next(f for f in layout.faces if corner_q in f.data_members)
    surviving = [f for f in layout.faces if f.id != corner_face.id]
    labels1 = classify(layout, faces=surviving)
    promoted = [
        q
        for q in corner_face.data_members
        if labels0["data"][q] == "boundary" and labels1["data"][q] == "corner"
    ]
    assert promoted
    assert labels1["data"][corner_q] == "isolated"


def test_classify_isomorphism_invariance():
    layout = build_triangular_code(5)
    rng = random.Random(11)
    data_ids = [qid for qid, _ in layout.data_qubits]
    perm_list = data_ids[:]
    rng.shuffle(perm_list)
    perm = dict(zip(data_ids, perm_list))
    faces = tuple(
        dataclasses.replace(f, data_members=tuple(perm[q] for q in f.data_members))
        for f in layout.faces
    )
    relabeled = dataclasses.replace(
        layout,
        data_qubits=tuple(sorted((perm[q], xy) for q, xy in layout.data_qubits)),
        faces=faces,
        couplers=tuple(
            tuple(sorted((perm.get(u, u), perm.get(v, v)))) for u, v in layout.couplers
        ),
    )
    base = classify(layout)
    moved = classify(relabeled)
    for q, label in base["data"].items():
        assert moved["data"][perm[q]] == label


def test_to_code_d3_is_seven_qubit_code():
    layout = build_triangular_code(3)
    code = to_code(layout)
    assert code.n == 7
    assert code.k == 1
    assert code.gauge_qubits == 0
    assert code.n_active == 7
    rows = code.stabilizers.rows
    assert len(rows) == 6
    assert code.stabilizers.rank() == 6
    assert sorted(r.weight() for r in rows) == [4] * 6
    code.validate()
    lx, lz = code.logicals[0]
    assert lx.support() == lz.support() == D3_LOGICAL
    assert lx.kind == "X" and lz.kind == "Z"


def test_to_code_d5_rank():
    code = to_code(build_triangular_code(5))
    assert code.n == 19
    assert code.stabilizers.rank() == 18
    assert code.k == 1
    code.validate()
    lx, lz = code.logicals[0]
    assert lx.support() == lz.support()
    assert len(lx.support()) == 5


def test_distance_oracle_small_d():
    assert min_logical_weight(to_code(build_triangular_code(3)), w_max=3) == 3
    assert min_logical_weight(to_code(build_triangular_code(5)), w_max=5) == 5


def test_json_round_trip():
    layout = build_triangular_code(5)
    defects = DefectMap(
        data_defects=frozenset({2}),
        ancilla_defects=frozenset({layout.faces[0].ancilla_a}),
        coupler_defects=frozenset({0}),
    )
    doc = layout_to_json(layout, defects)
    assert set(doc) == {"d", "data", "faces", "defects"}
    assert set(doc["data"][0]) == {"id", "x", "y"}
    assert set(doc["faces"][0]) == {"id", "color", "members", "ancillas"}
    assert set(doc["defects"]) == {"data", "ancilla", "coupler"}
    layout2, defects2 = layout_from_json(doc)
    assert layout2 == layout
    assert defects2 == defects
    # byte-stable serialization
    assert json.dumps(layout_to_json(layout, defects)) == json.dumps(doc)


def test_json_rejects_tampered_geometry():
    doc = layout_to_json(build_triangular_code(3), DefectMap())
    doc["faces"][0]["members"] = list(reversed(doc["faces"][0]["members"]))
    with pytest.raises(ConfigError):
        layout_from_json(doc)


def test_defect_map_validation():
    layout = build_triangular_code(3)
    with pytest.raises(ConfigError):
        DefectMap(data_defects=frozenset({99})).validate(layout)
    with pytest.raises(ConfigError):
        DefectMap(ancilla_defects=frozenset({0})).validate(layout)  # data id, not ancilla
    DefectMap(data_defects=frozenset({0}), ancilla_defects=frozenset({7})).validate(layout)


def test_sample_defect_map_rate_and_determinism():
    layout = build_triangular_code(7)
    m1 = sample_defect_map(layout, rate=0.05, rng=random.Random(3))
    m2 = sample_defect_map(layout, rate=0.05, rng=random.Random(3))
    assert m1 == m2
    m1.validate(layout)
    assert not m1.coupler_defects
    many = sample_defect_map(layout, rate=1.0, rng=random.Random(0))
    assert len(many.data_defects) == len(layout.data_qubits)
    assert len(many.ancilla_defects) == len(layout.ancillas)
    none = sample_defect_map(layout, rate=0.0, rng=random.Random(0))
    assert none == DefectMap()
