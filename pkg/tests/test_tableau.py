"""Symbolic stabilizer-tableau oracles.

Measurement outcomes are affine expressions over coin variables (const bit
plus an F2 mask); a measurement is deterministic exactly when its mask is
zero.  Expected values below were worked out by hand on small states.
"""

import random

from ccpatch.tableau import Tableau


def xor_records(t, i, j):
    (c1, m1), (c2, m2) = t.records[i], t.records[j]
    return c1 ^ c2, m1 ^ m2


def test_zero_state_measure_deterministic():
    t = Tableau(1)
    r = t.measure(0)
    assert t.records[r] == (0, 0)
    r2 = t.measure(0)
    assert t.records[r2] == (0, 0)


def test_plus_state_measurement_random_then_pinned():
    t = Tableau(1)
    t.h(0)
    r1 = t.measure(0)
    c1, m1 = t.records[r1]
    assert c1 == 0 and m1 != 0
    r2 = t.measure(0)
    assert t.records[r2] == (c1, m1)
    assert xor_records(t, r1, r2) == (0, 0)


def test_x_flip_measures_one():
    t = Tableau(1)
    t.x(0)
    r = t.measure(0)
    assert t.records[r] == (1, 0)


def test_bell_pair_parity_deterministic():
    t = Tableau(2)
    t.h(0)
    t.cx(0, 1)
    r0 = t.measure(0)
    r1 = t.measure(1)
    assert t.records[r0][1] != 0
    assert xor_records(t, r0, r1) == (0, 0)


def test_ghz_chain_parity():
    t = Tableau(3)
    t.h(0)
    t.cx(0, 1)
    t.cx(1, 2)
    recs = [t.measure(q) for q in range(3)]
    for a, b in ((0, 1), (1, 2), (0, 2)):
        assert xor_records(t, recs[a], recs[b]) == (0, 0)


def test_s_squared_is_z():
    t = Tableau(1)
    t.h(0)
    t.s(0)
    t.s(0)
    t.h(0)
    assert t.records[t.measure(0)] == (1, 0)


def test_sdg_inverts_s():
    t = Tableau(1)
    t.h(0)
    t.s(0)
    t.sdg(0)
    t.h(0)
    assert t.records[t.measure(0)] == (0, 0)


def test_sign_rides_through_phase_gates():
    # X;H;S;S;H ends in +Z eigenstate while H;S;S;H alone ends in -Z
    t = Tableau(1)
    t.x(0)
    t.h(0)
    t.s(0)
    t.s(0)
    t.h(0)
    assert t.records[t.measure(0)] == (0, 0)


def test_three_s_equal_sdg():
    a = Tableau(2)
    b = Tableau(2)
    for t in (a, b):
        t.h(0)
        t.cx(0, 1)
    for _ in range(3):
        a.s(1)
    b.sdg(1)
    assert a.snapshot() == b.snapshot()


def test_cz_matches_conjugated_cx():
    a = Tableau(2)
    b = Tableau(2)
    for t in (a, b):
        t.h(0)
        t.s(0)
        t.h(1)
    a.cz(0, 1)
    b.h(1)
    b.cx(0, 1)
    b.h(1)
    assert a.snapshot() == b.snapshot()


def test_cxswap_truth_table():
    t = Tableau(2)
    t.x(0)
    t.cxswap(0, 1)
    assert t.records[t.measure(0)] == (1, 0)
    assert t.records[t.measure(1)] == (1, 0)

    t = Tableau(2)
    t.x(1)
    t.cxswap(0, 1)
    assert t.records[t.measure(0)] == (1, 0)
    assert t.records[t.measure(1)] == (0, 0)


def test_reset_clears_randomness():
    t = Tableau(1)
    t.h(0)
    t.measure(0)
    t.reset(0)
    assert t.records[t.measure(0)] == (0, 0)

    t = Tableau(1)
    t.x(0)
    t.reset(0)
    assert t.records[t.measure(0)] == (0, 0)


def test_reset_keeps_partner_randomness():
    t = Tableau(2)
    t.h(0)
    t.cx(0, 1)
    t.reset(0)
    assert t.records[t.measure(0)] == (0, 0)
    _c, m = t.records[t.measure(1)]
    assert m != 0


def test_pauli_injection_flips_parity_detector():
    # X on half a Bell pair anticorrelates the pair; Z before entangling
    # leaves the correlation untouched
    t = Tableau(2)
    t.h(0)
    t.cx(0, 1)
    t.x(0)
    r0, r1 = t.measure(0), t.measure(1)
    assert xor_records(t, r0, r1) == (1, 0)

    t = Tableau(2)
    t.h(0)
    t.z(0)
    t.cx(0, 1)
    r0, r1 = t.measure(0), t.measure(1)
    assert xor_records(t, r0, r1) == (0, 0)


def test_stabilizer_readout_repeats():
    # measuring the same X-type check twice via a fresh ancilla gives a
    # random first outcome and a pinned second one
    t = Tableau(4)  # qubits 0-2 data, 3 ancilla
    outs = []
    for _ in range(2):
        t.h(3)
        t.cx(3, 0)
        t.cx(3, 1)
        t.cx(3, 2)
        t.h(3)
        outs.append(t.measure(3))
        t.reset(3)
    assert t.records[outs[0]][1] != 0
    assert xor_records(t, outs[0], outs[1]) == (0, 0)


def test_random_circuits_keep_tableau_sane():
    rng = random.Random(8)
    for _ in range(25):
        n = 4
        t = Tableau(n)
        for _step in range(30):
            op = rng.randrange(6)
            q = rng.randrange(n)
            if op == 0:
                t.h(q)
            elif op == 1:
                t.s(q)
            elif op == 2:
                t.sdg(q)
            elif op == 3:
                a, b = rng.sample(range(n), 2)
                t.cx(a, b)
            elif op == 4:
                t.measure(q)
            else:
                t.reset(q)
        t.check_invariants()
        first = [t.measure(q) for q in range(n)]
        second = [t.measure(q) for q in range(n)]
        for a, b in zip(first, second):
            assert xor_records(t, a, b) == (0, 0)


def test_apply_pauli_mask_flips_deterministic_outcome():
    t = Tableau(3)
    t.apply_pauli(x_bits=0b101, z_bits=0)
    assert t.records[t.measure(0)] == (1, 0)
    assert t.records[t.measure(1)] == (0, 0)
    assert t.records[t.measure(2)] == (1, 0)
