"""Stabilizer-state simulator with symbolic measurement outcomes.

The state of ``n`` qubits is tracked as the usual 2n-row binary tableau
(destabilizers first, then stabilizers).  Every measurement outcome is
stored as an affine expression over "coin" variables: a constant bit plus
an F2 bitmask over the coins minted so far.  A fresh coin is minted for
each non-deterministic measurement, so an outcome (or any XOR of
outcomes) is deterministic exactly when its combined mask is zero and its
noise-free value is the constant bit.

Resets are modeled as a measurement followed by a classically controlled
bit-flip, which keeps every row sign affine in the coins.
"""

from __future__ import annotations

from typing import List, Tuple

Expr = Tuple[int, int]  # (constant bit, coin bitmask)


def _parity(v: int) -> int:
    return v.bit_count() & 1


def _g_total(x1: int, z1: int, x2: int, z2: int) -> int:
    """Signed number of i factors when multiplying row (x1,z1) by (x2,z2),
    left factor first, summed over all qubits."""
    y1 = x1 & z1
    xo = x1 & ~z1
    zo = z1 & ~x1
    plus = (y1 & z2 & ~x2) | (xo & x2 & z2) | (zo & x2 & ~z2)
    minus = (y1 & x2 & ~z2) | (xo & z2 & ~x2) | (zo & x2 & z2)
    return plus.bit_count() - minus.bit_count()


class Tableau:
    """Mutable stabilizer state over qubits ``0 .. n-1``."""

    def __init__(self, n: int):
        if n <= 0:
            raise ValueError("need at least one qubit")
        self.n = n
        self._x: List[int] = [0] * (2 * n)
        self._z: List[int] = [0] * (2 * n)
        self._rc: List[int] = [0] * (2 * n)  # sign constants
        self._rm: List[int] = [0] * (2 * n)  # sign coin masks
        for i in range(n):
            self._x[i] = 1 << i
            self._z[n + i] = 1 << i
        self.num_coins = 0
        self.records: List[Expr] = []

    # -- single-qubit Cliffords ------------------------------------------

    def h(self, q: int) -> None:
        bit = 1 << q
        x, z, rc = self._x, self._z, self._rc
        for i in range(2 * self.n):
            xb = x[i] & bit
            zb = z[i] & bit
            if xb and zb:
                rc[i] ^= 1
            elif xb or zb:
                x[i] ^= bit
                z[i] ^= bit

    def s(self, q: int) -> None:
        bit = 1 << q
        x, z, rc = self._x, self._z, self._rc
        for i in range(2 * self.n):
            if x[i] & bit:
                if z[i] & bit:
                    rc[i] ^= 1
                z[i] ^= bit

    def sdg(self, q: int) -> None:
        bit = 1 << q
        x, z, rc = self._x, self._z, self._rc
        for i in range(2 * self.n):
            if x[i] & bit:
                if not z[i] & bit:
                    rc[i] ^= 1
                z[i] ^= bit

    # -- fixed Paulis ----------------------------------------------------

    def x(self, q: int) -> None:
        self.apply_pauli(1 << q, 0)

    def y(self, q: int) -> None:
        self.apply_pauli(1 << q, 1 << q)

    def z(self, q: int) -> None:
        self.apply_pauli(0, 1 << q)

    def apply_pauli(self, x_bits: int, z_bits: int) -> None:
        """Conjugate the state by a fixed Pauli; rows that anticommute with
        it pick up a sign."""
        x, z, rc = self._x, self._z, self._rc
        for i in range(2 * self.n):
            if _parity((x_bits & z[i]) ^ (z_bits & x[i])):
                rc[i] ^= 1

    # -- two-qubit Cliffords ---------------------------------------------

    def cx(self, c: int, t: int) -> None:
        if c == t:
            raise ValueError("control equals target")
        cb, tb = 1 << c, 1 << t
        x, z, rc = self._x, self._z, self._rc
        for i in range(2 * self.n):
            xc = x[i] & cb
            zt = z[i] & tb
            if xc and zt and (bool(x[i] & tb) == bool(z[i] & cb)):
                rc[i] ^= 1
            if xc:
                x[i] ^= tb
            if zt:
                z[i] ^= cb

    def cz(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("control equals target")
        ab, bb = 1 << a, 1 << b
        x, z, rc = self._x, self._z, self._rc
        for i in range(2 * self.n):
            xa = x[i] & ab
            xb = x[i] & bb
            if xa and xb and (bool(z[i] & ab) != bool(z[i] & bb)):
                rc[i] ^= 1
            if xb:
                z[i] ^= ab
            if xa:
                z[i] ^= bb

    def swap(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("swap of a qubit with itself")
        for arr in (self._x, self._z):
            for i in range(2 * self.n):
                lo = (arr[i] >> a) & 1
                hi = (arr[i] >> b) & 1
                if lo != hi:
                    arr[i] ^= (1 << a) | (1 << b)

    def cxswap(self, a: int, b: int) -> None:
        """CX with control ``a`` followed by a swap of the pair."""
        self.cx(a, b)
        self.swap(a, b)

    # -- measurement and reset -------------------------------------------

    def _rowsum(self, h: int, i: int) -> None:
        t = 2 * self._rc[h] + 2 * self._rc[i]
        t += _g_total(self._x[i], self._z[i], self._x[h], self._z[h])
        t %= 4
        # a destabilizer times its own stabilizer partner is imaginary, but
        # destabilizer signs are never read, so only stabilizer rows are held
        # to a real product
        if t & 1 and h >= self.n:
            raise AssertionError("imaginary sign in row product")
        self._rc[h] = (t >> 1) & 1
        self._rm[h] ^= self._rm[i]
        self._x[h] ^= self._x[i]
        self._z[h] ^= self._z[i]

    def _collapse(self, q: int) -> Expr:
        """Measure Z on qubit q, updating the state; returns the outcome
        expression without recording it."""
        n = self.n
        bit = 1 << q
        p = -1
        for i in range(n, 2 * n):
            if self._x[i] & bit:
                p = i
                break
        if p >= 0:
            for i in range(2 * n):
                if i != p and (self._x[i] & bit):
                    self._rowsum(i, p)
            d = p - n
            self._x[d] = self._x[p]
            self._z[d] = self._z[p]
            self._rc[d] = self._rc[p]
            self._rm[d] = self._rm[p]
            coin = self.num_coins
            self.num_coins += 1
            self._x[p] = 0
            self._z[p] = bit
            self._rc[p] = 0
            self._rm[p] = 1 << coin
            return (0, 1 << coin)
        # deterministic: multiply out the stabilizers flagged by the
        # destabilizer rows that anticommute with Z_q
        sx = sz = sc = sm = 0
        for i in range(n):
            if self._x[i] & bit:
                t = 2 * sc + 2 * self._rc[n + i]
                t += _g_total(self._x[n + i], self._z[n + i], sx, sz)
                t %= 4
                if t & 1:
                    raise AssertionError("imaginary sign in row product")
                sc = t >> 1
                sm ^= self._rm[n + i]
                sx ^= self._x[n + i]
                sz ^= self._z[n + i]
        if sx != 0 or sz != bit:
            raise AssertionError("deterministic outcome is not a Z product")
        return (sc, sm)

    def measure(self, q: int) -> int:
        """Measure qubit q in the Z basis; returns the new record index."""
        self.records.append(self._collapse(q))
        return len(self.records) - 1

    def reset(self, q: int) -> None:
        """Force qubit q to |0> regardless of its current state."""
        const, mask = self._collapse(q)
        if const == 0 and mask == 0:
            return
        bit = 1 << q
        for i in range(2 * self.n):
            if self._z[i] & bit:
                self._rc[i] ^= const
                self._rm[i] ^= mask

    # -- introspection -----------------------------------------------------

    def snapshot(self):
        return (
            tuple(self._x),
            tuple(self._z),
            tuple(self._rc),
            tuple(self._rm),
            self.num_coins,
        )

    def check_invariants(self) -> None:
        """Destabilizer i must anticommute with stabilizer i and commute
        with every other row."""
        n = self.n

        def omega(i: int, j: int) -> int:
            return _parity(
                (self._x[i] & self._z[j]) ^ (self._z[i] & self._x[j])
            )

        for i in range(n):
            for j in range(n):
                if omega(i, n + j) != (1 if i == j else 0):
                    raise AssertionError("broken destabilizer pairing")
                if omega(i, j) != 0 or omega(n + i, n + j) != 0:
                    raise AssertionError("rows of equal kind must commute")
