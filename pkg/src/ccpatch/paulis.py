"""Bit-packed F2 symplectic algebra: Pauli operators, check matrices,
subsystem codes, qubit removal (gauge expansion), and a brute-force
logical-distance search.

Conventions
-----------
A Pauli operator on ``n`` qubits is stored as ``i**phase * X^x_bits * Z^z_bits``
with the X part written to the left.  ``phase`` is mod 4; Hermitian sign
(+1/-1) is exposed via :attr:`PauliOperator.sign`.  Commutation and span
membership ignore phases throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ConfigError, LogicalLossError, ResourceError

__all__ = [
    "PauliOperator",
    "CheckMatrix",
    "SubsystemCode",
    "commutes",
    "normalize_for_qubit",
    "gauge_expand",
    "min_logical_weight",
    "verify_distance_at_least",
]


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x_bits: int
    z_bits: int
    phase: int = 0  # power of i, mod 4

    def __post_init__(self):
        object.__setattr__(self, "phase", self.phase % 4)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_type_support(cls, n: int, kind: str, support: Iterable[int]) -> "PauliOperator":
        m = 0
        count = 0
        for q in support:
            if not 0 <= q < n:
                raise ConfigError(f"qubit {q} outside register of size {n}")
            m |= 1 << q
            count += 1
        if kind == "X":
            return cls(n, m, 0)
        if kind == "Z":
            return cls(n, 0, m)
        if kind == "Y":
            # Y = i X Z per site, so the stored phase absorbs one i per site.
            return cls(n, m, m, count % 4)
        raise ConfigError(f"unknown pauli type {kind!r}")

    @classmethod
    def from_json(cls, n: int, data: dict) -> "PauliOperator":
        return cls.from_type_support(n, data["type"], data["support"])

    # -- basic queries -----------------------------------------------------

    def support(self) -> tuple:
        m = self.x_bits | self.z_bits
        return tuple(q for q in range(self.n) if (m >> q) & 1)

    def weight(self) -> int:
        return (self.x_bits | self.z_bits).bit_count()

    @property
    def kind(self) -> str:
        if self.x_bits == 0 and self.z_bits == 0:
            return "I"
        if self.z_bits == 0:
            return "X"
        if self.x_bits == 0:
            return "Z"
        if self.x_bits == self.z_bits:
            return "Y"
        return "mixed"

    @property
    def sign(self) -> int:
        n_y = (self.x_bits & self.z_bits).bit_count()
        s = (self.phase - n_y) % 4
        if s == 0:
            return +1
        if s == 2:
            return -1
        raise ConfigError("operator has imaginary global phase")

    # -- algebra -----------------------------------------------------------

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        if self.n != other.n:
            raise ConfigError("width mismatch in pauli product")
        phase = (self.phase + other.phase + 2 * (self.z_bits & other.x_bits).bit_count()) % 4
        return PauliOperator(self.n, self.x_bits ^ other.x_bits, self.z_bits ^ other.z_bits, phase)

    def without_qubit(self, q: int) -> tuple:
        """Clear the single-qubit factor at q; return (operator, dropped kind)."""
        bit = 1 << q
        xq = bool(self.x_bits & bit)
        zq = bool(self.z_bits & bit)
        dropped = {(False, False): "I", (True, False): "X", (False, True): "Z", (True, True): "Y"}[(xq, zq)]
        return (
            PauliOperator(self.n, self.x_bits & ~bit, self.z_bits & ~bit, self.phase),
            dropped,
        )

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        kind = self.kind
        if kind in ("I", "mixed"):
            raise ConfigError(f"cannot serialize {kind} operator as type/support")
        return {"type": kind, "support": list(self.support())}

    def char_at(self, q: int) -> str:
        xq = (self.x_bits >> q) & 1
        zq = (self.z_bits >> q) & 1
        return "IXZY"[xq + 2 * zq] if not (xq and zq) else "Y"


def commutes(p: PauliOperator, q: PauliOperator) -> bool:
    if p.n != q.n:
        raise ConfigError("width mismatch in commutation check")
    return ((p.x_bits & q.z_bits).bit_count() + (p.z_bits & q.x_bits).bit_count()) % 2 == 0


# ---------------------------------------------------------------------------
# F2 span helpers over (x << n) | z integer keys; signs ignored.
# ---------------------------------------------------------------------------


def _key(op: PauliOperator) -> int:
    return (op.x_bits << op.n) | op.z_bits


def _reduce_against(v: int, basis: list) -> int:
    for b in basis:
        if v ^ b < v:
            v ^= b
    return v


def _basis_insert(v: int, basis: list) -> bool:
    """Reduce v against basis; insert if independent. Returns True if inserted."""
    v = _reduce_against(v, basis)
    if v == 0:
        return False
    basis.append(v)
    basis.sort(reverse=True)
    return True


def _span_basis(keys: Iterable[int]) -> list:
    basis: list = []
    for k in keys:
        _basis_insert(k, basis)
    return basis


def _solve_affine(rows: Sequence[tuple]) -> "int | None":
    """Solve an affine F2 system given as (variable mask, rhs bit) rows.

    Returns one solution as a coefficient bitmask (free variables zero),
    or None when the system is inconsistent.  Deterministic in row order.
    """
    pivots: list = []  # [pivot bit, reduced mask, rhs]
    for m, r in rows:
        for pb, pm, pr in pivots:
            if m & pb:
                m ^= pm
                r ^= pr
        if m == 0:
            if r:
                return None
            continue
        pivots.append((m & -m, m, r))
    for i in range(len(pivots)):
        pb, pm, pr = pivots[i]
        for j in range(len(pivots)):
            if j != i and (pivots[j][1] & pb):
                qb, qm, qr = pivots[j]
                pivots[j] = (qb, qm ^ pm, qr ^ pr)
    sol = 0
    for pb, _pm, pr in pivots:
        if pr:
            sol |= pb
    return sol


def _null_space(masks: Sequence[int], width: int) -> list:
    """Basis of {v : parity(v & m) == 0 for every m in masks} over F2.

    Vectors live on ``width`` bit positions; the basis is ordered by free
    column index, so the output is deterministic in the input order.
    """
    pivots: dict = {}  # pivot column -> reduced row mask
    for m in masks:
        cur = m
        while cur:
            lead = (cur & -cur).bit_length() - 1
            if lead in pivots:
                cur ^= pivots[lead]
            else:
                pivots[lead] = cur
                break
    cols = sorted(pivots)
    for c in cols:
        for c2 in cols:
            if c2 != c and (pivots[c2] >> c) & 1:
                pivots[c2] ^= pivots[c]
    basis = []
    for free in range(width):
        if free in pivots:
            continue
        v = 1 << free
        for c, m in pivots.items():
            if (m >> free) & 1:
                v |= 1 << c
        basis.append(v)
    return basis


@dataclass(frozen=True)
class CheckMatrix:
    n: int
    rows: tuple

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))
        for row in self.rows:
            if row.n != self.n:
                raise ConfigError("row width mismatch in check matrix")

    def rank(self) -> int:
        return len(_span_basis(_key(r) for r in self.rows))

    def contains(self, op: PauliOperator) -> bool:
        basis = _span_basis(_key(r) for r in self.rows)
        return _reduce_against(_key(op), basis) == 0

    def dump(self) -> str:
        lines = []
        for row in self.rows:
            chars = "".join(row.char_at(q) for q in range(self.n))
            n_y = (row.x_bits & row.z_bits).bit_count()
            s = (row.phase - n_y) % 4
            sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[s]
            lines.append(f"{chars} {sign}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Two-column elimination at one qubit (Prop.-1-style normalization)
# ---------------------------------------------------------------------------


def _two_column_reduce(rows: Sequence[PauliOperator], q: int):
    """Clear the (Z-at-q, X-at-q) columns, keeping at most one pivot per column.

    Returns (work_rows, pivot_indices, provenance) where provenance[i] is the
    set of input row indices whose product forms work_rows[i].
    """
    work = list(rows)
    prov = [{i} for i in range(len(work))]
    pivots: list = []
    for col in ("z", "x"):
        def bit_of(op):
            bits = op.z_bits if col == "z" else op.x_bits
            return (bits >> q) & 1

        pick = None
        for i, op in enumerate(work):
            if i in pivots:
                continue
            if bit_of(op):
                pick = i
                break
        if pick is None:
            continue
        pivots.append(pick)
        for j, op in enumerate(work):
            if j == pick:
                continue
            if bit_of(op):
                work[j] = op * work[pick]
                prov[j] = prov[j] | prov[pick]
    if len(pivots) == 1:
        p = work[pivots[0]]
        if ((p.x_bits >> q) & 1) and ((p.z_bits >> q) & 1):
            raise ConfigError(
                "lone Y-type pivot at qubit; generators outside supported CSS scope"
            )
    return work, pivots, prov


def normalize_for_qubit(gens: CheckMatrix, q: int):
    """Split generators into (R, A): R commutes with X_q and Z_q, |A| <= 2,
    each A member anticommutes with exactly one of X_q, Z_q."""
    rows = gens.rows
    if len(_span_basis(_key(r) for r in rows)) < len(rows):
        raise ConfigError("dependent generator rows (rank deficiency)")
    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            if not commutes(rows[i], rows[j]):
                raise ConfigError("generators must mutually commute")
    work, pivots, _ = _two_column_reduce(rows, q)
    a = [work[i] for i in pivots]
    r = [work[i] for i in range(len(work)) if i not in pivots]
    return r, a


# ---------------------------------------------------------------------------
# Subsystem codes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SubsystemCode:
    n: int
    stabilizers: CheckMatrix
    gauge_extra: tuple = ()
    logicals: tuple = ()
    active_qubits: int = 0
    removals: tuple = ()  # ((qubit, (dropped factor kinds...)), ...) removal log

    def __post_init__(self):
        object.__setattr__(self, "gauge_extra", tuple(self.gauge_extra))
        object.__setattr__(self, "logicals", tuple(tuple(p) for p in self.logicals))
        object.__setattr__(self, "removals", tuple(self.removals))

    # -- derived counts ----------------------------------------------------

    @property
    def n_active(self) -> int:
        return self.active_qubits.bit_count()

    @property
    def k(self) -> int:
        return len(self.logicals)

    @property
    def gauge_qubits(self) -> int:
        s = self.stabilizers.rank()
        total = len(
            _span_basis(
                [_key(r) for r in self.stabilizers.rows]
                + [_key(g) for g in self.gauge_extra]
            )
        )
        return (total - s) // 2

    def validate(self) -> None:
        rows = self.stabilizers.rows
        inactive = ~self.active_qubits
        for i, r in enumerate(rows):
            if (r.x_bits | r.z_bits) & inactive:
                raise ConfigError("stabilizer supported on inactive qubit")
            for j in range(i + 1, len(rows)):
                if not commutes(r, rows[j]):
                    raise ConfigError("stabilizers do not mutually commute")
            for g in self.gauge_extra:
                if not commutes(r, g):
                    raise ConfigError("stabilizer anticommutes with gauge generator")
            for pair in self.logicals:
                for l in pair:
                    if not commutes(r, l):
                        raise ConfigError("stabilizer anticommutes with logical")
        if self.stabilizers.rank() < len(rows):
            raise ConfigError("dependent stabilizer rows")
        for g in self.gauge_extra:
            if (g.x_bits | g.z_bits) & inactive:
                raise ConfigError("gauge generator supported on inactive qubit")
        for i, pair in enumerate(self.logicals):
            lx, lz = pair
            if (lx.x_bits | lx.z_bits | lz.x_bits | lz.z_bits) & inactive:
                raise ConfigError("logical supported on inactive qubit")
            if commutes(lx, lz):
                raise ConfigError("logical pair fails to anticommute")
            for j, other in enumerate(self.logicals):
                if i == j:
                    continue
                for l in other:
                    if not (commutes(lx, l) and commutes(lz, l)):
                        raise ConfigError("logical pairs not mutually commuting")
        s = self.stabilizers.rank()
        if self.n_active != self.k + s + self.gauge_qubits:
            raise ConfigError(
                f"count invariant violated: {self.n_active} active != "
                f"k={self.k} + s={s} + g={self.gauge_qubits}"
            )


def _recenter(cands: list, new_gauge: list):
    """Split generators into (center basis, complement).

    After several removals a deterministic operator can hide as a *product*
    of demoted generators; the null space of the commutation Gram matrix
    recovers every such element.  Generators that already commute with
    everything come out unchanged, in order.
    """
    gens = cands + new_gauge
    gram = []
    for g in gens:
        mask = 0
        for j, h in enumerate(gens):
            if not commutes(g, h):
                mask |= 1 << j
        gram.append(mask)
    center_ops: list = []
    center_basis: list = []
    for coeffs in _null_space(gram, len(gens)):
        op = None
        c = coeffs
        while c:
            i = (c & -c).bit_length() - 1
            op = gens[i] if op is None else op * gens[i]
            c &= c - 1
        if op is None or op.weight() == 0:
            continue
        if _basis_insert(_key(op), center_basis):
            center_ops.append(op)
    complement = []
    comp_basis = list(center_basis)
    for g in gens:
        if _basis_insert(_key(g), comp_basis):
            complement.append(g)
    return center_ops, complement


def _solve_logical_fix(l, pool, q, centrals, partner):
    """Find a representative of l's coset under span(pool) that avoids qubit q,
    commutes with every operator in centrals, and (when partner is given)
    anticommutes with partner.  Returns None when no such representative
    exists; otherwise deterministic in pool/centrals order."""
    rows = []
    for attr in ("x_bits", "z_bits"):
        mask = 0
        for i, p in enumerate(pool):
            if (getattr(p, attr) >> q) & 1:
                mask |= 1 << i
        rows.append((mask, (getattr(l, attr) >> q) & 1))
    targets = [(t, 0) for t in centrals]
    if partner is not None:
        targets.append((partner, 1))
    for t, want in targets:
        mask = 0
        for i, p in enumerate(pool):
            if not commutes(p, t):
                mask |= 1 << i
        rows.append((mask, want ^ (0 if commutes(l, t) else 1)))
    sol = _solve_affine(rows)
    if sol is None:
        return None
    out = l
    c = sol
    while c:
        i = (c & -c).bit_length() - 1
        out = out * pool[i]
        c &= c - 1
    return out


def gauge_expand(code: SubsystemCode, q: int) -> SubsystemCode:
    """Remove data qubit q: re-express generators so q decouples, demote the
    two pivot generators to gauge checks, and rewrite logicals off q."""
    if not (code.active_qubits >> q) & 1:
        raise ConfigError(f"qubit {q} already inactive (idempotency violation)")
    gauge_rows = list(code.gauge_extra)
    stab_rows = list(code.stabilizers.rows)
    rows = gauge_rows + stab_rows
    n_gauge = len(gauge_rows)
    work, pivots, prov = _two_column_reduce(rows, q)

    a_full = [work[i] for i in pivots]
    new_gauge: list = []
    cands: list = []
    for i in range(len(work)):
        if i in pivots:
            continue
        if any(j < n_gauge for j in prov[i]):
            new_gauge.append(work[i])
        else:
            cands.append(work[i])

    dropped_kinds = []
    for a in a_full:
        restricted, kind = a.without_qubit(q)
        dropped_kinds.append(kind)
        if restricted.weight() > 0:
            new_gauge.append(restricted)

    if new_gauge:
        cands, new_gauge = _recenter(cands, new_gauge)

    xq = PauliOperator.from_type_support(code.n, "X", (q,))
    zq = PauliOperator.from_type_support(code.n, "Z", (q,))
    # multipliers preserving the logical coset: detached single-qubit ops,
    # the demoted pivots, gauge checks, and the surviving stabilizers
    pool = [xq, zq] + a_full + new_gauge + cands

    new_logicals = []
    membership = _span_basis([_key(r) for r in cands] + [_key(g) for g in new_gauge])
    for lx, lz in code.logicals:
        fx = _solve_logical_fix(lx, pool, q, cands, None)
        if fx is None:
            raise LogicalLossError("logical cannot be moved off the removed qubit")
        if _reduce_against(_key(fx), membership) == 0:
            raise LogicalLossError("logical fell into the gauge group")
        fz = _solve_logical_fix(lz, pool, q, cands, fx)
        if fz is None:
            raise LogicalLossError("logical pair cannot be restored off the removed qubit")
        if _reduce_against(_key(fz), membership) == 0:
            raise LogicalLossError("logical fell into the gauge group")
        new_logicals.append((fx, fz))

    return SubsystemCode(
        n=code.n,
        stabilizers=CheckMatrix(code.n, tuple(cands)),
        gauge_extra=tuple(new_gauge),
        logicals=tuple(new_logicals),
        active_qubits=code.active_qubits & ~(1 << q),
        removals=code.removals + ((q, tuple(dropped_kinds)),),
    )


# ---------------------------------------------------------------------------
# Brute-force dressed-distance search (syndrome-bucket meet in the middle)
# ---------------------------------------------------------------------------

_DEFAULT_BUDGET = 30_000_000


def _css_rows(code: SubsystemCode):
    x_stabs, z_stabs, x_gauge, z_gauge = [], [], [], []
    for row in code.stabilizers.rows:
        if row.z_bits == 0:
            x_stabs.append(row.x_bits)
        elif row.x_bits == 0:
            z_stabs.append(row.z_bits)
        else:
            raise ConfigError("min_logical_weight requires CSS stabilizers")
    for op in code.gauge_extra:
        if op.z_bits == 0:
            x_gauge.append(op.x_bits)
        elif op.x_bits == 0:
            z_gauge.append(op.z_bits)
        else:
            raise ConfigError("min_logical_weight requires CSS gauge generators")
    return x_stabs, z_stabs, x_gauge, z_gauge


def _side_min(active, other_stabs, same_rows, t_max, budget_state, best_cap):
    """Minimum weight of a support commuting with other_stabs and outside
    span(same_rows), up to candidates of weight 2*t_max; None if absent."""
    span = _span_basis(same_rows)
    sigs = {}
    for q in active:
        s = 0
        for i, row in enumerate(other_stabs):
            if (row >> q) & 1:
                s |= 1 << i
        sigs[q] = s

    import itertools as _it

    best = None
    buckets = {0: [0]}  # syndrome -> list of support masks; seeded with empty set
    budget_state[0] += 1
    for t in range(1, t_max + 1):
        level_count = math.comb(len(active), t)
        if budget_state[0] + level_count > budget_state[1]:
            raise ResourceError(
                f"distance enumeration budget exceeded at level {t} "
                f"({budget_state[0] + level_count} > {budget_state[1]} subsets)"
            )
        budget_state[0] += level_count
        for sub in _it.combinations(active, t):
            m = 0
            s = 0
            for q in sub:
                m |= 1 << q
                s ^= sigs[q]
            bucket = buckets.setdefault(s, [])
            for prior in bucket:
                cand = m ^ prior
                if cand == 0:
                    continue
                w = cand.bit_count()
                if best is not None and w >= best:
                    continue
                if best_cap is not None and w >= best_cap:
                    continue
                if _reduce_against(cand, span) != 0:
                    best = w
            bucket.append(m)
        if best is not None and best <= 2 * t:
            return best
    return best


def min_logical_weight(code: SubsystemCode, w_max: int, budget: int = _DEFAULT_BUDGET):
    """Minimum weight over dressed logical operators, or None if it exceeds
    w_max.  CSS search: X-type and Z-type candidates are enumerated
    separately; any mixed-type logical is at least as heavy as one of its
    pure-type parts, so the split is exact."""
    if w_max < 1:
        raise ConfigError("w_max must be >= 1")
    x_stabs, z_stabs, x_gauge, z_gauge = _css_rows(code)
    active = [q for q in range(code.n) if (code.active_qubits >> q) & 1]
    t_max = (w_max + 1) // 2
    budget_state = [0, budget]
    best_x = _side_min(active, z_stabs, x_stabs + x_gauge, t_max, budget_state, None)
    best_z = _side_min(active, x_stabs, z_stabs + z_gauge, t_max, budget_state, best_x)
    candidates = [b for b in (best_x, best_z) if b is not None]
    if not candidates:
        return None
    best = min(candidates)
    return best if best <= w_max else None


def verify_distance_at_least(code: SubsystemCode, w: int, budget: int = _DEFAULT_BUDGET) -> bool:
    """True iff no dressed logical operator has weight < w."""
    if w <= 1:
        return True
    found = min_logical_weight(code, w_max=w - 1, budget=budget)
    return found is None
