"""Bit-blasting of term DAGs into CNF through a structurally hashed gate layer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..minir.ir import INT_MIN
from .terms import BOOL, Term, TermBuilder

TRUE, FALSE = 1, -1  # variable 1 is fixed true by a unit clause


@dataclass
class CnfFormula:
    num_vars: int
    clauses: list[list[int]]
    # input byte index -> 8 CNF variables, least significant bit first
    var_map: dict[int, list[int]] = field(default_factory=dict)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def read_dimacs(text: str) -> CnfFormula:
    num_vars = None
    clauses: list[list[int]] = []
    cur: list[int] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "c%":
            continue
        if line[0] == "p":
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            num_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(lit)
    if num_vars is None:
        raise ValueError("missing 'p cnf' header")
    if cur:
        clauses.append(cur)
    return CnfFormula(num_vars, clauses)


class GateBuilder:
    """AND/XOR gates over literals with constant folding and structural hashing."""

    def __init__(self):
        self.num_vars = 1
        self.clauses: list[list[int]] = [[TRUE]]
        self.gates: list[tuple[int, str, int, int]] = []
        self._cache: dict[tuple, int] = {}

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def new_vars(self, n: int) -> list[int]:
        return [self.new_var() for _ in range(n)]

    def and2(self, a: int, b: int) -> int:
        if a == FALSE or b == FALSE or a == -b:
            return FALSE
        if a == TRUE or a == b:
            return b
        if b == TRUE:
            return a
        key = ("a", min(a, b), max(a, b))
        v = self._cache.get(key)
        if v is None:
            v = self.new_var()
            self.clauses += [[-v, a], [-v, b], [v, -a, -b]]
            self.gates.append((v, "and", a, b))
            self._cache[key] = v
        return v

    def xor2(self, a: int, b: int) -> int:
        if a == FALSE:
            return b
        if b == FALSE:
            return a
        if a == TRUE:
            return -b
        if b == TRUE:
            return -a
        if a == b:
            return FALSE
        if a == -b:
            return TRUE
        sign = 1
        if a < 0:
            a, sign = -a, -sign
        if b < 0:
            b, sign = -b, -sign
        key = ("x", min(a, b), max(a, b))
        v = self._cache.get(key)
        if v is None:
            v = self.new_var()
            self.clauses += [[-v, a, b], [-v, -a, -b], [v, -a, b], [v, a, -b]]
            self.gates.append((v, "xor", a, b))
            self._cache[key] = v
        return sign * v

    def or2(self, a: int, b: int) -> int:
        return -self.and2(-a, -b)

    def mux(self, s: int, t: int, e: int) -> int:
        if s == TRUE or t == e:
            return t
        if s == FALSE:
            return e
        return self.or2(self.and2(s, t), self.and2(-s, e))

    def and_n(self, lits) -> int:
        out = TRUE
        for lit in lits:
            out = self.and2(out, lit)
            if out == FALSE:
                return FALSE
        return out

    def or_n(self, lits) -> int:
        return -self.and_n(-l for l in lits)

    # -- word-level circuits (bit lists are LSB first) ----------------------------

    def full_add(self, a: int, b: int, c: int) -> tuple[int, int]:
        ab = self.xor2(a, b)
        return self.xor2(ab, c), self.or2(self.and2(a, b), self.and2(c, ab))

    def add(self, xs: list[int], ys: list[int], carry: int = FALSE) -> tuple[list[int], int]:
        out = []
        for a, b in zip(xs, ys):
            s, carry = self.full_add(a, b, carry)
            out.append(s)
        return out, carry

    def negate(self, xs: list[int]) -> list[int]:
        return self.add([-x for x in xs], [FALSE] * len(xs), TRUE)[0]

    def cond_negate(self, xs: list[int], s: int) -> list[int]:
        return self.add([self.xor2(x, s) for x in xs], [FALSE] * len(xs), s)[0]

    def umul(self, xs: list[int], ys: list[int], width: int) -> list[int]:
        """Unsigned product truncated to ``width`` bits (shift-and-add)."""
        acc = [FALSE] * width
        for j, y in enumerate(ys):
            if y == FALSE or j >= width:
                continue
            pp = [self.and2(x, y) for x in xs][:width - j]
            hi, carry = self.add(acc[j:j + len(pp)], pp)
            acc[j:j + len(pp)] = hi
            k = j + len(pp)
            while k < width and carry != FALSE:  # ripple the carry upward
                acc[k], carry = self.xor2(acc[k], carry), self.and2(acc[k], carry)
                k += 1
        return acc

    def equal(self, xs: list[int], ys: list[int]) -> int:
        return self.and_n(-self.xor2(a, b) for a, b in zip(xs, ys))

    def ult(self, xs: list[int], ys: list[int]) -> int:
        """Unsigned less-than via the borrow of xs - ys."""
        _, carry = self.add(xs, [-y for y in ys], TRUE)
        return -carry

    # -- evaluation ------------------------------------------------------------

    def simulate(self, inputs: dict[int, np.ndarray], n: int):
        """Vectorized evaluation of all gates over ``n`` samples.

        ``inputs`` maps free variables to boolean arrays; unspecified free
        variables are false.  Returns a function literal -> boolean array.
        """
        vals: dict[int, np.ndarray] = {TRUE: np.ones(n, dtype=bool)}
        vals.update(inputs)
        zero = np.zeros(n, dtype=bool)

        def get(lit: int) -> np.ndarray:
            v = vals.get(abs(lit), zero)
            return v if lit > 0 else ~v
        for out, kind, a, b in self.gates:
            vals[out] = (get(a) & get(b)) if kind == "and" else (get(a) ^ get(b))
        return get


def _sext(bits: list[int], width: int) -> list[int]:
    return bits + [bits[-1]] * (width - len(bits))


def _const_bits(v: int, width: int = 32) -> list[int]:
    return [TRUE if (v >> i) & 1 else FALSE for i in range(width)]


class Blaster:
    """Maps terms to literals (booleans) or 32-literal lists (words)."""

    def __init__(self, terms: TermBuilder, gates: GateBuilder | None = None):
        self.terms = terms
        self.g = gates or GateBuilder()
        self.byte_vars: dict[int, list[int]] = {}
        self.fresh_vars: dict[int, list[int]] = {}
        self._memo: dict[int, object] = {}
        self._wide: dict[tuple, list[int]] = {}
        self._divrel: dict[tuple, tuple[list[int], list[int]]] = {}

    def byte(self, index: int) -> list[int]:
        bits = self.byte_vars.get(index)
        if bits is None:
            bits = self.byte_vars[index] = self.g.new_vars(8)
        return bits

    def lit(self, t: Term) -> int:
        assert t.sort == BOOL
        return self.blast(t)

    def bits(self, t: Term) -> list[int]:
        assert t.sort != BOOL
        return self.blast(t)

    def blast(self, term: Term):
        memo = self._memo
        stack = [term]
        while stack:
            t = stack[-1]
            if t.id in memo:
                stack.pop()
                continue
            pending = [a for a in t.args if a.id not in memo]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            memo[t.id] = self._gate(t, [memo[a.id] for a in t.args])
        return memo[term.id]

    # -- wide arithmetic helpers --------------------------------------------

    def _addsub33(self, op: str, a: Term, b: Term) -> list[int]:
        key = (op, a.id, b.id)
        w = self._wide.get(key)
        if w is None:
            x, y = _sext(self.bits(a), 33), _sext(self.bits(b), 33)
            if op == "add":
                w, _ = self.g.add(x, y)
            else:
                w, _ = self.g.add(x, [-v for v in y], TRUE)
            self._wide[key] = w
        return w

    def _smul64(self, xs: list[int], ys: list[int]) -> list[int]:
        g = self.g
        sx, sy = xs[31], ys[31]
        ax, ay = g.cond_negate(xs, sx), g.cond_negate(ys, sy)  # magnitudes as unsigned 32-bit
        mag = g.umul(ax, ay, 64)
        return g.cond_negate(mag, g.xor2(sx, sy))

    def _mul64(self, a: Term, b: Term) -> list[int]:
        key = ("mul", a.id, b.id)
        w = self._wide.get(key)
        if w is None:
            w = self._wide[key] = self._smul64(self.bits(a), self.bits(b))
        return w

    def _shl64(self, a: Term, b: Term) -> list[int]:
        key = ("shl", a.id, b.id)
        w = self._wide.get(key)
        if w is None:
            w = _sext(self.bits(a), 64)
            amount = self.bits(b)
            for stage in range(5):
                s, d = amount[stage], 1 << stage
                w = [self.g.mux(s, w[i - d] if i >= d else FALSE, w[i]) for i in range(64)]
            self._wide[key] = w
        return w

    def _range_faults(self, w: list[int]) -> tuple[int, int]:
        """(overflow, underflow) literals for a sign-extended wide value."""
        g = self.g
        top = w[-1]
        ovf = g.and2(-top, g.or_n(w[31:-1]))
        unf = g.and2(top, g.or_n(-x for x in w[31:-1]))
        return ovf, unf

    def _divmod(self, a: Term, b: Term) -> tuple[list[int], list[int]]:
        key = (a.id, b.id)
        rel = self._divrel.get(key)
        if rel is not None:
            return rel
        g = self.g
        n, d = self.bits(a), self.bits(b)
        q, r = g.new_vars(32), g.new_vars(32)
        prod = self._smul64(q, d)
        total, _ = g.add(prod, _sext(r, 64))
        same = g.equal(total, _sext(n, 64))
        abs_r, abs_d = g.cond_negate(r, r[31]), g.cond_negate(d, d[31])
        smaller = g.ult(abs_r + [FALSE], abs_d + [FALSE])  # 33 bits: |MIN| fits unsigned
        r_zero = g.and_n(-x for x in r)
        sign_ok = g.or2(r_zero, -g.xor2(r[31], n[31]))
        relation = g.and_n([same, smaller, sign_ok])
        d_nonzero = g.or_n(d)
        n_min = g.equal(n, _const_bits(INT_MIN))
        d_m1 = g.and_n(d)
        guard = g.and2(d_nonzero, -g.and2(n_min, d_m1))
        g.clauses.append([-guard, relation])  # q, r are only meaningful when the guard holds
        # MIN / -1 faults, but MIN % -1 is a plain 0
        g.clauses.append([-g.and2(n_min, d_m1), r_zero])
        rel = self._divrel[key] = (q, r)
        return rel

    # -- per-operator gates --------------------------------------------------

    def _gate(self, t: Term, args: list):
        g, op = self.g, t.op
        if op == "const":
            return (TRUE if t.value else FALSE) if t.sort == BOOL else _const_bits(t.value)
        if op == "inbyte":
            return self.byte(t.value) + [FALSE] * 24
        if op == "inword":
            return [b for k in range(4) for b in self.byte(t.value + k)]
        if op == "fresh":
            bits = self.fresh_vars.get(t.value)
            if bits is None:
                bits = self.fresh_vars[t.value] = g.new_vars(32)
            return bits
        a, b = t.args[0] if t.args else None, t.args[1] if len(t.args) > 1 else None
        if op in ("add", "sub"):
            return self._addsub33(op, a, b)[:32]
        if op == "mul":
            return self._mul64(a, b)[:32]
        if op == "div":
            return self._divmod(a, b)[0]
        if op == "mod":
            return self._divmod(a, b)[1]
        if op == "shl":
            return self._shl64(a, b)[:32]
        if op == "shr":
            w, amount = args[0], args[1]
            for stage in range(5):
                s, d = amount[stage], 1 << stage
                w = [g.mux(s, w[i + d] if i + d < 32 else w[31], w[i]) for i in range(32)]
            return w
        if op == "and" and t.sort != BOOL:
            return [g.and2(x, y) for x, y in zip(*args)]
        if op == "or":
            return [g.or2(x, y) for x, y in zip(*args)]
        if op == "xor":
            return [g.xor2(x, y) for x, y in zip(*args)]
        if op == "eq":
            return g.equal(args[0], args[1])
        if op == "lt":
            return self._addsub33("sub", a, b)[32]
        if op == "le":
            return -self._addsub33("sub", b, a)[32]
        if op == "ite":
            c, x, y = args
            if t.sort == BOOL:
                return g.mux(c, x, y)
            return [g.mux(c, p, q) for p, q in zip(x, y)]
        if op == "b2w":
            return [args[0]] + [FALSE] * 31
        if op == "not":
            return -args[0]
        if op == "and":
            return g.and_n(args)
        if op in ("add_ovf", "add_unf", "sub_ovf", "sub_unf"):
            w = self._addsub33(op[:3], a, b)
            return self._range_faults(w)[0 if op.endswith("ovf") else 1]
        if op in ("mul_ovf", "mul_unf"):
            return self._range_faults(self._mul64(a, b))[0 if op == "mul_ovf" else 1]
        if op in ("shl_ovf", "shl_unf"):
            return self._range_faults(self._shl64(a, b))[0 if op == "shl_ovf" else 1]
        if op == "div_ovf":
            return g.and2(g.equal(args[0], _const_bits(INT_MIN)), g.and_n(args[1]))
        if op == "neg_ovf":
            return g.equal(args[0], _const_bits(INT_MIN))
        raise ValueError(f"cannot blast {op}")  # pragma: no cover

    # -- models ------------------------------------------------------------------

    def decode_bytes(self, model: dict[int, bool], length: int) -> bytes:
        """Input bytes 0..length-1 from a model; unconstrained bits default to 0."""
        out = bytearray(length)
        for i in range(length):
            bits = self.byte_vars.get(i)
            if bits:
                out[i] = sum(1 << k for k, v in enumerate(bits) if model.get(v, False))
        return bytes(out)

    def formula(self) -> CnfFormula:
        return CnfFormula(self.g.num_vars, [list(c) for c in self.g.clauses], dict(self.byte_vars))
