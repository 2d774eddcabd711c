"""Hash-consed bit-vector term DAG with constant folding.

Two sorts: 32-bit signed words and booleans.  Inputs are bytes of the
test-case stream.  Fault predicates (``add_ovf`` and friends) are terms
too, so a verification condition is a plain boolean DAG.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..minir.ir import INT_MAX, INT_MIN
from ..vm.semantics import eval_op, trunc_div, wrap32

WORD, BOOL = "w", "b"

# word x word -> word
WORD_OPS = ("add", "sub", "mul", "div", "mod", "and", "or", "xor", "shl", "shr")
# word x word -> bool
CMP_OPS = ("eq", "ne", "lt", "le", "gt", "ge")
# fault predicates, word x word -> bool (neg_ovf is unary)
FAULT_OPS = ("add_ovf", "add_unf", "sub_ovf", "sub_unf", "mul_ovf", "mul_unf",
             "shl_ovf", "shl_unf", "div_ovf", "neg_ovf")


@dataclass(frozen=True, eq=False)
class Term:
    id: int
    op: str
    sort: str
    args: tuple["Term", ...] = ()
    value: int = 0  # constant value, or byte index for "inbyte"/"inword"

    @property
    def is_const(self) -> bool:
        return self.op == "const"

    def __hash__(self) -> int:
        return self.id

    def __eq__(self, other) -> bool:
        return self is other

    def __repr__(self) -> str:
        if self.op == "const":
            return str(self.value) if self.sort == WORD else str(bool(self.value)).lower()
        if self.op in ("inbyte", "inword"):
            return f"{self.op}[{self.value}]"
        if self.op == "fresh":
            return f"fresh{self.value}"
        return f"({self.op} {' '.join(map(repr, self.args))})"


def _fault(op: str, a: int, b: int) -> bool:
    if op == "add_ovf":
        return a + b > INT_MAX
    if op == "add_unf":
        return a + b < INT_MIN
    if op == "sub_ovf":
        return a - b > INT_MAX
    if op == "sub_unf":
        return a - b < INT_MIN
    if op == "mul_ovf":
        return a * b > INT_MAX
    if op == "mul_unf":
        return a * b < INT_MIN
    if op == "shl_ovf":
        return (a << (b & 31)) > INT_MAX
    if op == "shl_unf":
        return (a << (b & 31)) < INT_MIN
    if op == "div_ovf":
        return a == INT_MIN and b == -1
    if op == "neg_ovf":
        return a == INT_MIN
    raise ValueError(op)


def _word_fold(op: str, a: int, b: int) -> int:
    """Wrapped 32-bit result; faulting cases are excluded by their guards elsewhere."""
    if op in ("div", "mod"):
        if b == 0:
            return 0
        q = trunc_div(a, b)
        return wrap32(q) if op == "div" else a - q * b
    if op == "add":
        return wrap32(a + b)
    if op == "sub":
        return wrap32(a - b)
    if op == "mul":
        return wrap32(a * b)
    if op == "shl":
        return wrap32(a << (b & 31))
    if op == "shr":
        return a >> (b & 31)
    if op == "and":
        return a & b
    if op == "or":
        return a | b
    if op == "xor":
        return a ^ b
    raise ValueError(op)


class TermBuilder:
    """Factory that interns terms and folds constants."""

    def __init__(self):
        self._table: dict[tuple, Term] = {}
        self._next = 0
        self.TRUE = self._mk("const", BOOL, (), 1)
        self.FALSE = self._mk("const", BOOL, (), 0)
        self.fresh_count = 0

    def _mk(self, op: str, sort: str, args: tuple = (), value: int = 0) -> Term:
        key = (op, sort, tuple(a.id for a in args), value)
        t = self._table.get(key)
        if t is None:
            t = Term(self._next, op, sort, args, value)
            self._next += 1
            self._table[key] = t
        return t

    def __len__(self) -> int:
        return self._next

    # leaves

    def const(self, v: int) -> Term:
        if not INT_MIN <= v <= INT_MAX:
            raise ValueError(f"constant {v} is outside the 32-bit range")
        return self._mk("const", WORD, (), v)

    def boolean(self, b: bool) -> Term:
        return self.TRUE if b else self.FALSE

    def inbyte(self, index: int) -> Term:
        """Zero-extended input byte at stream offset ``index``."""
        return self._mk("inbyte", WORD, (), index)

    def inword(self, index: int) -> Term:
        """Little-endian signed word from stream bytes index..index+3."""
        return self._mk("inword", WORD, (), index)

    def fresh(self) -> Term:
        """An unconstrained word (quotients and remainders)."""
        self.fresh_count += 1
        return self._mk("fresh", WORD, (), self.fresh_count)

    # word operations

    def binop(self, op: str, a: Term, b: Term) -> Term:
        if op in CMP_OPS:
            return self.b2w(self.cmp(op, a, b))
        if op in ("land", "lor"):
            x, y = self.nonzero(a), self.nonzero(b)
            return self.b2w(self.and_(x, y) if op == "land" else self.or_(x, y))
        assert op in WORD_OPS, op
        if a.is_const and b.is_const:
            return self.const(_word_fold(op, a.value, b.value))
        if op in ("add", "or", "xor") and b.is_const and b.value == 0:
            return a
        if op in ("add", "or", "xor") and a.is_const and a.value == 0:
            return b
        if op in ("sub", "shl", "shr") and b.is_const and b.value == 0:
            return a
        if op == "mul":
            for x, y in ((a, b), (b, a)):
                if x.is_const and x.value == 0:
                    return x
                if x.is_const and x.value == 1:
                    return y
        if op == "and":
            for x, y in ((a, b), (b, a)):
                if x.is_const and x.value == 0:
                    return x
                if x.is_const and x.value == -1:
                    return y
        if op in ("add", "mul", "and", "or", "xor") and a.id > b.id:
            a, b = b, a  # canonical order for commutative operators
        return self._mk(op, WORD, (a, b))

    def neg(self, a: Term) -> Term:
        return self.binop("sub", self.const(0), a)

    def bnot(self, a: Term) -> Term:
        return self.binop("xor", a, self.const(-1))

    def unop(self, op: str, a: Term) -> Term:
        if op == "neg":
            return self.neg(a)
        if op == "bnot":
            return self.bnot(a)
        if op == "not":
            return self.b2w(self.not_(self.nonzero(a)))
        if op == "copy":
            return a
        raise ValueError(op)

    def ite(self, c: Term, a: Term, b: Term) -> Term:
        if c.is_const:
            return a if c.value else b
        if a is b:
            return a
        return self._mk("ite", a.sort, (c, a, b))

    def b2w(self, c: Term) -> Term:
        if c.is_const:
            return self.const(c.value)
        return self._mk("b2w", WORD, (c,))

    # booleans

    def cmp(self, op: str, a: Term, b: Term) -> Term:
        if a.is_const and b.is_const:
            v, _ = eval_op(op, a.value, b.value)
            return self.boolean(bool(v))
        if op == "ne":
            return self.not_(self.cmp("eq", a, b))
        if op == "gt":
            return self.cmp("lt", b, a)
        if op == "ge":
            return self.cmp("le", b, a)
        if a is b:
            return self.boolean(op in ("eq", "le"))
        if op == "eq":
            if a.is_const:
                a, b = b, a
            if a.op == "b2w" and b.is_const:  # (b2w c) == k
                c = a.args[0]
                return c if b.value == 1 else self.not_(c) if b.value == 0 else self.FALSE
            if a.id > b.id:
                a, b = b, a
        return self._mk(op, BOOL, (a, b))

    def nonzero(self, a: Term) -> Term:
        if a.op == "b2w":
            return a.args[0]
        return self.cmp("ne", a, self.const(0))

    def not_(self, c: Term) -> Term:
        if c.is_const:
            return self.boolean(not c.value)
        if c.op == "not":
            return c.args[0]
        return self._mk("not", BOOL, (c,))

    def and_(self, *cs: Term) -> Term:
        args = []
        for c in cs:
            if c.is_const:
                if not c.value:
                    return self.FALSE
                continue
            if c not in args:
                args.append(c)
        if not args:
            return self.TRUE
        if len(args) == 1:
            return args[0]
        args.sort(key=lambda t: t.id)
        return self._mk("and", BOOL, tuple(args))

    def or_(self, *cs: Term) -> Term:
        return self.not_(self.and_(*(self.not_(c) for c in cs)))

    def fault(self, op: str, a: Term, b: Term | None = None) -> Term:
        b = b if b is not None else self.const(0)
        if a.is_const and b.is_const:
            return self.boolean(_fault(op, a.value, b.value))
        if op in ("add_ovf", "add_unf", "sub_ovf", "sub_unf") and b.is_const and b.value == 0:
            return self.FALSE
        if op in ("add_ovf", "add_unf") and a.is_const and a.value == 0:
            return self.FALSE
        if op in ("mul_ovf", "mul_unf"):
            for x in (a, b):
                if x.is_const and x.value in (0, 1):
                    return self.FALSE
        if op in ("shl_ovf", "shl_unf") and b.is_const and (b.value & 31) == 0:
            return self.FALSE
        if op == "div_ovf" and b.is_const and b.value != -1:
            return self.FALSE
        return self._mk(op, BOOL, (a, b))


def evaluate(term: Term, env, cache: dict | None = None) -> int:
    """Concrete value of ``term``.  ``env(op, value)`` supplies leaves."""
    cache = {} if cache is None else cache
    stack = [term]
    while stack:
        t = stack[-1]
        if t.id in cache:
            stack.pop()
            continue
        pending = [a for a in t.args if a.id not in cache]
        if pending:
            stack.extend(pending)
            continue
        stack.pop()
        a = [cache[x.id] for x in t.args]
        op = t.op
        if op == "const":
            v = t.value
        elif op in ("inbyte", "inword", "fresh"):
            v = env(op, t.value)
        elif op in WORD_OPS:
            v = _word_fold(op, a[0], a[1])
        elif op in CMP_OPS:
            v = int(eval_op(op, a[0], a[1])[0])
        elif op in FAULT_OPS:
            v = int(_fault(op, a[0], a[1]))
        elif op == "ite":
            v = a[1] if a[0] else a[2]
        elif op == "b2w":
            v = a[0]
        elif op == "not":
            v = 1 - a[0]
        elif op == "and":
            v = int(all(a))
        else:  # pragma: no cover
            raise ValueError(op)
        cache[t.id] = v
    return cache[term.id]


def input_env(data: bytes, fresh: dict | None = None):
    """Leaf valuation reading a concrete byte stream (past-the-end bytes are 0)."""
    def byte(i: int) -> int:
        return data[i] if i < len(data) else 0

    def env(op: str, value: int) -> int:
        if op == "inbyte":
            return byte(value)
        if op == "inword":
            raw = sum(byte(value + k) << (8 * k) for k in range(4))
            return raw - (1 << 32) if raw >= 1 << 31 else raw
        return (fresh or {}).get(value, 0)
    return env
