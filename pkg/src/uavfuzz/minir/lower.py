"""Validation and lowering of the syntax tree to per-function CFGs."""

from __future__ import annotations

from . import ast
from . import ir
from .parser import ValidateError, parse_module
from .threshold import loop_bound

_BINOPS = {"+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod", "&": "and",
           "|": "or", "^": "xor", "<<": "shl", ">>": "shr", "==": "eq", "!=": "ne",
           "<": "lt", "<=": "le", ">": "gt", ">=": "ge", "&&": "land", "||": "lor"}
_UNOPS = {"-": "neg", "!": "not", "~": "bnot"}
_COMPARISONS = {"==", "!=", "<", "<=", ">", ">="}


def _normalize_literal(value: int, node) -> int:
    if 0 <= value <= ir.INT_MAX:
        return value
    if value <= 0xFFFFFFFF:
        # hex literals above INT_MAX denote their two's-complement value
        return value - (1 << 32) if value > ir.INT_MAX else value
    raise ValidateError(f"integer literal {value} out of 32-bit range", node.line, node.col)


class _Block:
    def __init__(self):
        self.instructions: list[ir.Instruction] = []
        self.terminator: ir.Terminator | None = None


class _FunctionLowering:
    def __init__(self, fdef: ast.FunctionDef, signatures: dict[str, int], site_counter: list[int]):
        self.fdef = fdef
        self.signatures = signatures
        self.sites = site_counter
        self.types: dict[str, object] = {}
        self.scalars: list[str] = []
        self.refs: list[str] = []
        self.arrays: list[tuple[str, int]] = []
        self.blocks: list[_Block] = []
        self.loops: list[ir.LoopInfo] = []
        self.ntemps = 0
        self.current: int | None = None
        for p in fdef.params:
            if p in self.types:
                raise ValidateError(f"duplicate parameter {p!r}", fdef.line, fdef.col)
            self._declare(p, "i32")

    def _declare(self, name: str, kind: object) -> None:
        self.types[name] = kind
        if kind == "i32":
            self.scalars.append(name)
        elif kind == "ref":
            self.refs.append(name)
        else:
            self.arrays.append((name, kind[1]))

    def new_block(self) -> int:
        self.blocks.append(_Block())
        return len(self.blocks) - 1

    def temp(self) -> str:
        name = f"%t{self.ntemps}"
        self.ntemps += 1
        self._declare(name, "i32")
        return name

    def emit(self, instr: ir.Instruction) -> None:
        self.blocks[self.current].instructions.append(instr)

    def terminate(self, term: ir.Terminator) -> None:
        self.blocks[self.current].terminator = term
        self.current = None

    # -- type helpers -------------------------------------------------
    def _kind_of(self, name: str, node) -> object:
        if name not in self.types:
            raise ValidateError(f"undeclared variable {name!r}", node.line, node.col)
        return self.types[name]

    def _scalar(self, name: str, node) -> None:
        if self._kind_of(name, node) != "i32":
            raise ValidateError(f"{name!r} is not an i32 scalar", node.line, node.col)

    def _array(self, name: str, node) -> int:
        kind = self._kind_of(name, node)
        if not isinstance(kind, tuple):
            raise ValidateError(f"{name!r} is not an array", node.line, node.col)
        return kind[1]

    def _ref(self, name: str, node) -> None:
        if self._kind_of(name, node) != "ref":
            raise ValidateError(f"{name!r} is not a ref", node.line, node.col)

    @staticmethod
    def _is_ref_expr(e: ast.Expr, types: dict) -> bool:
        if isinstance(e, (ast.Null, ast.AddrOf)):
            return True
        return isinstance(e, ast.Name) and types.get(e.id) == "ref"

    # -- expressions ----------------------------------------------------
    def expr(self, e: ast.Expr, dest: str | None = None) -> ir.Operand:
        """Lower ``e``; the result lands in ``dest`` when one is given."""
        if isinstance(e, ast.Num):
            return self._place(ir.Const(_normalize_literal(e.value, e)), dest)
        if isinstance(e, ast.Name):
            self._scalar(e.id, e)
            return self._place(ir.Var(e.id), dest)
        if isinstance(e, ast.Unary) and e.op == "-" and isinstance(e.operand, ast.Num) \
                and e.operand.value <= 2**31:
            return self._place(ir.Const(-e.operand.value), dest)
        if isinstance(e, (ast.Null, ast.AddrOf)):
            raise ValidateError("reference used where an i32 is expected", e.line, e.col)
        target = dest if dest is not None else None
        if isinstance(e, ast.Unary):
            a = self.expr(e.operand)
            target = target or self.temp()
            self.emit(ir.Assign(target, _UNOPS[e.op], (a,)))
        elif isinstance(e, ast.Binary):
            a = self.expr(e.left)
            b = self.expr(e.right)
            target = target or self.temp()
            self.emit(ir.Assign(target, _BINOPS[e.op], (a, b)))
        elif isinstance(e, ast.InputExpr):
            target = target or self.temp()
            self.emit(ir.Input(target, e.width))
        elif isinstance(e, ast.Index):
            self._array(e.array, e)
            idx = self.expr(e.index)
            target = target or self.temp()
            self.emit(ir.Load(target, e.array, idx))
        elif isinstance(e, ast.Deref):
            self._ref(e.ref, e)
            target = target or self.temp()
            self.emit(ir.DerefLoad(target, e.ref))
        elif isinstance(e, ast.CallExpr):
            args = self._call_args(e)
            target = target or self.temp()
            self.emit(ir.Call(target, e.func, args))
        else:  # pragma: no cover - parser produces no other nodes
            raise ValidateError(f"unsupported expression {e!r}")
        return ir.Var(target)

    def _place(self, operand: ir.Operand, dest: str | None) -> ir.Operand:
        if dest is None:
            return operand
        self.emit(ir.Assign(dest, "copy", (operand,)))
        return ir.Var(dest)

    def _call_args(self, e: ast.CallExpr) -> tuple[ir.Operand, ...]:
        if e.func not in self.signatures:
            raise ValidateError(f"call to undefined function {e.func!r}", e.line, e.col)
        if self.signatures[e.func] != len(e.args):
            raise ValidateError(f"{e.func!r} expects {self.signatures[e.func]} arguments, "
                                f"got {len(e.args)}", e.line, e.col)
        return tuple(self.expr(a) for a in e.args)

    def _ref_assign(self, name: str, value: ast.Expr) -> None:
        if isinstance(value, ast.Null):
            self.emit(ir.RefNull(name))
        elif isinstance(value, ast.AddrOf):
            self._array(value.array, value)
            idx = self.expr(value.index)
            self.emit(ir.RefAddr(name, value.array, idx))
        elif isinstance(value, ast.Name):
            self._ref(value.id, value)
            self.emit(ir.RefCopy(name, value.id))
        else:
            raise ValidateError(f"cannot assign an i32 expression to ref {name!r}",
                                value.line, value.col)

    def _branch_cond(self, cond: ast.Expr) -> tuple[ir.Operand, int | None]:
        guard = None
        if isinstance(cond, ast.Binary) and cond.op in _COMPARISONS:
            for side in (cond.right, cond.left):
                if isinstance(side, ast.Num):
                    guard = _normalize_literal(side.value, side)
                    break
                if isinstance(side, ast.Unary) and side.op == "-" and isinstance(side.operand, ast.Num):
                    guard = -side.operand.value
                    break
        return self.expr(cond), guard

    # -- statements -----------------------------------------------------
    def stmts(self, body: tuple[ast.Stmt, ...]) -> None:
        for i, s in enumerate(body):
            if self.current is None:
                raise ValidateError("unreachable statement after return", s.line, s.col)
            self.stmt(s, body[:i])

    def stmt(self, s: ast.Stmt, before: tuple[ast.Stmt, ...]) -> None:
        if isinstance(s, ast.ArrayDecl):
            if s.name in self.types:
                raise ValidateError(f"redeclaration of {s.name!r}", s.line, s.col)
            if s.size <= 0:
                raise ValidateError("array size must be positive", s.line, s.col)
            self._declare(s.name, ("array", s.size))
        elif isinstance(s, ast.ScalarDecl):
            if s.name in self.types:
                raise ValidateError(f"redeclaration of {s.name!r}", s.line, s.col)
            if s.kind == "ref":
                init = s.init if s.init is not None else ast.Null(s.line, s.col)
                # the initializer may not mention the variable being declared
                if isinstance(init, ast.Name) and init.id == s.name:
                    raise ValidateError(f"undeclared variable {s.name!r}", init.line, init.col)
                self._ref_assign_new(s.name, init)
            else:
                init = s.init if s.init is not None else ast.Num(0, s.line, s.col)
                operand = self.expr(init)
                self._declare(s.name, "i32")
                self.emit(ir.Assign(s.name, "copy", (operand,)))
        elif isinstance(s, ast.AssignStmt):
            if s.target not in self.types:
                if self._is_ref_expr(s.value, self.types):
                    self._ref_assign_new(s.target, s.value)
                else:
                    operand = self.expr(s.value)
                    self._declare(s.target, "i32")
                    self.emit(ir.Assign(s.target, "copy", (operand,)))
            elif self.types[s.target] == "ref":
                self._ref_assign(s.target, s.value)
            elif self.types[s.target] == "i32":
                self.expr(s.value, dest=s.target)
            else:
                raise ValidateError(f"cannot assign to array {s.target!r}", s.line, s.col)
        elif isinstance(s, ast.IndexAssign):
            self._array(s.array, s)
            idx = self.expr(s.index)
            val = self.expr(s.value)
            self.emit(ir.Store(s.array, idx, val))
        elif isinstance(s, ast.DerefAssign):
            self._ref(s.ref, s)
            val = self.expr(s.value)
            self.emit(ir.DerefStore(s.ref, val))
        elif isinstance(s, ast.AssertStmt):
            self.emit(ir.Assert(self.expr(s.cond)))
        elif isinstance(s, ast.ExprStmt):
            args = self._call_args(s.expr)
            self.emit(ir.Call(None, s.expr.func, args))
        elif isinstance(s, ast.ReturnStmt):
            value = None if s.value is None else self.expr(s.value)
            self.terminate(ir.Return(value))
        elif isinstance(s, ast.If):
            self._if(s)
        elif isinstance(s, ast.While):
            self._while(s, before)
        else:  # pragma: no cover
            raise ValidateError(f"unsupported statement {s!r}")

    def _ref_assign_new(self, name: str, value: ast.Expr) -> None:
        # evaluate the initializer before the name becomes visible
        if isinstance(value, ast.AddrOf):
            self._array(value.array, value)
            idx = self.expr(value.index)
            self._declare(name, "ref")
            self.emit(ir.RefAddr(name, value.array, idx))
        elif isinstance(value, ast.Name):
            self._ref(value.id, value)
            self._declare(name, "ref")
            self.emit(ir.RefCopy(name, value.id))
        elif isinstance(value, ast.Null):
            self._declare(name, "ref")
            self.emit(ir.RefNull(name))
        else:
            raise ValidateError(f"cannot initialize ref {name!r} with an i32 expression",
                                value.line, value.col)

    def _site(self) -> int:
        self.sites[0] += 1
        return self.sites[0] - 1

    def _if(self, s: ast.If) -> None:
        cond, guard = self._branch_cond(s.cond)
        site = self._site()
        branch_block = self.current
        then_b = self.new_block()
        else_b = self.new_block() if s.orelse is not None else None
        ends = []
        self.current = then_b
        self.stmts(s.then)
        if self.current is not None:
            ends.append(self.current)
        if else_b is not None:
            self.current = else_b
            self.stmts(s.orelse)
            if self.current is not None:
                ends.append(self.current)
        join = None
        if ends or else_b is None:
            join = self.new_block()
        self.blocks[branch_block].terminator = ir.Branch(
            cond, then_b, else_b if else_b is not None else join, site, guard)
        for b in ends:
            self.blocks[b].terminator = ir.Goto(join)
        self.current = join

    def _while(self, s: ast.While, before: tuple[ast.Stmt, ...]) -> None:
        header = self.new_block()
        self.terminate(ir.Goto(header))
        self.current = header
        cond, guard = self._branch_cond(s.cond)
        cond_end = self.current
        site = self._site()
        body = self.new_block()
        self.current = body
        self.stmts(s.body)
        if self.current is not None:
            self.terminate(ir.Goto(header))
        exit_b = self.new_block()
        self.blocks[cond_end].terminator = ir.Branch(cond, body, exit_b, site, guard)
        self.loops.append(ir.LoopInfo(header, body, exit_b, site, loop_bound(before, s)))
        self.current = exit_b

    def lower(self) -> ir.Function:
        self.current = self.new_block()
        self.stmts(self.fdef.body)
        if self.current is not None:
            self.terminate(ir.Return(None))
        blocks = tuple(ir.BasicBlock(tuple(b.instructions), b.terminator) for b in self.blocks)
        return ir.Function(self.fdef.name, self.fdef.params, tuple(self.scalars),
                           tuple(self.refs), tuple(self.arrays), blocks, tuple(self.loops))


def _check_reachable(f: ir.Function) -> None:
    seen = {0}
    stack = [0]
    while stack:
        for s in f.blocks[stack.pop()].successors():
            if s != ir.EXIT and s not in seen:
                seen.add(s)
                stack.append(s)
    if len(seen) != len(f.blocks):  # pragma: no cover - lowering never leaves orphans
        raise ValidateError(f"unreachable blocks in {f.name!r}")


def lower_module(module: ast.Module, entry: str = "main") -> ir.Program:
    signatures: dict[str, int] = {}
    for fdef in module.functions:
        if fdef.name in signatures:
            raise ValidateError(f"duplicate function {fdef.name!r}", fdef.line, fdef.col)
        signatures[fdef.name] = len(fdef.params)
    if entry not in signatures:
        raise ValidateError(f"missing entry function {entry!r}")
    if signatures[entry] != 0:
        raise ValidateError(f"entry function {entry!r} must take no parameters")
    sites = [0]
    funcs = []
    for fdef in module.functions:
        f = _FunctionLowering(fdef, signatures, sites).lower()
        _check_reachable(f)
        funcs.append(f)
    return ir.Program(tuple(funcs), entry, source=module)


def parse_program(source: str) -> ir.Program:
    """Parse and validate ``.uir`` source text into a Program."""
    return lower_module(parse_module(source))
