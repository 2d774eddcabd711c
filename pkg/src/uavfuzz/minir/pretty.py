"""Source printer; output re-parses to a structurally identical program."""

from __future__ import annotations

from . import ast

_INDENT = "    "


def format_expr(e: ast.Expr) -> str:
    if isinstance(e, ast.Num):
        return str(e.value)
    if isinstance(e, ast.Name):
        return e.id
    if isinstance(e, ast.Null):
        return "null"
    if isinstance(e, ast.Index):
        return f"{e.array}[{format_expr(e.index)}]"
    if isinstance(e, ast.AddrOf):
        return f"&{e.array}[{format_expr(e.index)}]"
    if isinstance(e, ast.Deref):
        return f"*{e.ref}"
    if isinstance(e, ast.InputExpr):
        return "input()" if e.width == 4 else "input_byte()"
    if isinstance(e, ast.CallExpr):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, ast.Unary):
        return f"{e.op}{_atom(e.operand)}"
    if isinstance(e, ast.Binary):
        return f"{_atom(e.left)} {e.op} {_atom(e.right)}"
    raise TypeError(e)


def _atom(e: ast.Expr) -> str:
    text = format_expr(e)
    return f"({text})" if isinstance(e, (ast.Binary, ast.Unary)) else text


def _stmt(s: ast.Stmt, depth: int, out: list[str]) -> None:
    pad = _INDENT * depth
    if isinstance(s, ast.ArrayDecl):
        out.append(f"{pad}i32[{s.size}] {s.name};")
    elif isinstance(s, ast.ScalarDecl):
        init = "" if s.init is None else f" = {format_expr(s.init)}"
        out.append(f"{pad}{s.kind} {s.name}{init};")
    elif isinstance(s, ast.AssignStmt):
        out.append(f"{pad}{s.target} = {format_expr(s.value)};")
    elif isinstance(s, ast.IndexAssign):
        out.append(f"{pad}{s.array}[{format_expr(s.index)}] = {format_expr(s.value)};")
    elif isinstance(s, ast.DerefAssign):
        out.append(f"{pad}*{s.ref} = {format_expr(s.value)};")
    elif isinstance(s, ast.AssertStmt):
        out.append(f"{pad}assert({format_expr(s.cond)});")
    elif isinstance(s, ast.ReturnStmt):
        out.append(f"{pad}return;" if s.value is None else f"{pad}return {format_expr(s.value)};")
    elif isinstance(s, ast.ExprStmt):
        out.append(f"{pad}{format_expr(s.expr)};")
    elif isinstance(s, ast.While):
        out.append(f"{pad}while ({format_expr(s.cond)}) {{")
        for inner in s.body:
            _stmt(inner, depth + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, ast.If):
        out.append(f"{pad}if ({format_expr(s.cond)}) {{")
        for inner in s.then:
            _stmt(inner, depth + 1, out)
        if s.orelse is None:
            out.append(f"{pad}}}")
        else:
            out.append(f"{pad}}} else {{")
            for inner in s.orelse:
                _stmt(inner, depth + 1, out)
            out.append(f"{pad}}}")
    else:
        raise TypeError(s)


def format_module(module: ast.Module) -> str:
    out: list[str] = []
    for f in module.functions:
        out.append(f"fn {f.name}({', '.join(f.params)}) {{")
        for s in f.body:
            _stmt(s, 1, out)
        out.append("}")
        out.append("")
    return "\n".join(out)


def format_program(program) -> str:
    return format_module(program.source)
