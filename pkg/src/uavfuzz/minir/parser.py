"""Lexer and recursive-descent parser for ``.uir`` source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class ValidateError(ParseError):
    pass


KEYWORDS = {"fn", "if", "else", "while", "assert", "return", "i32", "ref", "null",
            "true", "false", "input", "input_byte"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<hex>0[xX][0-9a-fA-F]+)
  | (?P<int>\d+)
  | (?P<char>'(?:\\.|[^\\'])')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|\||&&|==|!=|<=|>=|<<|>>|[-+*/%&|^~!<>=(){}\[\];,])
""", re.VERBOSE | re.DOTALL)

_ESCAPES = {"n": 10, "t": 9, "r": 13, "0": 0, "\\": 92, "'": 39}


@dataclass
class Token:
    kind: str  # "int", "ident", "kw", "op", "eof"
    text: str
    value: int
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind in ("ws", "comment"):
            pass
        elif kind == "hex":
            tokens.append(Token("int", text, int(text, 16), line, col))
        elif kind == "int":
            tokens.append(Token("int", text, int(text), line, col))
        elif kind == "char":
            body = text[1:-1]
            if body.startswith("\\"):
                if body[1] not in _ESCAPES:
                    raise ParseError(f"unknown escape {body!r}", line, col)
                value = _ESCAPES[body[1]]
            else:
                value = ord(body)
            tokens.append(Token("int", text, value, line, col))
        elif kind == "ident":
            tokens.append(Token("kw" if text in KEYWORDS else "ident", text, 0, line, col))
        else:
            tokens.append(Token("op", text, 0, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", 0, line, pos - line_start + 1))
    return tokens


# binary precedence, lowest first
_LEVELS = [("||",), ("&&",), ("|",), ("^",), ("&",), ("==", "!="),
           ("<", "<=", ">", ">="), ("<<", ">>"), ("+", "-"), ("*", "/", "%")]


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.tok.line, self.tok.col)

    def check(self, text: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def accept(self, text: str) -> Token | None:
        if self.check(text):
            tok = self.tok
            self.pos += 1
            return tok
        return None

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return tok

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        tok = self.tok
        self.pos += 1
        return tok

    def module(self) -> ast.Module:
        funcs = []
        while self.tok.kind != "eof":
            funcs.append(self.function())
        return ast.Module(tuple(funcs))

    def function(self) -> ast.FunctionDef:
        start = self.expect("fn")
        name = self.ident().text
        self.expect("(")
        params = []
        if not self.check(")"):
            params.append(self.ident().text)
            while self.accept(","):
                params.append(self.ident().text)
        self.expect(")")
        body = self.block()
        return ast.FunctionDef(name, tuple(params), body, start.line, start.col)

    def block(self) -> tuple[ast.Stmt, ...]:
        self.expect("{")
        stmts = []
        while not self.check("}"):
            if self.tok.kind == "eof":
                raise self.error("unterminated block")
            stmts.append(self.statement())
        self.expect("}")
        return tuple(stmts)

    def statement(self) -> ast.Stmt:
        tok = self.tok
        pos = (tok.line, tok.col)
        if self.accept("i32"):
            if self.accept("["):
                size = self.tok
                if size.kind != "int":
                    raise ValidateError("array size must be a constant integer", size.line, size.col)
                self.pos += 1
                self.expect("]")
                name = self.ident().text
                self.expect(";")
                return ast.ArrayDecl(name, size.value, *pos)
            return self._scalar_decl("i32", pos)
        if self.accept("ref"):
            return self._scalar_decl("ref", pos)
        if self.accept("if"):
            return self._if(pos)
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return ast.While(cond, self.block(), *pos)
        if self.accept("assert"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            self.expect(";")
            return ast.AssertStmt(cond, *pos)
        if self.accept("return"):
            value = None if self.check(";") else self.expr()
            self.expect(";")
            return ast.ReturnStmt(value, *pos)
        if self.accept("*"):
            ref = self.ident().text
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return ast.DerefAssign(ref, value, *pos)
        if tok.kind == "ident":
            name = self.ident().text
            if self.accept("["):
                index = self.expr()
                self.expect("]")
                self.expect("=")
                value = self.expr()
                self.expect(";")
                return ast.IndexAssign(name, index, value, *pos)
            if self.check("("):
                call = self._call(name, pos)
                self.expect(";")
                return ast.ExprStmt(call, *pos)
            self.expect("=")
            value = self.expr()
            self.expect(";")
            return ast.AssignStmt(name, value, *pos)
        raise self.error(f"unexpected {tok.text or 'end of input'!r}")

    def _scalar_decl(self, kind: str, pos: tuple[int, int]) -> ast.ScalarDecl:
        name = self.ident().text
        init = self.expr() if self.accept("=") else None
        self.expect(";")
        return ast.ScalarDecl(kind, name, init, *pos)

    def _if(self, pos: tuple[int, int]) -> ast.If:
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse = None
        if self.accept("else"):
            if self.check("if"):
                inner = self.tok
                self.pos += 1
                orelse = (self._if((inner.line, inner.col)),)
            else:
                orelse = self.block()
        return ast.If(cond, then, orelse, *pos)

    def _call(self, name: str, pos: tuple[int, int]) -> ast.CallExpr:
        self.expect("(")
        args = []
        if not self.check(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        return ast.CallExpr(name, tuple(args), *pos)

    def expr(self, level: int = 0) -> ast.Expr:
        if level == len(_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in _LEVELS[level]:
            op = self.tok
            self.pos += 1
            right = self.expr(level + 1)
            left = ast.Binary(op.text, left, right, op.line, op.col)
        return left

    def unary(self) -> ast.Expr:
        tok = self.tok
        if tok.kind == "op" and tok.text in ("-", "!", "~"):
            self.pos += 1
            return ast.Unary(tok.text, self.unary(), tok.line, tok.col)
        if self.accept("*"):
            return ast.Deref(self.ident().text, tok.line, tok.col)
        if self.accept("&"):
            name = self.ident().text
            self.expect("[")
            index = self.expr()
            self.expect("]")
            return ast.AddrOf(name, index, tok.line, tok.col)
        return self.primary()

    def primary(self) -> ast.Expr:
        tok = self.tok
        pos = (tok.line, tok.col)
        if tok.kind == "int":
            self.pos += 1
            return ast.Num(tok.value, *pos)
        if self.accept("true"):
            return ast.Num(1, *pos)
        if self.accept("false"):
            return ast.Num(0, *pos)
        if self.accept("null"):
            return ast.Null(*pos)
        if tok.kind == "kw" and tok.text in ("input", "input_byte"):
            self.pos += 1
            self.expect("(")
            self.expect(")")
            return ast.InputExpr(4 if tok.text == "input" else 1, *pos)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        if tok.kind == "ident":
            name = self.ident().text
            if self.check("("):
                return self._call(name, pos)
            if self.accept("["):
                index = self.expr()
                self.expect("]")
                return ast.Index(name, index, *pos)
            return ast.Name(name, *pos)
        raise self.error(f"unexpected {tok.text or 'end of input'!r} in expression")


def parse_module(source: str) -> ast.Module:
    return Parser(source).module()
