"""Recursive descent parser for the kernel DSL core grammar.

Precedence is C-style. Compound assignments desugar to plain assignment at
parse time. A timing annotation (``@{...} !{...}``) may only follow a call
in statement position.
"""
from __future__ import annotations

from ..errors import ParseError, Span
from . import ast
from .lexer import Token, tokenize
from .types import ArrayT, PRIMS, QType, TupleT

TYPE_KEYWORDS = {"bool", "int", "double", "unit", "qubit", "time", "timer"}

_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/="}


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, kind: str, value=None, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind == kind and (value is None or t.value == value)

    def next(self) -> Token:
        t = self.tokens[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def expect(self, kind: str, value=None) -> Token:
        t = self.peek()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            raise ParseError(f"expected {want!r}, found {t.value!r}", t.span)
        return self.next()

    def accept(self, kind: str, value=None) -> Token | None:
        if self.at(kind, value):
            return self.next()
        return None

    # -- top level -----------------------------------------------------------

    def parse_unit(self, filename: str) -> ast.SourceUnit:
        start = self.peek().span
        package = ""
        explicit = False
        if self.at("kw", "package"):
            self.next()
            package = self.parse_dotted()
            self.expect("punct", ";")
            explicit = True
        imports: list[ast.ImportDecl] = []
        while self.at("kw", "import"):
            sp = self.next().span
            path_parts = [self.expect("ident").value]
            wildcard = False
            while self.accept("punct", "."):
                if self.accept("punct", "*"):
                    wildcard = True
                    break
                path_parts.append(self.expect("ident").value)
            self.expect("punct", ";")
            imports.append(ast.ImportDecl(sp, ".".join(path_parts), wildcard))
        decls: list[ast.OpaqueDecl | ast.OperationDecl] = []
        while not self.at("eof"):
            decls.append(self.parse_decl())
        return ast.SourceUnit(start, package, explicit, imports, decls, filename)

    def parse_dotted(self) -> str:
        parts = [self.expect("ident").value]
        while self.accept("punct", "."):
            parts.append(self.expect("ident").value)
        return ".".join(parts)

    def parse_decl(self):
        t = self.peek()
        if self.at("kw", "opaque"):
            sp = self.next().span
            name = self.expect("ident").value
            params = self.parse_params()
            self.expect("punct", ":")
            ret = self.parse_type()
            self.expect("punct", ";")
            return ast.OpaqueDecl(sp, name, params, ret)
        if self.at("kw", "operation"):
            sp = self.next().span
            name = self.expect("ident").value
            params = self.parse_params()
            self.expect("punct", ":")
            ret = self.parse_type()
            body = self.parse_block()
            return ast.OperationDecl(sp, name, params, ret, body)
        raise ParseError(f"expected declaration, found {t.value!r}", t.span)

    def parse_params(self) -> list[ast.Param]:
        self.expect("punct", "(")
        params: list[ast.Param] = []
        if not self.at("punct", ")"):
            while True:
                sp = self.peek().span
                name = self.expect("ident").value
                self.expect("punct", ":")
                params.append(ast.Param(sp, name, self.parse_type()))
                if not self.accept("punct", ","):
                    break
        self.expect("punct", ")")
        return params

    # -- types -------------------------------------------------------------

    def parse_type(self) -> QType:
        t = self.peek()
        if t.kind == "kw" and t.value in TYPE_KEYWORDS:
            self.next()
            base: QType = PRIMS[t.value]
        elif self.at("punct", "("):
            self.next()
            elems = [self.parse_type()]
            while self.accept("punct", ","):
                elems.append(self.parse_type())
            self.expect("punct", ")")
            if len(elems) < 2:
                raise ParseError("tuple type needs at least two elements", t.span)
            base = TupleT(tuple(elems))
        else:
            raise ParseError(f"expected type, found {t.value!r}", t.span)
        while self.at("punct", "[") and self.at("punct", "]", 1):
            self.next()
            self.next()
            base = ArrayT(base)
        return base

    def starts_type(self) -> bool:
        if self.peek().kind == "kw" and self.peek().value in TYPE_KEYWORDS:
            return True
        return self.at("punct", "(") and self.peek(1).kind == "kw" and self.peek(1).value in TYPE_KEYWORDS

    # -- statements -----------------------------------------------------------

    def parse_block(self) -> ast.Block:
        sp = self.expect("punct", "{").span
        stmts: list[ast.Stmt] = []
        while not self.at("punct", "}"):
            stmts.append(self.parse_stmt())
        self.expect("punct", "}")
        return ast.Block(sp, stmts)

    def parse_stmt(self) -> ast.Stmt:
        t = self.peek()
        if self.at("kw", "if"):
            return self.parse_if()
        if self.at("kw", "while"):
            self.next()
            self.expect("punct", "(")
            cond = self.parse_expr()
            self.expect("punct", ")")
            return ast.While(t.span, cond, self.parse_block())
        if self.at("kw", "break"):
            self.next()
            self.expect("punct", ";")
            return ast.Break(t.span)
        if self.at("kw", "continue"):
            self.next()
            self.expect("punct", ";")
            return ast.Continue(t.span)
        if self.at("kw", "return"):
            self.next()
            value = None if self.at("punct", ";") else self.parse_expr()
            self.expect("punct", ";")
            return ast.Return(t.span, value)
        if self.at("kw", "using"):
            self.next()
            self.expect("punct", "(")
            bindings = []
            while True:
                sp = self.peek().span
                name = self.expect("ident").value
                self.expect("punct", ":")
                qt = self.parse_type()
                if qt != PRIMS["qubit"]:
                    raise ParseError("using binds qubit-typed variables only", sp)
                bindings.append(ast.QubitBinding(sp, name))
                if not self.accept("punct", ","):
                    break
            self.expect("punct", ")")
            return ast.Using(t.span, bindings, self.parse_block())
        if self.starts_type():
            decl_type = self.parse_type()
            declarators = []
            while True:
                sp = self.peek().span
                name = self.expect("ident").value
                init = None
                if self.accept("punct", "="):
                    init = self.parse_expr()
                declarators.append(ast.Declarator(sp, name, init))
                if not self.accept("punct", ","):
                    break
            self.expect("punct", ";")
            return ast.VarDecl(t.span, decl_type, declarators)
        # expression or assignment
        expr = self.parse_expr()
        nt = self.peek()
        if nt.kind == "punct" and nt.value in _ASSIGN_OPS:
            self.next()
            value = self.parse_expr()
            self.expect("punct", ";")
            if not isinstance(expr, (ast.Ident, ast.Index)):
                raise ParseError("assignment target must be a variable or array element", t.span)
            if nt.value != "=":
                value = ast.BinOp(nt.span, nt.value[0], expr, value)
            return ast.Assign(t.span, expr, value)
        timing = self.parse_timing()
        self.expect("punct", ";")
        if timing is not None and not isinstance(expr, ast.Call):
            raise ParseError("timing annotations attach to operation calls", t.span)
        return ast.ExprStmt(t.span, expr, timing)

    def parse_if(self) -> ast.If:
        sp = self.expect("kw", "if").span
        self.expect("punct", "(")
        cond = self.parse_expr()
        self.expect("punct", ")")
        then = self.parse_block()
        els = None
        if self.accept("kw", "else"):
            if self.at("kw", "if"):
                inner = self.parse_if()
                els = ast.Block(inner.span, [inner])
            else:
                els = self.parse_block()
        return ast.If(sp, cond, then, els)

    def parse_timing(self) -> ast.TimingAnnotation | None:
        constraints: list[ast.TimingConstraint] = []
        resets: list[str] = []
        sp: Span | None = None
        if self.at("punct", "@"):
            sp = self.next().span
            self.expect("punct", "{")
            while True:
                csp = self.peek().span
                timer = self.expect("ident").value
                cmp_tok = self.peek()
                if not (cmp_tok.kind == "punct" and cmp_tok.value in ("==", ">", ">=")):
                    raise ParseError(
                        f"timing comparator must be ==, > or >=, found {cmp_tok.value!r}", cmp_tok.span)
                self.next()
                # time expressions stop below && so constraints can conjoin
                constraints.append(
                    ast.TimingConstraint(csp, timer, cmp_tok.value, self.parse_additive()))
                if not self.accept("punct", "&&"):
                    break
            self.expect("punct", "}")
        if self.at("punct", "!") and self.at("punct", "{", 1):
            if sp is None:
                sp = self.peek().span
            self.next()
            self.next()
            while True:
                resets.append(self.expect("ident").value)
                if not self.accept("punct", ","):
                    break
            self.expect("punct", "}")
        if sp is None:
            return None
        return ast.TimingAnnotation(sp, constraints, resets)

    # -- expressions -----------------------------------------------------------

    def parse_expr(self) -> ast.Expr:
        return self.parse_or()

    def parse_or(self) -> ast.Expr:
        e = self.parse_and()
        while self.at("punct", "||"):
            sp = self.next().span
            e = ast.BinOp(sp, "||", e, self.parse_and())
        return e

    def parse_and(self) -> ast.Expr:
        e = self.parse_equality()
        while self.at("punct", "&&"):
            sp = self.next().span
            e = ast.BinOp(sp, "&&", e, self.parse_equality())
        return e

    def parse_equality(self) -> ast.Expr:
        e = self.parse_relational()
        while self.peek().kind == "punct" and self.peek().value in ("==", "!="):
            op = self.next()
            e = ast.BinOp(op.span, op.value, e, self.parse_relational())
        return e

    def parse_relational(self) -> ast.Expr:
        e = self.parse_additive()
        while self.peek().kind == "punct" and self.peek().value in ("<", "<=", ">", ">="):
            op = self.next()
            e = ast.BinOp(op.span, op.value, e, self.parse_additive())
        return e

    def parse_additive(self) -> ast.Expr:
        e = self.parse_multiplicative()
        while self.peek().kind == "punct" and self.peek().value in ("+", "-"):
            op = self.next()
            e = ast.BinOp(op.span, op.value, e, self.parse_multiplicative())
        return e

    def parse_multiplicative(self) -> ast.Expr:
        e = self.parse_unary()
        while self.peek().kind == "punct" and self.peek().value in ("*", "/", "%"):
            op = self.next()
            e = ast.BinOp(op.span, op.value, e, self.parse_unary())
        return e

    def parse_unary(self) -> ast.Expr:
        t = self.peek()
        if self.at("punct", "!"):
            self.next()
            return ast.UnOp(t.span, "!", self.parse_unary())
        if self.at("punct", "-"):
            self.next()
            return ast.UnOp(t.span, "-", self.parse_unary())
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        e = self.parse_primary()
        while True:
            if self.at("punct", "("):
                sp = self.next().span
                args = []
                if not self.at("punct", ")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self.accept("punct", ","):
                            break
                self.expect("punct", ")")
                e = ast.Call(sp, e, args)
            elif self.at("punct", "["):
                sp = self.next().span
                idx = self.parse_expr()
                self.expect("punct", "]")
                e = ast.Index(sp, e, idx)
            elif self.at("punct", ".") and self.at("ident", "length", 1):
                sp = self.next().span
                self.next()
                e = ast.Length(sp, e)
            else:
                return e

    def parse_primary(self) -> ast.Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return ast.IntLit(t.span, t.value)
        if t.kind == "double":
            self.next()
            return ast.DoubleLit(t.span, t.value)
        if t.kind == "time":
            self.next()
            mag, unit = t.value
            return ast.TimeLit(t.span, mag, unit)
        if self.at("kw", "true") or self.at("kw", "false"):
            self.next()
            return ast.BoolLit(t.span, t.value == "true")
        if t.kind == "ident":
            self.next()
            return ast.Ident(t.span, t.value)
        if self.at("kw", "duration"):
            self.next()
            self.expect("punct", "(")
            name = self.expect("ident").value
            self.expect("punct", ")")
            return ast.DurationOf(t.span, name)
        if self.at("kw", "control") or self.at("kw", "invert"):
            self.next()
            self.expect("punct", "(")
            args = [self.parse_expr()]
            while self.accept("punct", ","):
                args.append(self.parse_expr())
            self.expect("punct", ")")
            return ast.Modifier(t.span, t.value, args)
        if self.at("punct", "("):
            self.next()
            items = [self.parse_expr()]
            while self.accept("punct", ","):
                items.append(self.parse_expr())
            self.expect("punct", ")")
            if len(items) == 1:
                return items[0]
            return ast.TupleExpr(t.span, items)
        if self.at("punct", "{"):
            self.next()
            items = []
            if not self.at("punct", "}"):
                while True:
                    items.append(self.parse_expr())
                    if not self.accept("punct", ","):
                        break
            self.expect("punct", "}")
            return ast.ArrayLit(t.span, items)
        raise ParseError(f"expected expression, found {t.value!r}", t.span)


def parse(tokens: list[Token], filename: str = "<string>") -> ast.SourceUnit:
    return Parser(tokens).parse_unit(filename)


def parse_source(source: str, filename: str = "<string>") -> ast.SourceUnit:
    return parse(tokenize(source, filename), filename)
