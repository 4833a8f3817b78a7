"""AST for the kernel DSL.

Every node carries a source span. Type checking annotates expression nodes
in place (``qtype``) and call sites with the resolved declaration
(``resolved``); the parser leaves those unset.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import Span
from .types import QType


@dataclass
class Node:
    span: Span


# -- expressions --------------------------------------------------------------

@dataclass
class Expr(Node):
    qtype: QType | None = field(default=None, init=False, compare=False)


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class DoubleLit(Expr):
    value: float


@dataclass
class BoolLit(Expr):
    value: bool


@dataclass
class TimeLit(Expr):
    magnitude: float
    unit: str


@dataclass
class Ident(Expr):
    name: str
    resolved: object = field(default=None, init=False, compare=False)


@dataclass
class BinOp(Expr):
    op: str
    lhs: Expr
    rhs: Expr


@dataclass
class UnOp(Expr):
    op: str  # '!' or '-'
    operand: Expr


@dataclass
class Call(Expr):
    callee: Expr   # Ident or Modifier
    args: list[Expr]


@dataclass
class Modifier(Expr):
    kind: str          # 'control' | 'invert'
    args: list[Expr]   # control: qubits... then op; invert: op


@dataclass
class Index(Expr):
    array: Expr
    index: Expr


@dataclass
class Length(Expr):
    array: Expr


@dataclass
class TupleExpr(Expr):
    items: list[Expr]


@dataclass
class ArrayLit(Expr):
    items: list[Expr]


@dataclass
class DurationOf(Expr):
    opname: str
    resolved: object = field(default=None, init=False, compare=False)


# -- statements ----------------------------------------------------------------

@dataclass
class Stmt(Node):
    pass


@dataclass
class Block(Node):
    stmts: list[Stmt]


@dataclass
class Declarator(Node):
    name: str
    init: Expr | None


@dataclass
class VarDecl(Stmt):
    decl_type: QType
    declarators: list[Declarator]


@dataclass
class Assign(Stmt):
    target: Expr   # Ident or Index
    value: Expr


@dataclass
class If(Stmt):
    cond: Expr
    then: Block
    els: Block | None


@dataclass
class While(Stmt):
    cond: Expr
    body: Block


@dataclass
class Break(Stmt):
    pass


@dataclass
class Continue(Stmt):
    pass


@dataclass
class Return(Stmt):
    value: Expr | None


@dataclass
class QubitBinding(Node):
    name: str


@dataclass
class Using(Stmt):
    bindings: list[QubitBinding]
    body: Block


@dataclass
class TimingConstraint(Node):
    timer: str
    cmp: str        # '==' | '>' | '>='
    time_expr: Expr


@dataclass
class TimingAnnotation(Node):
    constraints: list[TimingConstraint]
    resets: list[str]


@dataclass
class ExprStmt(Stmt):
    expr: Expr
    timing: TimingAnnotation | None


# -- declarations -----------------------------------------------------------------

@dataclass
class Param(Node):
    name: str
    qtype: QType


@dataclass
class OpaqueDecl(Node):
    name: str
    params: list[Param]
    ret: QType


@dataclass
class OperationDecl(Node):
    name: str
    params: list[Param]
    ret: QType
    body: Block


@dataclass
class ImportDecl(Node):
    path: str        # dotted package path, or package.name for a single decl
    wildcard: bool


@dataclass
class SourceUnit(Node):
    package: str     # dotted name; "" is the default package
    explicit_package: bool
    imports: list[ImportDecl]
    decls: list[OpaqueDecl | OperationDecl]
    filename: str
    # filled in by the linker: visible name -> (package, decl)
    visible: dict = field(default_factory=dict, compare=False)


def walk(node) -> "list[Node]":
    """All Node instances reachable from node, in preorder."""
    out: list[Node] = []

    def rec(x):
        if isinstance(x, Node):
            out.append(x)
            for f in vars(x).values():
                rec(f)
        elif isinstance(x, list):
            for item in x:
                rec(item)

    rec(node)
    return out


def structurally_equal(a, b) -> bool:
    """AST equality ignoring spans and analysis annotations."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Node):
        for name, val in vars(a).items():
            if name in ("span", "qtype", "resolved", "visible", "filename"):
                continue
            if not structurally_equal(val, getattr(b, name)):
                return False
        return True
    if isinstance(a, list):
        return len(a) == len(b) and all(structurally_equal(x, y) for x, y in zip(a, b))
    return a == b
