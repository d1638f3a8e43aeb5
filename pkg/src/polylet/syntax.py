"""Abstract syntax of the two-stage source language.

Expressions carry at most one level of quotation: brackets never nest,
and escapes only occur inside a bracket.  The same tree type doubles as
the representation of generated code rebuilt by the quoting backend
(which is why `CspValue` exists: a persisted run-time value spliced into
rebuilt code).
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Kind, Diagnostic

# Binder names are ordinary identifiers, or one of two special forms that
# bind nothing: "()" (unit pattern) and "_" (wildcard).
UNIT_BINDER = "()"
WILDCARD = "_"


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class StrLit(Expr):
    value: str


@dataclass(frozen=True)
class Nil(Expr):
    pass


@dataclass(frozen=True)
class Unit(Expr):
    pass


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pair(Expr):
    first: Expr
    second: Expr


@dataclass(frozen=True)
class Cons(Expr):
    head: Expr
    tail: Expr


@dataclass(frozen=True)
class RefNew(Expr):
    init: Expr


@dataclass(frozen=True)
class RefGet(Expr):
    ref: Expr


@dataclass(frozen=True)
class Rset(Expr):
    ref: Expr
    value: Expr


@dataclass(frozen=True)
class App(Expr):
    fn: Expr
    arg: Expr


@dataclass(frozen=True)
class Fun(Expr):
    param: str
    body: Expr


@dataclass(frozen=True)
class Let(Expr):
    name: str
    rhs: Expr
    body: Expr


@dataclass(frozen=True)
class Bracket(Expr):
    body: Expr


@dataclass(frozen=True)
class Escape(Expr):
    body: Expr


@dataclass(frozen=True)
class Csp(Expr):
    body: Expr


@dataclass(frozen=True, eq=False)
class CspValue(Expr):
    """A run-time value persisted into rebuilt code.

    Only non-literal values appear this way; ground values are rebuilt as
    ordinary literals.  Not produced by the parser.
    """

    value: object


def binds(name: str) -> bool:
    return name not in (UNIT_BINDER, WILDCARD)


def free_vars(e: Expr) -> set[str]:
    """Variables not bound by any enclosing Fun or Let."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, (IntLit, StrLit, Nil, Unit, CspValue)):
        return set()
    if isinstance(e, Fun):
        inner = free_vars(e.body)
        return inner - {e.param} if binds(e.param) else inner
    if isinstance(e, Let):
        body = free_vars(e.body)
        if binds(e.name):
            body = body - {e.name}
        return free_vars(e.rhs) | body
    if isinstance(e, (Bracket, Escape, Csp)):
        return free_vars(e.body)
    if isinstance(e, Add):
        return free_vars(e.left) | free_vars(e.right)
    if isinstance(e, Pair):
        return free_vars(e.first) | free_vars(e.second)
    if isinstance(e, Cons):
        return free_vars(e.head) | free_vars(e.tail)
    if isinstance(e, RefNew):
        return free_vars(e.init)
    if isinstance(e, RefGet):
        return free_vars(e.ref)
    if isinstance(e, Rset):
        return free_vars(e.ref) | free_vars(e.value)
    if isinstance(e, App):
        return free_vars(e.fn) | free_vars(e.arg)
    raise TypeError(f"unexpected expression {e!r}")


def csp_values_equal(a: object, b: object) -> bool:
    """Value comparison used when matching persisted CSP values.

    Mutable cells are compared by current contents rather than identity,
    since two independently generated code values can never share a cell.
    """
    if type(a) is not type(b):
        return False
    ca = getattr(a, "contents", None)
    cb = getattr(b, "contents", None)
    if ca is not None or cb is not None:
        return csp_values_equal(ca, cb)
    return a == b


def alpha_equal(a: Expr, b: Expr) -> bool:
    """True iff a and b differ only in the names of bound variables."""
    return _alpha(a, b, {}, {})


def _alpha(a: Expr, b: Expr, l2r: dict[str, str], r2l: dict[str, str]) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        assert isinstance(b, Var)
        if a.name in l2r or b.name in r2l:
            return l2r.get(a.name) == b.name and r2l.get(b.name) == a.name
        return a.name == b.name
    if isinstance(a, (Nil, Unit)):
        return True
    if isinstance(a, (IntLit, StrLit)):
        return a.value == b.value  # type: ignore[attr-defined]
    if isinstance(a, CspValue):
        assert isinstance(b, CspValue)
        return csp_values_equal(a.value, b.value)
    if isinstance(a, Fun):
        assert isinstance(b, Fun)
        return _alpha(a.body, b.body, l2r | {a.param: b.param}, r2l | {b.param: a.param})
    if isinstance(a, Let):
        assert isinstance(b, Let)
        return _alpha(a.rhs, b.rhs, l2r, r2l) and _alpha(
            a.body, b.body, l2r | {a.name: b.name}, r2l | {b.name: a.name}
        )
    if isinstance(a, (Bracket, Escape, Csp)):
        return _alpha(a.body, b.body, l2r, r2l)  # type: ignore[attr-defined]
    if isinstance(a, Add):
        assert isinstance(b, Add)
        return _alpha(a.left, b.left, l2r, r2l) and _alpha(a.right, b.right, l2r, r2l)
    if isinstance(a, Pair):
        assert isinstance(b, Pair)
        return _alpha(a.first, b.first, l2r, r2l) and _alpha(a.second, b.second, l2r, r2l)
    if isinstance(a, Cons):
        assert isinstance(b, Cons)
        return _alpha(a.head, b.head, l2r, r2l) and _alpha(a.tail, b.tail, l2r, r2l)
    if isinstance(a, RefNew):
        assert isinstance(b, RefNew)
        return _alpha(a.init, b.init, l2r, r2l)
    if isinstance(a, RefGet):
        assert isinstance(b, RefGet)
        return _alpha(a.ref, b.ref, l2r, r2l)
    if isinstance(a, Rset):
        assert isinstance(b, Rset)
        return _alpha(a.ref, b.ref, l2r, r2l) and _alpha(a.value, b.value, l2r, r2l)
    if isinstance(a, App):
        assert isinstance(b, App)
        return _alpha(a.fn, b.fn, l2r, r2l) and _alpha(a.arg, b.arg, l2r, r2l)
    raise TypeError(f"unexpected expression {a!r}")


# Precedence levels for printing.  Binary arithmetic/cons forms always
# print their own parentheses, so only fun/let vs. operand positions and
# application chains need levels.
_EXPR, _OPER, _APP, _ATOM = 0, 1, 3, 4


def pretty(e: Expr) -> str:
    """Concrete syntax; re-parses to an alpha-equal tree."""
    return _render(e, _EXPR)


def _render(e: Expr, min_level: int) -> str:
    text, level = _render1(e)
    if level < min_level:
        return f"({text})"
    return text


def _render1(e: Expr) -> tuple[str, int]:
    if isinstance(e, Var):
        return e.name, _ATOM
    if isinstance(e, IntLit):
        return str(e.value), _ATOM
    if isinstance(e, StrLit):
        return '"' + e.value.replace("\\", "\\\\").replace('"', '\\"') + '"', _ATOM
    if isinstance(e, Nil):
        return "[]", _ATOM
    if isinstance(e, Unit):
        return "()", _ATOM
    if isinstance(e, CspValue):
        # Display-only: a persisted value has no source syntax.
        return f"%<{e.value}>", _ATOM
    if isinstance(e, Bracket):
        return f".<{_render(e.body, _EXPR)}>.", _ATOM
    if isinstance(e, Add):
        return f"({_render(e.left, _OPER)} + {_render(e.right, _OPER)})", _ATOM
    if isinstance(e, Cons):
        return f"({_render(e.head, _OPER)} :: {_render(e.tail, _OPER)})", _ATOM
    if isinstance(e, Pair):
        return f"({_render(e.first, _EXPR)}, {_render(e.second, _EXPR)})", _ATOM
    if isinstance(e, App):
        return f"{_render(e.fn, _APP)} {_render(e.arg, _ATOM)}", _APP
    if isinstance(e, RefNew):
        return f"ref {_render(e.init, _ATOM)}", _APP
    if isinstance(e, RefGet):
        return f"!{_render(e.ref, _ATOM)}", _APP
    if isinstance(e, Rset):
        return f"rset {_render(e.ref, _ATOM)} {_render(e.value, _ATOM)}", _APP
    if isinstance(e, Escape):
        return f".~{_render(e.body, _ATOM)}", _APP
    if isinstance(e, Csp):
        return f"%{_render(e.body, _ATOM)}", _APP
    if isinstance(e, Fun):
        return f"fun {e.param} -> {_render(e.body, _EXPR)}", _EXPR
    if isinstance(e, Let):
        return f"let {e.name} = {_render(e.rhs, _EXPR)} in {_render(e.body, _EXPR)}", _EXPR
    raise TypeError(f"unexpected expression {e!r}")


def check_staging(e: Expr, level: int = 0) -> None:
    """Enforce the two-level discipline; raises a ParseError diagnostic.

    Inside a bracket no further bracket may occur except within an escape
    (which returns to level 0).  Escapes occur only at level 1.  The CSP
    marker is legal at level 1 (persistence) and at level 0 (lifting a
    present-stage value into code).
    """
    if isinstance(e, Bracket):
        if level > 0:
            raise Diagnostic(Kind.PARSE_ERROR, "nested bracket")
        check_staging(e.body, 1)
        return
    if isinstance(e, Escape):
        if level == 0:
            raise Diagnostic(Kind.PARSE_ERROR, "escape at level 0")
        check_staging(e.body, 0)
        return
    if isinstance(e, Csp):
        check_staging(e.body, 0)
        return
    if isinstance(e, (Fun, Let)):
        name = e.param if isinstance(e, Fun) else e.name
        if not name:
            raise Diagnostic(Kind.PARSE_ERROR, "empty binder name")
    for child in _children(e):
        check_staging(child, level)


def is_plain(e: Expr) -> bool:
    """No staging forms anywhere in the tree."""
    if isinstance(e, (Bracket, Escape, Csp)):
        return False
    return all(is_plain(c) for c in _children(e))


def _children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Var, IntLit, StrLit, Nil, Unit, CspValue)):
        return ()
    if isinstance(e, Add):
        return (e.left, e.right)
    if isinstance(e, Pair):
        return (e.first, e.second)
    if isinstance(e, Cons):
        return (e.head, e.tail)
    if isinstance(e, RefNew):
        return (e.init,)
    if isinstance(e, RefGet):
        return (e.ref,)
    if isinstance(e, Rset):
        return (e.ref, e.value)
    if isinstance(e, App):
        return (e.fn, e.arg)
    if isinstance(e, Fun):
        return (e.body,)
    if isinstance(e, Let):
        return (e.rhs, e.body)
    if isinstance(e, (Bracket, Escape, Csp)):
        return (e.body,)
    raise TypeError(f"unexpected expression {e!r}")
