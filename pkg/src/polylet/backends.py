"""Three interpretations of the code combinators.

* string  -- emits concrete syntax as text (re-parseable plain programs);
* quote   -- rebuilds source trees, the hygienic quotation semantics;
* eval    -- a meta-circular interpretation: code values are thunks, and
             generated functions capture the dynamic environment at force
             time, binding their parameter with dlet on each application.

Let insertion is shared across backends: `genlet` captures up to its
scope's prompt and splices a binding at the scope point; `genletfun`
additionally memoizes the inserted function binding, so every use within
one funscope shares a single generated binder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from . import syntax as S
from .diagnostics import Diagnostic, Kind, type_error
from .engine import (
    Evaluation,
    Machine,
    Session,
    VCode,
    VInt,
    VList,
    VNative,
    VPair,
    VRefCell,
    VStr,
    VUnit,
    RuntimeValue,
    rset_runtime,
    runtime_tag,
)

__all__ = [
    "StringCode",
    "QuoteCode",
    "EvalCode",
    "StringBackend",
    "QuoteBackend",
    "EvalBackend",
    "evaluate",
    "check_scope",
    "rset_runtime",
    "BACKEND_NAMES",
]


@dataclass(frozen=True)
class StringCode:
    text: str


@dataclass(frozen=True)
class QuoteCode:
    tree: S.Expr


@dataclass(frozen=True, eq=False)
class EvalCode:
    thunk: Callable[[], RuntimeValue]


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def serialize_ground(v: RuntimeValue) -> Optional[str]:
    """Concrete syntax for a ground value: ints, strings, unit, and lists
    or pairs thereof.  None when the value cannot be serialized."""
    if isinstance(v, VInt):
        return str(v.value)
    if isinstance(v, VStr):
        return '"' + _escape(v.value) + '"'
    if isinstance(v, VUnit):
        return "()"
    if isinstance(v, VList):
        text = "[]"
        for item in reversed(v.items):
            part = serialize_ground(item)
            if part is None:
                return None
            text = f"({part} :: {text})"
        return text
    if isinstance(v, VPair):
        a, b = serialize_ground(v.first), serialize_ground(v.second)
        if a is None or b is None:
            return None
        return f"({a}, {b})"
    return None


def value_to_literal(v: RuntimeValue) -> Optional[S.Expr]:
    """Rebuild a ground value as a literal tree; None if not ground."""
    if isinstance(v, VInt):
        return S.IntLit(v.value)
    if isinstance(v, VStr):
        return S.StrLit(v.value)
    if isinstance(v, VUnit):
        return S.Unit()
    if isinstance(v, VList):
        tree: S.Expr = S.Nil()
        for item in reversed(v.items):
            part = value_to_literal(item)
            if part is None:
                return None
            tree = S.Cons(part, tree)
        return tree
    if isinstance(v, VPair):
        a, b = value_to_literal(v.first), value_to_literal(v.second)
        if a is None or b is None:
            return None
        return S.Pair(a, b)
    return None


def check_scope(code: QuoteCode) -> None:
    """Reject rebuilt code with unbound variables (extruded binders)."""
    free = S.free_vars(code.tree)
    if free:
        raise Diagnostic(
            Kind.SCOPE_EXTRUSION,
            "generated code has unbound variables: " + ", ".join(sorted(free)),
        )


class Backend:
    name = "abstract"

    def __init__(self, session: Session, machine: Machine):
        self.session = session
        self.machine = machine

    # lam is split in two around the machine-level application of the body.
    def begin_lam(self) -> tuple[object, VCode]:
        raise NotImplementedError

    def finish_lam(self, binder: object, body: VCode) -> VCode:
        raise NotImplementedError

    def genlet_parts(
        self, code: VCode
    ) -> tuple[RuntimeValue, Optional[Callable[[RuntimeValue], RuntimeValue]]]:
        """What the resumed continuation sees, and an optional wrapper for
        the delimited result (the inserted let around the scope's code)."""
        raise NotImplementedError

    def apply_simple(self, name: str, values: list[RuntimeValue]) -> RuntimeValue:
        raise NotImplementedError


class StringBackend(Backend):
    name = "string"

    def _text(self, v: RuntimeValue) -> str:
        if isinstance(v, VCode) and isinstance(v.code, StringCode):
            return v.code.text
        raise type_error(f"string backend got a non-code operand ({runtime_tag(v)})")

    def _wrap(self, text: str) -> VCode:
        return VCode(StringCode(text))

    def begin_lam(self) -> tuple[object, VCode]:
        name = self.session.gensym("x")
        return name, self._wrap(name)

    def finish_lam(self, binder: object, body: VCode) -> VCode:
        return self._wrap(f"(fun {binder} -> {self._text(body)})")

    def genlet_parts(self, code: VCode):
        tvar = self.session.gensym("t")
        bound = self._text(code)

        def wrap(rest: RuntimeValue) -> RuntimeValue:
            return self._wrap(f"(let {tvar} = {bound} in {self._text(rest)})")

        return self._wrap(tvar), wrap

    def apply_simple(self, name: str, values: list[RuntimeValue]) -> RuntimeValue:
        if name == "int":
            (v,) = values
            assert isinstance(v, VInt)
            return self._wrap(str(v.value))
        if name == "str":
            (v,) = values
            assert isinstance(v, VStr)
            return self._wrap('"' + _escape(v.value) + '"')
        if name == "csp":
            (v,) = values
            text = serialize_ground(v)
            if text is None:
                raise Diagnostic(
                    Kind.CSP_SERIALIZATION,
                    f"cannot serialize a {runtime_tag(v)} value into emitted code",
                )
            return self._wrap(text)
        if name == "nil":
            return self._wrap("[]")
        texts = [self._text(v) for v in values]
        if name == "add":
            return self._wrap(f"({texts[0]} + {texts[1]})")
        if name == "app":
            return self._wrap(f"({texts[0]} {texts[1]})")
        if name == "pair":
            return self._wrap(f"({texts[0]}, {texts[1]})")
        if name == "cons":
            return self._wrap(f"({texts[0]} :: {texts[1]})")
        if name == "ref_":
            return self._wrap(f"(ref {texts[0]})")
        if name == "rget":
            return self._wrap(f"(!{texts[0]})")
        if name == "rset":
            return self._wrap(f"(rset {texts[0]} {texts[1]})")
        raise type_error(f"unknown combinator {name}")


class QuoteBackend(Backend):
    name = "quote"

    def _tree(self, v: RuntimeValue) -> S.Expr:
        if isinstance(v, VCode) and isinstance(v.code, QuoteCode):
            return v.code.tree
        raise type_error(f"quote backend got a non-code operand ({runtime_tag(v)})")

    def _wrap(self, tree: S.Expr) -> VCode:
        return VCode(QuoteCode(tree))

    def begin_lam(self) -> tuple[object, VCode]:
        name = self.session.gensym("x")
        return name, self._wrap(S.Var(name))

    def finish_lam(self, binder: object, body: VCode) -> VCode:
        assert isinstance(binder, str)
        return self._wrap(S.Fun(binder, self._tree(body)))

    def genlet_parts(self, code: VCode):
        tvar = self.session.gensym("t")
        bound = self._tree(code)

        def wrap(rest: RuntimeValue) -> RuntimeValue:
            return self._wrap(S.Let(tvar, bound, self._tree(rest)))

        return self._wrap(S.Var(tvar)), wrap

    def apply_simple(self, name: str, values: list[RuntimeValue]) -> RuntimeValue:
        if name == "int":
            (v,) = values
            assert isinstance(v, VInt)
            return self._wrap(S.IntLit(v.value))
        if name == "str":
            (v,) = values
            assert isinstance(v, VStr)
            return self._wrap(S.StrLit(v.value))
        if name == "csp":
            (v,) = values
            lit = value_to_literal(v)
            return self._wrap(lit if lit is not None else S.CspValue(v))
        if name == "nil":
            return self._wrap(S.Nil())
        trees = [self._tree(v) for v in values]
        if name == "add":
            return self._wrap(S.Add(trees[0], trees[1]))
        if name == "app":
            return self._wrap(S.App(trees[0], trees[1]))
        if name == "pair":
            return self._wrap(S.Pair(trees[0], trees[1]))
        if name == "cons":
            return self._wrap(S.Cons(trees[0], trees[1]))
        if name == "ref_":
            return self._wrap(S.RefNew(trees[0]))
        if name == "rget":
            return self._wrap(S.RefGet(trees[0]))
        if name == "rset":
            return self._wrap(S.Rset(trees[0], trees[1]))
        raise type_error(f"unknown combinator {name}")


class EvalBackend(Backend):
    name = "eval"

    def _code(self, v: RuntimeValue) -> EvalCode:
        if isinstance(v, VCode) and isinstance(v.code, EvalCode):
            return v.code
        raise type_error(f"eval backend got a non-code operand ({runtime_tag(v)})")

    def _wrap(self, thunk: Callable[[], RuntimeValue]) -> VCode:
        return VCode(EvalCode(thunk))

    def force(self, code: EvalCode) -> RuntimeValue:
        session = self.session
        session.force_depth += 1
        try:
            return code.thunk()
        finally:
            session.force_depth -= 1

    def begin_lam(self) -> tuple[object, VCode]:
        r = self.session.dnew()
        return r, self._wrap(lambda: self.session.dref(r))

    def finish_lam(self, binder: object, body: VCode) -> VCode:
        r = binder
        b = self._code(body)
        session = self.session

        def make_closure() -> RuntimeValue:
            denv = session.denv_get()

            def call(x: RuntimeValue) -> RuntimeValue:
                return session.dlet(denv, r, x, lambda: self.force(b))

            return VNative(call)

        return self._wrap(make_closure)

    def genlet_parts(self, code: VCode):
        # Force the bound expression at insertion time; the continuation
        # sees a constant delayed value, and there is nothing to wrap.
        shared = self.force(self._code(code))
        return self._wrap(lambda: shared), None

    def apply_simple(self, name: str, values: list[RuntimeValue]) -> RuntimeValue:
        if name == "int":
            (v,) = values
            assert isinstance(v, VInt)
            return self._wrap(lambda: v)
        if name == "str":
            (v,) = values
            assert isinstance(v, VStr)
            return self._wrap(lambda: v)
        if name == "csp":
            (v,) = values
            # The present-stage value itself is shared with the future stage.
            return self._wrap(lambda: v)
        if name == "nil":
            return self._wrap(lambda: VList(()))
        codes = [self._code(v) for v in values]
        if name == "add":
            a, b = codes

            def add() -> RuntimeValue:
                x, y = self.force(a), self.force(b)
                if not (isinstance(x, VInt) and isinstance(y, VInt)):
                    raise type_error("addition of non-integers")
                return VInt(x.value + y.value)

            return self._wrap(add)
        if name == "app":
            f, x = codes
            return self._wrap(lambda: self.machine.call(self.force(f), self.force(x)))
        if name == "pair":
            a, b = codes

            def pair() -> RuntimeValue:
                second = self.force(b)
                first = self.force(a)
                return VPair(first, second)

            return self._wrap(pair)
        if name == "cons":
            h, t = codes

            def cons() -> RuntimeValue:
                head = self.force(h)
                tail = self.force(t)
                if not isinstance(tail, VList):
                    raise type_error("cons onto a non-list")
                return VList((head,) + tail.items)

            return self._wrap(cons)
        if name == "ref_":
            (a,) = codes
            return self._wrap(lambda: VRefCell(self.force(a)))
        if name == "rget":
            (a,) = codes

            def rget() -> RuntimeValue:
                cell = self.force(a)
                if not isinstance(cell, VRefCell):
                    raise type_error("dereference of a non-cell")
                return cell.contents

            return self._wrap(rget)
        if name == "rset":
            c, v = codes
            return self._wrap(lambda: rset_runtime(self.force(c), self.force(v)))
        raise type_error(f"unknown combinator {name}")


BACKEND_NAMES = ("string", "quote", "eval")

_BACKENDS = {
    "string": StringBackend,
    "quote": QuoteBackend,
    "eval": EvalBackend,
}


def evaluate(term, backend: str | None = "quote", name_start: int = 1) -> Evaluation:
    """Evaluate a closed target term in a fresh session.

    The quote backend's final code value is automatically checked for
    scope extrusion.
    """
    session = Session(name_start)
    machine = Machine(session)
    impl = None
    if backend is not None:
        impl = _BACKENDS[backend](session, machine)
        session.backend = impl
    value = machine.execute(term)
    if backend == "quote" and isinstance(value, VCode) and isinstance(value.code, QuoteCode):
        check_scope(value.code)
    return Evaluation(value=value, session=session, machine=machine, backend=impl)
