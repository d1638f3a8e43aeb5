import pytest

from polylet import syntax as S
from polylet.diagnostics import Diagnostic, Kind
from polylet.parser import parse_plain, parse_source, tokenize


def test_bracketed_addition():
    assert parse_source(".<1 + 2>.") == S.Bracket(S.Add(S.IntLit(1), S.IntLit(2)))


def test_toplevel_escape_is_rejected():
    with pytest.raises(Diagnostic) as exc:
        parse_source(".~x")
    assert exc.value.kind is Kind.PARSE_ERROR
    assert "level 0" in exc.value.message


def test_quoted_polymorphic_let_structure():
    e = parse_source('.<let x = [] in (2::x,"3"::x)>.')
    assert e == S.Bracket(
        S.Let(
            "x",
            S.Nil(),
            S.Pair(
                S.Cons(S.IntLit(2), S.Var("x")),
                S.Cons(S.StrLit("3"), S.Var("x")),
            ),
        )
    )


def test_nested_bracket_rejected():
    with pytest.raises(Diagnostic) as exc:
        parse_source(".< .<1>. >.")
    assert "nested bracket" in exc.value.message


def test_precedence_application_cons_add():
    # application > :: > +
    e = parse_plain("f 1 :: g 2 + 3")
    # (f 1) :: ((g 2) + 3)  -- wait: :: binds tighter than +, so this is
    # ((f 1) :: (g 2)) + 3; spell the expectation out explicitly.
    assert e == S.Add(
        S.Cons(S.App(S.Var("f"), S.IntLit(1)), S.App(S.Var("g"), S.IntLit(2))),
        S.IntLit(3),
    )


def test_cons_right_associative():
    e = parse_plain("1 :: 2 :: []")
    assert e == S.Cons(S.IntLit(1), S.Cons(S.IntLit(2), S.Nil()))


def test_add_left_associative():
    e = parse_plain("1 + 2 + 3")
    assert e == S.Add(S.Add(S.IntLit(1), S.IntLit(2)), S.IntLit(3))


def test_plain_let_fun_round():
    e = parse_plain("let t_1 = (1 + 2) in fun x_1 -> (x_1 + t_1)")
    assert isinstance(e, S.Let)
    assert isinstance(e.body, S.Fun)


def test_plain_rejects_staging_forms():
    for text in (".<1>.", "fun x -> .~x", "%r"):
        with pytest.raises(Diagnostic) as exc:
            parse_plain(text)
        assert exc.value.kind is Kind.PARSE_ERROR


def test_plain_parses_inlined_identity_output():
    e = parse_plain('((fun x_2 -> x_2) 1, (fun x_1 -> x_1) "3")')
    assert isinstance(e, S.Pair)
    assert isinstance(e.first, S.App)
    assert isinstance(e.second, S.App)
    assert isinstance(e.first.fn, S.Fun)


def test_unit_binder_and_unit_literal():
    e = parse_source("let f = fun () -> ref [] in f ()")
    assert isinstance(e, S.Let)
    assert isinstance(e.rhs, S.Fun)
    assert e.rhs.param == S.UNIT_BINDER
    assert e.body == S.App(S.Var("f"), S.Unit())


def test_csp_marker_levels():
    staged = parse_source(".<rset %r 0>.")
    assert isinstance(staged.body, S.Rset)
    assert isinstance(staged.body.ref, S.Csp)
    lifted = parse_source("%(ref [])")  # present-stage lift into code
    assert lifted == S.Csp(S.RefNew(S.Nil()))


def test_comments_nest():
    e = parse_source("(* one (* two *) still comment *) 1 + 1")
    assert e == S.Add(S.IntLit(1), S.IntLit(1))


def test_string_escapes():
    e = parse_plain('"a\\"b\\\\c"')
    assert e == S.StrLit('a"b\\c')


def test_diagnostics_carry_locations_inside_input():
    bad_inputs = ["let x = in x", "(1, 2", '.<let x = >.', "1 + + 2", "fun -> x"]
    for text in bad_inputs:
        with pytest.raises(Diagnostic) as exc:
            parse_source(text)
        loc = exc.value.location
        assert loc is not None, text
        assert 0 <= loc.offset <= len(text)
        assert loc.line >= 1 and loc.column >= 1
        assert exc.value.render("f.pml").startswith("f.pml:")


def test_trailing_input_rejected():
    with pytest.raises(Diagnostic) as exc:
        parse_source("1 + 2 )")
    assert exc.value.kind is Kind.PARSE_ERROR
    assert "trailing" in exc.value.message


def test_tokenizer_positions():
    toks = tokenize("let x =\n  1")
    assert toks[0].loc.line == 1 and toks[0].loc.column == 1
    assert toks[-2].loc.line == 2 and toks[-2].loc.column == 3


def test_escape_binds_tightly():
    e = parse_source(".<.~f 1>.")
    assert e.body == S.App(S.Escape(S.Var("f")), S.IntLit(1))
