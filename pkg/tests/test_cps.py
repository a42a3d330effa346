"""CPS transformation: shape of the output, typing, and value agreement."""

import pytest

from fcomp.cps import cps_program, cps_type
from fcomp.errors import TypeMismatch
from fcomp.source_lang import (
    NAT, UNIT, Fix, Fst, Let, NatLit, Outcome, Snd, TArrow, TProd, UnitLit,
    Var, eval_src, free_vars, typecheck_src,
)
from fcomp.surface import parse_source


def result_nat(t, fuel=100_000):
    out = eval_src(t, fuel)
    assert out.kind is Outcome.VALUE, out
    assert isinstance(out.value, NatLit)
    return out.value.n


class TestCpsType:
    def test_base_types_unchanged(self):
        assert cps_type(NAT, NAT) == NAT
        assert cps_type(NAT, UNIT) == UNIT

    def test_product_maps_pointwise(self):
        assert cps_type(NAT, TProd(NAT, UNIT)) == TProd(NAT, UNIT)

    def test_arrow_takes_paired_continuation(self):
        got = cps_type(NAT, TArrow(NAT, NAT))
        assert got == TArrow(TProd(TArrow(NAT, NAT), NAT), NAT)

    def test_arrow_is_recursive(self):
        inner = TArrow(TProd(TArrow(UNIT, NAT), NAT), NAT)
        got = cps_type(NAT, TArrow(NAT, TArrow(NAT, UNIT)))
        assert got == TArrow(TProd(TArrow(inner, NAT), NAT), NAT)


class TestCpsProgram:
    def test_atom_is_unchanged(self):
        assert cps_program(NatLit(3)) == NatLit(3)

    def test_requires_nat_program(self):
        with pytest.raises(TypeMismatch):
            cps_program(UnitLit())

    def test_output_is_closed(self):
        t = parse_source("let f = fix f (x:nat):nat. x+2 in f 3")
        assert free_vars(cps_program(t)) == frozenset()

    def test_output_typechecks_at_nat(self):
        for text in (
            "let f = fix f (x:nat):nat. x+2 in f 3",
            "((let x = 3 in fun (y:nat). fun (z:nat). x+y+z) 4) 5",
            "(fix f (x:nat):nat. ifz x then 0 else x + f (pred x)) 3",
        ):
            out = cps_program(parse_source(text))
            assert typecheck_src([], out) == NAT

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("pred 0", 0),
            ("2 + 3", 5),
            ("ifz 0 then 1 else 2", 1),
            ("fst (4, ())", 4),
            ("let x = 2 in x + x", 4),
            ("let f = fix f (x:nat):nat. x+2 in f 3", 5),
            ("((let x = 3 in fun (y:nat). fun (z:nat). x+y+z) 4) 5", 12),
            ("(fix f (x:nat):nat. ifz x then 0 else x + f (pred x)) 3", 6),
        ],
    )
    def test_value_agreement(self, text, expected):
        t = parse_source(text)
        assert result_nat(t) == expected
        assert result_nat(cps_program(t)) == expected

    def test_operators_are_variables(self):
        # Every application in the output calls a variable directly.
        from fcomp.harness import _operators_are_vars

        t = parse_source(
            "((fix f (x:nat):nat. ifz x then 1 else f (pred x)) 2) + (1 + 2)"
        )
        assert _operators_are_vars(cps_program(t))

    def test_functions_take_paired_continuation(self):
        # fix f x. x+2 compiles to a fix binding (continuation, argument)
        # off a single pair parameter.
        t = parse_source("let f = fix f (x:nat):nat. x+2 in f 3")
        out = cps_program(t)
        # The converted function is the first let-bound term.
        fn = out.bound
        assert isinstance(fn, Fix)
        body = fn.body
        assert isinstance(body, Let)  # let k = fst p
        assert body.bound == Fst(Var(fn.argbinder))
        inner = body.body
        assert isinstance(inner, Let)  # let x = snd p
        assert inner.bound == Snd(Var(fn.argbinder))
