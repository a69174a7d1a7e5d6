import pytest

from qiral import ir
from qiral.errors import ProgramErrors, ShapeMismatch
from qiral.frontend import parse
from qiral.pipeline import load_sources, typecheck
from qiral.shapes import MatrixShape, ScalarShape, VectorShape, infer_shape

DECLS = ("decl A : matrix(S, S) ;\ndecl Cm : matrix(C, C) ;\ndecl v : vector(S) ;\n"
         "decl a : real ;\n")


def term(src, lattice):
    return dict(parse(DECLS + f"def E = {src} ;", lattice).defs)["E"]


def test_dirac_is_square_on_the_full_space(defs, lattice):
    sh = infer_shape(defs["Dirac"])
    full = ir.product(lattice, ir.C, ir.S)
    assert isinstance(sh, MatrixShape)
    assert sh.rows == full and sh.cols == full


@pytest.mark.parametrize("src,kind", [
    ("A * v", VectorShape),
    ("<v | v>", ScalarShape),
    ("a * A + A^t", MatrixShape),
    ("Cm (x) A", MatrixShape),
    ("proj(odd, L)", MatrixShape),
])
def test_inferred_kinds(src, kind, lattice):
    assert isinstance(infer_shape(term(src, lattice)), kind)


def test_tensor_shapes_multiply(lattice):
    sh = infer_shape(term("Cm (x) A", lattice))
    assert sh.rows == ir.product(ir.C, ir.S)


def test_projection_maps_full_lattice_to_parity_class(lattice):
    sh = infer_shape(term("proj(even, L)", lattice))
    assert ir.parity_of(sh.rows) == "even"
    assert sh.cols == lattice


@pytest.mark.parametrize("src", ["A * proj(even, L)", "A + Cm", "Cm * v", "<v | A>"])
def test_mismatches(src, lattice):
    with pytest.raises(ShapeMismatch):
        infer_shape(term(src, lattice))


def test_prelude_and_goal_typecheck():
    typecheck(load_sources((2, 2, 2, 2)))


def test_misshapen_goal_reports_single_error(tmp_path):
    bad = tmp_path / "bad.qir"
    bad.write_text("decl b : vector(L (x) C) ;\ndecl x : vector(L (x) C (x) S) ;\n"
                   "goal x = Dirac^-1 * b ;\n")
    with pytest.raises((ProgramErrors, ShapeMismatch)) as ei:
        typecheck(load_sources((2, 2, 2, 2), inputs=[bad]))
    errs = getattr(ei.value, "errors", [ei.value])
    assert len(errs) == 1 and isinstance(errs[0], ShapeMismatch)
    assert errs[0].loc is not None and errs[0].loc.line == 3
