import numpy as np
import pytest
from hypothesis import given, strategies as st

from dehnlab import hyperbolic as hyp
from dehnlab.groups import (
    FreeAbelianModel, FreeGroupModel, SurfaceGroupModel, builtin_model, cayley_ball, dehn_reduce,
    dehn_steps, is_null, lattice_winding, lattice_winding_area,
)
from dehnlab.words import commutator, power

genus_letters = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3, 4, -4]), max_size=14).map(tuple)


def test_builtin_models():
    assert builtin_model("z2").name == "z2"
    assert builtin_model("f2").name == "f2"
    assert builtin_model("genus2").name == "genus2"
    with pytest.raises(ValueError):
        builtin_model("sl3z")


def test_free_abelian_normal_form():
    z = FreeAbelianModel(2)
    assert z.is_identity(commutator((1,), (2,)))
    assert z.normal_form((1, 1, -2)) == (2, -1)
    assert not z.is_identity((1,))


def test_free_group():
    f = FreeGroupModel(2)
    assert not f.is_identity(commutator((1,), (2,)))
    assert f.is_identity((1, 2, -2, -1))


def test_octagon_relator_is_identity():
    oct_ = hyp.octagon_group()
    assert np.allclose(oct_.matrix(hyp.GENUS2_RELATOR), np.eye(3), atol=1e-9)
    for x in (1, 2, 3, 4):
        m = oct_.matrices[x]
        assert np.allclose(m.T @ hyp.J @ m, hyp.J, atol=1e-12)


def test_octagon_geometry():
    oct_ = hyp.octagon_group()
    # angle sum pi/4 * 8 = 2 pi, area (8 - 2) pi - 2 pi = 4 pi
    area = sum(hyp.triangle_area(hyp.ORIGIN, oct_.vertices[j], oct_.vertices[(j + 1) % 8]) for j in range(8))
    assert area == pytest.approx(4 * np.pi, rel=1e-9)
    assert hyp.angle_at(oct_.vertices[0], oct_.vertices[1], oct_.vertices[7]) == pytest.approx(np.pi / 4)


def test_surface_group_word_problem():
    g = SurfaceGroupModel()
    assert g.is_identity(hyp.GENUS2_RELATOR)
    assert not g.is_identity((1, 2, -1, -2))
    assert g.is_identity(commutator((1, 2), (3,)) + commutator((3,), (1, 2)))


@given(genus_letters)
def test_dehn_reduce_agrees_with_matrices(w):
    g = SurfaceGroupModel()
    red = dehn_reduce(w, g.presentation)
    assert (red == ()) == g.is_identity(w)


def test_dehn_steps_on_relator_conjugate():
    g = SurfaceGroupModel()
    w = (2,) + hyp.GENUS2_RELATOR + (-2,)
    final, steps = dehn_steps(w, g.presentation)
    assert final == () and steps >= 1


def test_lattice_winding_rectangle():
    w = commutator(power((1,), 3), power((2,), 2))
    wind = lattice_winding(w)
    assert lattice_winding_area(w) == 6
    assert set(abs(v) for v in wind.values()) == {1}


def test_cayley_ball_sizes():
    b = cayley_ball(FreeAbelianModel(2), 3)
    assert len(b.elements) == 1 + 4 + 8 + 12
    assert all(d <= 3 for d in b.distance)
    fb = cayley_ball(FreeGroupModel(2), 3)
    assert len(fb.elements) == 1 + 4 + 12 + 36
    assert fb.cell_count == 0


def test_cayley_ball_cycle_and_cells():
    b = cayley_ball(FreeAbelianModel(2), 4)
    cyc = b.cycle(commutator((1,), (2,)))
    cols = b.boundary_columns()
    assert any(col == cyc or {e: -v for e, v in col.items()} == cyc for col in cols)
    with pytest.raises(ValueError):
        b.cycle((1, 2))


def test_is_null():
    assert is_null(hyp.GENUS2_RELATOR, SurfaceGroupModel())
    assert not is_null((1,), FreeAbelianModel(2))
