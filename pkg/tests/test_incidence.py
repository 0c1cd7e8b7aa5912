import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paralab.dyadic import GrassmannLine, SquareFamily
from paralab.incidence import (
    IncidenceInstance,
    count_incidences,
    dyadic_katz_tao_constant,
    furstenberg_check,
    fu_ren_rhs,
    generate_fu_ren_instance,
    lattice_furstenberg_instance,
    parabola_candidates,
    random_katz_tao_squares,
    richness_histogram,
    scan_incidences,
    scan_neighbourhood,
    transfer_instance,
    tube_candidates,
)
from paralab.psi import Tube


def test_random_katz_tao_full_dimension():
    fam = random_katz_tao_squares(1.0, 2.0**-8, 1.0, seed=0)
    assert len(fam) == 256
    assert dyadic_katz_tao_constant(fam, 1.0) <= 4.0


@pytest.mark.parametrize("s", [0.0, 0.5, 1.3, 2.0])
def test_random_katz_tao_audit(s):
    fam = random_katz_tao_squares(s, 2.0**-6, 1.0, seed=11)
    assert len(fam) == round(2.0 ** (6 * s))
    assert dyadic_katz_tao_constant(fam, s) <= 4.0


def test_random_katz_tao_reproducible():
    a = random_katz_tao_squares(0.7, 2.0**-7, seed=5)
    b = random_katz_tao_squares(0.7, 2.0**-7, seed=5)
    assert a == b


def test_random_katz_tao_infeasible():
    with pytest.raises(ValueError, match="infeasible"):
        random_katz_tao_squares(2.5, 2.0**-4)
    with pytest.raises(ValueError, match="infeasible"):
        random_katz_tao_squares(1.0, 2.0**-4, C=0.5)


def test_tube_candidates_match_scalar_scan():
    level = 5
    tube = Tube(GrassmannLine(0.4, 0.2), 2.0**-5)
    fam = tube_candidates(tube, level)
    window = ((0, 31), (0, 31))
    assert len(fam) == scan_neighbourhood(tube, "tube", level, window)


def test_parabola_candidates_match_scalar_scan():
    level = 5
    p = (0.5, 0.25)
    window = ((-40, 40), (-40, 40))
    fam = parabola_candidates(p, level, window)
    assert len(fam) == scan_neighbourhood(p, "parabola", level, window)


def test_validate_rejects_far_square():
    delta = 2.0**-4
    tube = Tube(GrassmannLine(0.0, 0.0), delta)
    with pytest.raises(ValueError, match="invariant violated"):
        IncidenceInstance(delta, "tube", (tube,), (SquareFamily(4, [(3, 10)]),))
    with pytest.raises(ValueError):
        IncidenceInstance(delta, "line", (tube,), (SquareFamily(4, []),))


@pytest.mark.parametrize("kind", ["tube", "parabola"])
def test_count_matches_scan_on_generated_instances(kind):
    inst = generate_fu_ren_instance(kind, 0.5, 0.5, 2.0**-6, seed=2)
    total, per = count_incidences(inst)
    scan_total, scan_per = scan_incidences(inst, ((-80, 200), (-80, 200)))
    assert total == scan_total
    assert np.array_equal(per, scan_per)


def test_fu_ren_rhs_value():
    assert fu_ren_rhs(1, 1, 4, 4, 0.25, 0.0) == pytest.approx(8.0)
    assert fu_ren_rhs(1, 1, 4, 4, 0.25, 0.5) == pytest.approx(16.0)
    with pytest.raises(ValueError):
        fu_ren_rhs(0, 1, 4, 4, 0.25, 0.0)


@pytest.mark.parametrize("seed", range(3))
def test_fu_ren_bound_small_instances(seed):
    delta = 2.0**-7
    inst = generate_fu_ren_instance("parabola" if seed % 2 else "tube", 0.6, 0.4, delta, seed=seed)
    total, _ = count_incidences(inst)
    rhs = fu_ren_rhs(inst.C1, inst.C2, len(inst.union()), len(inst.anchors), delta, 0.1)
    assert total <= 10 * rhs


def test_richness_histogram_csv():
    delta = 2.0**-3
    fams = (SquareFamily(3, [(0, 0), (1, 0)]), SquareFamily(3, [(0, 0)]))
    inst = IncidenceInstance(delta, "parabola", ((0.0, 0.0), (0.0, 0.0)), fams)
    hist = richness_histogram(inst)
    assert hist.richness == {(0, 0): 2, (1, 0): 1}
    lines = hist.to_csv().splitlines()
    assert lines[0] == "r,count,lebesgue_proxy"
    assert lines[1].startswith("1,1,") and lines[2].startswith("2,1,")


def test_furstenberg_single_anchor():
    delta = 2.0**-6
    fam = parabola_candidates((0.0, 0.0), 6)
    inst = IncidenceInstance(delta, "parabola", ((0.0, 0.0),), (fam,))
    rep = furstenberg_check(inst, 1.0, 0.0, 0.1)
    assert rep.gamma == pytest.approx(1.0)
    assert rep.passed


def test_furstenberg_lattice_instance_passes():
    inst = lattice_furstenberg_instance(0.5, 2.0**-6)
    rep = furstenberg_check(inst, 0.5, 0.5, 0.1)
    assert rep.passed
    assert rep.union_size >= rep.threshold


def test_transfer_keeps_family_sizes_close():
    inst = lattice_furstenberg_instance(0.5, 2.0**-6, anchor_count=4)
    res = transfer_instance(inst)
    assert res.constant <= 12.0
    assert res.instance.kind == "tube"
    assert res.max_discrepancy <= 0.5
    with pytest.raises(ValueError):
        transfer_instance(generate_fu_ren_instance("tube", 0.5, 0.5, 2.0**-4))


def test_instance_json_roundtrip():
    for kind in ("tube", "parabola"):
        inst = generate_fu_ren_instance(kind, 0.5, 0.5, 2.0**-5, seed=1)
        back = IncidenceInstance.from_json(inst.to_json())
        assert back.kind == kind and back.C1 == inst.C1
        assert all(a == b for a, b in zip(back.families, inst.families))


@given(st.floats(0.0, 2.0), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_random_katz_tao_property(s, seed):
    fam = random_katz_tao_squares(s, 2.0**-5, 1.0, seed=seed)
    assert dyadic_katz_tao_constant(fam, s) <= 4.0
    assert np.all((fam.indices >= 0) & (fam.indices < 32))
