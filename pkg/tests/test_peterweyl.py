import numpy as np
import pytest

from equiweyl.errors import MixedParameters
from equiweyl.geometry import builtin_model
from equiweyl.modespec import exact_spectrum
from equiweyl.peterweyl import (
    Character,
    CharacterFamily,
    family_at,
    growth_rate_estimate,
    multiplicity_csv,
    multiplicity_table,
)

SPHERE = builtin_model("sphere")
TORUS = builtin_model("flat_torus")


def ks(chars):
    return [c.k for c in chars]


def test_power_law_window_at_h_one():
    fam = CharacterFamily.power_law(0.37)
    assert ks(family_at(fam, 1.0)) == [-1, 0, 1]


def test_power_law_window_inclusive_boundary():
    # 64^(1/6) = 2 exactly; the boundary mode is included
    fam = CharacterFamily.power_law(1.0 / 6.0)
    assert ks(family_at(fam, 1.0 / 64.0)) == [-2, -1, 0, 1, 2]


def test_fixed_family():
    fam = CharacterFamily.fixed_set([0])
    assert ks(family_at(fam, 0.3)) == [0]
    assert fam.theta == 0.0


def test_family_monotone_in_h():
    fam = CharacterFamily.power_law(0.4)
    prev: set = set()
    for h in (1.0, 0.3, 0.1, 0.03, 0.01):
        cur = set(ks(family_at(fam, h)))
        assert prev <= cur
        prev = cur


def test_growth_rate_order_zero_is_one():
    for fam in (CharacterFamily.power_law(0.2), CharacterFamily.fixed_set([3, -1])):
        assert np.all(growth_rate_estimate(fam, 0, [1.0, 0.1, 0.01]) == 1.0)


def test_growth_rate_power_law_example():
    fam = CharacterFamily.power_law(1.0 / 6.0)
    (r,) = growth_rate_estimate(fam, 1, [1.0 / 64.0])
    assert abs(r - 0.6) <= 1e-14


def test_growth_rate_fixed_constant():
    fam = CharacterFamily.fixed_set([3])
    rs = growth_rate_estimate(fam, 2, [0.9, 0.1, 0.003])
    assert np.all(rs == 9.0)


@pytest.mark.parametrize("theta", [0.1, 1.0 / 6.0, 0.3])
@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_growth_rate_bounded_by_one(theta, order):
    # mean of |k|^N over |k| <= K never exceeds K^N
    fam = CharacterFamily.power_law(theta)
    rs = growth_rate_estimate(fam, order, np.geomspace(1.0, 1e-4, 9))
    assert np.all(rs <= 1.0 + 1e-12)


def test_growth_rate_empirically_bounded():
    # Definition-style check: the sweep max stays within 4x the h = max value
    fam = CharacterFamily.power_law(0.25)
    rs = growth_rate_estimate(fam, 3, np.geomspace(1.0, 1e-5, 11))
    assert np.max(rs) <= 4.0 * rs[0] + 1e-12


def test_character_validation():
    with pytest.raises(ValueError):
        Character(k=1, dim=0)


def records_sphere(h, l_max, k_max):
    out = []
    for k in range(-k_max, k_max + 1):
        out.extend(exact_spectrum(SPHERE, k, h, h * h * l_max * (l_max + 1.0),
                                  with_vectors=False))
    return out


def test_multiplicity_table_sphere_l3():
    table = multiplicity_table(records_sphere(1.0, 5, 5))
    by_energy = {round(c.energy): c for c in table.clusters}
    l3 = by_energy[12]
    assert l3.dim == 7
    assert l3.mult == {k: 1 for k in range(-3, 4)}


def test_multiplicity_table_completeness():
    # Peter-Weyl at finite scale: sum over k of multiplicities is 2l + 1
    table = multiplicity_table(records_sphere(1.0, 20, 20))
    assert len(table.clusters) == 21
    for l, cluster in enumerate(table.clusters):
        assert cluster.dim == 2 * l + 1
        assert sum(cluster.mult.values()) == cluster.dim
        assert all(v == 1 for v in cluster.mult.values())


def test_multiplicity_table_torus_lattice():
    # oracle: lattice points with k^2 + m^2 = 25
    recs = []
    for k in range(-6, 7):
        recs.extend(exact_spectrum(TORUS, k, 1.0, 26.0, with_vectors=False))
    table = multiplicity_table(recs)
    target = [c for c in table.clusters if abs(c.energy - 25.0) < 1e-9]
    assert len(target) == 1
    oracle = sum(
        1 for k in range(-6, 7) for m in range(-6, 7) if k * k + m * m == 25
    )
    assert oracle == 12
    assert target[0].dim == oracle


def test_multiplicity_table_empty():
    table = multiplicity_table([])
    assert table.clusters == () and table.records == ()


def test_multiplicity_table_mixed_h():
    recs = exact_spectrum(SPHERE, 0, 1.0, 7.0, with_vectors=False)
    recs += exact_spectrum(SPHERE, 0, 0.5, 7.0, with_vectors=False)
    with pytest.raises(MixedParameters):
        multiplicity_table(recs)


def test_multiplicity_table_remerges_split_degeneracies():
    recs = records_sphere(1.0, 3, 3)
    jittered = []
    for i, r in enumerate(recs):
        jittered.append(type(r)(r.energy * (1.0 + 1e-12 * (i % 3)), r.k, r.h,
                                r.index, r.provenance, r.vector, r.grid))
    table = multiplicity_table(jittered, eps_cluster=1e-9)
    assert [c.dim for c in table.clusters] == [1, 3, 5, 7]


def test_multiplicity_csv():
    table = multiplicity_table(records_sphere(1.0, 2, 2))
    text = multiplicity_csv(table)
    lines = text.strip().splitlines()
    assert lines[0] == "E,dim,k,mult"
    assert len(lines) == 1 + 1 + 3 + 5
    assert lines[1].startswith("0,1,0,1")
