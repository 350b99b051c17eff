"""Instance generators: determinism, sizes and the dictionary value bound."""
import pytest

from pramdb.relstore import compute_c_val
from pramdb.workloads import FAMILIES, evens_odds


@pytest.mark.parametrize("family", sorted(FAMILIES))
@pytest.mark.parametrize("n", [8, 64, 300])
def test_families_are_deterministic_and_in_range(family, n):
    a = FAMILIES[family](n, 3)
    b = FAMILIES[family](n, 3)
    assert a.data == b.data and a.query == b.query
    bound = compute_c_val(a.schemas) * sum(len(r) * len(a.schemas[k]) for k, r in a.data.items())
    for name, rows in a.data.items():
        assert len(rows) == len(set(rows))
        assert all(len(r) == len(a.schemas[name]) for r in rows)
        assert all(1 <= v <= bound for r in rows for v in r)


def test_evens_odds_perturbation():
    inst = evens_odds(5, perturb=2)
    assert inst.data["R"] == [(2,), (4,), (11,), (8,), (10,)]
    assert inst.data["S"] == [(1,), (3,), (11,), (7,), (9,)]
