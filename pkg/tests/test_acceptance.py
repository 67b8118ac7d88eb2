"""Production-resolution ladders against published energies (pytest --runslow)"""

import math

import mpmath
import pytest

from analysis import fit_convergence_order, run_ladder
from benchmarks import H2_PLUS, TH2, compare_to_benchmark
from geometry import PhysicalSystem
from solver import SolverConfig

pytestmark = pytest.mark.slow


def dirac_ground_state(system):
    c = system.c
    return c * c * (math.sqrt(1.0 - (system.Z1 / c) ** 2) - 1.0)


@pytest.fixture(scope="module")
def th2():
    return PhysicalSystem(Z1=TH2.Z1, Z2=TH2.Z2, R=TH2.R)


@pytest.fixture(scope="module")
def h2plus_ladder(h2plus):
    return run_ladder(h2plus, H2_PLUS.nu, H2_PLUS.D_max, [6, 8, 10, 12], p=H2_PLUS.p)


@pytest.fixture(scope="module")
def th2_ladder(th2):
    return run_ladder(th2, TH2.nu, TH2.D_max, [6, 8, 10, 12], p=TH2.p)


def test_h2plus_rungs(h2plus_ladder):
    assert h2plus_ladder.succeeded
    table = compare_to_benchmark(h2plus_ladder, "h2plus")
    assert list(table["m"]) == [6, 8, 10, 12]
    assert table["d_E_rel"].abs().max() < 1e-10
    assert table["d_E_nrel"].abs().max() < 1e-10


def test_h2plus_shift(h2plus_ladder):
    rung = next(r for r in h2plus_ladder.rungs if r.m == 10)
    with mpmath.workdps(40):
        published = mpmath.mpf(H2_PLUS.row(10)["shift"])
        assert abs(mpmath.mpf(rung.shift) - published) < mpmath.mpf("5e-13")


def test_h2plus_outer_iterations(h2plus_ladder):
    assert all(r.outer_iters <= 10 for r in h2plus_ladder.rungs)


def test_th2_rungs(th2_ladder):
    assert th2_ladder.succeeded
    table = compare_to_benchmark(th2_ladder, "th2")
    rows = table[table["m"].isin([6, 8, 10])]
    assert list(rows["m"]) == [6, 8, 10]
    assert rows["d_E_rel"].abs().max() < 1e-7
    assert rows["d_E_nrel"].abs().max() < 1e-7
    assert rows["d_shift"].abs().max() < 1e-7


def test_th2_outer_iterations(th2_ladder):
    assert all(0 < r.outer_iters <= 10 for r in th2_ladder.rungs)


@pytest.mark.parametrize("ladder, benchmark", [("h2plus_ladder", H2_PLUS),
                                               ("th2_ladder", TH2)])
@pytest.mark.parametrize("observable", ["E_rel", "E_nrel"])
def test_ladder_decreases_toward_extrapolated(request, ladder, benchmark, observable):
    result = request.getfixturevalue(ladder)
    values = [r.value(observable) for r in sorted(result.rungs, key=lambda r: r.m)]
    assert all(b <= a for a, b in zip(values, values[1:]))
    floor = float(mpmath.mpf(benchmark.extrapolated[observable])) - 1e-9
    assert min(values) > floor


def test_hydrogen_one_center_ladder():
    system = PhysicalSystem(Z1=1.0, Z2=0.0, R=2.0)
    ladder = run_ladder(system, 8, 40.0, [3, 6, 12], p=8)
    assert ladder.succeeded
    exact = dirac_ground_state(system)
    errors = [r.E_rel - exact for r in ladder.rungs]
    assert all(e > -1e-13 for e in errors)
    assert all(abs(b) * 10 <= abs(a) for a, b in zip(errors, errors[1:]))
    assert abs(errors[-1]) <= 1e-8


def test_thorium_one_center_ladder_from_above():
    system = PhysicalSystem(Z1=90.0, Z2=0.0, R=TH2.R)
    ladder = run_ladder(system, 8, TH2.D_max, [3, 4, 5], p=6)
    assert ladder.succeeded
    exact = dirac_ground_state(system)
    energies = [r.E_rel for r in ladder.rungs]
    assert all(E > exact - 1e-9 * abs(exact) for E in energies)
    assert all(b < a for a, b in zip(energies, energies[1:]))


def test_thorium_rejects_weak_transform():
    system = PhysicalSystem(Z1=90.0, Z2=0.0, R=TH2.R)
    ladder = run_ladder(system, 2, TH2.D_max, [3], p=6)
    assert not ladder.succeeded
    assert "under-resolved" in ladder.rungs[0].error


def test_one_center_thorium():
    """Z2 = 0 reproduces the point-nucleus Dirac ground state"""
    system = PhysicalSystem(Z1=90.0, Z2=0.0, R=TH2.R)
    ladder = run_ladder(system, TH2.nu, TH2.D_max, [8], p=TH2.p)
    assert ladder.rungs[0].E_rel == pytest.approx(dirac_ground_state(system), rel=1e-7)
    assert ladder.rungs[0].E_nrel == pytest.approx(-90.0 ** 2 / 2, rel=1e-7)


def test_convergence_order_drops_with_weaker_transform(h2plus, h2plus_ladder):
    # the shift itself is below double-precision noise from m=8 on, so the order comes from E_rel
    reference = H2_PLUS.extrapolated["E_rel"]
    strong = fit_convergence_order(h2plus_ladder.series("E_rel")[:3], reference,
                                   noise_floor=1e-14)
    assert 8.5 <= strong.q_N <= 10.5
    weak_ladder = run_ladder(h2plus, 6, H2_PLUS.D_max, [6, 8, 10], p=H2_PLUS.p)
    weak = fit_convergence_order(weak_ladder.series("E_rel"), reference, noise_floor=1e-14)
    assert strong.q_N - weak.q_N >= 1.0


def test_expansion_depth_is_sufficient(th2, th2_ladder):
    deeper = run_ladder(th2, TH2.nu, TH2.D_max, [6], p=TH2.p, cfg=SolverConfig(k_max=12))
    base = next(r for r in th2_ladder.rungs if r.m == 6)
    tol = SolverConfig().outer_tolerance(base.E_nrel)
    assert abs(deeper.rungs[0].E_rel - base.E_rel) < tol


def test_dmax_insensitivity(h2plus, h2plus_ladder):
    wider = run_ladder(h2plus, H2_PLUS.nu, 50.0, [10], p=H2_PLUS.p)
    base = next(r for r in h2plus_ladder.rungs if r.m == 10)
    assert wider.rungs[0].E_rel == pytest.approx(base.E_rel, abs=1e-12)


def test_quadrature_order_insensitivity(h2plus, h2plus_ladder):
    coarse = run_ladder(h2plus, H2_PLUS.nu, H2_PLUS.D_max, [6], p=H2_PLUS.p,
                        cfg=SolverConfig(n_I=20))
    assert coarse.rungs[0].E_rel == pytest.approx(h2plus_ladder.rungs[0].E_rel, abs=1e-12)
