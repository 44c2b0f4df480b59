import numpy as np
import pytest

from scatterkern.asymptotics import (AsymptoticsRun, backward_schedule, forward_schedule,
                                     projection_norms, run_mass_blowup, run_mass_channel, run_ratio_limits,
                                     run_scattering_identities, run_theorem2)
from scatterkern.fm_spaces import kernel_compute
from scatterkern.scattering_data import get_dataset, one_mass_data

LAM0 = 1 + 1j
SHORT = forward_schedule(8, 0.5, 12.0)


def at(run, x):
    return run.values[int(np.argmin(np.abs(run.x - x)))]


def test_theorem2_zero_data_is_exact():
    run = run_theorem2(get_dataset("zero"), LAM0, SHORT)
    assert not run.failures
    assert run.values.max() < 1e-12


def test_theorem2_appendix1():
    run = run_theorem2(get_dataset("appendix1"), LAM0, SHORT)
    assert not run.failures
    assert run.nonincreasing(after=2.0)
    assert at(run, 10.0) < 1e-2


def test_theorem2_one_mass_channel_vanishes():
    run = run_theorem2(get_dataset("one-mass"), LAM0, forward_schedule(6, 0.5, 10.0))
    mass = [r["mass_channel"] for r in run.records]
    assert mass[-1] < 1e-2 * mass[0]
    assert run.final < 1e-3


def test_ratio_limits():
    assert run_ratio_limits(get_dataset("zero"), LAM0, SHORT).values.max() < 1e-14
    run = run_ratio_limits(get_dataset("appendix1"), LAM0, SHORT)
    assert at(run, 10.0) < 1e-2
    run = run_ratio_limits(get_dataset("contraction"), LAM0, SHORT)
    assert run.final < 1e-2


@pytest.mark.parametrize("nu", [1.0, 2.5])
def test_mass_blowup_single(nu):
    run = run_mass_blowup(one_mass_data(nu), 1j)
    assert not run.failures
    assert at(run, -6.0) < 1e-2
    assert abs(run.records[-1]["scaled_diag"] - 1 / nu) < 1e-2 / nu


def test_mass_blowup_two_masses():
    run = run_mass_blowup(get_dataset("two-mass"), 1j)
    assert run.final < 1e-2


def test_mass_blowup_rejects_non_mass():
    with pytest.raises(ValueError):
        run_mass_blowup(get_dataset("one-mass"), 2j)


def test_identities_zero_data():
    run = run_scattering_identities(get_dataset("zero"), LAM0, forward_schedule(4, 0.5, 5.0))
    assert run.values.max() < 1e-12


def test_identity_forward_appendix1():
    run = run_scattering_identities(get_dataset("appendix1"), LAM0, forward_schedule(6, 0.5, 10.0))
    assert at(run, 10.0) < 5e-2


def test_identity_backward_appendix1():
    run = run_scattering_identities(get_dataset("appendix1"), LAM0, backward_schedule(6, 0.5, 6.0),
                                    "backward")
    assert run.nonincreasing()
    assert run.final < 1e-3


def test_monotone_diagonal():
    d = get_dataset("contraction")
    xs = np.linspace(-3, 3, 9)
    diag = [kernel_compute("h2", d.translate(x), LAM0, None, augment=True).diag for x in xs]
    assert np.all(np.diff(diag) <= 1e-8)


@pytest.mark.parametrize("name", ["appendix1", "contraction", "two-mass"])
def test_projection_limits(name):
    f = lambda t: 1j / (np.asarray(t) + 1j)
    p, r = projection_norms(get_dataset(name), f, [-6.0, 6.0])
    assert r[0] < 1e-6
    assert p[1] < 1e-2


def test_run_bookkeeping():
    run = AsymptoticsRun("t", 1j, "q", records=[{"x": -1.0, "value": 0.5}, {"x": -3.0, "value": 0.1},
                                               {"x": -2.0, "value": 0.2}])
    assert run.final == 0.1
    assert run.nonincreasing()
    lines = run.to_csv().splitlines()
    assert lines[0] == "x,quantity,residual,epsilon_used,gram_cond"
    assert len(lines) == 4


def test_parallel_schedule_matches_serial():
    d = get_dataset("appendix1")
    xs = forward_schedule(4, 0.5, 4.0)
    a = run_theorem2(d, LAM0, xs, workers=1).values
    b = run_theorem2(d, LAM0, xs, workers=4).values
    assert np.array_equal(a, b)


def test_mass_channel_decays_forward():
    run = run_mass_channel(get_dataset("one-mass"), LAM0, forward_schedule(5, 0.5, 10.0))
    assert run.values[0] > 1e-2
    assert run.nonincreasing()
    assert run.final < 1e-3
    assert run_mass_channel(get_dataset("zero"), LAM0, [1.0]).values.max() == 0.0
