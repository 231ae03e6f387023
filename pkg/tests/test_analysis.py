import numpy as np
import pytest

from surrogate.analysis import fit_exponential_rate, oscillation_period, plateau_onset, relative_change


def test_period_of_sine():
    t = np.arange(0, 1000, 1.0)
    assert oscillation_period(t, 0.3 + np.sin(2 * np.pi * t / 127.0)) == pytest.approx(127.0, rel=1e-4)
    with pytest.raises(ValueError):
        oscillation_period(t[:50], np.sin(2 * np.pi * t[:50] / 127.0))


def test_exponential_rate():
    t = np.linspace(0, 300, 301)
    y = 0.5 * np.exp(-t / 130.0)
    assert 1 / fit_exponential_rate(t, y, 0, 152) == pytest.approx(130.0, rel=1e-10)


def test_plateau_detection():
    t = np.arange(0, 2001, 1.0)
    saturating = -0.016 - 1e-3 * (1 - np.exp(-t / 150.0)) + 1e-6 * np.sin(2 * np.pi * t / 130)
    p = plateau_onset(t, saturating)
    # window-averaged rates scale like exp(-c/150), so the 5% point is
    # 150 ln 20 after the first window centre at 75
    assert p.onset == pytest.approx(75 + 150 * np.log(20), abs=6)
    linear = -0.016 - 1e-6 * t
    assert plateau_onset(t, linear).onset is None


def test_relative_change():
    t = np.arange(10.0)
    assert relative_change(np.full(10, 0.3), t, 5) == 0.0
    assert relative_change(np.arange(10.0) + 1, t, 8) == pytest.approx(0.1)
