import math

import numpy as np
import pytest

from qbitcommit.channels import NoiseParams, closed_form_cond_probs
from qbitcommit.link import (
    DARK,
    PHOTON,
    DetectionEvent,
    LinkParams,
    PulseSchedule,
    apply_dark_correction,
    dark_count_correction,
    detection_sigma,
    expected_detections,
    format_events,
    parse_events,
    raw_rate,
    t_link,
    transmit,
)
from qbitcommit.quantum import ValidationError

PI4 = math.pi / 4


def link_with(t, **kw):
    # choose the fibre length that gives transmission t at alpha = 0.05/km
    return LinkParams(alpha_abs=0.05, length_km=-math.log10(t) / 0.05, **kw)


class TestFormulas:
    def test_t_link(self):
        assert t_link(0.05, 0.0) == 1.0
        assert t_link(0.05, 20) == pytest.approx(0.1)
        assert t_link(0.05, 40) == pytest.approx(0.01)

    def test_raw_rate(self):
        p = link_with(0.1, f_rep=1e6, mu_photon=0.1, eta_det=0.1)
        assert raw_rate(p) == pytest.approx(1e3)
        assert raw_rate(link_with(0.1, f_rep=2e6, mu_photon=0.1, eta_det=0.1)) == pytest.approx(2e3)
        assert raw_rate(link_with(0.1, mu_photon=0.0)) == 0.0

    def test_dark_correction(self):
        p = link_with(0.1, mu_photon=0.1, eta_det=0.1, p_dark=1e-5)
        assert dark_count_correction(p) == pytest.approx(0.005)
        assert dark_count_correction(link_with(0.1, p_dark=0.0)) == 0.0
        with pytest.raises(ValidationError):
            dark_count_correction(LinkParams(mu_photon=0.0))

    def test_corrected_rows_normalised(self):
        t = closed_form_cond_probs(NoiseParams.white_noise(0.2), 0.6)
        out = apply_dark_correction(t, 0.01)
        assert np.allclose(out.table.sum(axis=1), 1.0, atol=1e-15)
        assert out[0, 1, 0] == pytest.approx(t[0, 1, 0] + 0.01)
        assert out[1, 0, 1] == pytest.approx(t[1, 0, 1] + 0.01)

    def test_crossed_rows_unchanged_at_pi4(self):
        t = closed_form_cond_probs(NoiseParams.white_noise(0.2), PI4)
        out = apply_dark_correction(t, 0.02)
        assert out[0, 0, 1] == pytest.approx(0.5) and out[1, 1, 0] == pytest.approx(0.5)

    def test_validation(self):
        with pytest.raises(ValidationError):
            LinkParams(eta_det=1.5)
        with pytest.warns(UserWarning):
            LinkParams(mu_photon=0.5)


class TestSchedule:
    def test_regular(self):
        s = PulseSchedule.regular([0, 1, 1], 1e6)
        assert np.allclose(s.times, [0, 1e-6, 2e-6])

    def test_strictly_increasing(self):
        with pytest.raises(ValidationError):
            PulseSchedule(np.array([0, 1]), np.array([0.0, 0.0]))


class TestTransmit:
    def test_no_photons_only_dark(self, rng):
        link = LinkParams(mu_photon=0.0, p_dark=0.01)
        ev = transmit(PulseSchedule.regular(np.zeros(10_000, dtype=int), 1e6), link, rng)
        assert ev and all(e.kind == DARK and e.outcome in (0, 1) for e in ev)

    def test_photon_count(self):
        link = link_with(0.1, mu_photon=0.1, eta_det=0.1, p_dark=0.0)
        n = 1_000_000
        ev = transmit(PulseSchedule.regular(np.zeros(n, dtype=np.int8), 1e6), link, np.random.default_rng(9))
        mean = n * 1e-3
        assert abs(len(ev) - mean) < 3 * math.sqrt(mean * (1 - 1e-3))
        assert abs(len(ev) - expected_detections(link, n)) < 3 * detection_sigma(link, n)

    def test_events_ordered(self, rng):
        ev = transmit(PulseSchedule.regular(np.zeros(5000, dtype=int), 1e6), LinkParams(), rng)
        assert [e.pulse_index for e in ev] == sorted(e.pulse_index for e in ev)

    def test_event_text_roundtrip(self):
        ev = [DetectionEvent(3, 3e-6, PHOTON), DetectionEvent(8, 8e-6, DARK, 1)]
        assert parse_events(format_events(ev), 1e6) == ev

    def test_event_parse_error(self):
        with pytest.raises(ValidationError, match="line 2"):
            parse_events(["1 0 photon", "2 7 photon"], 1e6)
