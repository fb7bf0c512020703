import itertools
import math

import numpy as np
import pytest

from onebit_mimo import analytics, csi, symbols
from onebit_mimo.csi import PilotConfig
from onebit_mimo.symbols import Role, RngStream


def describe_pilot_config() -> None:
    @pytest.mark.parametrize(
        "pilot_power, pilots",
        [(0.0, 1), (-1.0, 1), (math.inf, 1), (1.0, 0), (1.0, -2)],
    )
    def test_invalid(pilot_power: float, pilots: int) -> None:
        with pytest.raises(ValueError):
            PilotConfig(pilot_power, pilots)

    @pytest.mark.parametrize("pilots, expected", [(1, False), (2, True), (5, False)])
    def test_tie_possible(pilots: int, expected: bool) -> None:
        assert PilotConfig(1.0, pilots).tie_possible is expected


def describe_majority_vote() -> None:
    @pytest.mark.parametrize(
        "per_pilot, expected",
        [([1, 1, -1], 1), ([1, -1], 1), ([-1, -1, 1], -1), ([-1], -1)],
    )
    def test_single_quadrature(per_pilot: list[int], expected: int) -> None:
        assert int(csi.majority_vote(per_pilot)) == expected

    def test_batched() -> None:
        per_pilot = np.array([[[1, -1]], [[1, -1]], [[-1, 1]]])
        assert csi.majority_vote(per_pilot).tolist() == [[1, -1]]


def describe_estimate_csi() -> None:
    def test_noiseless_single_pilot_is_csign() -> None:
        h = symbols.sample_complex_gaussian(RngStream(seed=1), 4, 8)
        w = np.zeros((1, 4, 8))
        actual = csi.estimate_csi_deterministic(h, PilotConfig(1.0), w)
        np.testing.assert_array_equal(actual, symbols.csign(h))

    def test_even_pilots_tie_resolves_to_plus_one() -> None:
        h = np.array([-1 - 1j])
        w = np.array([[2 + 2j], [0j]])
        actual = csi.estimate_csi_deterministic(h, PilotConfig(1.0, 2), w)
        assert actual.tolist() == [[1, 1]]

    def test_invalid_noise_shape() -> None:
        with pytest.raises(ValueError):
            csi.estimate_csi_deterministic(
                np.ones((2, 2)), PilotConfig(1.0, 3), np.zeros((2, 2, 2))
            )

    def test_shape_and_alphabet() -> None:
        h = symbols.sample_complex_gaussian(RngStream(seed=2), 5, 3, 4)
        g = csi.estimate_csi(h, PilotConfig(0.5, 3), RngStream(2, 0, Role.PILOT_NOISE))
        assert g.shape == (5, 3, 4, 2)
        assert set(np.unique(g).tolist()) == {-1, 1}

    @pytest.mark.parametrize("pilots", [1, 2, 3, 4, 5])
    def test_error_rate_matches_channel_average(pilots: int) -> None:
        cfg = PilotConfig(1.0, pilots)
        samples = 200_000
        stream = RngStream(seed=pilots)
        h = symbols.sample_complex_gaussian(stream, samples)
        g = csi.estimate_csi(h, cfg, stream.with_role(Role.PILOT_NOISE))
        errors = int((g != symbols.csign(h)).sum())
        p = csi.p_eps_exact(cfg)
        standard_error = math.sqrt(p * (1 - p) / (2 * samples))
        assert abs(errors / (2 * samples) - p) < 4 * standard_error

    def test_pilots_sharing_a_channel_err_together() -> None:
        cfg = PilotConfig(1.0, 5)
        samples = 200_000
        stream = RngStream(seed=55)
        h = symbols.sample_complex_gaussian(stream, samples)
        g = csi.estimate_csi(h, cfg, stream.with_role(Role.PILOT_NOISE))
        measured = float((g != symbols.csign(h)).mean())
        independent = csi.p_eps_majority(cfg)
        standard_error = math.sqrt(independent * (1 - independent) / (2 * samples))
        assert measured > independent + 10 * standard_error

    def test_even_pilots_follow_tiebreak_rate() -> None:
        cfg = PilotConfig(1.0, 2)
        samples = 200_000
        stream = RngStream(seed=22)
        h = symbols.sample_complex_gaussian(stream, samples)
        g = csi.estimate_csi(h, cfg, stream.with_role(Role.PILOT_NOISE))
        measured = float((g != symbols.csign(h)).mean())
        p = csi.p_eps_majority_tiebreak(cfg)
        standard_error = math.sqrt(p * (1 - p) / (2 * samples))
        assert abs(measured - p) < 4 * standard_error
        assert measured < csi.p_eps_majority(cfg)


def describe_p_eps() -> None:
    @pytest.mark.parametrize(
        "pilot_power, expected", [(1.0, 0.25), (3.0, 1 / 6), (1e-12, 0.5)]
    )
    def test_single(pilot_power: float, expected: float) -> None:
        assert csi.p_eps_single(pilot_power) == pytest.approx(expected, abs=1e-6)

    def test_single_is_decreasing() -> None:
        values = [csi.p_eps_single(pp) for pp in np.geomspace(1e-3, 1e3, 30)]
        assert all(0 < v < 0.5 for v in values)
        assert all(a > b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("pilot_power", [0.0, -1.0])
    def test_single_invalid(pilot_power: float) -> None:
        with pytest.raises(ValueError):
            csi.p_eps_single(pilot_power)

    @pytest.mark.parametrize(
        "pilot_power, pilots, expected",
        [(1.0, 1, 0.25), (1.0, 3, 0.15625), (3.0, 3, 2 / 27)],
    )
    def test_majority(pilot_power: float, pilots: int, expected: float) -> None:
        actual = csi.p_eps_majority(PilotConfig(pilot_power, pilots))
        assert actual == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("pilots", [1, 3, 5, 9, 15])
    @pytest.mark.parametrize("pilot_power", [0.2, 1.0])
    def test_majority_matches_enumeration(pilots: int, pilot_power: float) -> None:
        p = csi.p_eps_single(pilot_power)
        expected = 0.0
        for pattern in itertools.product([0, 1], repeat=pilots):
            wrong = sum(pattern)
            if wrong > pilots / 2:
                expected += p**wrong * (1 - p) ** (pilots - wrong)
        actual = csi.p_eps_majority(PilotConfig(pilot_power, pilots))
        assert actual == pytest.approx(expected, rel=1e-9)

    def test_majority_decreases_over_odd_pilots() -> None:
        values = [csi.p_eps_majority(PilotConfig(0.5, k)) for k in range(1, 40, 2)]
        assert all(a >= b for a, b in zip(values, values[1:]))
        assert values[-1] < 0.01

    @pytest.mark.parametrize("pilots", [2, 4, 6])
    def test_tiebreak_below_majority_for_even_pilots(pilots: int) -> None:
        cfg = PilotConfig(1.0, pilots)
        assert csi.p_eps_majority_tiebreak(cfg) < csi.p_eps_majority(cfg)

    @pytest.mark.parametrize("pilots", [1, 3, 7])
    def test_tiebreak_equals_majority_for_odd_pilots(pilots: int) -> None:
        cfg = PilotConfig(2.0, pilots)
        assert csi.p_eps_majority_tiebreak(cfg) == csi.p_eps_majority(cfg)

    @pytest.mark.parametrize("pilots", [1, 2])
    @pytest.mark.parametrize("pilot_power", [0.1, 1.0, 10.0, 1e6])
    def test_exact_reduces_to_single_pilot(pilots: int, pilot_power: float) -> None:
        cfg = PilotConfig(pilot_power, pilots)
        assert csi.p_eps_exact(cfg) == pytest.approx(
            csi.p_eps_single(pilot_power), rel=1e-7
        )
        assert csi.p_eps_exact(cfg) == pytest.approx(
            csi.p_eps_majority_tiebreak(cfg), rel=1e-7
        )

    @pytest.mark.parametrize("pilots", [3, 5, 9])
    @pytest.mark.parametrize("pilot_power", [0.1, 1.0, 10.0])
    def test_exact_exceeds_independent_sum(pilots: int, pilot_power: float) -> None:
        cfg = PilotConfig(pilot_power, pilots)
        assert csi.p_eps_majority(cfg) < csi.p_eps_exact(cfg) < 0.5

    @pytest.mark.parametrize(
        "pilot_power, pilots, expected",
        [(1.0, 3, 0.1868), (1.0, 5, 0.1554), (10.0, 5, 0.0533)],
    )
    def test_exact(pilot_power: float, pilots: int, expected: float) -> None:
        actual = csi.p_eps_exact(PilotConfig(pilot_power, pilots))
        assert actual == pytest.approx(expected, abs=2e-3)

    @pytest.mark.parametrize("pilots", [1, 3, 4])
    def test_exact_decreases_with_pilot_power(pilots: int) -> None:
        powers = np.geomspace(1e-2, 1e2, 9)
        values = [csi.p_eps_exact(PilotConfig(pp, pilots)) for pp in powers]
        assert all(a > b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("m, pilots, expected", [(1, 1, 1), (64, 3, 192)])
def test_pilot_slots(m: int, pilots: int, expected: int) -> None:
    assert csi.pilot_slots(m, pilots) == expected


@pytest.mark.slow
@pytest.mark.parametrize("n", [8, 16, 32])
@pytest.mark.parametrize("pilot_power", [1.0, 3.0])
def test_majority_of_wrong_estimates_is_binomial_tail(
    n: int, pilot_power: float
) -> None:
    cfg = PilotConfig(pilot_power)
    chunk, chunks = 100_000, 10
    events = 0
    for index in range(chunks):
        stream = RngStream(seed=n, index=index)
        h = symbols.sample_complex_gaussian(stream, chunk, n)
        g = csi.estimate_csi(h, cfg, stream.with_role(Role.PILOT_NOISE))
        wrong = (g != symbols.csign(h))[..., 0].sum(axis=-1)
        events += int((wrong >= math.ceil(n / 2)).sum())
    # per-quadrature term of the large-N receive-side error
    report = analytics.scheme2_asymptotic_error(csi.p_eps_single(pilot_power), n, 1)
    p = report.value / 2
    standard_error = math.sqrt(p * (1 - p) / (chunk * chunks))
    assert abs(events / (chunk * chunks) - p) < 4 * standard_error
