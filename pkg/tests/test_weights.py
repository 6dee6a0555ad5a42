import json

import numpy as np
import pytest

from revmax import (
    ValidationError,
    WeightSequence,
    compute_stats,
    parse_weight_spec,
    weight_eval,
)


class TestEval:
    def test_power(self):
        assert weight_eval(WeightSequence.power(-0.5), 4) == pytest.approx(0.5)

    def test_constant(self):
        w = WeightSequence.constant(1.0)
        assert all(weight_eval(w, j) == 1.0 for j in (1, 2, 100))

    def test_explicit_lookup(self):
        w = WeightSequence.explicit([3.0, -1.0, 2.0])
        assert weight_eval(w, 2) == -1.0

    def test_explicit_overrun(self):
        w = WeightSequence.explicit([3.0, -1.0, 2.0])
        with pytest.raises(ValidationError, match="length 3"):
            weight_eval(w, 4)

    def test_alternating_signs(self):
        w = WeightSequence.alternating(WeightSequence.power(-0.5))
        assert weight_eval(w, 1) == pytest.approx(1.0)
        assert weight_eval(w, 2) == pytest.approx(-(2.0 ** -0.5))
        assert weight_eval(w, 3) == pytest.approx(3.0 ** -0.5)

    def test_range_matches_pointwise(self):
        for w in (
            WeightSequence.power(-0.5),
            WeightSequence.constant(2.0),
            WeightSequence.alternating(WeightSequence.power(-1.0)),
        ):
            arr = w.eval_range(40)
            for j in range(1, 41):
                assert arr[j] == pytest.approx(w.eval(j), abs=0.0)


class TestStats:
    def test_unit_weights_closed_forms(self):
        stats = compute_stats(WeightSequence.constant(1.0), 8)
        for k in range(1, 9):
            assert stats.s[k] == k
            assert stats.s_star[4 * k] == 4 * k
            # max(16k, 2k - 1) = 16k
            assert stats.b[k] == pytest.approx(16.0 * k)

    def test_inverse_sqrt_first_coefficient(self):
        # direct summation of the first four weights, then squared
        s4 = 1.0 + 2.0 ** -0.5 + 3.0 ** -0.5 + 0.5
        stats = compute_stats(WeightSequence.power(-0.5), 4)
        assert stats.b[1] == pytest.approx(max(s4 ** 2, 1.0))
        assert stats.b[1] == pytest.approx(7.7532, abs=1e-4)

    def test_alternating_unit_magnitudes(self):
        w = WeightSequence.alternating(WeightSequence.constant(1.0))
        stats = compute_stats(w, 4)
        np.testing.assert_allclose(stats.s[1:5], [1.0, 0.0, 1.0, 0.0])
        assert stats.s_star[4] == 1.0
        assert stats.b[1] == pytest.approx(1.0)
        # max(1/2, s_2^2 - s_1^2) = max(1/2, -1) = 1/2
        assert stats.b[2] == pytest.approx(0.5)

    def test_running_max_is_monotone(self):
        rng = np.random.default_rng(5)
        w = WeightSequence.explicit(rng.standard_normal(160).tolist())
        stats = compute_stats(w, 20)
        assert np.all(np.diff(stats.s_star[1:]) >= 0)
        assert np.all(np.diff(stats.s_e_star[1:]) >= 0)
        assert np.all(np.diff(stats.s_o_star[1:]) >= 0)

    def test_b_dominates_both_branches(self):
        rng = np.random.default_rng(9)
        w = WeightSequence.explicit(rng.standard_normal(240).tolist())
        stats = compute_stats(w, 30)
        for k in range(1, 31):
            assert stats.b[k] >= stats.s[k] ** 2 - stats.s[k - 1] ** 2 - 1e-15
            assert stats.b[k] >= stats.s_star[4 * k] ** 2 / k - 1e-15
            assert stats.b[k] >= 0.0
            assert stats.b_star[k] == max(stats.b_e[k], stats.b_o[k])

    def test_b_positive_when_any_weight_is_nonzero(self):
        w = WeightSequence.explicit([0.0, 0.0, 1.0] + [0.0] * 40)
        stats = compute_stats(w, 5)
        assert all(stats.b[k] > 0 for k in range(1, 6))

    def test_inverse_sqrt_coefficients_stay_bounded(self):
        stats = compute_stats(WeightSequence.power(-0.5), 4096)
        assert np.nanmax(stats.b[1:]) <= 20.0

    def test_unit_weight_coefficients_grow_linearly(self):
        stats = compute_stats(WeightSequence.constant(1.0), 4096)
        ratios = stats.b[1:] / np.arange(1, 4097)
        np.testing.assert_allclose(ratios, 16.0, atol=1e-12)

    def test_even_odd_split_consistency(self):
        rng = np.random.default_rng(17)
        w = WeightSequence.explicit(rng.standard_normal(400).tolist())
        stats = compute_stats(w, 25)
        # s_{2k} = s_e_k + s_o_k up to float reassociation
        for k in range(1, 26):
            assert stats.s[2 * k] == pytest.approx(
                stats.s_e[k] + stats.s_o[k], abs=1e-12
            )

    def test_all_zero_weights_are_allowed(self):
        stats = compute_stats(WeightSequence.constant(0.0), 6)
        assert np.all(stats.b[1:] == 0.0)
        assert np.all(stats.b_star[1:] == 0.0)

    def test_explicit_list_must_reach_8n(self):
        w = WeightSequence.explicit([1.0] * 30)
        compute_stats(w, 3)
        with pytest.raises(ValidationError, match="index 32"):
            compute_stats(w, 4)


class TestParser:
    def test_constant_and_power(self):
        assert parse_weight_spec("constant:1.0").describe() == "constant:1"
        w = parse_weight_spec("power:-0.5")
        assert w.eval(4) == pytest.approx(0.5)

    def test_alternating_nested(self):
        w = parse_weight_spec("alternating:power:-0.5")
        assert w.eval(2) == pytest.approx(-(2.0 ** -0.5))

    def test_explicit_from_file(self, tmp_path):
        path = tmp_path / "w.json"
        path.write_text(json.dumps([1.0, -1.0, 0.5]))
        w = parse_weight_spec(f"explicit:@{path}")
        assert w.eval(3) == 0.5

    def test_bad_specs_rejected(self, tmp_path):
        for bad in ("constant", "constant:x", "mystery:1", "explicit:1,2"):
            with pytest.raises(ValidationError):
                parse_weight_spec(bad)
        missing = tmp_path / "missing.json"
        with pytest.raises(ValidationError, match="cannot read"):
            parse_weight_spec(f"explicit:@{missing}")
