import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import boxload as bl
from boxload import (
    AllocationModel,
    EmptyList,
    NonFiniteFunctional,
    NonPositiveWeight,
    ProfileParseError,
    SumNotOne,
    ZeroBoxes,
    e_xi,
    e_xi_pair,
    equiprobable_profile,
    make_profile,
    powerlaw_profile,
)


class TestMakeProfile:
    def test_sorts_non_increasing(self):
        p = make_profile([0.2, 0.5, 0.3])
        assert p.weights.tolist() == [0.5, 0.3, 0.2]

    def test_equiprobable_list(self):
        p = make_profile([0.25, 0.25, 0.25, 0.25])
        assert p.box_count == 4

    def test_sum_not_one(self):
        with pytest.raises(SumNotOne):
            make_profile([0.5, 0.6])

    def test_empty(self):
        with pytest.raises(EmptyList):
            make_profile([])

    def test_non_positive(self):
        with pytest.raises(NonPositiveWeight):
            make_profile([0.5, 0.5, 0.0])
        with pytest.raises(NonPositiveWeight):
            make_profile([1.5, -0.5])

    def test_weights_not_renormalized(self):
        # a 5e-10 perturbation is within tolerance and must be kept verbatim
        w = [0.5, 0.25, 0.25 + 5e-10]
        p = make_profile(w)
        assert math.fsum(p.weights.tolist()) == pytest.approx(1.0 + 5e-10, abs=1e-12)

    def test_weights_read_only(self):
        p = make_profile([0.5, 0.5])
        with pytest.raises(ValueError):
            p.weights[0] = 0.9

    @given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=30))
    @settings(max_examples=60, deadline=None)
    def test_normalized_input_always_accepted(self, raw):
        total = math.fsum(raw)
        p = make_profile([w / total for w in raw])
        assert p.box_count == len(raw)
        assert np.all(np.diff(p.weights) <= 0)
        assert abs(math.fsum(p.weights.tolist()) - 1.0) <= 1e-9


class TestEquiprobable:
    def test_two_boxes(self):
        assert equiprobable_profile(2).weights.tolist() == [0.5, 0.5]

    def test_hundred_boxes(self):
        p = equiprobable_profile(100)
        assert p.box_count == 100
        assert np.all(p.weights == 0.01)

    def test_zero_boxes(self):
        with pytest.raises(ZeroBoxes):
            equiprobable_profile(0)


class TestPowerlaw:
    def test_normalized_and_sorted(self):
        p = powerlaw_profile(50, 1.0)
        assert abs(math.fsum(p.weights.tolist()) - 1.0) <= 1e-12
        assert np.all(np.diff(p.weights) <= 0)

    def test_exponent_zero_is_equiprobable(self):
        p = powerlaw_profile(8, 0.0)
        assert np.allclose(p.weights, 1 / 8, rtol=0, atol=1e-16)


class TestAllocationModel:
    def test_alpha_beta(self):
        m = AllocationModel(8, make_profile([0.5, 0.25, 0.25]))
        assert m.alpha == pytest.approx(8 / 3)
        assert m.beta == 4.0

    def test_equiprobable_alpha_equals_beta(self):
        m = AllocationModel(7, equiprobable_profile(7))
        assert m.alpha == m.beta == 1.0

    def test_negative_balls(self):
        with pytest.raises(bl.RangeError):
            AllocationModel(-1, equiprobable_profile(2))


class TestEXi:
    def test_identity_gives_alpha(self):
        m = AllocationModel(9, make_profile([0.4, 0.35, 0.25]))
        assert e_xi(m, lambda x: x) == pytest.approx(m.alpha, rel=1e-14)

    def test_equiprobable_square(self):
        m = AllocationModel(8, equiprobable_profile(4))
        assert e_xi(m, lambda x: x ** 2) == 4.0

    def test_three_box_hand_sum(self):
        m = AllocationModel(4, make_profile([0.5, 0.25, 0.25]))
        assert e_xi(m, lambda x: x) == pytest.approx(4 / 3, rel=1e-15)

    def test_constant_one(self):
        m = AllocationModel(5, powerlaw_profile(1000, 0.7))
        assert e_xi(m, lambda x: np.ones_like(x)) == pytest.approx(1.0, abs=1e-15)

    def test_scalar_only_callable(self):
        m = AllocationModel(3, make_profile([0.6, 0.4]))
        assert e_xi(m, math.exp) == pytest.approx(
            0.5 * (math.exp(1.8) + math.exp(1.2)), rel=1e-15)

    def test_non_finite_rejected(self):
        m = AllocationModel(3, make_profile([0.6, 0.4]))
        with pytest.raises(NonFiniteFunctional), np.errstate(divide="ignore"):
            e_xi(m, lambda x: 1.0 / (x - x))

    def test_n_zero_degrades(self):
        m = AllocationModel(0, equiprobable_profile(5))
        assert e_xi(m, lambda x: np.exp(-x)) == 1.0


class TestEXiPair:
    def test_independence_product(self):
        m = AllocationModel(6, make_profile([0.5, 0.3, 0.2]))
        assert e_xi_pair(m, lambda x, y: x * y) == pytest.approx(
            m.alpha ** 2, rel=1e-13)

    def test_equiprobable_complement(self):
        m = AllocationModel(2, equiprobable_profile(2))
        assert e_xi_pair(m, lambda x, y: 1 - x / 2 - y / 2) == 0.0

    def test_sum_of_coordinates(self):
        m = AllocationModel(4, make_profile([0.5, 0.5]))
        assert e_xi_pair(m, lambda x, y: x + y) == pytest.approx(4.0, rel=1e-15)

    @given(st.integers(0, 12), st.integers(1, 6))
    @settings(max_examples=40, deadline=None)
    def test_factorization_property(self, n, boxes):
        rng = np.random.default_rng(1000 + n * 7 + boxes)
        raw = rng.random(boxes) + 0.1
        total = math.fsum(raw.tolist())
        m = AllocationModel(n, make_profile([w / total for w in raw.tolist()]))
        lhs = e_xi_pair(m, lambda x, y: np.exp(-x) * (1.0 + y))
        rhs = e_xi(m, lambda x: np.exp(-x)) * e_xi(m, lambda x: 1.0 + x)
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_grouping_matches_naive_double_loop(self):
        # profiles with repeated weights exercise the multiplicity logic
        rng = np.random.default_rng(99)
        pool = [0.05, 0.1, 0.15, 0.2]
        for _ in range(20):
            picks = [pool[i] for i in rng.integers(0, len(pool), size=10)]
            total = math.fsum(picks)
            weights = [w / total for w in picks]
            m = AllocationModel(6, make_profile(weights))

            def g(x, y):
                return np.exp(-0.3 * x) * (1.0 + 0.1 * y * y)

            naive = math.fsum(
                g(6 * wa, 6 * wb) for wa in weights for wb in weights
            ) / len(weights) ** 2
            assert e_xi_pair(m, g) == pytest.approx(naive, rel=1e-13)


class TestProfileParsing:
    def test_weights_file(self, tmp_path):
        path = tmp_path / "w.txt"
        path.write_text("0.2\n0.5\n\n0.3\n")
        p = bl.load_profile(path)
        assert p.weights.tolist() == [0.5, 0.3, 0.2]

    def test_equi_token(self):
        p = bl.parse_profile_text("equi 10")
        assert p.box_count == 10
        assert np.all(p.weights == 0.1)

    def test_powerlaw_token(self):
        p = bl.parse_profile_text("powerlaw 5 1.0")
        assert p.weights[0] == pytest.approx(1 / math.fsum(1 / k for k in range(1, 6)))

    def test_cli_specs_match_file_formats(self, tmp_path):
        by_spec = bl.parse_profile_spec("powerlaw:7:0.5")
        by_text = bl.parse_profile_text("powerlaw 7 0.5")
        assert by_spec.weights.tolist() == by_text.weights.tolist()
        path = tmp_path / "p.txt"
        path.write_text("equi 3")
        assert bl.parse_profile_spec(f"file:{path}").box_count == 3

    @pytest.mark.parametrize("bad", [
        "", "equi", "equi x", "powerlaw 5", "0.5\nequi 2", "abc",
    ])
    def test_malformed_text(self, bad):
        with pytest.raises((ProfileParseError, SumNotOne)):
            bl.parse_profile_text(bad)

    @pytest.mark.parametrize("bad", ["equi", "equi:x", "powerlaw:5", "nope:3"])
    def test_malformed_spec(self, bad):
        with pytest.raises(ProfileParseError):
            bl.parse_profile_spec(bad)
