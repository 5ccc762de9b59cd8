import numpy as np
import pytest

from tauspread import evaluation
from tauspread.errors import EvaluationError
from tauspread.evaluation import (
    NetworkAverages,
    PatternResult,
    clinical_network_means,
    clinical_pattern,
    hamming,
    network_means_simulated,
    pattern_string,
    sweep,
)
from tauspread.io import RoiAtlas


def _averages(pairs):
    return NetworkAverages(entries=tuple(pairs), roi_selection=(), source="simulated")


class TestNetworkMeansSimulated:
    @pytest.fixture()
    def toy_atlas(self):
        return RoiAtlas(
            roi_names=("r0", "r1", "r2", "sm"),
            network_labels=("T", "T", "O", "S"),
        )

    def test_constant_signal_constant_means(self, toy_atlas):
        means = network_means_simulated(np.full(4, 2.5), toy_atlas,
                                        ["r0", "r1", "r2"], networks=("T", "O", "S"))
        assert all(value == 2.5 for _, value in means.entries)

    def test_toy_means(self, toy_atlas):
        means = network_means_simulated(np.array([1.0, 1.0, 3.0, 9.0]), toy_atlas,
                                        ["r0", "r1", "r2"], networks=("T", "O"))
        assert means.as_dict() == {"T": 1.0, "O": 3.0}

    def test_sensorimotor_ignores_selection(self, toy_atlas):
        means = network_means_simulated(np.array([1.0, 1.0, 3.0, 9.0]), toy_atlas,
                                        ["r0"], networks=("T", "S"))
        assert means.as_dict() == {"T": 1.0, "S": 9.0}

    def test_empty_network_rejected(self, toy_atlas):
        with pytest.raises(EvaluationError, match="no member vertices"):
            network_means_simulated(np.zeros(4), toy_atlas, ["r0"], networks=("T", "O"))

    def test_selection_missing_from_atlas_rejected(self, toy_atlas):
        with pytest.raises(EvaluationError, match="absent"):
            network_means_simulated(np.zeros(4), toy_atlas, ["nope"], networks=("T",))

    def test_full_clinical_selection_gives_five_means(self, desk_atlas):
        w = np.linspace(1.0, 2.0, 12)
        selection = ["Inferior temporal region", "Middle temporal region",
                     "Temporalpole region", "Fusiform region", "Lingual region",
                     "Enthorinal region", "Amygdala", "Lateral orbitofrontal region",
                     "Parsorbitalis region"]
        means = network_means_simulated(w, desk_atlas, selection)
        assert [label for label, _ in means.entries] == ["T", "F", "O", "L", "S"]


class TestPatternString:
    def test_orders_descending(self):
        result = pattern_string(_averages([("T", 1.57), ("O", 1.5), ("L", 1.43), ("S", 1.1)]))
        assert result.pattern == "TOLS"
        assert result.ties == ()

    def test_all_equal_uses_priority_and_flags(self):
        result = pattern_string(_averages([("T", 1.0), ("F", 1.0), ("O", 1.0),
                                           ("L", 1.0), ("S", 1.0)]))
        assert result.pattern == "TFOLS"
        assert len(result.ties) == 10  # every pair tied

    def test_single_network(self):
        assert pattern_string(_averages([("T", 0.5)])).pattern == "T"

    def test_scaling_invariance(self):
        rng = np.random.default_rng(0)
        labels = ("T", "F", "O", "L", "S")
        for _ in range(50):
            means = rng.uniform(0.5, 3.0, size=5)
            base = pattern_string(_averages(zip(labels, means))).pattern
            scaled = pattern_string(_averages(zip(labels, means * 7.25))).pattern
            assert base == scaled

    def test_duplicate_labels_rejected(self):
        with pytest.raises(EvaluationError):
            pattern_string(_averages([("T", 1.0), ("T", 2.0)]))

    def test_unknown_label_rejected(self):
        with pytest.raises(EvaluationError):
            pattern_string(_averages([("X", 1.0)]))


class TestClinicalPattern:
    def test_six_roi_means(self, clinical_full):
        means = clinical_network_means(clinical_full, 6, 1.0).as_dict()
        assert means["T"] == pytest.approx(1.65)
        assert means["O"] == pytest.approx(1.5)
        assert means["L"] == pytest.approx(1.45)
        assert means["S"] == 1.0

    def test_ten_roi_pattern_reference(self, clinical_full):
        result = clinical_pattern(clinical_full, 10, 1.0)
        assert result.pattern == "TFOLS"
        assert ("F", "O") in result.ties  # F and O tie exactly at 1.5

    def test_sensorimotor_value_positions_s(self, clinical_full):
        result = clinical_pattern(clinical_full, 6, 10.0)
        assert result.pattern.startswith("S")


class TestHamming:
    @pytest.mark.parametrize("a,b,expected", [
        ("TLOS", "TSOL", 2),
        ("TFOLS", "FTOSL", 4),
        ("TLOS", "TLOS", 0),
    ])
    def test_reference_pairs(self, a, b, expected):
        assert hamming(a, b) == expected

    def test_length_mismatch_rejected(self):
        with pytest.raises(EvaluationError):
            hamming("TLOS", "T987L0")

    def test_metric_properties(self):
        rng = np.random.default_rng(1)
        alphabet = np.array(list("TFOLS"))
        for _ in range(200):
            n = int(rng.integers(1, 8))
            a, b, c = ("".join(rng.choice(alphabet, size=n)) for _ in range(3))
            assert hamming(a, b) == hamming(b, a)
            assert (hamming(a, b) == 0) == (a == b)
            assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


class TestSweep:
    @staticmethod
    def _fake_simulator(table):
        def fn(gamma3, c_w):
            value = table[(gamma3, c_w)]
            if isinstance(value, Exception):
                raise value
            return PatternResult(pattern=value)
        return fn

    def test_single_point_grid(self):
        fn = self._fake_simulator({(0.1, 2.0): "TLOS"})
        result = sweep(fn, [0.1], [2.0], reference="TSOL")
        assert result.min_hd == 2
        assert result.representative.gamma3 == 0.1
        assert len(result.points) == 1

    def test_zero_distance_plateau_wins(self):
        table = {(0.1, 1.0): "TSOL", (0.1, 2.0): "TLOS",
                 (0.2, 1.0): "TLOS", (0.2, 2.0): "SLOT"}
        result = sweep(self._fake_simulator(table), [0.1, 0.2], [1.0, 2.0],
                       reference="TLOS")
        assert result.min_hd == 0
        assert (result.representative.gamma3, result.representative.c_w) == (0.1, 2.0)

    def test_errors_recorded_not_raised(self):
        table = {(0.1, 1.0): RuntimeError("boom"), (0.1, 2.0): "TLOS"}
        result = sweep(self._fake_simulator(table), [0.1], [1.0, 2.0], reference="TLOS")
        assert result.points[0].status == "error"
        assert "boom" in result.points[0].error
        assert result.points[1].status == "ok"
        assert result.min_hd == 0

    def test_all_points_failing(self):
        result = sweep(self._fake_simulator({(0.1, 1.0): RuntimeError("x")}),
                       [0.1], [1.0], reference="TLOS")
        assert result.min_hd is None
        assert result.representative is None

    def test_parallel_matches_sequential(self):
        rng = np.random.default_rng(2)
        grid3 = [0.1, 0.2, 0.3]
        gridc = [1.0, 2.0, 3.0]
        patterns = {}
        for g3 in grid3:
            for cw in gridc:
                patterns[(g3, cw)] = "".join(rng.permutation(list("TFOLS")))
        fn = self._fake_simulator(patterns)
        seq = sweep(fn, grid3, gridc, reference="TFOLS", threads=1)
        par = sweep(fn, grid3, gridc, reference="TFOLS", threads=4)
        assert seq == par

    def test_empty_grid_rejected(self):
        with pytest.raises(EvaluationError):
            sweep(self._fake_simulator({}), [], [1.0], reference="T")


class TestTieOrderConstant:
    def test_priority_order(self):
        assert evaluation.TIE_BREAK_ORDER == ("T", "F", "O", "L", "S")
