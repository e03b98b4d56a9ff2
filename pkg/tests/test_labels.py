import pytest

from faultclust.labels import (
    LabelLog,
    LabelRecord,
    VocabularyError,
    load_labels_csv,
    save_labels_csv,
    validate_label,
)


class TestVocabulary:
    def test_published_example_rows(self):
        # the expert-label excerpt rows must all validate
        rows = [
            ("Normal", "Normal", "N/A"),
            ("Other", "Off - No Switch", "N/A"),
            ("Short-circuit", "1-P-SC", "C"),
            ("Transients", "Transients", "N/A"),
            ("Switching", "Switch On", "N/A"),
            ("Short-circuit", "1-P-SC", "B"),
        ]
        for cls, ftype, phase in rows:
            validate_label(cls, ftype, phase)

    def test_unknown_class(self):
        with pytest.raises(VocabularyError, match="unknown fault class"):
            validate_label("Lightning", "Normal", "N/A")

    def test_type_class_mismatch(self):
        with pytest.raises(VocabularyError, match="not valid for class"):
            validate_label("Normal", "1-P-SC", "A")

    def test_phase_required_for_single_phase_types(self):
        with pytest.raises(VocabularyError, match="requires phase"):
            validate_label("Short-circuit", "1-P-SC", "N/A")

    def test_multi_phase_types_need_multi(self):
        validate_label("Short-circuit", "3-P-SC", "multi")
        with pytest.raises(VocabularyError):
            validate_label("Short-circuit", "3-P-SC", "A")

    def test_no_phase_types_reject_phase(self):
        with pytest.raises(VocabularyError, match="takes no phase"):
            validate_label("Switching", "Switch On", "A")

    def test_record_validates_on_construction(self):
        with pytest.raises(VocabularyError):
            LabelRecord(sample_id=1, fault_class="Normal", fault_type="Transients", phase="N/A")


class TestCsvRoundTrip:
    def test_round_trip(self, tmp_path):
        labels = [
            LabelRecord(0, "Normal", "Normal", "N/A", comment="quiet"),
            LabelRecord(1, "Short-circuit", "1-P-SC", "C", comment="dip on C"),
        ]
        path = tmp_path / "labels.csv"
        save_labels_csv(labels, path)
        assert load_labels_csv(path) == labels


class TestLabelLog:
    def test_append_and_replay(self, tmp_path):
        log = LabelLog(tmp_path / "labels.jsonl")
        e1 = log.append(LabelRecord(3, "Normal", "Normal", "N/A"))
        e2 = log.append(LabelRecord(3, "Short-circuit", "1-P-SC", "C"))
        assert e1["revision"] == 1
        assert e2["revision"] == 2
        view = log.current_view()
        assert view[3]["fault_type"] == "1-P-SC"
        assert len(log.entries()) == 2  # append-only: both entries retained

    def test_current_labels_latest_wins(self, tmp_path):
        log = LabelLog(tmp_path / "labels.jsonl")
        log.append(LabelRecord(1, "Normal", "Normal", "N/A"))
        log.append(LabelRecord(2, "Transients", "Transients", "N/A"))
        log.append(LabelRecord(1, "Switching", "Switch Off", "N/A"))
        labels = log.current_labels()
        assert len(labels) == 2
        assert labels[0].fault_type == "Switch Off"

    def test_empty_log(self, tmp_path):
        log = LabelLog(tmp_path / "labels.jsonl")
        assert log.entries() == []
        assert log.current_labels() == []
