"""Marks, labels, merges, precision, and session persistence."""

import numpy as np
import pytest

from taphos.evaluation import (
    EvaluationError,
    EvaluationSession,
    add_mark,
    apply_merge,
    compute_precision,
    export_marks,
    load_assignments,
    load_session,
    new_session,
    normalize_merge_map,
    remove_mark,
    save_assignments,
    save_session,
    session_to_json,
    set_label,
    set_merge,
)


def assignments_fixture(sizes):
    """Build image_id -> cluster with `sizes[c]` images in cluster c."""
    out = {}
    for c, size in enumerate(sizes):
        for i in range(size):
            out[f"c{c}_img{i}"] = c
    return out


# ---- precision --------------------------------------------------------


def test_eleven_of_hundred_is_exactly_089():
    assignments = assignments_fixture([100])
    marks = [f"c0_img{i}" for i in range(11)]
    report = compute_precision(assignments, marks)
    assert report.per_cluster[0].precision == 0.89
    assert report.per_cluster[0].total == 100
    assert report.per_cluster[0].missed == 11


def test_no_marks_all_ones():
    report = compute_precision(assignments_fixture([5, 8, 2]), [])
    assert all(cp.precision == 1.0 for cp in report.per_cluster.values())
    assert report.macro_precision == 1.0
    assert report.micro_precision == 1.0


def test_two_cluster_macro_micro():
    # 10 images with 2 missed, 30 images with 3 missed.
    assignments = assignments_fixture([10, 30])
    marks = ["c0_img0", "c0_img1", "c1_img0", "c1_img1", "c1_img2"]
    report = compute_precision(assignments, marks)
    assert report.per_cluster[0].precision == 0.8
    assert report.per_cluster[1].precision == 0.9
    assert report.macro_precision == (0.8 + 0.9) / 2
    assert report.macro_precision == pytest.approx(0.85, abs=1e-12)
    assert report.micro_precision == 0.875


def test_micro_is_one_minus_mark_fraction():
    rng = np.random.default_rng(0)
    for _ in range(20):
        sizes = [int(rng.integers(1, 30)) for _ in range(int(rng.integers(1, 6)))]
        assignments = assignments_fixture(sizes)
        ids = list(assignments)
        n_marks = int(rng.integers(0, len(ids) + 1))
        marks = list(rng.choice(ids, size=n_marks, replace=False))
        report = compute_precision(assignments, marks)
        assert report.micro_precision == 1.0 - len(marks) / len(ids)


def test_adding_mark_never_increases_precision():
    rng = np.random.default_rng(1)
    assignments = assignments_fixture([7, 13, 4])
    ids = list(assignments)
    rng.shuffle(ids)
    prev = compute_precision(assignments, [])
    for upto in range(1, len(ids) + 1):
        cur = compute_precision(assignments, ids[:upto])
        assert cur.macro_precision <= prev.macro_precision
        assert cur.micro_precision <= prev.micro_precision
        for c in cur.per_cluster:
            assert cur.per_cluster[c].precision <= prev.per_cluster[c].precision
        prev = cur


def test_unknown_mark_rejected():
    with pytest.raises(EvaluationError) as exc:
        compute_precision(assignments_fixture([3]), ["ghost"])
    assert "ghost" in str(exc.value)


def test_empty_assignments_all_ones():
    report = compute_precision({}, [])
    assert report.macro_precision == 1.0
    assert report.micro_precision == 1.0
    assert report.per_cluster == {}


def test_precision_on_merged_groups():
    assignments = assignments_fixture([10, 30])
    merged = apply_merge(list(assignments.values()), {0: 0, 1: 0})
    merged_assignments = {i: int(g) for i, g in zip(assignments, merged)}
    report = compute_precision(merged_assignments, ["c0_img0"])
    assert report.per_cluster[0].total == 40
    assert report.per_cluster[0].precision == 39 / 40


# ---- merge ------------------------------------------------------------


def test_apply_merge_identity():
    a = np.array([0, 1, 2, 1, 0])
    out = apply_merge(a, {0: 0, 1: 1, 2: 2})
    assert np.array_equal(out, a)


def test_apply_merge_collapse():
    out = apply_merge([0, 1, 1], {0: 0, 1: 0})
    assert np.array_equal(out, [0, 0, 0])


def test_apply_merge_fifty_to_twelve():
    rng = np.random.default_rng(2)
    assignments = rng.integers(0, 50, size=500)
    # Surjective map onto 12 groups.
    targets = np.concatenate([np.arange(12), rng.integers(0, 12, size=38)])
    rng.shuffle(targets)
    merge_map = {c: int(targets[c]) for c in range(50)}
    # Ensure every group actually receives a populated source cluster.
    for g in range(12):
        src = int(np.flatnonzero(targets == g)[0])
        assignments[g] = src
    out = apply_merge(assignments, merge_map)
    assert len(set(out.tolist())) == 12
    assert out.shape == assignments.shape


def test_apply_merge_missing_cluster_named():
    with pytest.raises(EvaluationError) as exc:
        apply_merge([0, 1, 7], {0: 0, 1: 1})
    assert "7" in str(exc.value)


def test_apply_merge_idempotent_map():
    a = np.array([0, 1, 2, 3])
    m = {0: 0, 1: 0, 2: 2, 3: 2}  # idempotent on its range
    once = apply_merge(a, m)
    twice = apply_merge(once, m)
    assert np.array_equal(once, twice)


def test_normalize_merge_map():
    m = {0: 5, 1: 9, 2: 5, 3: 100}
    norm = normalize_merge_map(m)
    assert norm == {0: 0, 1: 1, 2: 0, 3: 2}
    assert set(norm.values()) == {0, 1, 2}


# ---- session mutations ------------------------------------------------


def test_mark_unmark_remark_order():
    assignments = assignments_fixture([3])
    s = new_session("assign.csv")
    s = add_mark(s, "c0_img0", assignments)
    s = add_mark(s, "c0_img1", assignments)
    s = add_mark(s, "c0_img0", assignments)  # no-op duplicate
    assert s.marks == ("c0_img0", "c0_img1")
    s = remove_mark(s, "c0_img0", assignments)
    assert s.marks == ("c0_img1",)
    s = add_mark(s, "c0_img0", assignments)  # re-mark lands at the end
    assert s.marks == ("c0_img1", "c0_img0")
    assert export_marks(s) == "c0_img1\nc0_img0\n"


def test_remove_unmarked_is_noop():
    assignments = assignments_fixture([2])
    s = new_session("assign.csv")
    s2 = remove_mark(s, "c0_img0", assignments)
    assert s2.marks == ()


def test_mark_unknown_image():
    s = new_session("assign.csv")
    with pytest.raises(EvaluationError):
        add_mark(s, "ghost", assignments_fixture([2]))


def test_export_marks_order_and_bytes():
    assignments = {"a": 0, "b": 0}
    s = new_session("x")
    s = add_mark(s, "b", assignments)
    s = add_mark(s, "a", assignments)
    assert export_marks(s) == "b\na\n"


def test_export_marks_empty():
    assert export_marks(new_session("x")) == ""


def test_set_label_and_overwrite():
    assignments = assignments_fixture([2, 2, 2, 2])
    s = new_session("x")
    s = set_label(s, 3, "torso early decomposition", assignments)
    assert s.labels[3] == "torso early decomposition"
    s = set_label(s, 3, "torso, advanced decay", assignments)
    assert s.labels[3] == "torso, advanced decay"


def test_set_label_unknown_cluster():
    s = new_session("x")
    with pytest.raises(EvaluationError) as exc:
        set_label(s, 9, "kw", assignments_fixture([2]))
    assert "9" in str(exc.value)


def test_set_merge_validates_cover():
    assignments = assignments_fixture([2, 2, 2])
    s = new_session("x")
    with pytest.raises(EvaluationError) as exc:
        set_merge(s, {0: 0, 1: 0}, assignments)
    assert "2" in str(exc.value)


def test_set_merge_normalizes_targets():
    assignments = assignments_fixture([2, 2, 2])
    s = new_session("x")
    s = set_merge(s, {0: 10, 1: 4, 2: 10}, assignments)
    assert s.merge_map == {0: 1, 1: 0, 2: 1}


def test_set_merge_empty_clears():
    assignments = assignments_fixture([2, 2])
    s = new_session("x")
    s = set_merge(s, {0: 0, 1: 1}, assignments)
    s = set_merge(s, {}, assignments)
    assert s.merge_map == {}


def test_session_rejects_duplicate_marks():
    with pytest.raises(EvaluationError):
        EvaluationSession(
            session_id="s", assignments_ref="a", marks=("x", "x"),
            labels={}, merge_map={}, created_at="t", updated_at="t",
        )


# ---- persistence ------------------------------------------------------


def test_session_round_trip(tmp_path):
    assignments = assignments_fixture([3, 3])
    s = new_session("assign.csv", session_id="fixed")
    s = add_mark(s, "c0_img2", assignments)
    s = add_mark(s, "c1_img0", assignments)
    s = set_label(s, 0, "fresh stage", assignments)
    s = set_merge(s, {0: 0, 1: 0}, assignments)
    path = tmp_path / "session.json"
    save_session(s, path)
    back = load_session(path)
    assert back == s
    # And fully stable through another cycle.
    save_session(back, path)
    assert load_session(path) == back


def test_session_json_shape(tmp_path):
    import json

    s = new_session("assign.csv", session_id="sid")
    text = session_to_json(s)
    payload = json.loads(text)
    assert set(payload) == {
        "session_id", "assignments_ref", "marks", "labels",
        "merge_map", "created_at", "updated_at",
    }
    assert payload["session_id"] == "sid"
    assert payload["marks"] == []


def test_corrupt_session_names_file(tmp_path):
    path = tmp_path / "session.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(EvaluationError) as exc:
        load_session(path)
    assert "session.json" in str(exc.value)


def test_session_missing_field_is_corrupt(tmp_path):
    path = tmp_path / "session.json"
    path.write_text('{"session_id": "x"}', encoding="utf-8")
    with pytest.raises(EvaluationError) as exc:
        load_session(path)
    assert "session.json" in str(exc.value)


def test_save_session_leaves_no_temp_files(tmp_path):
    s = new_session("x")
    path = tmp_path / "session.json"
    for _ in range(3):
        save_session(s, path)
    leftovers = [p for p in tmp_path.iterdir() if p.name != "session.json"]
    assert leftovers == []


# ---- assignments CSV --------------------------------------------------


def test_assignments_round_trip(tmp_path):
    path = tmp_path / "assign.csv"
    save_assignments(["a", "b", "c"], [2, 0, 2], path)
    back = load_assignments(path)
    assert back == {"a": 2, "b": 0, "c": 2}
    assert list(back) == ["a", "b", "c"]


def test_assignments_header_and_rows(tmp_path):
    path = tmp_path / "assign.csv"
    save_assignments(["x"], [7], path)
    assert path.read_text(encoding="utf-8") == "image_id,cluster\nx,7\n"


def test_assignments_duplicate_rejected(tmp_path):
    path = tmp_path / "assign.csv"
    path.write_text("image_id,cluster\na,0\na,1\n", encoding="utf-8")
    with pytest.raises(EvaluationError):
        load_assignments(path)


def test_assignments_bad_header(tmp_path):
    path = tmp_path / "assign.csv"
    path.write_text("id,k\na,0\n", encoding="utf-8")
    with pytest.raises(EvaluationError):
        load_assignments(path)


def test_assignments_length_mismatch(tmp_path):
    with pytest.raises(EvaluationError):
        save_assignments(["a", "b"], [1], tmp_path / "x.csv")
