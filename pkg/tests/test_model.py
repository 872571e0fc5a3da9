import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patternmc.documents import dump_model, load_model
from patternmc.exceptions import ModelError, TraceFormatError, UnmappedEventError
from patternmc.model import (
    Dtmc,
    PatternMixture,
    StateSpace,
    Trace,
    UserStrategy,
    ingest_traces,
    validate_dtmc,
    write_traces,
)

YOSHI = {"seeY": 1, "feed": 2, "seeP": 3, "pick": 4}


def chain(trans, restricted=False):
    n = len(trans)
    space = StateSpace(tuple(range(n)), {0: {"a"}})
    init = np.full(n, 1.0 / n)
    return Dtmc(space, init, trans, restricted=restricted, validate=False)


class TestValidateDtmc:
    def test_identity_is_clean(self):
        assert validate_dtmc(chain(np.eye(3))) == []

    def test_short_row_reported(self):
        trans = np.eye(3)
        trans[1] = [0.0, 0.9, 0.0]
        report = validate_dtmc(chain(trans))
        assert len(report) == 1
        assert report[0].kind == "row" and report[0].index == 1
        assert report[0].deviation == pytest.approx(0.1, abs=1e-15)

    def test_restricted_allows_substochastic(self):
        trans = np.array([[0.4, 0.0], [0.0, 1.0]])
        assert validate_dtmc(chain(trans, restricted=True)) == []

    def test_restricted_still_rejects_excess(self):
        trans = np.array([[0.6, 0.6], [0.0, 1.0]])
        assert [v.kind for v in validate_dtmc(chain(trans, restricted=True))] == ["row"]

    def test_constructor_raises_when_validating(self):
        space = StateSpace((0, 1), {})
        with pytest.raises(ModelError):
            Dtmc(space, [1.0, 0.0], [[0.5, 0.4], [0.0, 1.0]])

    def test_does_not_mutate(self):
        trans = np.eye(2)
        d = chain(trans)
        validate_dtmc(d)
        assert np.array_equal(d.trans, np.eye(2))
        assert not d.trans.flags.writeable


class TestStateSpace:
    def test_dummy_layout(self):
        sp = StateSpace.from_names(["seeY", "feed", "seeP", "pick"])
        assert sp.states == (0, 1, 2, 3, 4)
        assert sp.n_states == 4
        assert sp.label_of(0) == {"init"}
        assert sp.label_of(2) == {"feed"}

    def test_label_lookup_total(self):
        sp = StateSpace((1, 2, 3), {1: {"x"}})
        assert sp.label_of(2) == frozenset()
        with pytest.raises(ModelError):
            sp.label_of(7)

    def test_labels_immutable(self):
        sp = StateSpace.from_names(["a"])
        with pytest.raises(TypeError):
            sp.labels[1] = frozenset({"b"})

    def test_dummy_required(self):
        with pytest.raises(ModelError):
            StateSpace((1, 2), {}, has_dummy_init=True)


class TestTypes:
    def test_theta_must_sum_to_one(self):
        with pytest.raises(ModelError):
            UserStrategy("u", [0.5, 0.6])
        UserStrategy("u", [0.25, 0.75])

    def test_trace_rejects_dummy_and_empty(self):
        with pytest.raises(ModelError):
            Trace("u", [])
        with pytest.raises(ModelError):
            Trace("u", [0, 1])

    def test_mixture_checks_rows(self):
        sp = StateSpace.from_names(["a", "b"])
        with pytest.raises(ModelError):
            PatternMixture(sp, [[[0.5, 0.4], [0, 1]]], [1, 0])
        with pytest.raises(ModelError):
            PatternMixture(sp, [[[0.5, 0.5], [0, 1]]], [0.5, 0.4])


class TestIngest:
    def test_two_lines_one_user(self):
        traces = ingest_traces(b"u1,seeY\nu1,feed\n", {"seeY": 1, "feed": 2}, fmt="csv")
        assert traces == [Trace("u1", (1, 2))]

    def test_empty_stream(self):
        assert ingest_traces(b"", YOSHI) == []

    def test_interleaved_matches_hand_partition(self, fixtures_dir):
        raw = (fixtures_dir / "interleaved.tsv").read_bytes()
        expected = json.loads((fixtures_dir / "interleaved_expected.json").read_text())
        traces = ingest_traces(raw, YOSHI)
        assert [t.user_id for t in traces] == ["u1", "u2", "u3"]
        for t in traces:
            assert t.events == tuple(YOSHI[e] for e in expected[t.user_id])

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(TraceFormatError, match="line 2"):
            ingest_traces(b"u1\tseeY\nu1\n", YOSHI)

    def test_bad_timestamp(self):
        with pytest.raises(TraceFormatError, match="line 1"):
            ingest_traces(b"u1\tseeY\tyesterday\n", YOSHI)

    def test_unmapped_strict(self):
        with pytest.raises(UnmappedEventError) as err:
            ingest_traces(b"u1\tseeY\nu1\tscroll\n", YOSHI)
        assert err.value.event == "scroll" and err.value.lineno == 2

    def test_unmapped_skip(self):
        traces = ingest_traces(b"u1\tseeY\nu1\tscroll\nu1\tfeed\nu2\tscroll\n", YOSHI, policy="skip")
        assert traces == [Trace("u1", (1, 2))]

    def test_text_stream_and_roundtrip(self):
        traces = [Trace("a", (1, 2, 2)), Trace("b", (4,))]
        buf = io.StringIO()
        write_traces(traces, {v: k for k, v in YOSHI.items()}, buf)
        assert ingest_traces(io.StringIO(buf.getvalue()), YOSHI) == traces

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from(["u1", "u2", "u3"]), st.sampled_from(sorted(YOSHI))), max_size=40))
    def test_per_user_order_preserved(self, rows):
        raw = "".join(f"{u}\t{e}\n" for u, e in rows).encode()
        traces = {t.user_id: t.events for t in ingest_traces(raw, YOSHI)}
        for user in {u for u, _ in rows}:
            assert traces[user] == tuple(YOSHI[e] for u, e in rows if u == user)


def test_model_document_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(3)
    sp = StateSpace.from_names(["seeY", "feed", "seeP"])
    pats = rng.dirichlet(np.ones(3), size=(2, 3))
    mix = PatternMixture(sp, pats, rng.dirichlet(np.ones(3)))
    strategies = [UserStrategy("u1", [1 / 3, 2 / 3])]
    path = tmp_path / "m.json"
    dump_model(path, mix, strategies)
    mix2, strategies2 = load_model(path)
    assert np.array_equal(mix2.patterns, mix.patterns)
    assert np.array_equal(mix2.iota, mix.iota)
    assert np.array_equal(strategies2[0].theta, strategies[0].theta)
    assert mix2.space.label_of(2) == {"feed"}
