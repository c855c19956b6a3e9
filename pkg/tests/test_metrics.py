"""Metric operations: worked examples, degenerate cases, and properties."""

from __future__ import annotations

import random
import statistics
from datetime import date, datetime, timezone

import pytest

from orgpulse.errors import (
    BadIdealError,
    EmptyCategoryError,
    MissingHireDateError,
    NoActiveCategoriesError,
)
from orgpulse.metrics import (
    ALWAYS_PRESENT,
    NEVER_PRESENT,
    NotApplicable,
    SILENT_BASELINE,
    TOO_FEW_POINTS,
    ZERO_VARIANCE,
    bucket_by_quarter,
    pearson_r,
    per_capita_speech,
    presence_change,
    presence_matrix,
    share_report,
    tenure_points,
)
from orgpulse.model import Meeting, Participant, Roster, SpeechTrack

from corpusgen import random_corpus
from reference import ref_pearson, ref_presence_change, ref_shares


def utc(year, month, day, hour=9):
    return datetime(year, month, day, hour, tzinfo=timezone.utc)


def ones(pid, n, period=5.0):
    return SpeechTrack(pid, (1.0,) * n, period)


def simple_roster(categories_by_pid, scheme="role", hire=date(2020, 1, 1)):
    return Roster(
        participants={pid: Participant(pid) for pid in categories_by_pid},
        assignments={
            scheme: {pid: ((hire, cat),) for pid, cat in categories_by_pid.items()}
        },
        hire_dates={pid: hire for pid in categories_by_pid},
    )


class TestBucketByQuarter:
    def test_boundary_split(self):
        roster = simple_roster({"p1": "A"})
        m1 = Meeting("m1", utc(2021, 1, 5), 600, {"p1": ones("p1", 3)})
        m2 = Meeting("m2", utc(2021, 4, 2), 600, {"p1": ones("p1", 3)})
        buckets = bucket_by_quarter([m1, m2])
        assert [b.quarter.label for b in buckets] == ["2021.1Q", "2021.2Q"]
        assert [len(b.meetings) for b in buckets] == [1, 1]

    def test_empty_input(self):
        assert bucket_by_quarter([]) == ()

    def test_single_quarter(self):
        roster = simple_roster({"p1": "A"})
        meetings = [
            Meeting(f"m{i}", utc(2020, 12, 1 + i), 600, {"p1": ones("p1", 2)})
            for i in range(3)
        ]
        buckets = bucket_by_quarter(meetings)
        assert len(buckets) == 1
        assert buckets[0].quarter.label == "2020.4Q"
        assert len(buckets[0].meetings) == 3

    def test_partition_is_exact(self):
        rng = random.Random(8)
        for _ in range(20):
            _, meetings = random_corpus(rng, max_meetings=5)
            buckets = bucket_by_quarter(meetings)
            rebuilt = [m for b in buckets for m in b.meetings]
            assert sorted(m.id for m in rebuilt) == sorted(m.id for m in meetings)


class TestPerCapitaSpeech:
    def test_single_member_rate(self):
        roster = simple_roster({"p1": "A"})
        # 180 windows x 5 s = 900 s spoken over a 3600 s meeting
        meeting = Meeting("m1", utc(2021, 1, 5), 3600, {"p1": ones("p1", 180)})
        bucket = bucket_by_quarter([meeting])[0]
        assert per_capita_speech(bucket, roster, roster.scheme("role"), "A") == 0.25

    def test_mean_of_two_members(self):
        roster = simple_roster({"p1": "A", "p2": "A"})
        meeting = Meeting(
            "m1",
            utc(2021, 1, 5),
            100,
            {"p1": ones("p1", 4), "p2": ones("p2", 8)},  # rates 0.2 and 0.4
        )
        bucket = bucket_by_quarter([meeting])[0]
        assert per_capita_speech(
            bucket, roster, roster.scheme("role"), "A"
        ) == pytest.approx(0.3, abs=1e-12)

    def test_category_without_attendance_raises(self):
        roster = simple_roster({"p1": "A", "p2": "B"})
        meeting = Meeting("m1", utc(2021, 1, 5), 100, {"p1": ones("p1", 4)})
        bucket = bucket_by_quarter([meeting])[0]
        with pytest.raises(EmptyCategoryError):
            per_capita_speech(bucket, roster, roster.scheme("role"), "B")

    def test_nominal_headcount_counts_absent_members(self):
        roster = simple_roster({"p1": "A", "p2": "A"})
        meeting = Meeting("m1", utc(2021, 1, 5), 100, {"p1": ones("p1", 4)})
        bucket = bucket_by_quarter([meeting])[0]
        scheme = roster.scheme("role")
        assert per_capita_speech(bucket, roster, scheme, "A") == pytest.approx(0.2)
        assert per_capita_speech(
            bucket, roster, scheme, "A", nominal_headcount=True
        ) == pytest.approx(0.1)


class TestShareReport:
    def test_hand_arithmetic(self):
        roster = simple_roster({"p1": "A", "p2": "B"})
        meeting = Meeting(
            "m1",
            utc(2021, 1, 5),
            100,
            {"p1": ones("p1", 6), "p2": ones("p2", 2)},  # rates 0.3 and 0.1
        )
        bucket = bucket_by_quarter([meeting])[0]
        report = share_report(bucket, roster, roster.scheme("role"))
        assert report.shares["A"] == pytest.approx(0.75, abs=1e-12)
        assert report.shares["B"] == pytest.approx(0.25, abs=1e-12)
        assert report.total_error == pytest.approx(0.5, abs=1e-12)

    def test_equal_rates_have_zero_error(self):
        roster = simple_roster({"p1": "A", "p2": "B"})
        meeting = Meeting(
            "m1", utc(2021, 1, 5), 100, {"p1": ones("p1", 4), "p2": ones("p2", 4)}
        )
        bucket = bucket_by_quarter([meeting])[0]
        report = share_report(bucket, roster, roster.scheme("role"))
        assert report.total_error == 0.0
        assert all(err == 0.0 for err in report.errors.values())

    def test_inactive_category_listed_and_excluded(self):
        roster = simple_roster({"p1": "A", "p2": "B", "p3": "C"})
        meeting = Meeting(
            "m1", utc(2021, 1, 5), 100, {"p1": ones("p1", 4), "p2": ones("p2", 2)}
        )
        bucket = bucket_by_quarter([meeting])[0]
        report = share_report(bucket, roster, roster.scheme("role"))
        assert report.inactive == ("C",)
        assert set(report.shares) == {"A", "B"}
        assert sum(report.shares.values()) == pytest.approx(1.0, abs=1e-9)

    def test_all_silent_quarter_raises(self):
        roster = simple_roster({"p1": "A"})
        meeting = Meeting(
            "m1", utc(2021, 1, 5), 100, {"p1": SpeechTrack("p1", (0.0,) * 4, 5.0)}
        )
        bucket = bucket_by_quarter([meeting])[0]
        with pytest.raises(NoActiveCategoriesError):
            share_report(bucket, roster, roster.scheme("role"))

    def test_bad_ideal_rejected(self):
        roster = simple_roster({"p1": "A", "p2": "B"})
        meeting = Meeting(
            "m1", utc(2021, 1, 5), 100, {"p1": ones("p1", 4), "p2": ones("p2", 2)}
        )
        bucket = bucket_by_quarter([meeting])[0]
        scheme = roster.scheme("role")
        with pytest.raises(BadIdealError):
            share_report(bucket, roster, scheme, {"A": -0.2, "B": 1.2})
        with pytest.raises(BadIdealError):
            share_report(bucket, roster, scheme, {"A": 0.6, "B": 0.6})
        with pytest.raises(BadIdealError):
            share_report(bucket, roster, scheme, {"A": 1.0})

    def test_custom_ideal(self):
        roster = simple_roster({"p1": "A", "p2": "B"})
        meeting = Meeting(
            "m1", utc(2021, 1, 5), 100, {"p1": ones("p1", 6), "p2": ones("p2", 2)}
        )
        bucket = bucket_by_quarter([meeting])[0]
        report = share_report(bucket, roster, roster.scheme("role"), {"A": 0.75, "B": 0.25})
        assert report.total_error == pytest.approx(0.0, abs=1e-12)

    def test_shares_sum_to_one_over_random_corpora(self):
        rng = random.Random(15)
        for _ in range(50):
            roster, meetings = random_corpus(rng, max_participants=5, max_categories=3)
            scheme = roster.scheme("role")
            for bucket in bucket_by_quarter(meetings):
                try:
                    report = share_report(bucket, roster, scheme)
                except NoActiveCategoriesError:
                    continue
                assert abs(sum(report.shares.values()) - 1.0) <= 1e-9
                assert report.total_error == sum(report.errors.values())


def presence_fixture():
    """A speaks 0.4 with B present, 0.5 with B absent; one B-only meeting."""
    roster = simple_roster({"pa": "A", "pb": "B"})
    with_b = Meeting(
        "m1", utc(2021, 1, 5), 100, {"pa": ones("pa", 8), "pb": ones("pb", 2)}
    )
    without_b = Meeting("m2", utc(2021, 1, 12), 100, {"pa": ones("pa", 10)})
    b_only = Meeting("m3", utc(2021, 1, 19), 100, {"pb": ones("pb", 4)})
    return roster, [with_b, without_b, b_only]


class TestPresenceChange:
    def test_no_effect_is_zero(self):
        roster = simple_roster({"pa": "A", "pb": "B"})
        meetings = [
            Meeting("m1", utc(2021, 1, 5), 100,
                    {"pa": ones("pa", 8), "pb": ones("pb", 2)}),
            Meeting("m2", utc(2021, 1, 12), 100, {"pa": ones("pa", 8)}),
        ]
        value = presence_change(meetings, roster, roster.scheme("role"), "A", "B")
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_ratio_minus_one(self):
        roster, meetings = presence_fixture()
        value = presence_change(meetings, roster, roster.scheme("role"), "A", "B")
        assert value == pytest.approx(-0.2, abs=1e-12)

    def test_unconditioned_mode_counts_target_absent_meetings(self):
        roster, meetings = presence_fixture()
        value = presence_change(
            meetings, roster, roster.scheme("role"), "A", "B",
            condition_on_target=False,
        )
        # present side picks up the B-only meeting: 40 s over 200 s vs 0.5
        assert value == pytest.approx(0.2 / 0.5 - 1.0, abs=1e-12)

    def test_always_present(self):
        roster = simple_roster({"pa": "A", "pb": "B"})
        meetings = [
            Meeting("m1", utc(2021, 1, 5), 100,
                    {"pa": ones("pa", 8), "pb": ones("pb", 2)}),
        ]
        value = presence_change(meetings, roster, roster.scheme("role"), "A", "B")
        assert value == NotApplicable(ALWAYS_PRESENT)

    def test_never_present(self):
        roster = simple_roster({"pa": "A", "pb": "B"})
        meetings = [Meeting("m1", utc(2021, 1, 5), 100, {"pa": ones("pa", 8)})]
        value = presence_change(meetings, roster, roster.scheme("role"), "A", "B")
        assert value == NotApplicable(NEVER_PRESENT)

    def test_silent_baseline(self):
        roster = simple_roster({"pa": "A", "pb": "B"})
        meetings = [
            Meeting("m1", utc(2021, 1, 5), 100,
                    {"pa": ones("pa", 8), "pb": ones("pb", 2)}),
            Meeting("m2", utc(2021, 1, 12), 100,
                    {"pa": SpeechTrack("pa", (0.0,) * 8, 5.0)}),
        ]
        value = presence_change(meetings, roster, roster.scheme("role"), "A", "B")
        assert value == NotApplicable(SILENT_BASELINE)

    def test_suppression_yields_negative_rate(self):
        roster = simple_roster({"pa": "A", "pb": "B"})
        meetings = []
        for week in range(4):
            # A speaks strictly less whenever B attends.
            if week % 2 == 0:
                tracks = {"pa": ones("pa", 4), "pb": ones("pb", 2)}
            else:
                tracks = {"pa": ones("pa", 12)}
            meetings.append(Meeting(f"m{week}", utc(2021, 1, 4 + week * 7), 100, tracks))
        value = presence_change(meetings, roster, roster.scheme("role"), "A", "B")
        assert value < 0


class TestPresenceMatrix:
    def test_cells_match_pairwise_calls(self):
        rng = random.Random(33)
        roster, meetings = random_corpus(rng, max_participants=4, max_categories=3)
        scheme = roster.scheme("role")
        if len(scheme.categories) < 2:
            pytest.skip("drew a single-category corpus")
        matrix = presence_matrix(meetings, roster, scheme)
        for (target, copresent), value in matrix.cells.items():
            assert value == presence_change(meetings, roster, scheme, target, copresent)

    def test_means_over_defined_and_negative_cells(self):
        roster, meetings = presence_fixture()
        matrix = presence_matrix(meetings, roster, roster.scheme("role"))
        defined = [v for v in matrix.cells.values() if not isinstance(v, NotApplicable)]
        negative = [v for v in defined if v < 0]
        assert matrix.mean_defined == pytest.approx(sum(defined) / len(defined))
        assert matrix.mean_negative == pytest.approx(sum(negative) / len(negative))

    def test_constant_coattendance_is_na_both_ways(self):
        roster = simple_roster({"pa": "A", "pb": "B"})
        meetings = [
            Meeting(
                "m1", utc(2021, 1, 5), 100,
                {"pa": ones("pa", 8), "pb": ones("pb", 2)},
            ),
            Meeting(
                "m2", utc(2021, 1, 12), 100,
                {"pa": ones("pa", 4), "pb": ones("pb", 6)},
            ),
        ]
        matrix = presence_matrix(meetings, roster, roster.scheme("role"))
        assert matrix.cells[("A", "B")] == NotApplicable(ALWAYS_PRESENT)
        assert matrix.cells[("B", "A")] == NotApplicable(ALWAYS_PRESENT)
        assert matrix.mean_defined is None


class TestTenurePoints:
    def test_two_quarters_increment_tenure(self):
        roster = simple_roster({"p1": "A"}, hire=date(2020, 6, 1))
        meetings = [
            Meeting("m1", utc(2021, 1, 5), 100, {"p1": ones("p1", 4)}),
            Meeting("m2", utc(2021, 4, 6), 100, {"p1": ones("p1", 8)}),
        ]
        points = tenure_points(bucket_by_quarter(meetings), roster)
        assert [p.tenure_q for p in points] == [3, 4]
        assert [p.speech_rate for p in points] == [0.2, 0.4]

    def test_absent_quarter_emits_no_point(self):
        roster = simple_roster({"p1": "A", "p2": "A"})
        meetings = [
            Meeting("m1", utc(2021, 1, 5), 100, {"p1": ones("p1", 4)}),
            Meeting("m2", utc(2021, 4, 6), 100,
                    {"p1": ones("p1", 4), "p2": ones("p2", 4)}),
        ]
        points = tenure_points(bucket_by_quarter(meetings), roster)
        assert [(p.participant_id, p.quarter.label) for p in points] == [
            ("p1", "2021.1Q"),
            ("p1", "2021.2Q"),
            ("p2", "2021.2Q"),
        ]

    def test_mid_corpus_hire_starts_at_zero(self):
        roster = simple_roster({"p1": "A"}, hire=date(2021, 2, 1))
        meetings = [Meeting("m1", utc(2021, 3, 1), 100, {"p1": ones("p1", 4)})]
        points = tenure_points(bucket_by_quarter(meetings), roster)
        assert points[0].tenure_q == 0

    def test_missing_hire_date(self):
        roster = Roster(
            participants={"p1": Participant("p1")},
            assignments={"role": {"p1": ((date(2020, 1, 1), "A"),)}},
        )
        meetings = [Meeting("m1", utc(2021, 3, 1), 100, {"p1": ones("p1", 4)})]
        with pytest.raises(MissingHireDateError):
            tenure_points(bucket_by_quarter(meetings), roster)

    def test_rates_stay_in_unit_interval(self):
        rng = random.Random(77)
        for _ in range(20):
            roster, meetings = random_corpus(rng)
            points = tenure_points(bucket_by_quarter(meetings), roster)
            assert all(0.0 <= p.speech_rate <= 1.0 for p in points)


class TestPearson:
    def test_exact_line(self):
        points = [(float(i), 2.0 * i + 3.0) for i in range(10)]
        assert pearson_r(points) == pytest.approx(1.0, abs=1e-12)

    def test_exact_anti_line(self):
        assert pearson_r([(0.0, 1.0), (1.0, 0.0)]) == pytest.approx(-1.0, abs=1e-12)

    def test_matches_independent_oracles(self):
        rng = random.Random(99)
        for _ in range(50):
            points = [(rng.uniform(0, 20), rng.uniform(0, 1)) for _ in range(60)]
            ours = pearson_r(points)
            assert ours == pytest.approx(ref_pearson(points), abs=1e-9)
            xs, ys = zip(*points)
            assert ours == pytest.approx(statistics.correlation(xs, ys), abs=1e-9)

    def test_too_few_points(self):
        assert pearson_r([(1.0, 2.0)]) == NotApplicable(TOO_FEW_POINTS)
        assert pearson_r([], min_x=None) == NotApplicable(TOO_FEW_POINTS)

    def test_zero_variance(self):
        assert pearson_r([(1.0, 2.0), (1.0, 5.0)]) == NotApplicable(ZERO_VARIANCE)
        assert pearson_r([(1.0, 5.0), (2.0, 5.0)]) == NotApplicable(ZERO_VARIANCE)

    def test_min_x_only_removes_low_points(self):
        rng = random.Random(5)
        points = [(float(rng.randint(0, 16)), rng.random()) for _ in range(80)]
        kept = [(x, y) for x, y in points if x > 8]
        assert pearson_r(points, min_x=8.0) == pearson_r(kept)

    def test_symmetry_and_affine_invariance(self):
        rng = random.Random(6)
        points = [(rng.uniform(0, 10), rng.uniform(0, 10)) for _ in range(40)]
        swapped = [(y, x) for x, y in points]
        assert pearson_r(points) == pytest.approx(pearson_r(swapped), abs=1e-12)
        mapped = [(3.5 * x + 11.0, y) for x, y in points]
        assert pearson_r(points) == pytest.approx(pearson_r(mapped), abs=1e-9)


class TestCrossCuttingProperties:
    def test_permuting_meetings_changes_nothing(self):
        rng = random.Random(50)
        roster, meetings = random_corpus(rng, max_participants=4, max_categories=2)
        scheme = roster.scheme("role")
        shuffled = list(meetings)
        rng.shuffle(shuffled)
        matrix_a = presence_matrix(meetings, roster, scheme)
        matrix_b = presence_matrix(shuffled, roster, scheme)
        assert matrix_a.cells == matrix_b.cells
        assert bucket_by_quarter(shuffled) == bucket_by_quarter(meetings)

    def test_scaling_samples_by_half_is_invisible(self):
        rng = random.Random(51)
        for _ in range(10):
            roster, meetings = random_corpus(rng, max_participants=4)
            scaled = [
                Meeting(
                    m.id,
                    m.start,
                    m.duration_s,
                    {
                        pid: SpeechTrack(
                            pid,
                            tuple(0.5 * s for s in t.samples),
                            t.sample_period_s,
                        )
                        for pid, t in m.tracks.items()
                    },
                )
                for m in meetings
            ]
            scheme = roster.scheme("role")
            for bucket, scaled_bucket in zip(
                bucket_by_quarter(meetings), bucket_by_quarter(scaled)
            ):
                try:
                    original = share_report(bucket, roster, scheme)
                    after = share_report(scaled_bucket, roster, scheme)
                except NoActiveCategoriesError:
                    continue
                for category in original.shares:
                    assert abs(original.shares[category] - after.shares[category]) <= 1e-9
                assert abs(original.total_error - after.total_error) <= 1e-9

    def test_brute_force_spot_check(self):
        rng = random.Random(52)
        for _ in range(25):
            roster, meetings = random_corpus(rng, max_participants=4, max_categories=2)
            scheme = roster.scheme("role")
            for bucket in bucket_by_quarter(meetings):
                expected = ref_shares(
                    bucket.meetings, roster, scheme.name, scheme.categories
                )
                if expected is None:
                    with pytest.raises(NoActiveCategoriesError):
                        share_report(bucket, roster, scheme)
                    continue
                shares, errors, total, inactive = expected
                report = share_report(bucket, roster, scheme)
                assert report.shares == pytest.approx(shares, abs=1e-9)
                assert report.total_error == pytest.approx(total, abs=1e-9)
                assert list(report.inactive) == inactive
            if len(scheme.categories) >= 2:
                for target in scheme.categories:
                    for copresent in scheme.categories:
                        if target == copresent:
                            continue
                        ours = presence_change(
                            meetings, roster, scheme, target, copresent
                        )
                        ref = ref_presence_change(
                            meetings, roster, scheme.name, target, copresent
                        )
                        if isinstance(ours, NotApplicable):
                            assert ours.reason == ref
                        else:
                            assert ours == pytest.approx(ref, abs=1e-9)
