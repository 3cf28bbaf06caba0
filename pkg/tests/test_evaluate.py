import math
import random
from datetime import date, timedelta

import pytest

from helpers import brute_correlation
from hoaxrank.engine import Classification, EngineConfig, Label, label_of
from hoaxrank.errors import InvalidStreamError, NotFoundError
from hoaxrank.evaluate import (
    EVERY_EDGE,
    AgreementInterval,
    correlation_matrix,
    cross_list_detection,
    recall_report,
    replay_agreement,
    site_correlation,
    site_flag_rates,
)
from hoaxrank.ingest import ShareRecord, date_to_ts, site_of

T0 = date_to_ts(date(2017, 9, 1))
DAY = 86400.0


def cls(q):
    return Classification(label_of(q), q)


# ----------------------------------------------------------------------
# recall
# ----------------------------------------------------------------------


def test_recall_perfect_classifier():
    table = {
        "https://bad.example/1": cls(-0.9),
        "https://bad.example/2": cls(-0.4),
        "https://fine.example/1": cls(0.7),
    }
    report = recall_report(table, {"bad.example"}, table.keys())
    assert report.fake_recall_pct == 100.0
    assert report.nonfake_recall_pct == 100.0


def test_recall_forced_arithmetic():
    table = {}
    for k in range(10):
        table[f"https://bad.example/{k}"] = cls(-1.0 if k < 9 else 1.0)
    for k in range(90):
        table[f"https://fine{k % 9}.example/{k}"] = cls(-1.0 if k < 9 else 1.0)
    report = recall_report(table, {"bad.example"}, table.keys())
    assert report.fake_recall_pct == pytest.approx(90.0)
    assert report.nonfake_recall_pct == pytest.approx(90.0)
    assert report.fake_total == 10 and report.nonfake_total == 90


def test_recall_empty_class_is_undefined_marker():
    table = {"https://fine.example/1": cls(0.5)}
    report = recall_report(table, {"bad.example"}, table.keys())
    assert report.fake_recall_pct is None
    assert report.nonfake_recall_pct == 100.0


def test_recall_missing_classification_raises():
    with pytest.raises(NotFoundError):
        recall_report({}, {"bad.example"}, ["https://bad.example/x"])


# ----------------------------------------------------------------------
# site flag rates
# ----------------------------------------------------------------------


def test_site_flag_rates_and_min_urls():
    table = {}
    for k in range(20):
        table[f"https://a.example/{k}"] = cls(-1.0 if k < 2 else 0.5)
    for k in range(19):
        table[f"https://small.example/{k}"] = cls(-1.0)
    for k in range(20):
        table[f"https://clean.example/{k}"] = cls(0.9)
    report = site_flag_rates(table, min_urls=20)
    by_site = {row.site: row for row in report.rows}
    assert by_site["a.example"].flag_rate_pct == pytest.approx(10.0)
    assert by_site["clean.example"].flag_rate_pct == 0.0
    assert "small.example" not in by_site  # below min_urls


# ----------------------------------------------------------------------
# cross-list detection
# ----------------------------------------------------------------------


def test_cross_list_forced_scenario():
    table = {}
    for k in range(20):  # one diff site, 20 urls, 2 flagged
        table[f"https://diff.example/{k}"] = cls(-1.0 if k < 2 else 0.5)
    report = cross_list_detection(table, {"seed.example"}, {"seed.example", "diff.example"})
    assert report.direct_url_pct == pytest.approx(10.0)
    assert report.suspicious_site_pct == 100.0
    assert report.suspicious_url_pct == 100.0


def test_cross_list_five_percent_boundary_is_strict():
    table = {}
    for k in range(20):  # exactly 5% flagged: NOT suspicious
        table[f"https://edge.example/{k}"] = cls(-1.0 if k < 1 else 0.5)
    report = cross_list_detection(table, {"a.example"}, {"a.example", "edge.example"})
    assert report.suspicious_site_pct == 0.0
    assert report.suspicious_url_pct == 0.0
    assert report.direct_url_pct == pytest.approx(5.0)


def test_cross_list_subset_gives_undefined_markers():
    table = {"https://a.example/1": cls(-1.0)}
    report = cross_list_detection(table, {"a.example", "b.example"}, {"b.example"})
    assert report.diff_urls == 0
    assert report.direct_url_pct is None
    assert report.suspicious_site_pct is None
    assert report.suspicious_url_pct is None


# ----------------------------------------------------------------------
# site correlation
# ----------------------------------------------------------------------


def _tweet(user, url, k=0):
    return ShareRecord(user, url, T0 + k, None, None)


def test_correlation_single_user_both_sites():
    records = [_tweet("u", "https://a.example/1"), _tweet("u", "https://b.example/1", 1)]
    assert site_correlation(records, "a.example", "b.example") == pytest.approx(1.0)


def test_correlation_disjoint_users():
    records = [_tweet("u1", "https://a.example/1"), _tweet("u2", "https://b.example/1", 1)]
    assert site_correlation(records, "a.example", "b.example") == 0.0


def test_correlation_hand_example():
    # u1 tweets a.example twice and b.example once; u2 tweets b.example x3
    records = (
        [_tweet("u1", "https://a.example/1", k) for k in range(2)]
        + [_tweet("u1", "https://b.example/1", 5)]
        + [_tweet("u2", "https://b.example/2", 10 + k) for k in range(3)]
    )
    got = site_correlation(records, "a.example", "b.example")
    assert got == pytest.approx(2.0 / math.sqrt(40.0), abs=1e-12)


def test_correlation_matches_brute_force_oracle():
    rng = random.Random(5)
    sites = ["a.example", "b.example", "c.example"]
    records = [
        _tweet(f"u{rng.randrange(7)}", f"https://{rng.choice(sites)}/{rng.randrange(4)}", k)
        for k in range(120)
    ]
    for a in sites:
        for b in sites:
            fast = site_correlation(records, a, b)
            slow = brute_correlation(records, a, b, site_of)
            assert fast == pytest.approx(slow, abs=1e-12)


def test_correlation_symmetry_and_self():
    rng = random.Random(9)
    records = [
        _tweet(f"u{rng.randrange(5)}", f"https://{rng.choice(['x.example', 'y.example'])}/{k}", k)
        for k in range(60)
    ]
    ab = site_correlation(records, "x.example", "y.example")
    ba = site_correlation(records, "y.example", "x.example")
    assert ab == pytest.approx(ba, abs=1e-15)
    assert site_correlation(records, "x.example", "x.example") == pytest.approx(1.0)
    assert 0.0 <= ab <= 1.0


def test_correlation_matrix_matches_pairwise():
    rng = random.Random(11)
    sites = ["a.example", "b.example"]
    records = [
        _tweet(f"u{rng.randrange(4)}", f"https://{rng.choice(sites)}/{rng.randrange(3)}", k)
        for k in range(50)
    ]
    matrix = correlation_matrix(records, sites)
    assert matrix[0][1] == pytest.approx(site_correlation(records, *sites), abs=1e-12)
    assert matrix[0][0] == pytest.approx(1.0)
    assert matrix[1][0] == pytest.approx(matrix[0][1], abs=1e-15)


# ----------------------------------------------------------------------
# agreement interval arithmetic
# ----------------------------------------------------------------------


def test_agreement_threshold_rule():
    # diffs {0.05, 0.3}: one within, one out -> 0.5
    iv = AgreementInterval(
        start_ts=0.0, end_ts=1.0,
        new_count=0, new_within=0,
        tweeted_count=2, tweeted_within=1,
        all_count=2, all_within=1,
    )
    assert iv.fraction("all") == 0.5
    assert iv.fraction("tweeted") == 0.5
    assert iv.fraction("new") == 1.0  # vacuous


# ----------------------------------------------------------------------
# replay
# ----------------------------------------------------------------------


def _stream(n_days=4, per_day=12, seed=3):
    rng = random.Random(seed)
    records = []
    for d in range(n_days):
        for k in range(per_day):
            records.append(
                ShareRecord(
                    f"u{rng.randrange(6)}",
                    f"https://s{rng.randrange(3)}.example/i{rng.randrange(10)}",
                    T0 + d * DAY + rng.random() * DAY,
                )
            )
    records.sort(key=lambda r: r.ts)
    fake = {"https://s0.example/i0"}
    nonfake = {"https://s1.example/i1"}
    return records, fake, nonfake


def test_replay_rejects_unsorted_stream():
    records, fake, nonfake = _stream()
    records[0], records[-1] = records[-1], records[0]
    with pytest.raises(InvalidStreamError):
        replay_agreement(records, timedelta(days=1), fake_seed_urls=fake, nonfake_seed_urls=nonfake)


def test_replay_daily_interval_structure():
    records, fake, nonfake = _stream()
    report = replay_agreement(
        records, timedelta(days=1),
        fake_seed_urls=fake, nonfake_seed_urls=nonfake,
    )
    assert len(report.intervals) == 4
    for iv in report.intervals:
        for category in ("new", "tweeted", "all"):
            assert 0.0 <= iv.fraction(category) <= 1.0
    # seeded items stay pinned, so they always agree exactly
    g = report.final_graph
    assert g.item_q[g.lookup_url("https://s0.example/i0").index] == -1.0


def test_replay_empty_interval_is_vacuously_full_agreement():
    records, fake, nonfake = _stream(n_days=1)
    # a gap day with no records, then one more record two days later
    records.append(ShareRecord("u0", "https://s2.example/i9", T0 + 2 * DAY + 10.0))
    report = replay_agreement(
        records, timedelta(days=1), fake_seed_urls=fake, nonfake_seed_urls=nonfake
    )
    gap = report.intervals[1]
    assert gap.new_count == 0 and gap.tweeted_count == 0
    assert gap.fraction("new") == 1.0
    assert gap.fraction("tweeted") == 1.0
    assert gap.fraction("all") == 1.0  # identical states on an unchanged graph


def test_replay_every_edge_agrees_exactly():
    records, fake, nonfake = _stream(n_days=2, per_day=8)
    report = replay_agreement(
        records, EVERY_EDGE, fake_seed_urls=fake, nonfake_seed_urls=nonfake
    )
    assert len(report.intervals) == len(records)
    for category in ("new", "tweeted", "all"):
        assert report.aggregate(category) == 1.0
    for iv in report.intervals:
        assert iv.all_within == iv.all_count


def test_replay_is_deterministic():
    records, fake, nonfake = _stream()
    r1 = replay_agreement(records, timedelta(days=1), fake_seed_urls=fake, nonfake_seed_urls=nonfake)
    r2 = replay_agreement(records, timedelta(days=1), fake_seed_urls=fake, nonfake_seed_urls=nonfake)
    assert r1.intervals == r2.intervals
    assert list(r1.final_graph.item_q) == list(r2.final_graph.item_q)


def test_replay_csv_has_three_category_columns(tmp_path):
    records, fake, nonfake = _stream(n_days=2)
    report = replay_agreement(records, timedelta(days=1), fake_seed_urls=fake, nonfake_seed_urls=nonfake)
    path = tmp_path / "agreement.csv"
    report.to_csv(path)
    header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    assert "new_agreement" in header
    assert "tweeted_agreement" in header
    assert "all_agreement" in header
