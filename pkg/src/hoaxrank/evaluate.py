"""Evaluation metrics and the online-vs-fixpoint replay harness.

Covers fake/non-fake recall, per-site flag rates, cross-list detection,
user-overlap site correlation, and stream-replay agreement between the
online propagation and periodic batch fixpoints. Percentages are exact
ratios internally and only rounded when printed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import timedelta
from math import sqrt
from typing import Iterable, Mapping

import numpy as np

from .engine import (
    Classification,
    EngineConfig,
    Label,
    compute_fixpoint,
    ingest_edge_online,
    seed_item,
)
from .errors import InvalidInputError, InvalidStreamError, NotFoundError
from .graph import Edge, EdgeKind, InsertOutcome, NodeKind, ReputationGraph
from .ingest import (
    DEFAULT_AGGREGATOR_SITES,
    ShareRecord,
    canonicalize_url,
    date_to_ts,
    site_of,
    ts_to_date,
)

EVERY_EDGE = "edge"


def _pct(numerator: int, denominator: int) -> float | None:
    """Exact percentage, or None (undefined marker) for an empty cell."""
    if denominator == 0:
        return None
    return 100.0 * numerator / denominator


def _fmt(value: float | None, digits: int = 2) -> str:
    return "NA" if value is None else f"{value:.{digits}f}"


# ----------------------------------------------------------------------
# recall
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RecallReport:
    """Fake and non-fake recall with the underlying cell counts."""

    fake_total: int
    fake_flagged: int
    nonfake_total: int
    nonfake_flagged: int

    @property
    def fake_recall_pct(self) -> float | None:
        return _pct(self.fake_flagged, self.fake_total)

    @property
    def nonfake_recall_pct(self) -> float | None:
        return _pct(self.nonfake_total - self.nonfake_flagged, self.nonfake_total)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["fake_total", "fake_flagged", "fake_recall_pct",
                 "nonfake_total", "nonfake_flagged", "nonfake_recall_pct"]
            )
            writer.writerow(
                [self.fake_total, self.fake_flagged, _repr_or_na(self.fake_recall_pct),
                 self.nonfake_total, self.nonfake_flagged, _repr_or_na(self.nonfake_recall_pct)]
            )

    def summary(self) -> str:
        return (
            f"fake recall:     {_fmt(self.fake_recall_pct)}% "
            f"({self.fake_flagged}/{self.fake_total} seed-site urls flagged)\n"
            f"non-fake recall: {_fmt(self.nonfake_recall_pct)}% "
            f"({self.nonfake_total - self.nonfake_flagged}/{self.nonfake_total} "
            f"other urls labeled reliable)\n"
        )


def _repr_or_na(value: float | None) -> str:
    return "NA" if value is None else repr(value)


def recall_report(
    classifications: Mapping[str, Classification],
    fake_seed_sites: Iterable[str],
    test_urls: Iterable[str],
    site_fn=site_of,
) -> RecallReport:
    """Recall over seed-site URLs (fake) and everything else (non-fake)."""
    domains = {d.lower() for d in fake_seed_sites}
    fake_total = fake_flagged = nonfake_total = nonfake_flagged = 0
    for url in test_urls:
        cls = classifications.get(url)
        if cls is None:
            raise NotFoundError(f"test url has no classification: {url}")
        flagged = cls.label == Label.FAKE
        if site_fn(url) in domains:
            fake_total += 1
            fake_flagged += flagged
        else:
            nonfake_total += 1
            nonfake_flagged += flagged
    return RecallReport(fake_total, fake_flagged, nonfake_total, nonfake_flagged)


# ----------------------------------------------------------------------
# per-site flag rates
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SiteFlagRow:
    site: str
    total: int
    flagged: int

    @property
    def flag_rate_pct(self) -> float | None:
        return _pct(self.flagged, self.total)


@dataclass(frozen=True)
class SiteFlagReport:
    min_urls: int
    rows: tuple[SiteFlagRow, ...]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["site", "total_urls", "flagged_urls", "flag_rate_pct"])
            for row in self.rows:
                writer.writerow([row.site, row.total, row.flagged, _repr_or_na(row.flag_rate_pct)])

    def summary(self) -> str:
        lines = [f"{'site':40s} {'urls':>6s} {'flagged':>8s} {'rate':>7s}"]
        for row in self.rows:
            lines.append(
                f"{row.site:40s} {row.total:6d} {row.flagged:8d} {_fmt(row.flag_rate_pct):>6s}%"
            )
        return "\n".join(lines) + "\n"


def site_flag_rates(
    classifications: Mapping[str, Classification],
    url_to_site: Mapping[str, str] | None = None,
    min_urls: int = 1,
) -> SiteFlagReport:
    """Share of each site's URLs flagged fake; small sites are omitted."""
    totals: dict[str, int] = {}
    flagged: dict[str, int] = {}
    for url, cls in classifications.items():
        site = url_to_site[url] if url_to_site is not None else site_of(url)
        totals[site] = totals.get(site, 0) + 1
        if cls.label == Label.FAKE:
            flagged[site] = flagged.get(site, 0) + 1
    rows = tuple(
        SiteFlagRow(site, totals[site], flagged.get(site, 0))
        for site in sorted(totals)
        if totals[site] >= min_urls
    )
    return SiteFlagReport(min_urls, rows)


# ----------------------------------------------------------------------
# cross-list detection
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CrossListReport:
    """The three cross-list detection metrics plus their cells.

    Over URLs whose site appears only in the second list: direct detection
    is the flagged fraction; suspicious sites are diff sites with at least
    min_urls URLs of which strictly more than threshold_pct are flagged;
    suspicious URL detection is the fraction of diff URLs on those sites.
    """

    diff_urls: int
    diff_flagged: int
    eligible_sites: int
    suspicious_sites: tuple[str, ...]
    suspicious_site_urls: int
    min_urls: int
    threshold_pct: float

    @property
    def direct_url_pct(self) -> float | None:
        return _pct(self.diff_flagged, self.diff_urls)

    @property
    def suspicious_site_pct(self) -> float | None:
        return _pct(len(self.suspicious_sites), self.eligible_sites)

    @property
    def suspicious_url_pct(self) -> float | None:
        return _pct(self.suspicious_site_urls, self.diff_urls)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["diff_urls", "direct_url_pct", "eligible_sites", "suspicious_sites",
                 "suspicious_site_pct", "suspicious_url_pct"]
            )
            writer.writerow(
                [self.diff_urls, _repr_or_na(self.direct_url_pct), self.eligible_sites,
                 len(self.suspicious_sites), _repr_or_na(self.suspicious_site_pct),
                 _repr_or_na(self.suspicious_url_pct)]
            )

    def summary(self) -> str:
        return (
            f"urls only in second list:  {self.diff_urls}\n"
            f"direct url detection:      {_fmt(self.direct_url_pct)}%\n"
            f"suspicious site detection: {_fmt(self.suspicious_site_pct)}% "
            f"({len(self.suspicious_sites)}/{self.eligible_sites} sites with > "
            f"{self.threshold_pct:g}% of >= {self.min_urls} urls flagged)\n"
            f"suspicious url detection:  {_fmt(self.suspicious_url_pct)}%\n"
        )


def cross_list_detection(
    classifications: Mapping[str, Classification],
    list_a: Iterable[str],
    list_b: Iterable[str],
    url_to_site: Mapping[str, str] | None = None,
    min_urls: int = 20,
    threshold_pct: float = 5.0,
) -> CrossListReport:
    """How well a classifier seeded with list_a recovers list_b's extras."""
    a = {d.lower() for d in list_a}
    b = {d.lower() for d in list_b}
    diff_sites = b - a

    site_urls: dict[str, list[str]] = {}
    for url in classifications:
        site = url_to_site[url] if url_to_site is not None else site_of(url)
        if site in diff_sites:
            site_urls.setdefault(site, []).append(url)

    diff_urls = diff_flagged = 0
    eligible = 0
    suspicious: list[str] = []
    suspicious_site_urls = 0
    for site in sorted(site_urls):
        urls = site_urls[site]
        flagged = sum(1 for u in urls if classifications[u].label == Label.FAKE)
        diff_urls += len(urls)
        diff_flagged += flagged
        if len(urls) >= min_urls:
            eligible += 1
            if 100.0 * flagged / len(urls) > threshold_pct:
                suspicious.append(site)
                suspicious_site_urls += len(urls)
    return CrossListReport(
        diff_urls=diff_urls,
        diff_flagged=diff_flagged,
        eligible_sites=eligible,
        suspicious_sites=tuple(suspicious),
        suspicious_site_urls=suspicious_site_urls,
        min_urls=min_urls,
        threshold_pct=threshold_pct,
    )


# ----------------------------------------------------------------------
# site correlation
# ----------------------------------------------------------------------


def _site_tweet_counts(records: Iterable[ShareRecord], sites: set[str]) -> dict[str, dict[str, int]]:
    """per-user tweet counts restricted to the given sites."""
    counts: dict[str, dict[str, int]] = {}
    for r in records:
        if r.vote is not None:
            continue
        site = site_of(canonicalize_url(r.url))
        if site not in sites:
            continue
        per_user = counts.setdefault(r.user, {})
        per_user[site] = per_user.get(site, 0) + 1
    return counts


def site_correlation(records: Iterable[ShareRecord], site_a: str, site_b: str) -> float:
    """User-overlap correlation T_ab / sqrt(T_a * T_b), in [0, 1].

    With t(u, s) the number of tweets of user u about site s:
    T_ab = sum_u t(u,a) t(u,b) and T_s = sum_u t(u,s)^2. Returns 0 when
    either site has no tweets.
    """
    site_a = site_a.lower()
    site_b = site_b.lower()
    counts = _site_tweet_counts(records, {site_a, site_b})
    t_ab = t_a = t_b = 0.0
    for per_user in counts.values():
        ca = per_user.get(site_a, 0)
        cb = per_user.get(site_b, 0)
        if site_a == site_b:
            cb = ca
        t_ab += ca * cb
        t_a += ca * ca
        t_b += cb * cb
    if t_a == 0.0 or t_b == 0.0:
        return 0.0
    return t_ab / sqrt(t_a * t_b)


def correlation_matrix(
    records: Iterable[ShareRecord], sites: list[str]
) -> list[list[float]]:
    """Pairwise site correlations, emitted as data (no plotting here)."""
    wanted = [s.lower() for s in sites]
    counts = _site_tweet_counts(list(records), set(wanted))
    sums: dict[tuple[str, str], float] = {}
    norms: dict[str, float] = {s: 0.0 for s in wanted}
    for per_user in counts.values():
        present = sorted(per_user)
        for i, a in enumerate(present):
            norms[a] += per_user[a] ** 2
            for b in present[i:]:
                sums[(a, b)] = sums.get((a, b), 0.0) + per_user[a] * per_user[b]
    matrix = []
    for a in wanted:
        row = []
        for b in wanted:
            key = (a, b) if (a, b) in sums else (b, a)
            t_ab = sums.get(key, 0.0)
            denom = sqrt(norms[a] * norms[b]) if norms[a] and norms[b] else 0.0
            row.append(t_ab / denom if denom else 0.0)
        matrix.append(row)
    return matrix


def write_correlation_csv(sites: list[str], matrix: list[list[float]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["site"] + list(sites))
        for site, row in zip(sites, matrix):
            writer.writerow([site] + [repr(v) for v in row])


# ----------------------------------------------------------------------
# online-vs-fixpoint replay agreement
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class AgreementInterval:
    """Agreement cells for one recompute interval."""

    start_ts: float
    end_ts: float
    new_count: int
    new_within: int
    tweeted_count: int
    tweeted_within: int
    all_count: int
    all_within: int

    def fraction(self, category: str) -> float:
        count = getattr(self, f"{category}_count")
        within = getattr(self, f"{category}_within")
        return within / count if count else 1.0  # vacuously in agreement


CATEGORIES = ("new", "tweeted", "all")


@dataclass
class AgreementReport:
    threshold: float
    interval_label: str
    intervals: list[AgreementInterval] = field(default_factory=list)

    def aggregate(self, category: str) -> float:
        count = sum(getattr(iv, f"{category}_count") for iv in self.intervals)
        within = sum(getattr(iv, f"{category}_within") for iv in self.intervals)
        return within / count if count else 1.0

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["interval_start", "interval_end",
                 "new_count", "new_agreement",
                 "tweeted_count", "tweeted_agreement",
                 "all_count", "all_agreement"]
            )
            for iv in self.intervals:
                writer.writerow(
                    [repr(iv.start_ts), repr(iv.end_ts),
                     iv.new_count, repr(iv.fraction("new")),
                     iv.tweeted_count, repr(iv.fraction("tweeted")),
                     iv.all_count, repr(iv.fraction("all"))]
                )

    def summary(self) -> str:
        lines = [
            f"recompute interval: {self.interval_label}; "
            f"agreement = fraction of items with |q_online - q_fixpoint| < {self.threshold:g}"
        ]
        for category in CATEGORIES:
            lines.append(f"{category:8s} items: {100.0 * self.aggregate(category):.2f}%")
        return "\n".join(lines) + "\n"


def replay_agreement(
    records: Iterable[ShareRecord],
    recompute_interval: timedelta | str,
    config: EngineConfig = EngineConfig(),
    fake_seed_urls: Iterable[str] = (),
    nonfake_seed_urls: Iterable[str] = (),
    threshold: float = 0.1,
    editorial: bool = False,
    aggregator_sites: frozenset[str] = DEFAULT_AGGREGATOR_SITES,
    graph: ReputationGraph | None = None,
) -> AgreementReport:
    """Replay a timestamp-sorted stream online, checking it against fixpoints.

    Edges are applied through the online propagation as they arrive. At each
    interval boundary the online item reputations are snapshotted, the batch
    fixpoint is recomputed, and each category (items first seen in the
    interval, items tweeted in the interval, all items) records the fraction
    within ``threshold`` of the fixpoint. The recomputed state then becomes
    the baseline for the next interval.

    With ``recompute_interval = EVERY_EDGE`` the state is refreshed by a
    full recompute after every single edge; the served online state is then
    the fixpoint itself at every instant, so agreement is 1.0 exactly in
    every category by construction (the measurement happens after the
    refresh, which is what continuous recomputation means).
    """
    every_edge = recompute_interval == EVERY_EDGE
    if not every_edge:
        if not isinstance(recompute_interval, timedelta) or recompute_interval <= timedelta(0):
            raise InvalidInputError("recompute_interval must be a positive timedelta or EVERY_EDGE")
        step = recompute_interval.total_seconds()
    fake_urls = {canonicalize_url(u) for u in fake_seed_urls}
    nonfake_urls = {canonicalize_url(u) for u in nonfake_seed_urls}
    if graph is None:
        graph = ReputationGraph(c=config.c)

    report = AgreementReport(
        threshold=threshold,
        interval_label=EVERY_EDGE if every_edge else str(recompute_interval),
    )
    new_rows: set[int] = set()
    tweeted_rows: set[int] = set()
    interval_start: float | None = None
    next_boundary: float | None = None
    last_ts: float | None = None
    dirty = True  # graph changed since the engine state was last a fixpoint

    def close_interval(end_ts: float) -> None:
        nonlocal interval_start, dirty
        if dirty:
            before = graph.item_q.view().copy()
            compute_fixpoint(graph, config=config)
            diffs = np.abs(before - graph.item_q.view())
            dirty = False
        else:
            # Nothing arrived since the last recompute: rerunning the
            # fixpoint on the unchanged graph reproduces the state exactly,
            # so every difference is zero without recomputing.
            diffs = np.zeros(graph.n_items)

        def cells(rows) -> tuple[int, int]:
            within = sum(1 for r in rows if diffs[r] < threshold)
            return len(rows), within

        new_count, new_within = cells(new_rows)
        tw_count, tw_within = cells(tweeted_rows)
        all_count = int(diffs.size)
        all_within = int((diffs < threshold).sum())
        report.intervals.append(
            AgreementInterval(
                start_ts=interval_start if interval_start is not None else end_ts,
                end_ts=end_ts,
                new_count=new_count,
                new_within=new_within,
                tweeted_count=tw_count,
                tweeted_within=tw_within,
                all_count=all_count,
                all_within=all_within,
            )
        )
        new_rows.clear()
        tweeted_rows.clear()
        interval_start = end_ts

    for record in records:
        ts = record.ts
        if last_ts is not None and ts < last_ts:
            raise InvalidStreamError(
                f"stream not sorted by timestamp: {ts} after {last_ts}"
            )
        last_ts = ts
        if next_boundary is None and not every_edge:
            # Anchor boundaries to the UTC midnight opening the first day.
            interval_start = date_to_ts(ts_to_date(ts))
            next_boundary = interval_start + step
        while not every_edge and ts >= next_boundary:
            close_interval(next_boundary)
            next_boundary += step

        url = canonicalize_url(record.url)
        is_new = not graph.has_url(url)
        item = graph.add_item(url)
        if is_new:
            new_rows.add(item.index)
            dirty = True
            if url in fake_urls:
                seed_item(graph, item, -1, c=config.c)
            elif url in nonfake_urls:
                seed_item(graph, item, +1, c=config.c)
            if editorial:
                site = site_of(url)
                if site and site not in aggregator_sites:
                    site_node = graph.add_source(site, NodeKind.SITE)
                    if graph.add_edge(item, site_node, 1, EdgeKind.EDITORIAL, ts) is InsertOutcome.INSERTED:
                        ingest_edge_online(
                            graph, Edge(item, site_node, 1, EdgeKind.EDITORIAL, ts), config
                        )
        source = graph.add_source(record.user, NodeKind.USER)
        kind = EdgeKind.TWEET if record.vote is None else EdgeKind.VOTE
        polarity = 1 if record.vote is None else record.vote
        if kind == EdgeKind.TWEET:
            tweeted_rows.add(item.index)
        outcome = graph.add_edge(item, source, polarity, kind, ts)
        if outcome is InsertOutcome.INSERTED:
            ingest_edge_online(graph, Edge(item, source, polarity, kind, ts), config)
            dirty = True
        if every_edge:
            if interval_start is None:
                interval_start = ts
            # Continuous recomputation: refresh the state first, then
            # measure; the online approximation never survives to serving.
            compute_fixpoint(graph, config=config)
            dirty = False
            close_interval(ts)

    if not every_edge and next_boundary is not None:
        close_interval(next_boundary)
    report.final_graph = graph
    return report
