"""Share-record ingestion: parsing, URL handling, scrubbing, splitting.

Input records are JSON lines with fields ``user``, ``url``, ``ts`` (epoch
seconds, UTC), optional ``title``, ``description``, and an optional ``vote``
field (+1/-1) marking explicit truth votes instead of shares. All dates in
split specs are ISO-8601 and interpreted in UTC.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from importlib import resources
from typing import Iterable, Iterator
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from .errors import (
    CorruptInputError,
    InvalidInputError,
    InvalidSpecError,
    InvalidUrlError,
)
from .graph import EdgeKind, NodeKind, ReputationGraph

UTC = timezone.utc

# Content aggregators get no editorial edge: hosting is not an endorsement.
DEFAULT_AGGREGATOR_SITES = frozenset(
    {"youtube.com", "instagram.com", "facebook.com", "twitter.com", "reddit.com"}
)


@dataclass(frozen=True)
class ShareRecord:
    """One tweet-like event: who shared which URL, when, with what text."""

    user: str
    url: str
    ts: float
    title: str | None = None
    description: str | None = None
    vote: int | None = None  # None = share; +-1 = explicit truth vote


def ts_to_date(ts: float) -> date:
    return datetime.fromtimestamp(ts, tz=UTC).date()


def date_to_ts(d: date) -> float:
    """Epoch seconds of UTC midnight starting the given day."""
    return datetime(d.year, d.month, d.day, tzinfo=UTC).timestamp()


# ----------------------------------------------------------------------
# URL canonicalization and site mapping
# ----------------------------------------------------------------------

_DEFAULT_PORTS = {"http": "80", "https": "443"}


def canonicalize_url(raw: str) -> str:
    """Normalize a URL: case, default port, fragment, utm_* params, slashes.

    Canonicalization is idempotent. Raises InvalidUrlError when the input
    does not look like an http(s) URL.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise InvalidUrlError("empty url")
    try:
        parts = urlsplit(raw.strip())
    except ValueError as exc:
        raise InvalidUrlError(f"unparsable url: {raw!r}") from exc
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https") or not parts.netloc:
        raise InvalidUrlError(f"not an http(s) url: {raw!r}")

    host = parts.hostname or ""
    if not host:
        raise InvalidUrlError(f"url has no host: {raw!r}")
    host = host.lower().rstrip(".")
    port = parts.port
    netloc = host
    if port is not None and str(port) != _DEFAULT_PORTS[scheme]:
        netloc = f"{host}:{port}"

    path = parts.path
    while path.endswith("/") and len(path) > 1:
        path = path[:-1]
    if not path:
        path = "/"

    query_pairs = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if not k.lower().startswith("utm_")
    ]
    query = urlencode(query_pairs)
    return urlunsplit((scheme, netloc, path, query, ""))


class PublicSuffixList:
    """Registered-domain extraction against a bundled suffix snapshot.

    Standard matching rules: longest matching suffix wins, ``*.`` rules
    match one extra label, ``!`` exceptions override wildcards, and an
    unknown TLD is itself the public suffix.
    """

    def __init__(self, rules: Iterable[str]):
        self._exact: set[str] = set()
        self._wildcard: set[str] = set()
        self._exception: set[str] = set()
        for rule in rules:
            rule = rule.strip().lower()
            if not rule or rule.startswith("#"):
                continue
            if rule.startswith("!"):
                self._exception.add(rule[1:])
            elif rule.startswith("*."):
                self._wildcard.add(rule[2:])
            else:
                self._exact.add(rule)

    @classmethod
    def bundled(cls) -> "PublicSuffixList":
        text = resources.files("hoaxrank.data").joinpath("public_suffixes.dat").read_text()
        return cls(text.splitlines())

    def suffix_length(self, labels: list[str]) -> int:
        """Number of labels in the public suffix of a dotted host."""
        best = 1  # default rule: the bare TLD is a public suffix
        for take in range(1, len(labels) + 1):
            candidate = ".".join(labels[-take:])
            if candidate in self._exception:
                return take - 1
            if candidate in self._exact:
                best = max(best, take)
            if take >= 2 and ".".join(labels[-take + 1:]) in self._wildcard:
                best = max(best, take)
        return best

    def registered_domain(self, host: str) -> str:
        host = host.strip().lower().rstrip(".")
        if not host or host.startswith("[") or _looks_like_ip(host):
            return host
        labels = host.split(".")
        if len(labels) == 1:
            return host
        suffix_len = self.suffix_length(labels)
        take = min(len(labels), suffix_len + 1)
        return ".".join(labels[-take:])


def _looks_like_ip(host: str) -> bool:
    return bool(re.fullmatch(r"[0-9.]+", host)) or ":" in host


_PSL: PublicSuffixList | None = None


def _psl() -> PublicSuffixList:
    global _PSL
    if _PSL is None:
        _PSL = PublicSuffixList.bundled()
    return _PSL


def registered_domain(host: str) -> str:
    return _psl().registered_domain(host)


def site_of(url: str) -> str:
    """Registered domain a canonical URL belongs to."""
    host = urlsplit(url).hostname or ""
    return registered_domain(host)


def registrable_name(domain: str) -> str:
    """The label in front of the public suffix: nytimes.com -> nytimes."""
    labels = domain.lower().split(".")
    if len(labels) < 2:
        return domain.lower()
    suffix_len = _psl().suffix_length(labels)
    if suffix_len >= len(labels):
        return labels[0]
    return labels[-(suffix_len + 1)]


# ----------------------------------------------------------------------
# site-mention scrubbing
# ----------------------------------------------------------------------


def scrub_site_mentions(text: str, domain: str, aliases: Iterable[str] = ()) -> str:
    """Remove every case-insensitive mention of a site from free text.

    Strips the full domain, its registrable-name token, and all aliases,
    repeating until a fixpoint so removals cannot splice new mentions
    together. Other content, including surrounding whitespace, is untouched.
    """
    if not text:
        return text
    patterns = {domain.lower(), registrable_name(domain)}
    patterns.update(a.lower() for a in aliases if a)
    patterns.discard("")
    ordered = sorted(patterns, key=len, reverse=True)
    regexes = [re.compile(re.escape(p), re.IGNORECASE) for p in ordered]
    while True:
        new_text = text
        for rx in regexes:
            new_text = rx.sub("", new_text)
        if new_text == text:
            return text
        text = new_text


# ----------------------------------------------------------------------
# record files
# ----------------------------------------------------------------------


class RecordStream:
    """Streaming JSONL reader that counts and skips malformed lines.

    Iterating yields ShareRecords in file order with constant memory. After
    exhaustion, ``skipped`` and ``total_lines`` report parse quality; if the
    malformed fraction exceeds ``max_malformed_fraction`` the final ``next``
    raises CorruptInputError.
    """

    def __init__(self, path, max_malformed_fraction: float = 0.05):
        self.path = path
        self.max_malformed_fraction = max_malformed_fraction
        self.skipped = 0
        self.total_lines = 0

    def __iter__(self) -> Iterator[ShareRecord]:
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                self.total_lines += 1
                record = self._parse(line)
                if record is None:
                    self.skipped += 1
                else:
                    yield record
        if self.total_lines and self.skipped / self.total_lines > self.max_malformed_fraction:
            raise CorruptInputError(
                f"{self.path}: {self.skipped}/{self.total_lines} lines malformed"
            )

    @staticmethod
    def _parse(line: str) -> ShareRecord | None:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            return None
        if not isinstance(obj, dict):
            return None
        user = obj.get("user")
        url = obj.get("url")
        ts = obj.get("ts")
        if not isinstance(user, str) or not user:
            return None
        if not isinstance(url, str) or not url:
            return None
        if not isinstance(ts, (int, float)) or isinstance(ts, bool) or ts <= 0:
            return None
        title = obj.get("title")
        description = obj.get("description")
        vote = obj.get("vote")
        if title is not None and not isinstance(title, str):
            return None
        if description is not None and not isinstance(description, str):
            return None
        if vote is not None and vote not in (-1, 1):
            return None
        return ShareRecord(user, url, float(ts), title, description, vote)


def load_records(path, max_malformed_fraction: float = 0.05) -> RecordStream:
    """Open a JSONL record file as a lazy, skip-counting stream."""
    return RecordStream(path, max_malformed_fraction)


def serialize_records(records: Iterable[ShareRecord], path) -> None:
    """Write records back out as JSONL (inverse of load_records)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            obj = {"user": r.user, "url": r.url, "ts": r.ts}
            if r.title is not None:
                obj["title"] = r.title
            if r.description is not None:
                obj["description"] = r.description
            if r.vote is not None:
                obj["vote"] = r.vote
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


# ----------------------------------------------------------------------
# seed site lists and URL-level seed labels
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SeedSiteList:
    name: str
    domains: frozenset[str]


def load_seed_list(path, name: str | None = None) -> SeedSiteList:
    """Read a one-domain-per-line site list, normalizing each entry.

    Entries may carry schemes, paths, ports, or subdomains; each is reduced
    to its lowercased registered domain. Blank lines and # comments skip.
    """
    domains = set()
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "://" in line:
                line = line.split("://", 1)[1]
            line = line.split("/", 1)[0].split(":", 1)[0].strip().lower()
            if line:
                domains.add(registered_domain(line))
    return SeedSiteList(name or str(path), frozenset(domains))


def load_url_seed_labels(path) -> tuple[set[str], set[str]]:
    """Read a url,label CSV into (fake_urls, nonfake_urls) canonical sets."""
    import csv as _csv

    fake: set[str] = set()
    nonfake: set[str] = set()
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.reader(fh)
        for row in reader:
            if not row or row[0].startswith("#") or row[0] == "url":
                continue
            if len(row) < 2:
                raise InvalidInputError(f"{path}: seed row needs url,label: {row!r}")
            url = canonicalize_url(row[0])
            label = row[1].strip().lower()
            if label in ("fake", "-1"):
                fake.add(url)
            elif label in ("nonfake", "non-fake", "reliable", "1", "+1"):
                nonfake.add(url)
            else:
                raise InvalidInputError(f"{path}: unknown seed label {row[1]!r}")
    return fake, nonfake


# ----------------------------------------------------------------------
# per-URL bundles and the temporal split
# ----------------------------------------------------------------------


@dataclass
class UrlBundle:
    """Everything known about one canonical URL: sharers, votes, text."""

    url: str
    site: str
    first_seen: float
    title: str | None = None
    description: str | None = None
    tweets: list[tuple[str, float]] = field(default_factory=list)
    votes: list[tuple[str, float, int]] = field(default_factory=list)

    @property
    def users(self) -> list[str]:
        """Distinct sharers in first-tweet order."""
        seen = set()
        out = []
        for user, _ in self.tweets:
            if user not in seen:
                seen.add(user)
                out.append(user)
        return out


def collect_bundles(records: Iterable[ShareRecord]) -> dict[str, UrlBundle]:
    """Group records per canonical URL, independent of input order.

    Tweets are sorted by (timestamp, user); the title/description come from
    the earliest record carrying them. Merging streams in any order yields
    identical bundles.
    """
    staged: dict[str, list[ShareRecord]] = {}
    for r in records:
        url = canonicalize_url(r.url)
        staged.setdefault(url, []).append(r)

    bundles: dict[str, UrlBundle] = {}
    for url in sorted(staged):
        recs = sorted(staged[url], key=lambda r: (r.ts, r.user))
        bundle = UrlBundle(url=url, site=site_of(url), first_seen=recs[0].ts)
        for r in recs:
            if r.vote is None:
                bundle.tweets.append((r.user, r.ts))
            else:
                bundle.votes.append((r.user, r.ts, r.vote))
            if bundle.title is None and r.title:
                bundle.title = r.title
            if bundle.description is None and r.description:
                bundle.description = r.description
        bundles[url] = bundle
    return bundles


@dataclass(frozen=True)
class SplitSpec:
    """Temporal train/test split boundaries (all dates UTC, inclusive)."""

    train_start: date
    train_end: date
    train_tweet_cutoff: date
    test_start: date
    test_end: date

    def __post_init__(self):
        if self.train_start > self.train_end:
            raise InvalidSpecError("train range start is after its end")
        if self.test_start > self.test_end:
            raise InvalidSpecError("test range start is after its end")
        if self.train_end >= self.test_start:
            raise InvalidSpecError("train range must precede the test range")
        if self.train_tweet_cutoff < self.train_end:
            raise InvalidSpecError("tweet cutoff must not precede the train range end")

    @classmethod
    def from_iso(cls, train_start, train_end, cutoff, test_start, test_end) -> "SplitSpec":
        return cls(
            date.fromisoformat(train_start),
            date.fromisoformat(train_end),
            date.fromisoformat(cutoff),
            date.fromisoformat(test_start),
            date.fromisoformat(test_end),
        )


def temporal_split(
    records: Iterable[ShareRecord], spec: SplitSpec
) -> tuple[dict[str, UrlBundle], dict[str, UrlBundle]]:
    """Split per-URL bundles by first-seen date; train and test are disjoint.

    A URL joins the train set when first seen inside the train range (its
    bundle keeps only tweets strictly before the cutoff date) and the test
    set when first seen inside the test range (keeping all tweets). URLs
    first seen in neither range are dropped.
    """
    bundles = collect_bundles(records)
    cutoff_ts = date_to_ts(spec.train_tweet_cutoff)
    train: dict[str, UrlBundle] = {}
    test: dict[str, UrlBundle] = {}
    for url, bundle in bundles.items():
        day = ts_to_date(bundle.first_seen)
        if spec.train_start <= day <= spec.train_end:
            kept = [t for t in bundle.tweets if t[1] < cutoff_ts]
            kept_votes = [v for v in bundle.votes if v[1] < cutoff_ts]
            train[url] = UrlBundle(
                url=bundle.url,
                site=bundle.site,
                first_seen=bundle.first_seen,
                title=bundle.title,
                description=bundle.description,
                tweets=kept,
                votes=kept_votes,
            )
        elif spec.test_start <= day <= spec.test_end:
            test[url] = bundle
    return train, test


def alternate_day_filter(
    records: Iterable[ShareRecord], anchor: date
) -> Iterator[ShareRecord]:
    """Keep only records whose UTC day is an even offset from the anchor."""
    for r in records:
        if (ts_to_date(r.ts) - anchor).days % 2 == 0:
            yield r


# ----------------------------------------------------------------------
# graph construction
# ----------------------------------------------------------------------


def build_graph(
    bundles: dict[str, UrlBundle] | Iterable[UrlBundle],
    editorial: bool = False,
    aggregator_sites: frozenset[str] = DEFAULT_AGGREGATOR_SITES,
    c: float = 0.02,
    graph: ReputationGraph | None = None,
) -> ReputationGraph:
    """Materialize per-URL bundles into a reputation graph.

    Tweets become +1 user edges (first tweet per user wins; duplicates are
    dropped by the graph). With editorial=True each item also gets a +1 edge
    from its site node, except for aggregator sites. Votes become signed
    user edges.
    """
    if graph is None:
        graph = ReputationGraph(c=c)
    if isinstance(bundles, dict):
        bundles = bundles.values()
    for bundle in bundles:
        item = graph.add_item(bundle.url)
        for user, ts in bundle.tweets:
            source = graph.add_source(user, NodeKind.USER)
            graph.add_edge(item, source, 1, EdgeKind.TWEET, ts)
        for user, ts, polarity in bundle.votes:
            source = graph.add_source(user, NodeKind.USER)
            graph.add_edge(item, source, polarity, EdgeKind.VOTE, ts)
        if editorial and bundle.site and bundle.site not in aggregator_sites:
            site_node = graph.add_source(bundle.site, NodeKind.SITE)
            graph.add_edge(item, site_node, 1, EdgeKind.EDITORIAL, bundle.first_seen)
    return graph
