"""Planted-ground-truth share graph generator for desk-scale experiments.

Two user populations share items from two item classes: spreaders favor
fake items with probability ``affinity`` and honest users favor reliable
items the same way. The output is the same JSONL record stream ingestion
consumes, plus the planted truth and a seed-label file, so every metric in
the package can be validated against a known answer.
"""

from __future__ import annotations

import csv
import random
import sys
from dataclasses import dataclass
from datetime import date

from .engine import Label
from .errors import InvalidSpecError
from .ingest import ShareRecord, date_to_ts

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

_FAKE_FLAVOR = ["shocking", "exposed", "secret", "banned", "miracle", "hoax", "scandal"]
_RELIABLE_FLAVOR = ["report", "analysis", "study", "update", "review", "budget", "council"]
_NEUTRAL = ["the", "of", "a", "today", "new", "city", "world", "people", "news", "week"]


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of the planted two-population share model."""

    n_fake_items: int = 200
    n_reliable_items: int = 800
    n_spreaders: int = 40
    n_honest: int = 160
    affinity: float = 0.9
    shares_per_user: int = 25
    seed_fraction: float = 0.2
    sample_multiplier: int = 2
    rng_seed: int = 0
    start_date: date = date(2017, 9, 1)
    n_days: int = 30
    items_per_site: int = 20

    def __post_init__(self):
        for name in ("n_fake_items", "n_reliable_items", "n_spreaders", "n_honest",
                     "shares_per_user", "items_per_site", "n_days"):
            if getattr(self, name) <= 0:
                raise InvalidSpecError(f"{name} must be positive")
        if not 0.0 <= self.affinity <= 1.0:
            raise InvalidSpecError("affinity must be a probability")
        if not 0.0 < self.seed_fraction <= 1.0:
            raise InvalidSpecError("seed_fraction must be in (0, 1]")
        if self.sample_multiplier < 1:
            raise InvalidSpecError("sample_multiplier must be >= 1")
        # Users sample items without replacement, and a maximally aligned
        # user may draw every share from one class.
        cap = min(self.n_fake_items, self.n_reliable_items)
        if self.shares_per_user > cap:
            raise InvalidSpecError(
                f"shares_per_user = {self.shares_per_user} exceeds the smaller "
                f"item class ({cap}); spec is infeasible"
            )
        n_seed_fake = round(self.seed_fraction * self.n_fake_items)
        if n_seed_fake * self.sample_multiplier > self.n_reliable_items:
            raise InvalidSpecError("not enough reliable items to match the seed sample")

    @classmethod
    def from_toml(cls, path) -> "GeneratorSpec":
        with open(path, "rb") as fh:
            data = _toml.load(fh)
        if "start_date" in data and isinstance(data["start_date"], str):
            data["start_date"] = date.fromisoformat(data["start_date"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidSpecError(f"bad generator spec field: {exc}") from exc


@dataclass(frozen=True)
class PlantedTruth:
    item_labels: dict[str, Label]
    user_alignment: dict[str, str]  # handle -> "spreader" | "honest"


def _item_url(cls_name: str, site_idx: int, item_idx: int) -> str:
    return f"https://{cls_name}-{site_idx:03d}.example/story-{item_idx:05d}"


def generate(spec: GeneratorSpec) -> tuple[list[ShareRecord], PlantedTruth, set[str], set[str]]:
    """Produce (records, truth, fake_seed_urls, nonfake_seed_urls).

    Records come out sorted by timestamp. Everything is a pure function of
    the spec, including its rng_seed.
    """
    rng = random.Random(spec.rng_seed)

    fake_urls = [
        _item_url("tabloid", k // spec.items_per_site, k) for k in range(spec.n_fake_items)
    ]
    reliable_urls = [
        _item_url("gazette", k // spec.items_per_site, k + spec.n_fake_items)
        for k in range(spec.n_reliable_items)
    ]
    users = [f"u{k:05d}" for k in range(spec.n_spreaders + spec.n_honest)]
    alignment = {
        handle: ("spreader" if k < spec.n_spreaders else "honest")
        for k, handle in enumerate(users)
    }

    t0 = date_to_ts(spec.start_date)
    span = spec.n_days * 86400.0

    records: list[ShareRecord] = []
    for handle in users:
        spreader = alignment[handle] == "spreader"
        shared: set[str] = set()
        for _ in range(spec.shares_per_user):
            aligned = rng.random() < spec.affinity
            pick_fake = aligned if spreader else not aligned
            pool = fake_urls if pick_fake else reliable_urls
            url = _draw_unshared(rng, pool, shared)
            shared.add(url)
            ts = t0 + rng.random() * span
            records.append(ShareRecord(user=handle, url=url, ts=ts, title=_title(rng, pick_fake)))
    records.sort(key=lambda r: (r.ts, r.user, r.url))

    truth = PlantedTruth(
        item_labels={u: Label.FAKE for u in fake_urls}
        | {u: Label.RELIABLE for u in reliable_urls},
        user_alignment=alignment,
    )

    n_seed_fake = round(spec.seed_fraction * spec.n_fake_items)
    fake_seeds = set(rng.sample(fake_urls, n_seed_fake))
    nonfake_seeds = set(rng.sample(reliable_urls, spec.sample_multiplier * n_seed_fake))
    return records, truth, fake_seeds, nonfake_seeds


def _draw_unshared(rng: random.Random, pool: list[str], shared: set[str]) -> str:
    for _ in range(1000):
        url = pool[rng.randrange(len(pool))]
        if url not in shared:
            return url
    for url in pool:  # deterministic fallback for nearly exhausted pools
        if url not in shared:
            return url
    raise InvalidSpecError("item pool exhausted; spec was infeasible")


def _title(rng: random.Random, fake: bool) -> str:
    flavor = _FAKE_FLAVOR if fake else _RELIABLE_FLAVOR
    words = [rng.choice(flavor), rng.choice(_NEUTRAL), rng.choice(flavor), rng.choice(_NEUTRAL)]
    return " ".join(words)


# ----------------------------------------------------------------------
# output files
# ----------------------------------------------------------------------


def write_truth_csv(truth: PlantedTruth, path) -> None:
    """One row per entity: kind (item|user), key, truth value."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["kind", "key", "truth"])
        for url in sorted(truth.item_labels):
            writer.writerow(["item", url, truth.item_labels[url].value])
        for handle in sorted(truth.user_alignment):
            writer.writerow(["user", handle, truth.user_alignment[handle]])


def read_truth_csv(path) -> PlantedTruth:
    items: dict[str, Label] = {}
    users: dict[str, str] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        for row in reader:
            if not row:
                continue
            kind, key, value = row
            if kind == "item":
                items[key] = Label(value)
            else:
                users[key] = value
    return PlantedTruth(items, users)


def write_seeds_csv(fake_urls: set[str], nonfake_urls: set[str], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["url", "label"])
        for url in sorted(fake_urls):
            writer.writerow([url, "fake"])
        for url in sorted(nonfake_urls):
            writer.writerow([url, "nonfake"])
