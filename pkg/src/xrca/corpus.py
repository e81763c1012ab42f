"""Career-profile data model, corpus parsing and synthetic generation.

A corpus is a set of anonymized career histories. Each profile is an
ordered, non-overlapping sequence of positions with month-granular
timing; months are the coarsest unit that lands 2/5/10-year horizons
exactly (24/60/120 months).

Serialized formats:

* JSONL — one profile object per line:
  ``{"id": str, "positions": [{"role": str, "industry": str,
  "location": str, "start": int, "months": int}]}``
* CSV — one position per row, header ``id,role,industry,location,start,months``,
  rows grouped by id.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Union

from ._rng import stream

MAX_SPAN_MONTHS = 600  # 50 years

# Built-in controlled vocabularies used by the synthetic generator. The
# first four industries are the ones career maps are commonly drawn
# over; the rest are fillers that keep shift maps non-degenerate.
INDUSTRIES = (
    "Computer Manufacturing",
    "Financial Services",
    "IT Services",
    "Software Products",
    "Education",
    "Energy",
    "Healthcare",
    "Retail",
)
LOCATIONS = (
    "Athens",
    "Berlin",
    "Lisbon",
    "London",
    "Madrid",
    "Paris",
    "Rome",
    "Vienna",
)


class RoleLevel(enum.Enum):
    EMPLOYEE = "Employee"
    MANAGER = "Manager"
    DIRECTOR = "Director"
    EXECUTIVE = "Executive"

    @property
    def rank(self) -> int:
        return _ROLE_RANK[self]

    @classmethod
    def from_name(cls, name: str) -> "RoleLevel":
        try:
            return _ROLE_BY_NAME[name]
        except KeyError:
            raise ValueError(f"unknown role level: {name!r}") from None


ROLE_ORDER = (
    RoleLevel.EMPLOYEE,
    RoleLevel.MANAGER,
    RoleLevel.DIRECTOR,
    RoleLevel.EXECUTIVE,
)
_ROLE_RANK = {r: i for i, r in enumerate(ROLE_ORDER)}
_ROLE_BY_NAME = {r.value: r for r in ROLE_ORDER}


@dataclass(frozen=True, slots=True)
class PositionRecord:
    role_level: RoleLevel
    industry: str
    location: str
    start_offset_months: int
    duration_months: int

    @property
    def end_offset_months(self) -> int:
        return self.start_offset_months + self.duration_months


@dataclass(frozen=True, slots=True)
class CareerProfile:
    profile_id: str
    positions: tuple[PositionRecord, ...]

    @property
    def total_span_months(self) -> int:
        return max(p.end_offset_months for p in self.positions)


@dataclass(frozen=True, slots=True)
class ProfileSet:
    profiles: tuple[CareerProfile, ...]
    industry_vocab: frozenset[str]
    location_vocab: frozenset[str]

    def __len__(self) -> int:
        return len(self.profiles)


@dataclass(frozen=True, slots=True)
class SynthConfig:
    seed: int
    n_profiles: int
    span_months_range: tuple[int, int] = (120, 480)
    promotion_bias: float = 0.6
    industry_switch_rate: float = 0.25
    location_switch_rate: float = 0.15


class CorpusError(Exception):
    pass


class MalformedRecord(CorpusError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateProfileId(CorpusError):
    def __init__(self, profile_id: str) -> None:
        super().__init__(f"duplicate profile id: {profile_id}")
        self.profile_id = profile_id


class EmptyCorpus(CorpusError):
    pass


class InvalidConfig(CorpusError):
    pass


def validate_profile(profile: CareerProfile) -> list[str]:
    """Return every invariant violation (empty list means valid)."""
    violations: list[str] = []
    if not profile.profile_id:
        violations.append("profile id must be non-empty")
    if not profile.positions:
        violations.append("profile must have at least one position")
        return violations
    for i, pos in enumerate(profile.positions):
        if pos.start_offset_months < 0:
            violations.append(f"position {i}: start offset must be >= 0")
        if pos.duration_months <= 0:
            violations.append(f"position {i}: duration must be positive")
        if not pos.industry:
            violations.append(f"position {i}: industry must be non-empty")
        if not pos.location:
            violations.append(f"position {i}: location must be non-empty")
    for i in range(len(profile.positions) - 1):
        a, b = profile.positions[i], profile.positions[i + 1]
        if b.start_offset_months < a.start_offset_months:
            violations.append(f"positions {i} and {i + 1}: not sorted by start offset")
        elif b.start_offset_months < a.end_offset_months:
            violations.append(f"positions {i} and {i + 1}: intervals overlap")
    span = max(p.end_offset_months for p in profile.positions)
    if span > MAX_SPAN_MONTHS:
        violations.append(f"total span {span} months exceeds {MAX_SPAN_MONTHS}")
    return violations


def _build_set(profiles: list[CareerProfile]) -> ProfileSet:
    if not profiles:
        raise EmptyCorpus("corpus contains no profiles")
    industries: set[str] = set()
    locations: set[str] = set()
    for p in profiles:
        for pos in p.positions:
            industries.add(pos.industry)
            locations.add(pos.location)
    return ProfileSet(tuple(profiles), frozenset(industries), frozenset(locations))


def _profile_from_parts(
    profile_id: str, parts: list[PositionRecord], line: int
) -> CareerProfile:
    profile = CareerProfile(profile_id, tuple(parts))
    violations = validate_profile(profile)
    if violations:
        raise MalformedRecord(line, f"profile {profile_id!r}: " + "; ".join(violations))
    return profile


def _position_from_obj(obj: dict, line: int) -> PositionRecord:
    try:
        role = RoleLevel.from_name(obj["role"])
        industry = obj["industry"]
        location = obj["location"]
        start = obj["start"]
        months = obj["months"]
    except KeyError as exc:
        raise MalformedRecord(line, f"position missing field {exc.args[0]!r}") from None
    except ValueError as exc:
        raise MalformedRecord(line, str(exc)) from None
    if not isinstance(start, int) or isinstance(start, bool):
        raise MalformedRecord(line, "position field 'start' must be an integer")
    if not isinstance(months, int) or isinstance(months, bool):
        raise MalformedRecord(line, "position field 'months' must be an integer")
    if not isinstance(industry, str) or not isinstance(location, str):
        raise MalformedRecord(line, "industry and location must be strings")
    return PositionRecord(role, industry, location, start, months)


def parse_profiles(raw: Union[bytes, "io.IOBase"], format: str = "jsonl") -> ProfileSet:
    """Parse and fully validate a corpus stream.

    Raises MalformedRecord (with a 1-based line number), DuplicateProfileId
    or EmptyCorpus; on success every profile satisfies the model invariants.
    """
    if isinstance(raw, (bytes, bytearray)):
        data = bytes(raw)
    else:
        data = raw.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRecord(0, f"stream is not valid UTF-8: {exc}") from None

    if format == "jsonl":
        return _parse_jsonl(text)
    if format == "csv":
        return _parse_csv(text)
    raise ValueError(f"unknown corpus format: {format!r}")


def _parse_jsonl(text: str) -> ProfileSet:
    profiles: list[CareerProfile] = []
    seen: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise MalformedRecord(line_no, "record must be a JSON object")
        profile_id = obj.get("id")
        if not isinstance(profile_id, str) or not profile_id:
            raise MalformedRecord(line_no, "record field 'id' must be a non-empty string")
        if profile_id in seen:
            raise DuplicateProfileId(profile_id)
        seen.add(profile_id)
        positions_obj = obj.get("positions")
        if not isinstance(positions_obj, list):
            raise MalformedRecord(line_no, "record field 'positions' must be a list")
        parts = [_position_from_obj(p, line_no) for p in positions_obj]
        profiles.append(_profile_from_parts(profile_id, parts, line_no))
    return _build_set(profiles)


def _parse_csv(text: str) -> ProfileSet:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise EmptyCorpus("corpus contains no profiles")
    header = rows[0]
    expected = ["id", "role", "industry", "location", "start", "months"]
    if header != expected:
        raise MalformedRecord(1, f"header must be {','.join(expected)}")
    profiles: list[CareerProfile] = []
    seen: set[str] = set()
    current_id: str | None = None
    current_parts: list[PositionRecord] = []
    current_line = 0

    def flush() -> None:
        if current_id is not None:
            profiles.append(_profile_from_parts(current_id, current_parts, current_line))

    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 6:
            raise MalformedRecord(line_no, "row must have 6 columns")
        pid, role, industry, location, start, months = row
        if not pid:
            raise MalformedRecord(line_no, "column 'id' must be non-empty")
        if pid != current_id:
            flush()
            if pid in seen:
                raise DuplicateProfileId(pid)
            seen.add(pid)
            current_id = pid
            current_parts = []
            current_line = line_no
        try:
            start_i, months_i = int(start), int(months)
        except ValueError:
            raise MalformedRecord(line_no, "'start' and 'months' must be integers") from None
        obj = {
            "role": role,
            "industry": industry,
            "location": location,
            "start": start_i,
            "months": months_i,
        }
        current_parts.append(_position_from_obj(obj, line_no))
    flush()
    return _build_set(profiles)


def serialize_profiles(profile_set: ProfileSet, format: str = "jsonl") -> bytes:
    """Canonical serialization; parse(serialize(s)) == s for valid sets."""
    if format == "jsonl":
        lines = []
        for p in profile_set.profiles:
            obj = {
                "id": p.profile_id,
                "positions": [
                    {
                        "role": pos.role_level.value,
                        "industry": pos.industry,
                        "location": pos.location,
                        "start": pos.start_offset_months,
                        "months": pos.duration_months,
                    }
                    for pos in p.positions
                ],
            }
            lines.append(json.dumps(obj, separators=(",", ":"), ensure_ascii=True))
        return ("\n".join(lines) + "\n").encode("utf-8")
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "role", "industry", "location", "start", "months"])
        for p in profile_set.profiles:
            for pos in p.positions:
                writer.writerow(
                    [
                        p.profile_id,
                        pos.role_level.value,
                        pos.industry,
                        pos.location,
                        pos.start_offset_months,
                        pos.duration_months,
                    ]
                )
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown corpus format: {format!r}")


def validate_synth_config(cfg: SynthConfig) -> None:
    lo, hi = cfg.span_months_range
    if not (0 <= cfg.seed < (1 << 64)):
        raise InvalidConfig("seed must be an unsigned 64-bit integer")
    if cfg.n_profiles <= 0:
        raise InvalidConfig("n_profiles must be positive")
    if not (1 <= lo <= hi <= MAX_SPAN_MONTHS):
        raise InvalidConfig(
            f"span_months_range must satisfy 1 <= min <= max <= {MAX_SPAN_MONTHS}"
        )
    for name in ("promotion_bias", "industry_switch_rate", "location_switch_rate"):
        v = getattr(cfg, name)
        if not (0.0 <= v <= 1.0):
            raise InvalidConfig(f"{name} must be in [0, 1]")


# Initial role mix for synthetic careers, in percent.
_ROLE_START_WEIGHTS = ((RoleLevel.EMPLOYEE, 60), (RoleLevel.MANAGER, 85), (RoleLevel.DIRECTOR, 95))


def _synth_profile(cfg: SynthConfig, index: int) -> CareerProfile:
    rng = stream(cfg.seed, index)
    lo, hi = cfg.span_months_range
    span = lo + rng.below(hi - lo + 1)

    draw = rng.below(100)
    role = RoleLevel.EXECUTIVE
    for level, threshold in _ROLE_START_WEIGHTS:
        if draw < threshold:
            role = level
            break
    industry = INDUSTRIES[rng.below(len(INDUSTRIES))]
    location = LOCATIONS[rng.below(len(LOCATIONS))]

    positions: list[PositionRecord] = []
    t = 0
    while t < span:
        remaining = span - t
        duration = min(remaining, 12 + rng.below(73))  # 12..84 months
        if remaining - duration < 12:
            duration = remaining  # absorb short tails
        positions.append(PositionRecord(role, industry, location, t, duration))
        t += duration
        if t >= span:
            break
        # occasional employment gap
        if rng.chance(0.1):
            gap = 1 + rng.below(6)
            if span - (t + gap) >= 12:
                t += gap
        # Markov step: promotion_bias weights upward moves
        if rng.chance(cfg.promotion_bias):
            if role.rank < len(ROLE_ORDER) - 1:
                role = ROLE_ORDER[role.rank + 1]
        elif rng.chance(0.3) and role.rank > 0:
            role = ROLE_ORDER[role.rank - 1]
        if rng.chance(cfg.industry_switch_rate):
            industry = INDUSTRIES[(INDUSTRIES.index(industry) + 1 + rng.below(len(INDUSTRIES) - 1)) % len(INDUSTRIES)]
        if rng.chance(cfg.location_switch_rate):
            location = LOCATIONS[(LOCATIONS.index(location) + 1 + rng.below(len(LOCATIONS) - 1)) % len(LOCATIONS)]
    return CareerProfile(f"synth-{index:06d}", tuple(positions))


def generate_synthetic(cfg: SynthConfig) -> ProfileSet:
    """Deterministic synthetic corpus: a pure function of the config.

    Each profile draws from its own SplitMix64 stream keyed by
    (seed, profile_index), so output is bit-identical across runs and
    platforms and independent of generation order.
    """
    validate_synth_config(cfg)
    profiles = [_synth_profile(cfg, i) for i in range(cfg.n_profiles)]
    return ProfileSet(tuple(profiles), frozenset(INDUSTRIES), frozenset(LOCATIONS))


@dataclass(frozen=True, slots=True)
class CorpusStats:
    profile_count: int
    position_count: int
    role_histogram: dict[str, int]
    industry_histogram: dict[str, int]
    location_histogram: dict[str, int]
    span_min_months: int
    span_max_months: int
    span_mean_months: float

    def to_dict(self) -> dict:
        return {
            "profile_count": self.profile_count,
            "position_count": self.position_count,
            "role_histogram": dict(sorted(self.role_histogram.items())),
            "industry_histogram": dict(sorted(self.industry_histogram.items())),
            "location_histogram": dict(sorted(self.location_histogram.items())),
            "span_min_months": self.span_min_months,
            "span_max_months": self.span_max_months,
            "span_mean_months": self.span_mean_months,
        }


def corpus_stats(profile_set: ProfileSet) -> CorpusStats:
    roles: dict[str, int] = {}
    industries: dict[str, int] = {}
    locations: dict[str, int] = {}
    spans: list[int] = []
    position_count = 0
    for p in profile_set.profiles:
        spans.append(p.total_span_months)
        for pos in p.positions:
            position_count += 1
            roles[pos.role_level.value] = roles.get(pos.role_level.value, 0) + 1
            industries[pos.industry] = industries.get(pos.industry, 0) + 1
            locations[pos.location] = locations.get(pos.location, 0) + 1
    return CorpusStats(
        profile_count=len(profile_set.profiles),
        position_count=position_count,
        role_histogram=roles,
        industry_histogram=industries,
        location_histogram=locations,
        span_min_months=min(spans),
        span_max_months=max(spans),
        span_mean_months=round(sum(spans) / len(spans), 2),
    )


def load_fixture_a() -> ProfileSet:
    """The four-profile reference corpus shipped with the package."""
    data = resources.files("xrca.data").joinpath("fixture_a.jsonl").read_bytes()
    return parse_profiles(data, "jsonl")
