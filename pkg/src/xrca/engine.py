"""Cohort selection and horizon-bucketed transition aggregation.

Given a questionnaire (current role level, years of experience, map
kind), the engine finds the cohort of profiles with comparable starting
characteristics, snapshots the chosen attribute at the anchor and at
each horizon offset, and counts transitions between consecutive
snapshots. The result is a FlowGraph: the semantic Sankey.

Two implementations share one contract: ``aggregate_flows`` runs on a
dictionary-coded columnar index (the fast path), ``brute_force_flows``
is a direct nested scan over profile objects kept deliberately free of
the index machinery so it can serve as an equivalence oracle.

Snapshot semantics are half-open: a position occupies
[start, start + duration); months inside an employment gap resolve to
the most recent prior position.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import CareerProfile, ProfileSet, RoleLevel

# Profile spans are capped at 600 months, so a month offset fits in 10
# bits and (profile_ordinal, month) packs into one sortable int64 key.
_MONTH_BITS = 10
_MONTH_CAP = 1 << _MONTH_BITS
_NO_MATCH = np.int64(1) << 62


class MapKind(enum.Enum):
    ROLE_EVOLUTION = "RoleEvolution"
    INDUSTRY_SHIFT = "IndustryShift"
    LOCATION_SHIFT = "LocationShift"

    @classmethod
    def from_name(cls, name: str) -> "MapKind":
        for kind in cls:
            if kind.value == name:
                return kind
        raise ValueError(f"unknown map kind: {name!r}")


DEFAULT_HORIZONS = (2, 5, 10)
DEFAULT_TOLERANCE_YEARS = 2
MAX_YEARS_EXPERIENCE = 50
MAX_HORIZON_YEARS = 40


class QuestionnaireError(ValueError):
    """A questionnaire field failed validation; carries the field name."""

    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(f"{field_name}: {message}")
        self.field = field_name
        self.message = message


class EmptyCohort(Exception):
    """No profile matches the questionnaire."""


@dataclass(frozen=True, slots=True)
class Questionnaire:
    role_level: RoleLevel
    years_experience: int
    map_kind: MapKind
    industry_filter: str | None = None
    horizons_years: tuple[int, ...] = DEFAULT_HORIZONS
    experience_tolerance_years: int = DEFAULT_TOLERANCE_YEARS

    def validate(self) -> None:
        if self.years_experience < 0 or self.years_experience > MAX_YEARS_EXPERIENCE:
            raise QuestionnaireError(
                "years_experience", f"must be between 0 and {MAX_YEARS_EXPERIENCE}"
            )
        hz = self.horizons_years
        if not hz:
            raise QuestionnaireError("horizons_years", "must not be empty")
        if any(h <= 0 for h in hz):
            raise QuestionnaireError("horizons_years", "horizons must be positive")
        if any(b <= a for a, b in zip(hz, hz[1:])):
            raise QuestionnaireError("horizons_years", "horizons must be strictly increasing")
        if hz[-1] > MAX_HORIZON_YEARS:
            raise QuestionnaireError("horizons_years", f"max horizon is {MAX_HORIZON_YEARS} years")
        if self.years_experience + hz[-1] > 50:
            raise QuestionnaireError(
                "horizons_years", "years_experience plus max horizon must not exceed 50"
            )
        if self.experience_tolerance_years < 0:
            raise QuestionnaireError("experience_tolerance_years", "must be >= 0")
        if self.industry_filter is not None and not self.industry_filter:
            raise QuestionnaireError("industry_filter", "must be a non-empty string when set")

    def column_labels(self) -> tuple[str, ...]:
        return ("start",) + tuple(f"+{h}y" for h in self.horizons_years)


def questionnaire_from_dict(obj: dict) -> Questionnaire:
    """Parse a questionnaire document, normalizing defaults.

    Raises QuestionnaireError naming the offending field.
    """
    if not isinstance(obj, dict):
        raise QuestionnaireError("body", "questionnaire must be a JSON object")

    def _int(name: str, value, required: bool = True):
        if value is None:
            if required:
                raise QuestionnaireError(name, "field is required")
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise QuestionnaireError(name, "must be an integer")
        return value

    role_raw = obj.get("role_level")
    if not isinstance(role_raw, str):
        raise QuestionnaireError("role_level", "field is required and must be a string")
    try:
        role = RoleLevel.from_name(role_raw)
    except ValueError:
        raise QuestionnaireError(
            "role_level", f"must be one of {[r.value for r in RoleLevel]}"
        ) from None

    kind_raw = obj.get("map_kind")
    if not isinstance(kind_raw, str):
        raise QuestionnaireError("map_kind", "field is required and must be a string")
    try:
        kind = MapKind.from_name(kind_raw)
    except ValueError:
        raise QuestionnaireError(
            "map_kind", f"must be one of {[k.value for k in MapKind]}"
        ) from None

    years = _int("years_experience", obj.get("years_experience"))

    horizons_raw = obj.get("horizons_years")
    if horizons_raw is None:
        horizons = DEFAULT_HORIZONS
    else:
        if not isinstance(horizons_raw, list) or not all(
            isinstance(h, int) and not isinstance(h, bool) for h in horizons_raw
        ):
            raise QuestionnaireError("horizons_years", "must be a list of integers")
        horizons = tuple(horizons_raw)

    tolerance = _int(
        "experience_tolerance_years", obj.get("experience_tolerance_years"), required=False
    )
    if tolerance is None:
        tolerance = DEFAULT_TOLERANCE_YEARS

    industry_filter = obj.get("industry_filter")
    if industry_filter is not None and not isinstance(industry_filter, str):
        raise QuestionnaireError("industry_filter", "must be a string or null")

    q = Questionnaire(
        role_level=role,
        years_experience=years,
        map_kind=kind,
        industry_filter=industry_filter,
        horizons_years=horizons,
        experience_tolerance_years=tolerance,
    )
    q.validate()
    return q


def questionnaire_to_dict(q: Questionnaire) -> dict:
    return {
        "role_level": q.role_level.value,
        "years_experience": q.years_experience,
        "map_kind": q.map_kind.value,
        "industry_filter": q.industry_filter,
        "horizons_years": list(q.horizons_years),
        "experience_tolerance_years": q.experience_tolerance_years,
    }


@dataclass(frozen=True, slots=True)
class Cohort:
    members: tuple[tuple[str, int], ...]  # (profile_id, anchor_month)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, slots=True)
class FlowNode:
    col: int
    value: str
    count: int


@dataclass(frozen=True, slots=True)
class FlowEdge:
    source: int  # index into FlowGraph.nodes
    target: int
    count: int


@dataclass(frozen=True, slots=True)
class FlowGraph:
    columns: tuple[str, ...]
    nodes: tuple[FlowNode, ...]
    flows: tuple[FlowEdge, ...]
    cohort_size: int


def flowgraph_to_json_bytes(g: FlowGraph) -> bytes:
    """Canonical byte serialization; equal graphs serialize identically."""
    obj = {
        "columns": list(g.columns),
        "nodes": [{"col": n.col, "value": n.value, "count": n.count} for n in g.nodes],
        "flows": [{"from": f.source, "to": f.target, "count": f.count} for f in g.flows],
        "cohort": g.cohort_size,
    }
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=True).encode("utf-8")


def flowgraph_from_json(data: bytes | str | dict) -> FlowGraph:
    if isinstance(data, (bytes, str)):
        obj = json.loads(data)
    else:
        obj = data
    return FlowGraph(
        columns=tuple(obj["columns"]),
        nodes=tuple(FlowNode(n["col"], n["value"], n["count"]) for n in obj["nodes"]),
        flows=tuple(FlowEdge(f["from"], f["to"], f["count"]) for f in obj["flows"]),
        cohort_size=obj["cohort"],
    )


def validate_flowgraph(g: FlowGraph) -> list[str]:
    """Check every FlowGraph invariant; returns violations."""
    out: list[str] = []
    ncols = len(g.columns)
    for i, n in enumerate(g.nodes):
        if n.count <= 0:
            out.append(f"node {i}: count must be positive")
        if not (0 <= n.col < ncols):
            out.append(f"node {i}: column {n.col} out of range")
    inbound = [0] * len(g.nodes)
    outbound = [0] * len(g.nodes)
    for i, f in enumerate(g.flows):
        if f.count <= 0:
            out.append(f"flow {i}: count must be positive")
        src, dst = g.nodes[f.source], g.nodes[f.target]
        if dst.col != src.col + 1:
            out.append(f"flow {i}: must connect adjacent columns")
        outbound[f.source] += f.count
        inbound[f.target] += f.count
    for i, n in enumerate(g.nodes):
        if n.col > 0 and inbound[i] != n.count:
            out.append(f"node {i}: inbound {inbound[i]} != count {n.count}")
        if n.col < ncols - 1 and outbound[i] != n.count:
            out.append(f"node {i}: outbound {outbound[i]} != count {n.count}")
    for c in range(ncols):
        mass = sum(n.count for n in g.nodes if n.col == c)
        if mass != g.cohort_size:
            out.append(f"column {c}: node counts sum to {mass}, expected {g.cohort_size}")
    # canonical ordering: nodes column-major, desc count then value
    order = [(n.col, -n.count, n.value) for n in g.nodes]
    if order != sorted(order):
        out.append("nodes are not in canonical order")
    flow_order = [(f.source, f.target) for f in g.flows]
    if flow_order != sorted(flow_order):
        out.append("flows are not in canonical order")
    return out


def attribute_at(profile: CareerProfile, month: int, dim: MapKind) -> str | None:
    """Attribute value active at a month (half-open position intervals).

    Gap months resolve to the most recent prior position; months before
    the first position or at/after the final end resolve to None.
    """
    if month < 0:
        raise ValueError("month must be >= 0")
    if month >= profile.positions[-1].end_offset_months:
        return None
    current = None
    for pos in profile.positions:
        if pos.start_offset_months <= month:
            current = pos
        else:
            break
    if current is None:
        return None
    if dim is MapKind.ROLE_EVOLUTION:
        return current.role_level.value
    if dim is MapKind.INDUSTRY_SHIFT:
        return current.industry
    return current.location


@dataclass(frozen=True)
class CareerIndex:
    """Immutable columnar arrangement of a ProfileSet.

    Positions are stored as parallel arrays grouped by profile and
    sorted by start month; attribute strings are dictionary-coded
    against lexicographically sorted vocabularies. Decoding is lossless.
    """

    profile_ids: tuple[str, ...]
    pos_offsets: np.ndarray  # int64 (n_profiles + 1,)
    pos_profile: np.ndarray  # int32, profile ordinal per position
    pos_start: np.ndarray  # int32
    pos_dur: np.ndarray  # int32
    pos_eff_end: np.ndarray  # int32: next start in profile, else last end
    pos_role: np.ndarray  # int32 codes
    pos_industry: np.ndarray
    pos_location: np.ndarray
    role_vocab: tuple[str, ...]
    industry_vocab: tuple[str, ...]
    location_vocab: tuple[str, ...]
    prof_last_end: np.ndarray  # int32 (n_profiles,)
    start_keys: np.ndarray  # int64: profile_ordinal << 10 | start
    # Per-role-code accelerators: row ids grouped by profile, their
    # start/effective-end columns pre-gathered, and per-profile segment
    # offsets into those rows (for segmented minimums).
    role_rows: tuple[np.ndarray, ...]
    role_start: tuple[np.ndarray, ...]
    role_eff_last: tuple[np.ndarray, ...]
    role_prof_offsets: tuple[np.ndarray, ...]
    role_prof_nonempty: tuple[np.ndarray, ...]

    @property
    def n_profiles(self) -> int:
        return len(self.profile_ids)

    @property
    def n_positions(self) -> int:
        return len(self.pos_start)

    def attr_codes(self, kind: MapKind) -> tuple[np.ndarray, tuple[str, ...]]:
        if kind is MapKind.ROLE_EVOLUTION:
            return self.pos_role, self.role_vocab
        if kind is MapKind.INDUSTRY_SHIFT:
            return self.pos_industry, self.industry_vocab
        return self.pos_location, self.location_vocab


def build_index(profile_set: ProfileSet) -> CareerIndex:
    profiles = profile_set.profiles
    n = len(profiles)
    total = sum(len(p.positions) for p in profiles)

    role_vocab = tuple(sorted({pos.role_level.value for p in profiles for pos in p.positions}))
    industry_vocab = tuple(sorted(profile_set.industry_vocab))
    location_vocab = tuple(sorted(profile_set.location_vocab))
    role_code = {v: i for i, v in enumerate(role_vocab)}
    industry_code = {v: i for i, v in enumerate(industry_vocab)}
    location_code = {v: i for i, v in enumerate(location_vocab)}

    pos_offsets = np.zeros(n + 1, dtype=np.int64)
    pos_profile = np.empty(total, dtype=np.int32)
    pos_start = np.empty(total, dtype=np.int32)
    pos_dur = np.empty(total, dtype=np.int32)
    pos_eff_end = np.empty(total, dtype=np.int32)
    pos_role = np.empty(total, dtype=np.int32)
    pos_industry = np.empty(total, dtype=np.int32)
    pos_location = np.empty(total, dtype=np.int32)
    prof_last_end = np.empty(n, dtype=np.int32)

    k = 0
    for i, p in enumerate(profiles):
        pos_offsets[i] = k
        last_end = p.positions[-1].end_offset_months
        prof_last_end[i] = last_end
        m = len(p.positions)
        for j, pos in enumerate(p.positions):
            pos_profile[k] = i
            pos_start[k] = pos.start_offset_months
            pos_dur[k] = pos.duration_months
            pos_eff_end[k] = (
                p.positions[j + 1].start_offset_months if j + 1 < m else last_end
            )
            pos_role[k] = role_code[pos.role_level.value]
            pos_industry[k] = industry_code[pos.industry]
            pos_location[k] = location_code[pos.location]
            k += 1
    pos_offsets[n] = k

    start_keys = (pos_profile.astype(np.int64) << _MONTH_BITS) | pos_start.astype(np.int64)

    start64 = pos_start.astype(np.int64)
    eff_last64 = pos_eff_end.astype(np.int64) - 1
    role_rows, role_start, role_eff_last, role_offsets, role_nonempty = [], [], [], [], []
    for code in range(len(role_vocab)):
        rows = np.flatnonzero(pos_role == code).astype(np.int64)
        offs = np.searchsorted(pos_profile[rows], np.arange(n + 1)).astype(np.int64)
        role_rows.append(rows)
        role_start.append(start64[rows])
        role_eff_last.append(eff_last64[rows])
        role_offsets.append(offs)
        role_nonempty.append(np.diff(offs) > 0)

    return CareerIndex(
        profile_ids=tuple(p.profile_id for p in profiles),
        pos_offsets=pos_offsets,
        pos_profile=pos_profile,
        pos_start=pos_start,
        pos_dur=pos_dur,
        pos_eff_end=pos_eff_end,
        pos_role=pos_role,
        pos_industry=pos_industry,
        pos_location=pos_location,
        role_vocab=role_vocab,
        industry_vocab=industry_vocab,
        location_vocab=location_vocab,
        prof_last_end=prof_last_end,
        start_keys=start_keys,
        role_rows=tuple(role_rows),
        role_start=tuple(role_start),
        role_eff_last=tuple(role_eff_last),
        role_prof_offsets=tuple(role_offsets),
        role_prof_nonempty=tuple(role_nonempty),
    )


def decode_index(ix: CareerIndex) -> ProfileSet:
    """Inverse of build_index (lossless round-trip)."""
    from .corpus import PositionRecord  # local to avoid polluting module top

    profiles = []
    for i, pid in enumerate(ix.profile_ids):
        lo, hi = int(ix.pos_offsets[i]), int(ix.pos_offsets[i + 1])
        positions = tuple(
            PositionRecord(
                RoleLevel.from_name(ix.role_vocab[ix.pos_role[k]]),
                ix.industry_vocab[ix.pos_industry[k]],
                ix.location_vocab[ix.pos_location[k]],
                int(ix.pos_start[k]),
                int(ix.pos_dur[k]),
            )
            for k in range(lo, hi)
        )
        profiles.append(CareerProfile(pid, positions))
    return ProfileSet(
        tuple(profiles), frozenset(ix.industry_vocab), frozenset(ix.location_vocab)
    )


def _select_members(ix: CareerIndex, q: Questionnaire) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized cohort selection.

    Returns (profile_ordinals, anchor_months), ordered by profile
    ordinal. A profile joins when its role matches the questionnaire's
    at the nearest anchor a' within the tolerance window (ties to the
    smaller a'), its history covers a' + max horizon, and the optional
    industry filter matches at a'.
    """
    q.validate()
    empty = np.empty(0, dtype=np.int64)
    try:
        role_code = ix.role_vocab.index(q.role_level.value)
    except ValueError:
        return empty, empty

    anchor = q.years_experience * 12
    tol = q.experience_tolerance_years * 12
    max_h = max(q.horizons_years) * 12

    # Work only on this role's position rows (pre-grouped by profile).
    s = ix.role_start[role_code]
    e1 = ix.role_eff_last[role_code]
    cand = np.minimum(np.maximum(anchor, s), e1)
    dist = np.abs(cand - anchor)
    key = np.where(
        dist <= tol,
        ((dist * _MONTH_CAP + cand) << 32) | ix.role_rows[role_code],
        _NO_MATCH,
    )
    key = np.append(key, _NO_MATCH)  # sentinel: offsets may point past the end
    best = np.minimum.reduceat(key, ix.role_prof_offsets[role_code][:-1])
    found = (best < _NO_MATCH) & ix.role_prof_nonempty[role_code]

    anchors = (best >> 32) % _MONTH_CAP
    rows = np.where(found, best & 0xFFFFFFFF, 0)

    selected = found & (ix.prof_last_end > anchors + max_h)
    if q.industry_filter is not None:
        try:
            fcode = ix.industry_vocab.index(q.industry_filter)
        except ValueError:
            return empty, empty
        selected &= ix.pos_industry[rows] == fcode

    ordinals = np.flatnonzero(selected)
    return ordinals, anchors[ordinals]


def select_cohort(ix: CareerIndex, q: Questionnaire) -> Cohort:
    ordinals, anchors = _select_members(ix, q)
    return Cohort(
        tuple((ix.profile_ids[i], int(a)) for i, a in zip(ordinals.tolist(), anchors.tolist()))
    )


def _build_flowgraph(
    columns: tuple[str, ...],
    column_values: list[dict[str, int]],
    pair_counts: list[dict[tuple[str, str], int]],
    cohort_size: int,
) -> FlowGraph:
    """Assemble a canonical FlowGraph from per-column value counts and
    per-gap transition counts (shared by both engine implementations)."""
    nodes: list[FlowNode] = []
    node_index: dict[tuple[int, str], int] = {}
    for c, counts in enumerate(column_values):
        for value in sorted(counts, key=lambda v: (-counts[v], v)):
            node_index[(c, value)] = len(nodes)
            nodes.append(FlowNode(c, value, counts[value]))
    flows: list[FlowEdge] = []
    for c, counts in enumerate(pair_counts):
        edges = [
            FlowEdge(node_index[(c, a)], node_index[(c + 1, b)], cnt)
            for (a, b), cnt in counts.items()
        ]
        edges.sort(key=lambda e: (e.source, e.target))
        flows.extend(edges)
    return FlowGraph(columns, tuple(nodes), tuple(flows), cohort_size)


def aggregate_flows(ix: CareerIndex, q: Questionnaire) -> FlowGraph:
    """Fast-path flow aggregation over the columnar index.

    Raises EmptyCohort when no profile matches.
    """
    ordinals, anchors = _select_members(ix, q)
    ncoh = len(ordinals)
    if ncoh == 0:
        raise EmptyCohort()

    offsets = np.array([0] + [h * 12 for h in q.horizons_years], dtype=np.int64)
    months = anchors[:, None] + offsets[None, :]
    qkeys = (ordinals[:, None] << _MONTH_BITS) | months
    rows = np.searchsorted(ix.start_keys, qkeys.ravel(), side="right") - 1
    attr, vocab = ix.attr_codes(q.map_kind)
    codes = attr[rows].reshape(ncoh, len(offsets))

    nv = len(vocab)
    column_values: list[dict[str, int]] = []
    for c in range(codes.shape[1]):
        counts = np.bincount(codes[:, c], minlength=nv)
        column_values.append(
            {vocab[v]: int(counts[v]) for v in np.flatnonzero(counts)}
        )
    pair_counts: list[dict[tuple[str, str], int]] = []
    for c in range(codes.shape[1] - 1):
        pair = codes[:, c].astype(np.int64) * nv + codes[:, c + 1]
        counts = np.bincount(pair, minlength=nv * nv)
        pair_counts.append(
            {
                (vocab[int(k) // nv], vocab[int(k) % nv]): int(counts[k])
                for k in np.flatnonzero(counts)
            }
        )
    return _build_flowgraph(q.column_labels(), column_values, pair_counts, ncoh)


def brute_force_flows(profile_set: ProfileSet, q: Questionnaire) -> FlowGraph:
    """Reference implementation: direct nested scan over profiles.

    Same contract as aggregate_flows; no index, no dictionary coding,
    no caching. Used as the equivalence oracle in tests.
    """
    q.validate()
    anchor = q.years_experience * 12
    tol = q.experience_tolerance_years * 12
    max_h_months = max(q.horizons_years) * 12
    snapshot_offsets = [0] + [h * 12 for h in q.horizons_years]

    members: list[tuple[CareerProfile, int]] = []
    for profile in profile_set.profiles:
        best: tuple[int, int] | None = None  # (distance, candidate anchor)
        n = len(profile.positions)
        for j, pos in enumerate(profile.positions):
            if pos.role_level is not q.role_level:
                continue
            eff_end = (
                profile.positions[j + 1].start_offset_months
                if j + 1 < n
                else profile.positions[-1].end_offset_months
            )
            cand = min(max(anchor, pos.start_offset_months), eff_end - 1)
            d = abs(cand - anchor)
            if d <= tol and (best is None or (d, cand) < best):
                best = (d, cand)
        if best is None:
            continue
        a_prime = best[1]
        if attribute_at(profile, a_prime + max_h_months, MapKind.ROLE_EVOLUTION) is None:
            continue
        if q.industry_filter is not None:
            if attribute_at(profile, a_prime, MapKind.INDUSTRY_SHIFT) != q.industry_filter:
                continue
        members.append((profile, a_prime))

    if not members:
        raise EmptyCohort()

    ncols = len(snapshot_offsets)
    column_values: list[dict[str, int]] = [{} for _ in range(ncols)]
    pair_counts: list[dict[tuple[str, str], int]] = [{} for _ in range(ncols - 1)]
    for profile, a_prime in members:
        values = [
            attribute_at(profile, a_prime + off, q.map_kind) for off in snapshot_offsets
        ]
        for c, v in enumerate(values):
            column_values[c][v] = column_values[c].get(v, 0) + 1
        for c in range(ncols - 1):
            key = (values[c], values[c + 1])
            pair_counts[c][key] = pair_counts[c].get(key, 0) + 1
    return _build_flowgraph(q.column_labels(), column_values, pair_counts, len(members))
