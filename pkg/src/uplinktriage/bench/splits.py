"""Seeded hint/query splits that keep spatial units out of both sides.

hazard, cloud: one quadrant per scene is held out as the query.
change: one quadrant of each pair's after scene is the query; every other crop
of the pair (both times) stays a hint.
buildings: one whole AOI is held out (``seed mod n_aoi``); hint AOIs are
subsampled to at most ``max_tiles_per_aoi`` tiles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from ..core import HintRecord, QueryRecord, TaskKind, ValidationError, as_hint, as_query
from .prng import SplitMix64

MAX_TILES_PER_AOI = 30


@dataclass(frozen=True)
class SplitSpec:
    task: TaskKind
    seed: int
    hints: tuple[HintRecord, ...]
    queries: tuple[QueryRecord, ...]


def spatial_unit(record: HintRecord) -> tuple:
    """The scene a crop belongs to (or the AOI for buildings tiles)."""
    m = record.meta
    if record.task is TaskKind.HAZARD:
        return (m["scene_id"],)
    if record.task is TaskKind.CHANGE:
        return (m["pair_id"], m["time_tag"])
    if record.task is TaskKind.CLOUD:
        return (m["site_id"], m.get("scene_id", ""))
    return (m["aoi_id"],)


def _unit_name(unit: tuple) -> str:
    return "/".join(str(u) for u in unit)


def _group_scenes(records: Sequence[HintRecord]) -> dict[tuple, list[HintRecord]]:
    scenes: dict[tuple, list[HintRecord]] = {}
    for r in records:
        scenes.setdefault(spatial_unit(r), []).append(r)
    return scenes


def _pick_quadrant(seed: int, task: TaskKind, unit: tuple, crops: list[HintRecord]) -> int:
    quads = sorted({int(c.meta["quadrant"]) for c in crops})
    if len(quads) < 2:
        raise ValidationError(
            "too-few-quadrants", f"{task.value} scene {_unit_name(unit)} has {len(quads)} quadrant(s); need 2"
        )
    return quads[SplitMix64(seed, "holdout", task.value, _unit_name(unit)).randbelow(len(quads))]


def _leave_one_crop_out(
    records: Sequence[HintRecord], task: TaskKind, seed: int, *, include_normal_queries: bool
) -> tuple[list, list]:
    hints, queries = [], []
    for unit, crops in _group_scenes(records).items():
        held = _pick_quadrant(seed, task, unit, crops)
        for c in crops:
            if c.meta["quadrant"] != held:
                hints.append(as_hint(c))
            elif task is TaskKind.HAZARD and c.label == "normal" and not include_normal_queries:
                continue
            else:
                queries.append(as_query(c))
    return hints, queries


def _change_split(records: Sequence[HintRecord], seed: int) -> tuple[list, list]:
    pairs: dict[Hashable, list[HintRecord]] = {}
    for r in records:
        pairs.setdefault(r.meta["pair_id"], []).append(r)
    hints, queries = [], []
    for pair_id, crops in pairs.items():
        after = [c for c in crops if c.meta["time_tag"] == "after"]
        before = [c for c in crops if c.meta["time_tag"] == "before"]
        if not after or not before:
            raise ValidationError("incomplete-pair", f"change pair {pair_id} lacks a before or after scene")
        held = _pick_quadrant(seed, TaskKind.CHANGE, (pair_id, "after"), after)
        for c in crops:
            if c.meta["time_tag"] == "after" and c.meta["quadrant"] == held:
                queries.append(as_query(c))
            else:
                hints.append(as_hint(c))
    return hints, queries


def _aoi_split(records: Sequence[HintRecord], seed: int, max_tiles: int) -> tuple[list, list]:
    aois: dict[str, list[HintRecord]] = {}
    for r in records:
        aois.setdefault(str(r.meta["aoi_id"]), []).append(r)
    names = sorted(aois)
    if len(names) < 2:
        raise ValidationError("too-few-aois", f"buildings split needs >= 2 AOIs, got {len(names)}")
    held = names[seed % len(names)]
    hints = []
    for name in names:
        if name == held:
            continue
        tiles = aois[name]
        if len(tiles) > max_tiles:
            keep = SplitMix64(seed, "subsample", name).shuffle(list(range(len(tiles))))[:max_tiles]
            tiles = [tiles[i] for i in sorted(keep)]
        hints.extend(as_hint(t) for t in tiles)
    queries = [as_query(t) for t in aois[held]]
    return hints, queries


def make_splits(
    corpus: Sequence[HintRecord],
    task: TaskKind | str,
    seed: int,
    *,
    include_normal_queries: bool = True,
    max_tiles_per_aoi: int = MAX_TILES_PER_AOI,
) -> SplitSpec:
    task = TaskKind.parse(task) if not isinstance(task, TaskKind) else task
    records = [r for r in corpus if r.task is task]
    if not records:
        raise ValidationError("empty-corpus", f"corpus has no {task.value} records")
    if task is TaskKind.BUILDINGS:
        hints, queries = _aoi_split(records, seed, max_tiles_per_aoi)
    elif task is TaskKind.CHANGE:
        hints, queries = _change_split(records, seed)
    else:
        hints, queries = _leave_one_crop_out(records, task, seed, include_normal_queries=include_normal_queries)
    return SplitSpec(task, seed, tuple(hints), tuple(queries))


def leakage_report(split: SplitSpec) -> list[str]:
    """Every spatial unit found on both sides of the split (empty when clean)."""
    if split.task is TaskKind.BUILDINGS:
        hint_aois = {h.meta["aoi_id"] for h in split.hints}
        return sorted(f"aoi {a}" for a in hint_aois & {q.meta["aoi_id"] for q in split.queries})
    hint_keys = {(spatial_unit(h), h.meta["quadrant"]) for h in split.hints}
    overlaps = []
    for q in split.queries:
        key = (spatial_unit(q), q.meta["quadrant"])
        if key in hint_keys:
            overlaps.append(f"{_unit_name(key[0])} quadrant {key[1]}")
    return sorted(overlaps)
