"""Synthetic hint corpora standing in for real remote-sensing embeddings.

Each scene direction is its class mean plus scene-level noise, and each crop
adds crop-level noise on top. Part of the scene-level noise can be shared by
every scene of one site, pair or AOI, which gives the location structure that
makes cross-site splits non-trivial. Crop noise is ``crop_fraction`` of the
scene noise, so ``noise=0`` collapses every class to a single point. All noise
is isotropic with the stated expected norm, so ``noise`` means the same thing
at any dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..core import HAZARD_GROUPS, HintRecord, TaskKind, ValidationError, validate_and_normalize
from .prng import SplitMix64

TASK_CLASSES: dict[TaskKind, tuple[str, ...]] = {
    TaskKind.HAZARD: HAZARD_GROUPS,
    TaskKind.CHANGE: ("before", "after"),
    TaskKind.CLOUD: ("clear", "cloudy"),
    TaskKind.BUILDINGS: ("0", "1+"),
}


@dataclass(frozen=True)
class SynthSpec:
    dim: int = 128
    noise: float = 4.0
    crop_fraction: float = 0.25
    site_share: float = 0.8
    quadrants: int = 4
    hazard_scenes_per_class: int = 9
    change_pairs: int = 8
    cloud_sites: int = 15
    cloud_scenes_per_site: int = 5
    building_aois: int = 5
    building_tiles_per_aoi: int = 40
    # optional explicit class means: {task: {label: vector}}; random directions otherwise
    class_means: Mapping[str, Mapping[str, Sequence[float]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise ValidationError("bad-spec", "synthetic dim must be positive", field="dim")
        if self.noise < 0 or self.crop_fraction < 0:
            raise ValidationError("bad-spec", "noise must be >= 0", field="noise")
        if not 0.0 <= self.site_share <= 1.0:
            raise ValidationError("bad-spec", "site_share must lie in [0, 1]", field="site_share")
        if not 1 <= self.quadrants <= 4:
            raise ValidationError("bad-spec", "quadrants must be 1..4", field="quadrants")
        sizes = (
            self.hazard_scenes_per_class,
            self.change_pairs,
            self.cloud_sites,
            self.cloud_scenes_per_site,
            self.building_aois,
            self.building_tiles_per_aoi,
        )
        if any(n < 0 for n in sizes):
            raise ValidationError("bad-spec", "corpus sizes must be >= 0")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "SynthSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known - {"seed"}
        if unknown:
            raise ValidationError("bad-config", f"unknown synth keys: {sorted(unknown)}", field="synth")
        return cls(**{k: v for k, v in data.items() if k in known})


def _noise(rng: SplitMix64, dim: int, scale: float) -> np.ndarray:
    if scale == 0.0:
        return np.zeros(dim)
    return rng.normal_array(dim) * (scale / math.sqrt(dim))


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


class _Generator:
    def __init__(self, spec: SynthSpec, seed: int):
        self.spec = spec
        self.seed = seed

    def class_mean(self, task: TaskKind, label: str) -> np.ndarray:
        given = self.spec.class_means.get(task.value, {})
        if label in given:
            return _unit(np.asarray(given[label], dtype=np.float64))
        rng = SplitMix64(self.seed, "class-mean", task.value, label)
        return _unit(rng.normal_array(self.spec.dim))

    def scene_direction(self, task: TaskKind, label: str, unit: str, scene: str) -> np.ndarray:
        spec = self.spec
        shared = _noise(SplitMix64(self.seed, "site", task.value, unit), spec.dim, spec.noise)
        own = _noise(SplitMix64(self.seed, "scene", task.value, label, scene), spec.dim, spec.noise)
        mix = math.sqrt(spec.site_share) * shared + math.sqrt(1.0 - spec.site_share) * own
        return _unit(self.class_mean(task, label) + mix)

    def crop(self, direction: np.ndarray, task: TaskKind, label: str, scene: str, quadrant: int) -> np.ndarray:
        rng = SplitMix64(self.seed, "crop", task.value, label, scene, quadrant)
        return direction + _noise(rng, self.spec.dim, self.spec.noise * self.spec.crop_fraction)

    def record(self, rec_id: str, task: TaskKind, label: str, vec: np.ndarray, meta: dict) -> HintRecord:
        return HintRecord(id=rec_id, task=task, label=label, embedding=validate_and_normalize(vec), meta=meta)

    def hazard(self) -> list[HintRecord]:
        out = []
        task = TaskKind.HAZARD
        for group in TASK_CLASSES[task]:
            for s in range(self.spec.hazard_scenes_per_class):
                scene = f"{group[:2]}{s:03d}"
                direction = self.scene_direction(task, group, scene, scene)
                for q in range(self.spec.quadrants):
                    meta = {"scene_id": scene, "group": group, "quadrant": q}
                    vec = self.crop(direction, task, group, scene, q)
                    out.append(self.record(f"hz-{scene}-q{q}", task, group, vec, meta))
        return out

    def change(self) -> list[HintRecord]:
        out = []
        task = TaskKind.CHANGE
        for p in range(self.spec.change_pairs):
            pair = f"p{p:03d}"
            for tag in ("before", "after"):
                direction = self.scene_direction(task, tag, pair, f"{pair}-{tag}")
                for q in range(self.spec.quadrants):
                    meta = {"pair_id": pair, "time_tag": tag, "quadrant": q}
                    vec = self.crop(direction, task, tag, f"{pair}-{tag}", q)
                    out.append(self.record(f"ch-{pair}-{tag[0]}-q{q}", task, tag, vec, meta))
        return out

    def cloud(self) -> list[HintRecord]:
        out = []
        task = TaskKind.CLOUD
        for si in range(self.spec.cloud_sites):
            site = f"s{si:03d}"
            for sc in range(self.spec.cloud_scenes_per_site):
                scene = f"{site}-{sc:02d}"
                label = "clear" if (si + sc) % 2 == 0 else "cloudy"
                rng = SplitMix64(self.seed, "cover", scene)
                cover = rng.uniform(0.0, 10.0) if label == "clear" else rng.uniform(20.0, 100.0)
                cover = round(cover, 1)
                direction = self.scene_direction(task, label, site, scene)
                for q in range(self.spec.quadrants):
                    meta = {"site_id": site, "scene_id": scene, "cloud_cover_percent": cover, "quadrant": q}
                    vec = self.crop(direction, task, label, scene, q)
                    out.append(self.record(f"cl-{scene}-q{q}", task, label, vec, meta))
        return out

    def buildings(self) -> list[HintRecord]:
        out = []
        task = TaskKind.BUILDINGS
        for a in range(self.spec.building_aois):
            aoi = f"aoi{a}"
            for t in range(self.spec.building_tiles_per_aoi):
                tile = f"{aoi}-t{t:03d}"
                label = "0" if t % 2 == 0 else "1+"
                count = 0 if label == "0" else 1 + SplitMix64(self.seed, "count", tile).randbelow(50)
                direction = self.scene_direction(task, label, aoi, tile)
                vec = self.crop(direction, task, label, tile, 0)
                meta = {"aoi_id": aoi, "building_count": count}
                out.append(self.record(f"bd-{tile}", task, label, vec, meta))
        return out


def synth_generate(spec: SynthSpec, seed: int, tasks: Sequence[TaskKind | str] | None = None) -> dict[TaskKind, list[HintRecord]]:
    """Build a corpus per task. Any record depends only on (spec, seed, its own coordinates)."""
    gen = _Generator(spec, seed)
    wanted = [TaskKind.parse(t) if not isinstance(t, TaskKind) else t for t in (tasks or list(TaskKind))]
    builders = {
        TaskKind.HAZARD: gen.hazard,
        TaskKind.CHANGE: gen.change,
        TaskKind.CLOUD: gen.cloud,
        TaskKind.BUILDINGS: gen.buildings,
    }
    corpus = {t: builders[t]() for t in wanted}
    for t, records in corpus.items():
        if not records:
            raise ValidationError("degenerate-spec", f"synthetic spec yields no {t.value} records")
    return corpus
