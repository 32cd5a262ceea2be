"""Experiment configuration and run manifests for the command-line front end."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .models import EntireFunctionModel, builtin_model, load_model

SCHEMA_VERSION = 1
PRECISIONS = (53, 106, 256, 512)
THEOREMS = ("main", "newman-rivlin", "esv")
FORMATS = ("csv", "json")


def parse_complex(text: str) -> complex:
    """'-1', '2i', '-1+0.5i', '1-2j' -> complex."""
    t = text.strip().replace(" ", "").replace("i", "j")
    t = re.sub(r"(?<![0-9.])j", "1j", t)
    try:
        return complex(t)
    except ValueError as exc:
        raise ConfigError(f"cannot parse {text!r} as a complex number") from exc


def parse_int_grid(text: str) -> tuple:
    """'64,256,1024' or '1..50' (inclusive) or a mix like '4..6,10'."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                a, b = part.split("..")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
        except ValueError as exc:
            raise ConfigError(f"bad integer grid {text!r}") from exc
    return tuple(out)


def parse_rect(text: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ConfigError(f"bad rectangle {text!r}; expected re_min:re_max:im_min:im_max") from exc
    if len(vals) != 4 or vals[0] > vals[1] or vals[2] > vals[3]:
        raise ConfigError(f"bad rectangle {text!r}; expected re_min:re_max:im_min:im_max")
    return vals


@dataclass
class ExperimentConfig:
    model: str = "exp"
    lam: float | None = None
    n_grid: tuple = (64,)
    w_points: tuple = ()  # explicit window points
    w_rect: tuple | None = None  # (re_min, re_max, im_min, im_max)
    w_resolution: int = 21
    epsilon: float = 0.1
    rtol: float = 1e-10
    max_prec: int = 512
    out_dir: str = "nrlab_out"
    fmt: str = "csv"
    theorem: str = "main"
    scaling: str = "by_n"
    overlay: tuple = ()
    window: float | None = None
    lemmas: tuple = ()
    checks: tuple = ()
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n_grid = tuple(int(n) for n in self.n_grid)
        self.w_points = tuple(complex(w) for w in self.w_points)
        if self.w_rect is not None:
            self.w_rect = tuple(float(v) for v in self.w_rect)
        self.overlay = tuple(self.overlay)
        self.lemmas = tuple(self.lemmas)
        self.checks = tuple(self.checks)

    def validate(self) -> "ExperimentConfig":
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n grid must be nonempty with positive entries")
        if self.w_rect is not None and self.w_resolution < 1:
            raise ConfigError("w resolution must be positive")
        if not (self.rtol > 0 and math.isfinite(self.rtol)):
            raise ConfigError("tolerances must be positive")
        if self.max_prec not in PRECISIONS:
            raise ConfigError(f"precision ceiling must be one of {PRECISIONS}")
        if self.fmt not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}")
        if self.theorem not in THEOREMS:
            raise ConfigError(f"theorem must be one of {THEOREMS}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def w_grid(self) -> tuple:
        pts = list(self.w_points)
        if self.w_rect is not None:
            a, b, c, d = self.w_rect
            k = self.w_resolution
            xs = np.linspace(a, b, k) if k > 1 else np.array([a])
            ys = np.linspace(c, d, k) if k > 1 else np.array([c])
            pts.extend(complex(x, y) for y in ys for x in xs)
        if not pts:
            raise ConfigError("w grid is empty; pass --w or --w-rect")
        return tuple(pts)

    def build_model(self) -> EntireFunctionModel:
        name = self.model
        try:
            if name.endswith(".json"):
                return load_model(name)
            if name in ("ml", "mittag_leffler"):
                return builtin_model(name, self.lam)
            return builtin_model(name)
        except (ValueError, OSError) as exc:
            raise ConfigError(str(exc)) from exc

    # --- serialization ---

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["w_points"] = [[w.real, w.imag] for w in self.w_points]
        for k in ("n_grid", "overlay", "lemmas", "checks"):
            d[k] = list(d[k])
        d["w_rect"] = list(self.w_rect) if self.w_rect is not None else None
        d["schema"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d.pop("schema", None)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "w_points" in d:
            d["w_points"] = [complex(*w) if isinstance(w, (list, tuple)) else parse_complex(str(w))
                             for w in d["w_points"]]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except (json.JSONDecodeError, TypeError) as exc:
            raise ConfigError(f"bad config: {exc}") from exc


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    files: dict = field(default_factory=dict)  # name -> sha256
    stages: dict = field(default_factory=dict)  # name -> seconds
    version: str = __version__
    schema: int = SCHEMA_VERSION

    def add_file(self, path: Path, root: Path):
        self.files[str(Path(path).relative_to(root))] = sha256_file(path)

    def write(self, root: Path) -> Path:
        p = Path(root) / "manifest.json"
        p.write_text(json.dumps(dataclasses.asdict(self), indent=1, sort_keys=True) + "\n")
        return p

    def verify(self, root: Path) -> bool:
        return all(sha256_file(Path(root) / k) == v for k, v in self.files.items())
