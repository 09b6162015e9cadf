"""Run-time settings and the key-value config file that overrides them."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ParseError, ValidationError

MUSIC_MID = "/m/04rlf"


@dataclass(frozen=True)
class Settings:
    frame_dur: float = 0.96
    # a frame is positive if the class fills >= fill_fraction of the frame ...
    fill_fraction: float = 0.5
    # ... or holds >= label_fraction of the class's total labelled time in the clip
    label_fraction: float = 0.5
    clip_dur: float = 10.0
    auc_clamp_eps: float = 1e-6
    negatives: str = "balanced"
    music_id: str = MUSIC_MID

    def __post_init__(self):
        if self.frame_dur <= 0:
            raise ValidationError(f"frame_dur must be > 0, got {self.frame_dur}")
        if self.clip_dur <= 0:
            raise ValidationError(f"clip_dur must be > 0, got {self.clip_dur}")
        for name in ("fill_fraction", "label_fraction"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValidationError(f"{name} must be in (0, 1], got {value}")
        if not 0.0 < self.auc_clamp_eps < 0.5:
            raise ValidationError(f"auc_clamp_eps must be in (0, 0.5), got {self.auc_clamp_eps}")
        if self.negatives not in ("balanced", "pooled"):
            raise ValidationError(f"negatives must be 'balanced' or 'pooled', got {self.negatives!r}")


def parse_config(text: str, source=None) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Values are coerced to field types."""
    fields = {f.name: f.type for f in dataclasses.fields(Settings)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            key, sep, value = line.partition(":")
        key, value = key.strip(), value.strip().strip('"').strip("'")
        if not sep or not key:
            raise ParseError(f"expected 'key = value', got {raw!r}", line=lineno, source=source)
        if key not in fields:
            raise ParseError(f"unknown config key {key!r}", line=lineno, source=source)
        if fields[key] == "float":
            try:
                out[key] = float(value)
            except ValueError:
                raise ParseError(f"{key} expects a number, got {value!r}", line=lineno, source=source) from None
        else:
            out[key] = value
    return out


def load_settings(path: str | Path | None = None, **overrides) -> Settings:
    values = {}
    if path is not None:
        path = Path(path)
        values.update(parse_config(path.read_text(encoding="utf-8"), source=path))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return Settings(**values)
