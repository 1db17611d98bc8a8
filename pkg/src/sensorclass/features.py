"""Feature extraction: windowed statistics summarized into fixed vectors.

The discriminative signal lives in how a sensor's windowed behaviour is
distributed over days, not in any single reading. For each trace we take
the per-window median and population variance, then summarize each of the
two resulting vectors with four order statistics. Eight numbers total:

    index 0  min  of window medians        "min_wmed"
    index 1  max  of window medians        "max_wmed"
    index 2  median of window medians      "med_wmed"
    index 3  variance of window medians    "var_wmed"
    index 4  min  of window variances      "min_wvar"
    index 5  max  of window variances      "max_wvar"
    index 6  median of window variances    "med_wvar"
    index 7  variance of window variances  "var_wvar"

The baseline scheme keeps only the whole-trace median and population
variance; it is deliberately blind to sample order, which is exactly what
the windowed scheme fixes. Subset schemas select rich8 entries by bitmask
(bit i selects index i) for feature-importance sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyMask
from .trace import SensorTrace, Window, _readonly, population_var, segment_windows, window_stats

RICH8 = "rich8"
BASELINE2 = "baseline2"

RICH8_NAMES: tuple[str, ...] = (
    "min_wmed", "max_wmed", "med_wmed", "var_wmed",
    "min_wvar", "max_wvar", "med_wvar", "var_wvar",
)
BASELINE2_NAMES: tuple[str, ...] = ("median", "variance")
FULL_MASK = 0xFF


def subset_schema(mask: int) -> str:
    """Schema string for a rich8 bitmask, e.g. 0x9a -> 'subset:9a'."""
    if not 0 < mask <= FULL_MASK:
        raise EmptyMask(f"subset mask must be in 1..255, got {mask}")
    return f"subset:{mask:02x}"


def parse_subset_mask(schema: str) -> int | None:
    """The mask of a subset schema, or None for rich8/baseline2."""
    if schema.startswith("subset:"):
        return int(schema.split(":", 1)[1], 16)
    return None


def mask_indices(mask: int) -> list[int]:
    if not 0 < mask <= FULL_MASK:
        raise EmptyMask(f"subset mask must be in 1..255, got {mask}")
    return [i for i in range(8) if mask >> i & 1]


def schema_length(schema: str) -> int:
    if schema == RICH8:
        return 8
    if schema == BASELINE2:
        return 2
    mask = parse_subset_mask(schema)
    if mask is not None:
        return len(mask_indices(mask))
    raise DataError(f"unknown feature schema {schema!r}")


def feature_names(schema: str) -> list[str]:
    """Human-readable names of the schema's entries, in vector order."""
    if schema == RICH8:
        return list(RICH8_NAMES)
    if schema == BASELINE2:
        return list(BASELINE2_NAMES)
    mask = parse_subset_mask(schema)
    if mask is not None:
        return [RICH8_NAMES[i] for i in mask_indices(mask)]
    raise DataError(f"unknown feature schema {schema!r}")


@dataclass(frozen=True, eq=False)
class MedVarVectors:
    """Per-window medians and variances, one entry per non-empty window."""

    med: np.ndarray
    var: np.ndarray
    window_len: float

    def __post_init__(self):
        object.__setattr__(self, "med", _readonly(self.med))
        object.__setattr__(self, "var", _readonly(self.var))
        if len(self.med) != len(self.var) or len(self.med) == 0:
            raise DataError("windowed median/variance vectors must be non-empty and aligned")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """A feature vector plus the schema that gives its entries meaning."""

    values: np.ndarray = field(repr=False)
    schema: str

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))
        expected = schema_length(self.schema)
        if len(self.values) != expected:
            raise DataError(
                f"schema {self.schema!r} expects {expected} entries, got {len(self.values)}"
            )
        if not np.isfinite(self.values).all():
            raise DataError(f"feature vector for schema {self.schema!r} has non-finite entries")

    def __len__(self) -> int:
        return len(self.values)


def extract_med_var(trace: SensorTrace, window_len: float) -> MedVarVectors:
    """Windowed median/variance vectors for a trace.

    Deterministic, and independent of a constant shift of all timestamps
    (windows are anchored at the first timestamp, not at an epoch).
    Raises NoWindows when the trace is shorter than one window.
    """
    stats = [window_stats(w) for w in segment_windows(trace, window_len)]
    med = np.array([m for m, _ in stats])
    var = np.array([v for _, v in stats])
    return MedVarVectors(med, var, float(window_len))


def summarize(mv: MedVarVectors) -> FeatureVector:
    """Collapse windowed vectors into the 8-entry rich feature vector."""
    med, var = mv.med, mv.var
    values = np.array([
        np.min(med), np.max(med), np.median(med), population_var(med),
        np.min(var), np.max(var), np.median(var), population_var(var),
    ])
    return FeatureVector(values, RICH8)


def extract_rich(trace: SensorTrace, window_len: float) -> FeatureVector:
    """extract_med_var followed by summarize."""
    return summarize(extract_med_var(trace, window_len))


def extract_baseline(trace: SensorTrace) -> FeatureVector:
    """Whole-trace median and population variance, ignoring windows."""
    v = trace.values
    return FeatureVector(np.array([np.median(v), population_var(v)]), BASELINE2)


def project(fv: FeatureVector, mask: int) -> FeatureVector:
    """Select rich8 entries by bitmask, preserving index order."""
    if fv.schema != RICH8:
        raise DataError(f"can only project rich8 vectors, got schema {fv.schema!r}")
    idx = mask_indices(mask)  # raises EmptyMask for mask 0
    return FeatureVector(fv.values[idx], subset_schema(mask))


def extract(trace: SensorTrace, window_len: float, schema: str) -> FeatureVector:
    """Extract features under any schema name."""
    if schema == RICH8:
        return extract_rich(trace, window_len)
    if schema == BASELINE2:
        return extract_baseline(trace)
    mask = parse_subset_mask(schema)
    if mask is not None:
        return project(extract_rich(trace, window_len), mask)
    raise DataError(f"unknown feature schema {schema!r}")
