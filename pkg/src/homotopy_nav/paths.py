"""Time-parameterized polylines shared by the flow, transform and topology modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def arclength_times(samples: np.ndarray) -> np.ndarray:
    """Cumulative arc length normalized to [0, 1]."""
    seg = np.linalg.norm(np.diff(samples, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] <= 0.0:
        return np.linspace(0.0, 1.0, len(samples))
    return cum / cum[-1]


@dataclass(frozen=True, eq=False)
class PathPolyline:
    samples: np.ndarray
    times: np.ndarray
    converged: bool = True
    world_tag: str = "point"

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).reshape(-1, 2)
        times = np.asarray(self.times, dtype=float)
        if len(samples) < 2:
            raise ValueError("a path needs at least two samples")
        if times.shape != (len(samples),):
            raise ValueError("one time stamp per sample required")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "times", times)

    @classmethod
    def from_samples(cls, samples, converged: bool = True, world_tag: str = "point") -> "PathPolyline":
        """Build a path with arc-length times, dropping repeated consecutive samples."""
        samples = np.asarray(samples, dtype=float).reshape(-1, 2)
        keep = np.concatenate([[True], np.any(np.diff(samples, axis=0) != 0.0, axis=1)])
        samples = samples[keep]
        if len(samples) == 1:
            samples = np.vstack([samples, samples])
        return cls(samples, arclength_times(samples), converged, world_tag)

    @property
    def start(self) -> np.ndarray:
        return self.samples[0]

    @property
    def end(self) -> np.ndarray:
        return self.samples[-1]

    def __len__(self):
        return len(self.samples)

    def densified(self, factor: int = 2) -> "PathPolyline":
        """Insert ``factor - 1`` evenly spaced points inside every segment."""
        a, b = self.samples[:-1], self.samples[1:]
        u = np.arange(factor) / factor
        inner = (a[:, None, :] + u[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)
        samples = np.vstack([inner, self.samples[-1:]])
        ta, tb = self.times[:-1], self.times[1:]
        times = np.concatenate([(ta[:, None] + u[None, :] * (tb - ta)[:, None]).ravel(), self.times[-1:]])
        return PathPolyline(samples, times, self.converged, self.world_tag)
