"""Sample containers shared across modules."""

from dataclasses import dataclass

import numpy as np


@dataclass
class StereoBuffer:
    left: np.ndarray
    right: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.left = np.asarray(self.left, dtype=float)
        self.right = np.asarray(self.right, dtype=float)
        if self.left.shape != self.right.shape or self.left.ndim != 1:
            raise ValueError(
                f"channels must be equal-length 1-D arrays, got {self.left.shape} and {self.right.shape}"
            )
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be > 0")

    def __len__(self):
        return self.left.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate

    @property
    def data(self):
        """``(2, n)`` view-like stack of both channels."""
        return np.stack([self.left, self.right])

    @classmethod
    def from_array(cls, data, sample_rate):
        data = np.asarray(data, dtype=float)
        return cls(data[0], data[1], sample_rate)

    def padded(self, n):
        """Zero-pad (never truncate) to ``n`` samples."""
        extra = n - len(self)
        if extra <= 0:
            return self
        z = np.zeros(extra)
        return StereoBuffer(np.concatenate([self.left, z]), np.concatenate([self.right, z]), self.sample_rate)

    def swapped(self):
        return StereoBuffer(self.right, self.left, self.sample_rate)

    def scaled(self, k):
        return StereoBuffer(self.left * k, self.right * k, self.sample_rate)


@dataclass
class MonoClip:
    samples: np.ndarray
    sample_rate: float

    def __len__(self):
        return len(self.samples)
