from dataclasses import dataclass, field

import numpy as np


@dataclass
class SweepResult:
    """Abscissa/ordinate series plus metadata.

    ``y`` is either 1-D (one value per x) or 2-D with one column per entry in
    ``columns``.
    """

    x_label: str
    y_label: str
    x: np.ndarray
    y: np.ndarray
    columns: list = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 1:
            raise ValueError("x must be 1-D")
        if self.y.shape[:1] != self.x.shape and not (self.x.size == 0 and self.y.size == 0):
            raise ValueError(f"x has {self.x.size} points but y has shape {self.y.shape}")
        if self.x.size > 1:
            d = np.diff(self.x)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ValueError("x must be strictly monotone")
        if self.y.ndim == 2:
            if self.columns is None:
                self.columns = [f"{self.y_label}[{i}]" for i in range(self.y.shape[1])]
            if len(self.columns) != self.y.shape[1]:
                raise ValueError("one column label per y column required")

    def __len__(self):
        return self.x.size

    @property
    def headers(self):
        if self.y.ndim == 2:
            return [self.x_label, *self.columns]
        return [self.x_label, self.y_label]
