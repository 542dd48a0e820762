"""Input checks shared by the numeric modules."""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.utils.validation import check_array


def check_points(X) -> np.ndarray:
    """2-D float array of finite samples, at least one row."""
    return np.array(check_array(X, dtype=np.float64, ensure_2d=True, ensure_all_finite=True), copy=True)


def check_scales(scales: Sequence[float]) -> list[float]:
    out = [float(s) for s in scales]
    if not out:
        raise ValueError("no scales given")
    if any(not np.isfinite(s) or s <= 0 for s in out):
        raise ValueError(f"scales must be positive and finite, got {out}")
    return sorted(set(out), reverse=True)


def parse_scales(text: str) -> list[float]:
    """``"a:b"`` means ``2^-a .. 2^-b``; a comma list gives explicit scales."""
    text = text.strip()
    if ":" in text:
        a, b = (int(t) for t in text.split(":", 1))
        if a > b:
            a, b = b, a
        return [2.0**-k for k in range(a, b + 1)]
    return check_scales(float(t) for t in text.split(","))
