"""Volume comparison metrics: RMSE, relative L2, Dice overlap."""

import numpy as np


def volume_metrics(a, b, threshold_frac=0.05):
    """Compare two volumes on the same grid.

    rel_l2 uses ``b`` as the reference (asymmetric); dice thresholds each
    volume independently at threshold_frac * max|.|.
    """
    if a.grid != b.grid:
        raise ValueError("volumes must share the same grid")
    va, vb = a.values, b.values
    diff = va - vb
    rmse = float(np.sqrt(np.mean(diff**2)))
    nb = np.linalg.norm(vb)
    rel_l2 = float(np.linalg.norm(diff) / nb) if nb > 0 else float(np.linalg.norm(diff) > 0)
    # values below the threshold (including negatives) count as background
    ta = va > threshold_frac * np.max(np.abs(va), initial=0.0)
    tb = vb > threshold_frac * np.max(np.abs(vb), initial=0.0)
    denom = int(ta.sum()) + int(tb.sum())
    dice = 1.0 if denom == 0 else 2.0 * int((ta & tb).sum()) / denom
    return {"rmse": rmse, "rel_l2": rel_l2, "dice": float(dice)}
