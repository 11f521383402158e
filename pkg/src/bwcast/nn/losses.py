import numpy as np

LOSSES = ("mse", "mae")


def compute_loss(kind, predictions, targets):
    """Return ``(loss, d loss / d predictions)`` averaged over every element."""
    pred = np.asarray(predictions, dtype=float)
    true = np.asarray(targets, dtype=float)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: predictions {pred.shape} vs targets {true.shape}")
    if pred.size == 0:
        raise ValueError("empty predictions")
    resid = pred - true
    if kind == "mse":
        return float(np.mean(resid**2)), 2.0 * resid / resid.size
    if kind == "mae":
        # np.sign(0) == 0 gives the zero subgradient at ties
        return float(np.mean(np.abs(resid))), np.sign(resid) / resid.size
    raise ValueError(f"unknown loss {kind!r}; choose from {LOSSES}")
