import numpy as np
import pytest


def write_series_csv(path, columns, header=None):
    cols = [np.asarray(c, dtype=float) for c in columns]
    names = header or [f"c{j}" for j in range(len(cols))]
    lines = [",".join(names)] + [",".join(repr(float(c[i])) for c in cols) for i in range(len(cols[0]))]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def sine_csv(tmp_path):
    t = np.arange(400)
    y = 10 + 3 * np.sin(2 * np.pi * t / 20)
    return write_series_csv(tmp_path / "sine.csv", [y], ["target"])
