"""Dickey-Fuller critical values, constant + linear trend case.

Source: W. A. Fuller, *Introduction to Statistical Time Series* (1976),
Table 8.5.2 (tau_tau), as reprinted in Hamilton, *Time Series Analysis*
(1994), Table B.6 case 4. The same table backs the ``adf.test`` routine of
the R ``tseries`` package. Rows are sample sizes (the last row stands in
for the asymptotic distribution); columns are lower-tail probabilities.

Table version: 1
"""

import numpy as np

DF_TABLE_VERSION = 1

DF_TREND_SAMPLE_SIZES = np.array([25.0, 50.0, 100.0, 250.0, 500.0, 100000.0])

DF_TREND_PROBS = np.array([0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99])

DF_TREND_QUANTILES = np.array([
    [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
    [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
    [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
    [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
    [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
    [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
])
