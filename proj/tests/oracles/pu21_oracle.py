#!/usr/bin/env python3
"""Reference evaluation of the PU21 encoding (banding variant).

Prints frozen expected values used by the colorspace unit tests.
Coefficients are the published banding parameters of the PU21 encoder.
"""
import numpy as np

P = np.array([1.070275272, 0.4088273932, 0.153224308, 0.2520326168,
              1.063512885, 1.14115047, 521.4527484])


def pu21_encode(y_cd_m2):
    y = np.clip(np.asarray(y_cd_m2, dtype=np.float64), 0.005, 10000.0)
    yp = y ** P[3]
    return P[6] * (((P[0] + P[1] * yp) / (1.0 + P[2] * yp)) ** P[4] - P[5])


if __name__ == "__main__":
    pts = [0.005, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0]
    for y in pts:
        print(f"pu21({y:g}) = {pu21_encode(y):.12f}")
    # monotonicity over the full domain
    ys = np.logspace(np.log10(0.005), 4, 20000)
    vs = pu21_encode(ys)
    assert np.all(np.diff(vs) > 0), "pu21 not strictly monotone"
    print("monotone over [0.005, 10000]: ok")
