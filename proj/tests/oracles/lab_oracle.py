#!/usr/bin/env python3
"""Freezes linear-RGB -> CIE L*a*b* reference triples and cross-checks
against scikit-image.

The RGB->XYZ matrix is derived from the Rec.709 primaries and the D65
white chromaticity (0.3127, 0.3290) at double precision, matching the
C++ implementation, so (1,1,1) maps exactly onto the white point.
"""
import numpy as np
from skimage.color import rgb2lab

PRIM = np.array([[0.64, 0.33], [0.30, 0.60], [0.15, 0.06]])
XW, YW = 0.3127, 0.3290


def derive_matrix():
    p = np.zeros((3, 3))
    for c in range(3):
        x, y = PRIM[c]
        p[:, c] = [x / y, 1.0, (1.0 - x - y) / y]
    white = np.array([XW / YW, 1.0, (1.0 - XW - YW) / YW])
    s = np.linalg.solve(p, white)
    return p * s, white


M, WHITE = derive_matrix()
DELTA = 6.0 / 29.0


def f(t):
    t = np.asarray(t, dtype=np.float64)
    return np.where(t > DELTA ** 3, np.cbrt(t), t / (3 * DELTA ** 2) + 4.0 / 29.0)


def linear_to_lab(rgb):
    xyz = M @ np.clip(np.asarray(rgb, dtype=np.float64), 0, None)
    fx, fy, fz = f(xyz / WHITE)
    return np.array([116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)])


def srgb_encode(v):
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * v ** (1 / 2.4) - 0.055)


if __name__ == "__main__":
    triples = [(1.0, 1.0, 1.0), (0.0, 0.0, 0.0), (0.5, 0.5, 0.5),
               (0.8, 0.1, 0.1), (0.1, 0.6, 0.2), (0.05, 0.05, 0.7)]
    worst = 0.0
    for t in triples:
        lab = linear_to_lab(t)
        ski = rgb2lab(srgb_encode(np.array(t)).reshape(1, 1, 3)).reshape(3)
        worst = max(worst, float(np.max(np.abs(lab - ski))))
        print(f"linear {t} -> Lab ({lab[0]:.8f}, {lab[1]:.8f}, {lab[2]:.8f})"
              f"   skimage diff {np.max(np.abs(lab - ski)):.2e}")
    print(f"worst |ours - skimage| = {worst:.2e}")
