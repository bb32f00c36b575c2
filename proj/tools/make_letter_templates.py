#!/usr/bin/env python3
"""Builds data/letter_templates.json from coarse block-letter outlines.

Each outline is resampled by arc length: the first loop gets 15 curves, every
further loop 4. Endpoints sit at equal arc-length steps and each control point
at the arc-length midpoint between its endpoints.
"""

import json
import math
import sys

LETTERS = {
    "A": [[(0.15, 0.1), (0.31, 0.1), (0.37, 0.3), (0.63, 0.3), (0.69, 0.1), (0.85, 0.1), (0.58, 0.9), (0.42, 0.9)],
          [(0.42, 0.44), (0.58, 0.44), (0.5, 0.7)]],
    "B": [[(0.2, 0.1), (0.7, 0.1), (0.8, 0.2), (0.8, 0.4), (0.72, 0.5), (0.8, 0.6), (0.8, 0.8), (0.7, 0.9), (0.2, 0.9)],
          [(0.36, 0.58), (0.64, 0.58), (0.64, 0.78), (0.36, 0.78)],
          [(0.36, 0.22), (0.64, 0.22), (0.64, 0.42), (0.36, 0.42)]],
    "C": [[(0.8, 0.1), (0.2, 0.1), (0.2, 0.9), (0.8, 0.9), (0.8, 0.76), (0.36, 0.76), (0.36, 0.24), (0.8, 0.24)]],
    "D": [[(0.2, 0.1), (0.6, 0.1), (0.8, 0.3), (0.8, 0.7), (0.6, 0.9), (0.2, 0.9)],
          [(0.36, 0.24), (0.55, 0.24), (0.64, 0.36), (0.64, 0.64), (0.55, 0.76), (0.36, 0.76)]],
    "E": [[(0.2, 0.1), (0.8, 0.1), (0.8, 0.24), (0.36, 0.24), (0.36, 0.43), (0.7, 0.43), (0.7, 0.57), (0.36, 0.57),
           (0.36, 0.76), (0.8, 0.76), (0.8, 0.9), (0.2, 0.9)]],
    "F": [[(0.2, 0.1), (0.36, 0.1), (0.36, 0.43), (0.7, 0.43), (0.7, 0.57), (0.36, 0.57), (0.36, 0.76), (0.8, 0.76),
           (0.8, 0.9), (0.2, 0.9)]],
    "G": [[(0.2, 0.1), (0.8, 0.1), (0.8, 0.5), (0.55, 0.5), (0.55, 0.38), (0.66, 0.38), (0.66, 0.24), (0.36, 0.24),
           (0.36, 0.76), (0.8, 0.76), (0.8, 0.9), (0.2, 0.9)]],
    "H": [[(0.2, 0.1), (0.36, 0.1), (0.36, 0.43), (0.64, 0.43), (0.64, 0.1), (0.8, 0.1), (0.8, 0.9), (0.64, 0.9),
           (0.64, 0.57), (0.36, 0.57), (0.36, 0.9), (0.2, 0.9)]],
    "I": [[(0.4, 0.1), (0.6, 0.1), (0.6, 0.9), (0.4, 0.9)]],
    "J": [[(0.2, 0.1), (0.75, 0.1), (0.75, 0.9), (0.59, 0.9), (0.59, 0.24), (0.36, 0.24), (0.36, 0.4), (0.2, 0.4)]],
    "K": [[(0.2, 0.1), (0.36, 0.1), (0.36, 0.4), (0.62, 0.1), (0.82, 0.1), (0.48, 0.5), (0.82, 0.9), (0.62, 0.9),
           (0.36, 0.6), (0.36, 0.9), (0.2, 0.9)]],
    "L": [[(0.2, 0.1), (0.8, 0.1), (0.8, 0.24), (0.36, 0.24), (0.36, 0.9), (0.2, 0.9)]],
    "M": [[(0.15, 0.1), (0.29, 0.1), (0.29, 0.65), (0.44, 0.35), (0.56, 0.35), (0.71, 0.65), (0.71, 0.1), (0.85, 0.1),
           (0.85, 0.9), (0.71, 0.9), (0.5, 0.52), (0.29, 0.9), (0.15, 0.9)]],
    "N": [[(0.2, 0.1), (0.35, 0.1), (0.35, 0.62), (0.66, 0.1), (0.8, 0.1), (0.8, 0.9), (0.65, 0.9), (0.65, 0.38),
           (0.34, 0.9), (0.2, 0.9)]],
    "O": [[(0.35, 0.1), (0.65, 0.1), (0.8, 0.25), (0.8, 0.75), (0.65, 0.9), (0.35, 0.9), (0.2, 0.75), (0.2, 0.25)],
          [(0.42, 0.26), (0.58, 0.26), (0.64, 0.32), (0.64, 0.68), (0.58, 0.74), (0.42, 0.74), (0.36, 0.68),
           (0.36, 0.32)]],
    "P": [[(0.2, 0.1), (0.36, 0.1), (0.36, 0.4), (0.7, 0.4), (0.8, 0.5), (0.8, 0.8), (0.7, 0.9), (0.2, 0.9)],
          [(0.36, 0.54), (0.64, 0.54), (0.64, 0.76), (0.36, 0.76)]],
    "Q": [[(0.3, 0.1), (0.62, 0.1), (0.7, 0.05), (0.85, 0.05), (0.76, 0.17), (0.8, 0.3), (0.8, 0.7), (0.7, 0.9),
           (0.3, 0.9), (0.2, 0.7), (0.2, 0.3)],
          [(0.42, 0.26), (0.58, 0.26), (0.64, 0.32), (0.64, 0.68), (0.58, 0.74), (0.42, 0.74), (0.36, 0.68),
           (0.36, 0.32)]],
    "R": [[(0.2, 0.1), (0.36, 0.1), (0.36, 0.4), (0.5, 0.4), (0.66, 0.1), (0.84, 0.1), (0.66, 0.43), (0.8, 0.55),
           (0.8, 0.8), (0.7, 0.9), (0.2, 0.9)],
          [(0.36, 0.54), (0.64, 0.54), (0.64, 0.76), (0.36, 0.76)]],
    "S": [[(0.2, 0.1), (0.8, 0.1), (0.8, 0.57), (0.36, 0.57), (0.36, 0.76), (0.8, 0.76), (0.8, 0.9), (0.2, 0.9),
           (0.2, 0.43), (0.64, 0.43), (0.64, 0.24), (0.2, 0.24)]],
    "T": [[(0.42, 0.1), (0.58, 0.1), (0.58, 0.76), (0.82, 0.76), (0.82, 0.9), (0.18, 0.9), (0.18, 0.76), (0.42, 0.76)]],
    "U": [[(0.2, 0.1), (0.8, 0.1), (0.8, 0.9), (0.64, 0.9), (0.64, 0.24), (0.36, 0.24), (0.36, 0.9), (0.2, 0.9)]],
    "V": [[(0.42, 0.1), (0.58, 0.1), (0.84, 0.9), (0.68, 0.9), (0.5, 0.32), (0.32, 0.9), (0.16, 0.9)]],
    "W": [[(0.27, 0.1), (0.39, 0.1), (0.5, 0.5), (0.61, 0.1), (0.73, 0.1), (0.85, 0.9), (0.73, 0.9), (0.66, 0.4),
           (0.56, 0.78), (0.44, 0.78), (0.34, 0.4), (0.27, 0.9), (0.15, 0.9)]],
    "X": [[(0.16, 0.1), (0.34, 0.1), (0.5, 0.38), (0.66, 0.1), (0.84, 0.1), (0.6, 0.5), (0.84, 0.9), (0.66, 0.9),
           (0.5, 0.62), (0.34, 0.9), (0.16, 0.9), (0.4, 0.5)]],
    "Y": [[(0.42, 0.1), (0.58, 0.1), (0.58, 0.48), (0.84, 0.9), (0.66, 0.9), (0.5, 0.62), (0.34, 0.9), (0.16, 0.9),
           (0.42, 0.48)]],
    "Z": [[(0.2, 0.1), (0.8, 0.1), (0.8, 0.24), (0.42, 0.24), (0.8, 0.76), (0.8, 0.9), (0.2, 0.9), (0.2, 0.76),
           (0.58, 0.76), (0.2, 0.24)]],
}


def signed_area(poly):
    return 0.5 * sum(a[0] * b[1] - b[0] * a[1] for a, b in zip(poly, poly[1:] + poly[:1]))


def point_at(poly, cum, s):
    total = cum[-1]
    s %= total
    for i in range(len(poly)):
        if cum[i + 1] >= s:
            a, b = poly[i], poly[(i + 1) % len(poly)]
            seg = cum[i + 1] - cum[i]
            f = 0.0 if seg == 0 else (s - cum[i]) / seg
            return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
    return poly[0]


def resample(poly, curves, outer):
    # Outer loops counter-clockwise, holes clockwise.
    if (signed_area(poly) > 0) != outer:
        poly = poly[::-1]
    cum = [0.0]
    for a, b in zip(poly, poly[1:] + poly[:1]):
        cum.append(cum[-1] + math.dist(a, b))
    step = cum[-1] / curves
    pts = []
    for k in range(curves):
        pts.append(point_at(poly, cum, k * step))
        pts.append(point_at(poly, cum, (k + 0.5) * step))
    return [[round(x, 6), round(y, 6)] for x, y in pts]


def main(path):
    templates = []
    for label, loops in sorted(LETTERS.items()):
        sizes = [15] + [4] * (len(loops) - 1)
        points = []
        for i, (poly, m) in enumerate(zip(loops, sizes)):
            points += resample(list(poly), m, i == 0)
        templates.append({"class": label, "loops": sizes, "points": points})
    doc = {"format": "dfit-templates", "version": 1, "templates": templates}
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/letter_templates.json")
