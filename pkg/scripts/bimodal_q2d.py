"""Recover a two-humped density from seven quantile-probability pairs."""

from dataclasses import dataclass

import numpy as np

from dsharp import distributions as D
from dsharp.cli import x_grid
from dsharp.q2d import QPData, q2d

ROWS = [(-3.40, .04), (-2.53, .15), (-1.20, .39), (0.0, .50), (2.0, .75), (2.83, .90), (3.60, .97)]


@dataclass
class Config:
    m: int = 6
    points: int = 512


def main(cfg: Config = Config()):
    res = q2d(QPData.from_pairs(ROWS), "normal", m=cfg.m)
    x = x_grid(res.base, res.model, points=cfg.points)
    y = np.asarray(res.model.pdf(x))
    peaks = x[np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1]
    target = D.mixture([D.normal(-2, 1), D.normal(2, 1)], [0.5, 0.5])
    gap = np.max(np.abs(y - target.pdf(x)))
    print(f"base {res.base.to_spec()}, beta {np.round(res.beta, 4).tolist()}")
    print(f"local maxima at {np.round(peaks, 3).tolist()}")
    print(f"max |pdf - 0.5 N(-2,1) - 0.5 N(2,1)| on the grid: {gap:.4f}")
    return peaks


if __name__ == "__main__":
    main()
