"""Fit an exponential model-0 to a sample with a hidden normal bump and locate it."""

from dataclasses import dataclass

import numpy as np

from dsharp import distributions as D
from dsharp.sharpening import fit


@dataclass
class Config:
    n: int = 10_000
    seed: int = 1
    mean: float = 25.0
    bump_weight: float = 0.1
    bump_sd: float = 2.5
    m_max: int = 10


def main(cfg: Config = Config()) -> dict:
    truth = D.mixture([D.exponential(cfg.mean), D.normal(cfg.mean, cfg.bump_sd)],
                      [1 - cfg.bump_weight, cfg.bump_weight])
    base = D.exponential(cfg.mean)
    x = truth.sample(cfg.n, seed=cfg.seed).values
    sf = fit(x, base, cfg.m_max)
    u = np.linspace(0, 1, 4097)
    d = np.asarray(sf.eval_d(u))
    u_star = float(u[np.argmax(d)])
    out = {
        "selected": list(sf.selected),
        "chisq": sf.chisq().value,
        "p_value": sf.chisq().p_value,
        "argmax_u": u_star,
        "argmax_x": float(base.quantile(u_star)),
        "peak_d": float(d.max()),
    }
    for k, v in out.items():
        print(f"{k:>10}: {v}")
    return out


if __name__ == "__main__":
    main()
