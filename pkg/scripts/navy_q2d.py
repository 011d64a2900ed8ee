"""Repair an exponential guess from five elicited quantiles."""

from dataclasses import dataclass

import numpy as np

from dsharp.q2d import QPData, init_exponential, q2d

ROWS = [(0.12, .01), (1.30, .20), (3.00, .50), (7.00, .80), (26.17, .99)]


@dataclass
class Config:
    m: int = 6
    lam: str | float = "auto"


def main(cfg: Config = Config()):
    qp = QPData.from_pairs(ROWS)
    print(f"exponential init mean: {init_exponential(qp).params['mean']:.4f}")
    res = q2d(qp, "exp", m=cfg.m, lam=cfg.lam)
    print(f"method {res.method}, lambda {res.lam:.4g}, beta {np.round(res.beta, 4).tolist()}")
    for x, p, f in zip(qp.x, qp.p, res.model.cdf(qp.x)):
        print(f"  x={x:6.2f}  target {p:.2f}  fitted {f:.4f}  base {res.base.cdf(x):.4f}")
    for x in (0.0, 1.0, 20.0):
        print(f"  pdf({x}) repaired {float(res.model.pdf(x)):.4f} vs base {float(res.base.pdf(x)):.4f}")
    return res


if __name__ == "__main__":
    main()
