"""Relevance-weighted consensus of three experts against data from a fourth model."""

from dataclasses import dataclass

from dsharp import distributions as D
from dsharp.divergence import chisq_index
from dsharp.experts import consensus
from dsharp.sharpening import estimate_raw


@dataclass
class Config:
    n: int = 5000
    seed: int = 7
    m: int = 10


def main(cfg: Config = Config()):
    truth = D.mixture([D.normal(-0.5, 1), D.normal(1.0, 0.8)], [0.6, 0.4])
    experts = [D.normal(0, 1.2), D.laplace(0.3, 0.9), D.logistic(-0.2, 0.6)]
    x = truth.sample(cfg.n, seed=cfg.seed).values
    ens = consensus(x, experts, cfg.m)
    # a fresh sample so the comparison is not scored on the weighting data
    y = truth.sample(cfg.n, seed=cfg.seed + 1).values
    for e, w, p in zip(experts, ens.weights, ens.mixture_probs):
        chi = chisq_index(estimate_raw(y, e, cfg.m), cfg.n).value
        print(f"{e.to_spec():32s} weight {w:.4f}  pi {p:.4f}  chi2 {chi:.4f}")
    chi = chisq_index(estimate_raw(y, ens.consensus, cfg.m), cfg.n).value
    print(f"{'consensus':32s} chi2 {chi:.4f}")
    return ens


if __name__ == "__main__":
    main()
