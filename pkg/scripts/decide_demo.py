"""Bootstrap decision analysis on a sample from the repaired GFR model."""

from dataclasses import dataclass

from dsharp import decisions as dec
from dsharp import distributions as D
from dsharp.sharpening import make_dsharp


@dataclass
class Config:
    n: int = 2000
    B: int = 200
    M: int = 10
    seed: int = 20240101
    thresholds: tuple = (54.0, 55.0, 56.0)


def main(cfg: Config = Config()):
    base = D.lognormal(4.0, 0.24)
    x = make_dsharp(base, {4: 0.18}).sample(cfg.n, seed=cfg.seed).values
    problem = dec.DecisionProblem(
        tuple(f"t{int(t)}" for t in cfg.thresholds),
        tuple(dec.Loss.from_expr(f"abs(x - {t})") for t in cfg.thresholds))
    ens = dec.bootstrap_ensemble(x, base, M=cfg.M, B=cfg.B, seed=cfg.seed)
    prof = dec.action_profile(problem, ens)
    mm = dec.minimax(problem, list(ens.members) + dec.direct_fits(x, base, cfg.M))
    print("action under model-0:", dec.optimal_action(problem, base))
    print("profile:", prof.probabilities, f"entropy {prof.entropy:.4f}")
    print("robust action:", dec.robust_action(problem, ens))
    print(f"minimax action: {mm.action} (worst cases {mm.worst_case})")
    return prof


if __name__ == "__main__":
    main()
