"""cbf_r on the disjoint-degree family: cost over the degree bound as D grows."""

import argparse
from dataclasses import dataclass
from fractions import Fraction

from coflow.cbf import cbf_r
from coflow.combine import default_tau, degree_lower_bound
from coflow.deadlines import generate_deadlines
from coflow.generate import degree_family
from coflow.model import max_degree


@dataclass(frozen=True)
class FamilyConfig:
    degrees: tuple[int, ...] = (5, 10, 20, 40)
    coflows: int = 3
    deadline_mode: str = "candidates:32"
    epsilon: Fraction = Fraction(1, 4)


def run(cfg: FamilyConfig) -> list[tuple[int, Fraction, Fraction]]:
    rows = []
    print("D,tau,cost,lower_bound,ratio,predicted")
    for degree in cfg.degrees:
        inst = degree_family(degree, degree, cfg.coflows)
        d = min(max_degree(c.flows) for c in inst.coflows)
        tau = default_tau(inst)
        profile = generate_deadlines(inst, cfg.deadline_mode, epsilon=cfg.epsilon)
        value = cbf_r(inst, profile, tau).cost
        lower = degree_lower_bound(inst)
        predicted = 2 + Fraction(4, tau) + Fraction(2 * tau + 2, d)
        rows.append((degree, value / lower, predicted))
        print(f"{degree},{tau},{value},{lower},{float(value / lower):.4f},{float(predicted):.4f}")
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--degrees", default="5,10,20,40")
    args = ap.parse_args()
    run(FamilyConfig(degrees=tuple(int(d) for d in args.degrees.split(","))))


if __name__ == "__main__":
    main()
