"""Time König decomposition as edge multiplicities grow by powers of ten."""

import argparse
import random
import time
from dataclasses import dataclass

from coflow.coloring import decompose


@dataclass(frozen=True)
class TimingConfig:
    seed: int = 0
    graphs: int = 20
    exponents: tuple[int, ...] = (0, 3, 6, 9)
    repeats: int = 10


def _shape(rng: random.Random):
    left, right = rng.randint(2, 6), rng.randint(2, 6)
    return [(k, rng.randrange(left), rng.randrange(right)) for k in range(rng.randint(4, 14))]


def run(cfg: TimingConfig) -> dict[int, float]:
    rng = random.Random(cfg.seed)
    shapes = [_shape(rng) for _ in range(cfg.graphs)]
    weights = [[rng.randint(1, 9) for _ in s] for s in shapes]
    out = {}
    print("exponent,seconds_per_graph")
    for x in cfg.exponents:
        scale = 10**x
        graphs = [[(k, u, v, w * scale) for (k, u, v), w in zip(s, ws)] for s, ws in zip(shapes, weights)]
        start = time.perf_counter()
        for _ in range(cfg.repeats):
            for edges in graphs:
                decompose(edges)
        out[x] = (time.perf_counter() - start) / (cfg.repeats * cfg.graphs)
        print(f"{x},{out[x]:.6f}")
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--graphs", type=int, default=TimingConfig.graphs)
    args = ap.parse_args()
    run(TimingConfig(seed=args.seed, graphs=args.graphs))


if __name__ == "__main__":
    main()
