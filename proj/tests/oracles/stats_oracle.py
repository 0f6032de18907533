"""Circular-statistics and arithmetic reference values."""
import json, math
import numpy as np
from scipy import special

def crowding(points, k):
    return [float(np.mean(sorted(abs(p - q) for j, q in enumerate(points) if j != i)[:k])) for i, p in enumerate(points)]

def mean_resultant(kappa):
    return float(special.i1(kappa) / special.i0(kappa)) if kappa > 0 else 0.0

out = dict(
    # E|sum_u e^{i zeta_u}|^2 for N iid phases with mean resultant length r: N + N(N-1) r^2
    expected_coherence={str(n): {str(k): n + n * (n - 1) * mean_resultant(k) ** 2 for k in (0.0, 1.0, 4.0, 16.0)}
                        for n in (4, 8)},
    mean_cos_kappa5=mean_resultant(5.0),
    perturb_counts={"0": math.floor(100 * 0.3), "500": math.floor(100 * 0.1 + 1e-9), "250": math.floor(100 * 0.2 + 1e-9)},
    crowding_line=crowding([0.0, 1.0, 3.0], 2),
    toy_objective=dict(part1=2.0, part2=math.sqrt(4 / 2), part3=2e7),
)
json.dump(out, open("../fixtures/stats.json", "w"), indent=1)
