"""Term-by-term propulsion power and a 1 ms Riemann sum of flight energy."""
import json, math

P0, PI, VB, VM, D0, RHO, S, A, M, G = 79.86, 88.63, 120.0, 4.03, 0.6, 1.225, 0.05, 0.503, 2.0, 9.80665

def terms(v):
    return (P0 * (1 + 3 * v * v / VB ** 2),
            PI * math.sqrt(math.sqrt(1 + v ** 4 / (4 * VM ** 4)) - v * v / (2 * VM * VM)),
            0.5 * D0 * RHO * S * A * v ** 3)

def power(v):
    return sum(terms(v))

def riemann(points, speed, dt=1e-3):
    total = 0.0
    for a, b in zip(points, points[1:]):
        steps = round(math.dist(a, b) / speed / dt)
        total += sum(power(speed) * dt for _ in range(steps))
    return total + M * G * (points[-1][2] - points[0][2])

two_segment = [[0, 0, 100], [60, 80, 100], [60, 80, 115]]
out = dict(
    terms_30=terms(30.0), power_30=power(30.0), power_10=power(10.0), power_0=power(0.0),
    two_segment_points=two_segment, two_segment_speed=10.0, two_segment_energy=riemann(two_segment, 10.0),
    move_100m_energy=power(10.0) * 10.0,
)
json.dump(out, open("../fixtures/energy.json", "w"), indent=1)
