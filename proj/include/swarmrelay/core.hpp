#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmrelay {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed scenario document.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Missing, unknown or wrongly typed field in a scenario document.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Value outside its documented range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Geometry or numerics that make a formula undefined (zero distance,
/// non-positive pattern integral).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Separation constraints cannot be met inside a swarm region.
class FeasibilityError : public Error {
public:
    using Error::Error;
};

/// Vector or configuration sizes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// No route exists from the device to the access point.
class UnreachableError : public Error {
public:
    using Error::Error;
};

/// Greedy geographic forwarding reached a node with no closer neighbor.
class DeadEndError : public Error {
public:
    using Error::Error;
};

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double speed_of_light_mps = 299792458.0;

struct Position3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Position3&, const Position3&) = default;

    Position3& operator+=(const Position3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Position3& operator-=(const Position3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Position3& operator*=(double s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
    friend Position3 operator+(Position3 a, const Position3& b) { return a += b; }
    friend Position3 operator-(Position3 a, const Position3& b) { return a -= b; }
    friend Position3 operator*(Position3 a, double s) { return a *= s; }
    friend Position3 operator*(double s, Position3 a) { return a *= s; }

    [[nodiscard]] double dot(const Position3& o) const { return x * o.x + y * o.y + z * o.z; }
    [[nodiscard]] double norm() const { return std::sqrt(dot(*this)); }
    [[nodiscard]] bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
};

inline double distance(const Position3& a, const Position3& b) { return (a - b).norm(); }

inline Position3 centroid(const std::vector<Position3>& points) {
    Position3 c;
    if (points.empty()) return c;
    for (const auto& p : points) c += p;
    return c * (1.0 / static_cast<double>(points.size()));
}

/// Closed interval [min, max].
struct Interval {
    double min = 0.0;
    double max = 0.0;

    friend bool operator==(const Interval&, const Interval&) = default;

    [[nodiscard]] bool valid() const { return std::isfinite(min) && std::isfinite(max) && min <= max; }
    [[nodiscard]] double mid() const { return 0.5 * (min + max); }
    [[nodiscard]] double width() const { return max - min; }
    [[nodiscard]] bool contains(double v) const { return v >= min && v <= max; }
    [[nodiscard]] double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
};

}  // namespace swarmrelay
