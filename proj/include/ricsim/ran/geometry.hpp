#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace ricsim::ran {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
    bool operator==(const Vec2&) const = default;
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

/// Regular hexagon centred on the origin with vertices at 0, 60, ... degrees.
class Hexagon {
public:
    explicit Hexagon(double circumradius = 1.0);

    double circumradius() const { return circumradius_; }
    double apothem() const { return apothem_; }
    bool contains(Vec2 p, double tol = 1e-9) const;

    /// Folds a point back inside by mirroring across violated edges, and
    /// mirrors `velocity` the same way.
    void reflect(Vec2& p, Vec2& velocity) const;

    std::array<Vec2, 6> vertices() const;

private:
    double circumradius_;
    double apothem_;
    std::array<Vec2, 6> normals_;
};

/// Site positions of a hexagonal grid filled ring by ring: 1 + 6 + 12 + ...
std::vector<Vec2> hex_grid_sites(int n_sites, double isd);

/// Outline of the area served by a hex grid of `rings` rings: corner sites
/// plus one cell radius.
Hexagon coverage_outline(int rings, double isd);

int rings_for_sites(int n_sites);

}  // namespace ricsim::ran
