#include "ricsim/ran/geometry.hpp"

#include <numbers>
#include <stdexcept>

namespace ricsim::ran {

Hexagon::Hexagon(double circumradius)
    : circumradius_(circumradius), apothem_(circumradius * std::sqrt(3.0) / 2.0)
{
    for (int k = 0; k < 6; ++k) {
        const double a = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
        normals_[static_cast<std::size_t>(k)] = {std::cos(a), std::sin(a)};
    }
}

bool Hexagon::contains(Vec2 p, double tol) const
{
    for (const auto& n : normals_)
        if (p.dot(n) > apothem_ + tol) return false;
    return true;
}

void Hexagon::reflect(Vec2& p, Vec2& velocity) const
{
    for (int pass = 0; pass < 8 && !contains(p); ++pass) {
        for (const auto& n : normals_) {
            const double excess = p.dot(n) - apothem_;
            if (excess > 0) {
                p = p - n * (2.0 * excess);
                const double vn = velocity.dot(n);
                if (vn > 0) velocity = velocity - n * (2.0 * vn);
            }
        }
    }
}

std::array<Vec2, 6> Hexagon::vertices() const
{
    std::array<Vec2, 6> v;
    for (int k = 0; k < 6; ++k) {
        const double a = k * std::numbers::pi / 3.0;
        v[static_cast<std::size_t>(k)] = {circumradius_ * std::cos(a), circumradius_ * std::sin(a)};
    }
    return v;
}

int rings_for_sites(int n_sites)
{
    for (int r = 0; r < 64; ++r)
        if (1 + 3 * r * (r + 1) == n_sites) return r;
    throw std::invalid_argument("site count does not fill whole hex rings");
}

std::vector<Vec2> hex_grid_sites(int n_sites, double isd)
{
    const int rings = rings_for_sites(n_sites);
    // Axial directions, walking each ring starting from its 0-degree corner.
    const std::array<std::pair<int, int>, 6> dirs{{{-1, 1}, {-1, 0}, {0, -1}, {1, -1}, {1, 0}, {0, 1}}};
    auto to_xy = [isd](int q, int r) {
        return Vec2{isd * (q + r / 2.0), isd * (r * std::sqrt(3.0) / 2.0)};
    };

    std::vector<Vec2> sites{to_xy(0, 0)};
    for (int ring = 1; ring <= rings; ++ring) {
        int q = ring, r = 0;
        for (const auto& [dq, dr] : dirs) {
            for (int i = 0; i < ring; ++i) {
                sites.push_back(to_xy(q, r));
                q += dq;
                r += dr;
            }
        }
    }
    return sites;
}

Hexagon coverage_outline(int rings, double isd)
{
    return Hexagon(rings * isd + isd / std::sqrt(3.0));
}

}  // namespace ricsim::ran
