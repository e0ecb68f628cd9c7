#pragma once

#include <array>
#include <string_view>

namespace rclab {

using Point2 = std::array<double, 2>;

enum class OrbitId { A, B };

[[nodiscard]] constexpr std::string_view to_string(OrbitId id) noexcept {
    return id == OrbitId::A ? "A" : "B";
}

/// Circle traced by (b_x cos t + x_cen, b_y sin t).  The sign of b_x sets the
/// direction of rotation.
struct OrbitSpec {
    double b_x = 5.0;
    double b_y = 5.0;
    double x_cen = 0.0;

    [[nodiscard]] double radius() const noexcept { return b_x < 0 ? -b_x : b_x; }
};

/// Counter-clockwise orbit A centred at (+x_cen, 0) and clockwise orbit B
/// centred at (-x_cen, 0), both of radius b.
struct OrbitPair {
    OrbitSpec orbit_a;
    OrbitSpec orbit_b;

    [[nodiscard]] const OrbitSpec& get(OrbitId id) const noexcept {
        return id == OrbitId::A ? orbit_a : orbit_b;
    }
    [[nodiscard]] double x_cen() const noexcept { return orbit_a.x_cen; }
    [[nodiscard]] double radius() const noexcept { return orbit_a.radius(); }
    /// Orbits share more than one point.
    [[nodiscard]] bool overlapping() const noexcept { return x_cen() < radius(); }
    [[nodiscard]] bool touching() const noexcept { return x_cen() == radius(); }
    /// Distance between the nearest points of the two circles (0 when they meet).
    [[nodiscard]] double gap() const noexcept {
        const double g = 2.0 * x_cen() - 2.0 * radius();
        return g > 0.0 ? g : 0.0;
    }
};

Point2 orbit_point(const OrbitSpec& spec, double t) noexcept;

/// Throws UsageError unless b > 0 and x_cen >= 0.
OrbitPair make_orbit_pair(double x_cen, double b);

}  // namespace rclab
