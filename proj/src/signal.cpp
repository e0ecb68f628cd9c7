#include "rclab/signal.hpp"

#include "rclab/errors.hpp"

#include <cmath>

namespace rclab {

Point2 orbit_point(const OrbitSpec& spec, double t) noexcept {
    return {spec.b_x * std::cos(t) + spec.x_cen, spec.b_y * std::sin(t)};
}

OrbitPair make_orbit_pair(double x_cen, double b) {
    if (!(b > 0.0)) {
        throw UsageError("orbit radius must be positive");
    }
    if (!(x_cen >= 0.0)) {
        throw UsageError("orbit centre offset must be non-negative");
    }
    return OrbitPair{OrbitSpec{b, b, x_cen}, OrbitSpec{-b, b, -x_cen}};
}

}  // namespace rclab
