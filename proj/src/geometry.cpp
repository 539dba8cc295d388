#include "htrail/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace htrail::geom {

double wrap_angle(double a) {
    if (!std::isfinite(a)) {
        throw std::invalid_argument("wrap_angle: non-finite angle");
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::remainder(a, two_pi);  // lands in [-pi, pi]
    if (r <= -std::numbers::pi) {
        r = std::numbers::pi;
    }
    return r;
}

Pose2D compose(const Pose2D& base, const RelPose& rel) {
    const double c = std::cos(base.theta);
    const double s = std::sin(base.theta);
    return Pose2D{base.x + c * rel.x - s * rel.y,
                  base.y + s * rel.x + c * rel.y,
                  wrap_angle(base.theta + rel.theta)};
}

RelPose relative(const Pose2D& base, const Pose2D& target) {
    const double c = std::cos(base.theta);
    const double s = std::sin(base.theta);
    const double dx = target.x - base.x;
    const double dy = target.y - base.y;
    return RelPose{c * dx + s * dy,
                   -s * dx + c * dy,
                   wrap_angle(target.theta - base.theta)};
}

RelPose robot_delta(const Pose2D& prev, const Pose2D& curr) {
    return relative(prev, curr);
}

}  // namespace htrail::geom
