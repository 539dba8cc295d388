#pragma once

namespace htrail::geom {

// Wraps an angle to the half-open interval (-pi, pi]; -pi maps to +pi.
// Throws std::invalid_argument on non-finite input.
double wrap_angle(double a);

// Planar pose in a named world frame. Angles are radians, CCW positive.
struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

// A pose expressed in another pose's local frame.
struct RelPose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

// World pose of the point whose local coordinates in base's frame are rel.
Pose2D compose(const Pose2D& base, const RelPose& rel);

// target expressed in base's frame. Inverse of compose:
// compose(base, relative(base, target)) == target.
RelPose relative(const Pose2D& base, const Pose2D& target);

// curr expressed in prev's frame; the robot's one-step movement.
RelPose robot_delta(const Pose2D& prev, const Pose2D& curr);

}  // namespace htrail::geom
