#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "htrail/dataset.hpp"
#include "htrail/geometry.hpp"
#include "htrail/random.hpp"

namespace htrail::sim {

// End-effector displacement and velocity in the device frame.
struct HapticState {
    Eigen::Vector2d x_ee = Eigen::Vector2d::Zero();
    Eigen::Vector2d v_ee = Eigen::Vector2d::Zero();
};

// Synthetic follower. pose is the torso in the world frame before the gait
// sway is applied; heading is the low-passed walking direction.
struct HumanState {
    geom::Pose2D pose;
    Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
    double gait_phase = 0.0;
};

struct SimConfig {
    std::uint64_t seed = 1;
    double dt = 0.25;               // s, 4 fps
    double session_min_s = 20.0;
    double session_max_s = 30.0;
    double wheelbase = 0.4;         // m
    double spring_k = 500.0;        // N/m
    double damping_b = 30.0;        // N s/m, device damper
    double human_mass = 70.0;       // kg
    double grip_damping = 100.0;    // N s/m, arm stabilization on the end effector; keeps the
                                    // saturated-spring correction rate k*r_ws/(b+grip) above the
                                    // error the guide's turns inject, so the grip is not pinned
                                    // at the workspace edge
    double gait_amplitude = 0.02;   // m
    double gait_frequency = 0.9;    // Hz
    double hand_offset = 0.6;       // m, anchor ahead of the torso
    double workspace_radius = 0.075;  // m, device workspace
    double heading_tau = 0.5;       // s, heading low-pass time constant
    double heading_min_speed = 0.05;  // m/s, torso tracks the walk direction only above this
    double max_wheel_speed = 0.5;   // m/s hard bound
    double cruise_speed = 0.25;     // m/s wander set point
    double max_wheel_step = 0.05;   // m/s per step
    double arena_half = 3.0;        // m, 6 m x 6 m arena
    int substeps = 10;              // internal integrator substeps per frame
    Eigen::Matrix<double, 5, 4> latent_map;  // rows map (x, y, theta, 1)
    double latent_noise_std = 0.05;

    SimConfig();
    void validate() const;  // throws std::invalid_argument
};

// F = -k x_ee - b v_ee
Eigen::Vector2d haptic_force(const HapticState& s, double k, double b);

// Closed-form unicycle step: v = (v_l + v_r)/2, omega = (v_r - v_l)/wheelbase.
geom::Pose2D unicycle_step(const geom::Pose2D& p, double v_l, double v_r, double wheelbase,
                           double dt);

struct PathStep {
    double v_l = 0.0;
    double v_r = 0.0;
    geom::Pose2D pose;
};

// Smooth bounded-random-walk wheel commands with wall avoidance; poses by
// exact unicycle integration. Length is round(duration / dt).
std::vector<PathStep> gen_robot_path(const SimConfig& cfg);
std::vector<PathStep> gen_robot_path(const SimConfig& cfg, rng::Stream& stream);

// Advances the follower by one 250 ms frame with cfg.substeps internal Euler
// substeps, the robot held at robot_pose. robot_vel is the device origin's
// world-frame velocity; the damper acts on the end-effector velocity relative
// to the device, so a follower moving in lockstep feels no drag. The returned
// HapticState is evaluated at the final substate.
std::pair<HumanState, HapticState> step_human(
    const HumanState& h, const geom::Pose2D& robot_pose, const SimConfig& cfg,
    const Eigen::Vector2d& robot_vel = Eigen::Vector2d::Zero());

// Derived haptic state of a human configuration (no integration).
HapticState haptic_state_of(const HumanState& h, const geom::Pose2D& robot_pose,
                            const SimConfig& cfg,
                            const Eigen::Vector2d& robot_vel = Eigen::Vector2d::Zero());

// Torso pose with the lateral gait sway applied.
geom::Pose2D output_pose(const HumanState& h, const SimConfig& cfg);

// z = latent_map * (x, y, theta, 1)^T + latent_noise_std * noise
Eigen::Matrix<double, 5, 1> synth_depth_latent(const geom::RelPose& p, const SimConfig& cfg,
                                               const Eigen::Matrix<double, 5, 1>& noise);

// One synthetic guidance run; deterministic in (cfg.seed, participant, session).
data::Session gen_session(const SimConfig& cfg, const std::string& participant_id,
                          const std::string& session_id);

}  // namespace htrail::sim
