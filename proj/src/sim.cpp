#include "htrail/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace htrail::sim {

using geom::Pose2D;
using geom::RelPose;
using geom::wrap_angle;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector2d to_frame(double theta, const Eigen::Vector2d& v) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}

Eigen::Vector2d from_frame(double theta, const Eigen::Vector2d& v) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SimConfig: ") + what);
}

}  // namespace

SimConfig::SimConfig() {
    // Fixed affine surrogate for the depth encoder; rows mix (x, y, theta, 1).
    latent_map << 0.9, -0.4, 0.2, 0.1,
                 -0.3, 0.8, -0.5, -0.2,
                  0.5, 0.6, 0.7, 0.0,
                 -0.7, 0.2, 0.9, 0.3,
                  0.1, -0.9, -0.6, 0.2;
}

void SimConfig::validate() const {
    require(dt > 0.0, "dt must be > 0");
    require(session_min_s > 0.0 && session_max_s >= session_min_s,
            "session duration range must be positive and ordered");
    require(wheelbase > 0.0, "wheelbase must be > 0");
    require(spring_k > 0.0, "spring_k must be > 0");
    require(damping_b > 0.0, "damping_b must be > 0");
    require(human_mass > 0.0, "human_mass must be > 0");
    require(grip_damping >= 0.0, "grip_damping must be >= 0");
    require(gait_amplitude >= 0.0, "gait_amplitude must be >= 0");
    require(gait_frequency >= 0.0, "gait_frequency must be >= 0");
    require(hand_offset > 0.0, "hand_offset must be > 0");
    require(workspace_radius > 0.0, "workspace_radius must be > 0");
    require(heading_tau > 0.0, "heading_tau must be > 0");
    require(heading_min_speed >= 0.0, "heading_min_speed must be >= 0");
    require(max_wheel_speed > 0.0 && cruise_speed > 0.0 && max_wheel_step > 0.0,
            "wheel speed limits must be > 0");
    require(cruise_speed < max_wheel_speed, "cruise_speed must stay below max_wheel_speed");
    require(arena_half > 0.0, "arena_half must be > 0");
    require(substeps >= 1, "substeps must be >= 1");
    require(latent_noise_std >= 0.0, "latent_noise_std must be >= 0");
}

Eigen::Vector2d haptic_force(const HapticState& s, double k, double b) {
    return -k * s.x_ee - b * s.v_ee;
}

Pose2D unicycle_step(const Pose2D& p, double v_l, double v_r, double wheelbase, double dt) {
    const double v = 0.5 * (v_l + v_r);
    const double omega = (v_r - v_l) / wheelbase;
    if (std::abs(omega) < 1e-12) {
        return Pose2D{p.x + v * dt * std::cos(p.theta), p.y + v * dt * std::sin(p.theta), p.theta};
    }
    const double th1 = p.theta + omega * dt;
    const double radius = v / omega;
    return Pose2D{p.x + radius * (std::sin(th1) - std::sin(p.theta)),
                  p.y - radius * (std::cos(th1) - std::cos(p.theta)), wrap_angle(th1)};
}

std::vector<PathStep> gen_robot_path(const SimConfig& cfg) {
    rng::Stream stream(cfg.seed);
    return gen_robot_path(cfg, stream);
}

std::vector<PathStep> gen_robot_path(const SimConfig& cfg, rng::Stream& stream) {
    cfg.validate();
    const double duration = stream.uniform(cfg.session_min_s, cfg.session_max_s);
    const int n = static_cast<int>(std::llround(duration / cfg.dt));

    std::vector<PathStep> path;
    path.reserve(static_cast<std::size_t>(n));

    Pose2D pose{stream.uniform(-0.5, 0.5), stream.uniform(-0.5, 0.5),
                wrap_angle(stream.uniform(-kPi, kPi))};
    double v_l = 0.0;
    double v_r = 0.0;
    const double margin = 1.2;
    bool avoiding = false;

    path.push_back(PathStep{v_l, v_r, pose});
    for (int t = 1; t < n; ++t) {
        const double speed = 0.5 * (v_l + v_r);
        const double hx = std::cos(pose.theta) * speed;
        const double hy = std::sin(pose.theta) * speed;
        const double edge = cfg.arena_half - margin;
        const bool outward = (pose.x > edge && hx > 0.0) || (pose.x < -edge && hx < 0.0) ||
                             (pose.y > edge && hy > 0.0) || (pose.y < -edge && hy < 0.0);
        const bool in_margin =
            std::abs(pose.x) > edge || std::abs(pose.y) > edge;
        if (outward) avoiding = true;

        double want_l;
        double want_r;
        if (avoiding) {
            // arc back toward the arena center. The turn rate is capped so the
            // turning radius stays near 0.3 m: a guide that pivoted in place
            // would reverse straight through whoever is trailing it.
            const double to_center = std::atan2(-pose.y, -pose.x);
            const double err = wrap_angle(to_center - pose.theta);
            if (std::cos(err) > 0.7) avoiding = false;
            const double fwd = 0.12;
            const double turn = std::clamp(1.2 * err, -0.4, 0.4);
            want_l = fwd - 0.5 * turn * cfg.wheelbase;
            want_r = fwd + 0.5 * turn * cfg.wheelbase;
        } else {
            // bounded random walk pulled toward the cruise speed
            want_l = v_l + 0.25 * (cfg.cruise_speed - v_l) + stream.uniform(-0.04, 0.04);
            want_r = v_r + 0.25 * (cfg.cruise_speed - v_r) + stream.uniform(-0.04, 0.04);
            if (in_margin) {
                want_l = std::min(want_l, 0.18);
                want_r = std::min(want_r, 0.18);
            }
        }
        want_l = std::clamp(want_l, -cfg.max_wheel_speed, cfg.max_wheel_speed);
        want_r = std::clamp(want_r, -cfg.max_wheel_speed, cfg.max_wheel_speed);
        v_l += std::clamp(want_l - v_l, -cfg.max_wheel_step, cfg.max_wheel_step);
        v_r += std::clamp(want_r - v_r, -cfg.max_wheel_step, cfg.max_wheel_step);

        pose = unicycle_step(pose, v_l, v_r, cfg.wheelbase, cfg.dt);
        path.push_back(PathStep{v_l, v_r, pose});
    }
    return path;
}

HapticState haptic_state_of(const HumanState& h, const Pose2D& robot_pose, const SimConfig& cfg,
                            const Eigen::Vector2d& robot_vel) {
    const Eigen::Vector2d anchor{h.pose.x + cfg.hand_offset * std::cos(h.pose.theta),
                                 h.pose.y + cfg.hand_offset * std::sin(h.pose.theta)};
    HapticState s;
    s.x_ee = to_frame(robot_pose.theta, anchor - Eigen::Vector2d{robot_pose.x, robot_pose.y});
    const double r = s.x_ee.norm();
    if (r > cfg.workspace_radius) {
        s.x_ee *= cfg.workspace_radius / r;
    }
    s.v_ee = to_frame(robot_pose.theta, h.velocity - robot_vel);
    return s;
}

std::pair<HumanState, HapticState> step_human(const HumanState& h, const Pose2D& robot_pose,
                                              const SimConfig& cfg,
                                              const Eigen::Vector2d& robot_vel) {
    HumanState out = h;
    const double dt_s = cfg.dt / cfg.substeps;
    const double alpha = 1.0 - std::exp(-dt_s / cfg.heading_tau);
    for (int i = 0; i < cfg.substeps; ++i) {
        const HapticState s = haptic_state_of(out, robot_pose, cfg, robot_vel);
        const Eigen::Vector2d f_dev =
            haptic_force(s, cfg.spring_k, cfg.damping_b) - cfg.grip_damping * s.v_ee;
        const Eigen::Vector2d f_world = from_frame(robot_pose.theta, f_dev);

        // semi-implicit Euler
        out.velocity += (dt_s / cfg.human_mass) * f_world;
        out.pose.x += dt_s * out.velocity.x();
        out.pose.y += dt_s * out.velocity.y();

        // Torso reorients only at stepping speeds. Without the gate, heading
        // chases the reversing velocity of residual hand sway and the 0.6 m
        // shoulder lever pumps the spring into a standing limit cycle.
        if (out.velocity.norm() > cfg.heading_min_speed) {
            const double target = std::atan2(out.velocity.y(), out.velocity.x());
            out.pose.theta = wrap_angle(out.pose.theta + alpha * wrap_angle(target - out.pose.theta));
        }
    }
    out.gait_phase = wrap_angle(out.gait_phase + 2.0 * kPi * cfg.gait_frequency * cfg.dt);
    return {out, haptic_state_of(out, robot_pose, cfg, robot_vel)};
}

Pose2D output_pose(const HumanState& h, const SimConfig& cfg) {
    const double sway = cfg.gait_amplitude * std::sin(h.gait_phase);
    return Pose2D{h.pose.x - sway * std::sin(h.pose.theta), h.pose.y + sway * std::cos(h.pose.theta),
                  h.pose.theta};
}

Eigen::Matrix<double, 5, 1> synth_depth_latent(const RelPose& p, const SimConfig& cfg,
                                               const Eigen::Matrix<double, 5, 1>& noise) {
    const Eigen::Matrix<double, 4, 1> hom{p.x, p.y, p.theta, 1.0};
    return cfg.latent_map * hom + cfg.latent_noise_std * noise;
}

data::Session gen_session(const SimConfig& cfg, const std::string& participant_id,
                          const std::string& session_id) {
    cfg.validate();
    rng::Stream stream(rng::mix(cfg.seed, rng::mix(rng::hash_string(participant_id),
                                                   rng::hash_string(session_id))));
    const auto path = gen_robot_path(cfg, stream);

    HumanState human;
    human.pose = geom::compose(path[0].pose, RelPose{-cfg.hand_offset, 0.0, 0.0});
    human.gait_phase = wrap_angle(stream.uniform(-kPi, kPi));

    data::Session session;
    session.participant_id = participant_id;
    session.session_id = session_id;
    session.fps = static_cast<int>(std::llround(1.0 / cfg.dt));
    session.frames.reserve(path.size());

    for (std::size_t t = 0; t < path.size(); ++t) {
        HapticState hap;
        if (t == 0) {
            hap = haptic_state_of(human, path[0].pose, cfg);
        } else {
            const Eigen::Vector2d robot_vel{(path[t].pose.x - path[t - 1].pose.x) / cfg.dt,
                                            (path[t].pose.y - path[t - 1].pose.y) / cfg.dt};
            std::tie(human, hap) = step_human(human, path[t].pose, cfg, robot_vel);
        }
        const Pose2D presented = output_pose(human, cfg);
        const RelPose p_rel = geom::relative(path[t].pose, presented);
        const RelPose delta =
            t == 0 ? RelPose{} : geom::robot_delta(path[t - 1].pose, path[t].pose);

        Eigen::Matrix<double, 5, 1> noise;
        for (int i = 0; i < 5; ++i) noise[i] = stream.normal();

        data::Frame f;
        f.t = static_cast<int>(t);
        f.robot = {path[t].v_l, path[t].v_r, delta.x, delta.y, delta.theta};
        f.human = {p_rel.x, p_rel.y, p_rel.theta};
        f.haptic = {hap.x_ee.x(), hap.x_ee.y()};
        const auto z = synth_depth_latent(p_rel, cfg, noise);
        for (int i = 0; i < 5; ++i) f.depth[static_cast<std::size_t>(i)] = z[i];
        f.robot_world = path[t].pose;
        f.human_world = presented;
        session.frames.push_back(f);
    }
    return session;
}

}  // namespace htrail::sim
