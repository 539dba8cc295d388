#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "htrail/dataset.hpp"
#include "htrail/geometry.hpp"
#include "htrail/model.hpp"
#include "htrail/train.hpp"

namespace htrail::eval {

struct BaselineConfig {
    int n = 8;                 // lag in time-steps
    bool zero_offset = false;  // predict the delayed robot pose itself
};

struct MetricsReport {
    std::string method;
    double mde = 0.0;  // m, mean over the 12 horizon steps
    double fde = 0.0;  // m, horizon step 12
    double mae = 0.0;  // deg
    double fae = 0.0;  // deg
    long windows = 0;
};

inline constexpr int kMaxLag = 16;

// argmin over n in [1, kMaxLag] of the mean distance between the human
// position at t and the robot position at t-n, over all valid t in all
// sessions; ties go to the smaller n. Throws when no (t, n) pair is valid.
int baseline_fit_n(std::span<const data::Session> sessions);

// True when the lag reaches back into the session for every step this
// window needs, including the offset anchor.
bool baseline_applicable(const data::Window& w, int n);

// 12 predicted world poses: compose(robot_world(t-n), delta), with delta
// fixed at the last observed step (identity when cfg.zero_offset).
std::vector<geom::Pose2D> baseline_predict(const data::Window& w, const BaselineConfig& cfg);

MetricsReport compute_metrics(std::span<const geom::Pose2D> pred,
                              std::span<const geom::Pose2D> truth);
MetricsReport compute_metrics(std::span<const geom::RelPose> pred,
                              std::span<const geom::RelPose> truth);

// Window-count-weighted means; method tag taken from the first report.
MetricsReport aggregate(std::span<const MetricsReport> reports);

struct AblationConfig {
    std::vector<data::AblationMode> modes;  // table rows after Baseline
    model::TrainConfig train;
    bool baseline_zero_offset = false;
};

struct FoldArtifacts {
    data::Fold fold;
    int baseline_n = 0;
    data::Normalizer normalizer;
    std::vector<model::ModelParams> models;  // parallel to cfg.modes
};

struct AblationResult {
    std::vector<MetricsReport> table;  // Baseline row first, then modes
    std::vector<FoldArtifacts> folds;
};

// Leave-one-out over participants: per fold fits the normalizer and the
// baseline lag on the training side, trains one model per mode, evaluates
// everything on the identical held-out window set, then pools windows
// across folds.
AblationResult run_ablation(std::span<const data::Session> sessions, const AblationConfig& cfg);

// One window as plot-ready CSV: step, time, truth pose, one pose column
// triple per method. Observed rows carry the truth only.
void export_trajectories(std::ostream& os, const data::Window& w,
                         std::span<const std::string> methods,
                         std::span<const std::vector<geom::Pose2D>> preds);

// Tab-separated metrics table with '#' provenance comments, and its parser.
void write_metrics(std::ostream& os, std::span<const MetricsReport> table,
                   std::span<const std::string> comments = {});
std::vector<MetricsReport> read_metrics(std::istream& is);

// Fixed-width table for people.
std::string format_metrics_table(std::span<const MetricsReport> table);

}  // namespace htrail::eval
