#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "htrail/geometry.hpp"

namespace htrail::data {

inline constexpr int kRobotDim = 5;
inline constexpr int kHumanDim = 3;
inline constexpr int kHapticDim = 2;
inline constexpr int kDepthDim = 5;
inline constexpr int kFeatureDim = kRobotDim + kHumanDim + kHapticDim + kDepthDim;

inline constexpr int kObsLen = 8;
inline constexpr int kPredLen = 12;
inline constexpr int kWindowLen = kObsLen + kPredLen;
inline constexpr int kFps = 4;

// One 250 ms record. Feature order is fixed: robot (v_l, v_r, dx, dy, dtheta),
// human pose in the robot frame (x, y, theta), end-effector displacement in
// the device frame (x, y), depth latent (5). World poses are ground truth.
struct Frame {
    int t = 0;
    std::array<double, kRobotDim> robot{};
    std::array<double, kHumanDim> human{};
    std::array<double, kHapticDim> haptic{};
    std::array<double, kDepthDim> depth{};
    geom::Pose2D robot_world;
    geom::Pose2D human_world;

    // R ++ P ++ H ++ D as one 15-vector
    std::array<double, kFeatureDim> features() const;
};

struct Session {
    std::string participant_id;
    std::string session_id;
    int fps = kFps;
    std::vector<Frame> frames;
};

// View of 20 consecutive frames of one session: 8 observed, 12 to predict.
// Valid only while the owning Session is alive.
struct Window {
    const Session* session = nullptr;
    int start = 0;

    const Frame& frame(int i) const { return session->frames[static_cast<std::size_t>(start + i)]; }
    const Frame& last_observed() const { return frame(kObsLen - 1); }
};

// Stride-1 windows; count is max(0, len - 19).
std::vector<Window> window_session(const Session& s);
std::vector<Window> window_sessions(std::span<const Session> sessions);

// Which feature groups accompany the robot data and observed trajectory.
enum class AblationMode { R, RH, RD, RHD };

int input_dim(AblationMode m);
int output_dim(AblationMode m);
bool uses_haptic(AblationMode m);
bool uses_depth(AblationMode m);
// Indices into the 15-d feature vector selected by the mode, in order.
std::vector<int> feature_indices(AblationMode m);
std::string mode_name(AblationMode m);
// Accepts "r", "r+h", "r+d", "r+h+d" (case-insensitive); throws on anything else.
AblationMode parse_mode(std::string_view name);
inline constexpr std::array<AblationMode, 4> kAllModes{AblationMode::R, AblationMode::RH,
                                                       AblationMode::RD, AblationMode::RHD};

// Per-dimension min/max affine map onto [-1, 1], fit on training data only.
// Degenerate dimensions (min == max) map to 0 and back to the constant.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(const std::array<double, kFeatureDim>& mins,
               const std::array<double, kFeatureDim>& maxs);

    bool fitted() const { return fitted_; }
    double min(int dim) const { return min_[static_cast<std::size_t>(dim)]; }
    double max(int dim) const { return max_[static_cast<std::size_t>(dim)]; }

    double normalize(int dim, double v) const;
    double denormalize(int dim, double v) const;

private:
    std::array<double, kFeatureDim> min_{};
    std::array<double, kFeatureDim> max_{};
    bool fitted_ = false;
};

// Min/max over all frames of all training windows. Throws on empty input.
Normalizer fit_normalizer(std::span<const Window> train_windows);

// Normalized features of one frame, concatenated in the fixed order R, P, H, D
// with groups omitted per mode. Length is input_dim(mode).
Eigen::VectorXd assemble_input(const Frame& f, AblationMode mode, const Normalizer& norm);

// One leave-one-out fold: the held-out participant and everyone else.
struct Fold {
    std::vector<std::string> train_participants;
    std::string test_participant;
};

// One fold per participant, ordered by participant id. Throws if fewer than
// two participants are present.
std::vector<Fold> split_loocv(std::span<const Session> sessions);

// --- session files ------------------------------------------------------
//
// Line-delimited UTF-8: a header line
//   htrail.v1 participant=<id> session=<id> fps=<n>
// then one frame per line with 22 whitespace-separated fields
//   t v_l v_r dx dy dth px py pth hx hy d0..d4 rwx rwy rwth hwx hwy hwth
// Reals carry 17 significant digits so round trips are lossless. Lines
// starting with '#' are comments and are ignored.

struct version_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct malformed_record : std::runtime_error {
    malformed_record(int line_number, const std::string& what);
    int line;
};
struct missing_field : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_session(std::ostream& os, const Session& s,
                   std::span<const std::string> comments = {});
Session read_session(std::istream& is);

void save_session(const Session& s, const std::string& path,
                  std::span<const std::string> comments = {});
Session load_session(const std::string& path);

// All *.htrail files under dir, sorted by filename for determinism.
std::vector<Session> load_sessions(const std::string& dir);
// One "<participant>_<session>.htrail" file per session.
void save_sessions(std::span<const Session> sessions, const std::string& dir);

}  // namespace htrail::data
