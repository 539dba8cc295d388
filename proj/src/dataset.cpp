#include "htrail/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace htrail::data {

std::array<double, kFeatureDim> Frame::features() const {
    std::array<double, kFeatureDim> f{};
    int i = 0;
    for (double v : robot) f[i++] = v;
    for (double v : human) f[i++] = v;
    for (double v : haptic) f[i++] = v;
    for (double v : depth) f[i++] = v;
    return f;
}

std::vector<Window> window_session(const Session& s) {
    std::vector<Window> out;
    const int n = static_cast<int>(s.frames.size());
    for (int start = 0; start + kWindowLen <= n; ++start) {
        out.push_back(Window{&s, start});
    }
    return out;
}

std::vector<Window> window_sessions(std::span<const Session> sessions) {
    std::vector<Window> out;
    for (const Session& s : sessions) {
        auto w = window_session(s);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

int output_dim(AblationMode m) {
    return kHumanDim + (uses_haptic(m) ? kHapticDim : 0) + (uses_depth(m) ? kDepthDim : 0);
}

int input_dim(AblationMode m) { return kRobotDim + output_dim(m); }

bool uses_haptic(AblationMode m) { return m == AblationMode::RH || m == AblationMode::RHD; }
bool uses_depth(AblationMode m) { return m == AblationMode::RD || m == AblationMode::RHD; }

std::vector<int> feature_indices(AblationMode m) {
    std::vector<int> idx;
    idx.reserve(static_cast<std::size_t>(input_dim(m)));
    for (int i = 0; i < kRobotDim + kHumanDim; ++i) idx.push_back(i);
    if (uses_haptic(m)) {
        for (int i = 0; i < kHapticDim; ++i) idx.push_back(kRobotDim + kHumanDim + i);
    }
    if (uses_depth(m)) {
        for (int i = 0; i < kDepthDim; ++i) idx.push_back(kRobotDim + kHumanDim + kHapticDim + i);
    }
    return idx;
}

std::string mode_name(AblationMode m) {
    switch (m) {
        case AblationMode::R: return "r";
        case AblationMode::RH: return "r+h";
        case AblationMode::RD: return "r+d";
        case AblationMode::RHD: return "r+h+d";
    }
    throw std::logic_error("mode_name: bad mode");
}

AblationMode parse_mode(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "r") return AblationMode::R;
    if (s == "r+h") return AblationMode::RH;
    if (s == "r+d") return AblationMode::RD;
    if (s == "r+h+d") return AblationMode::RHD;
    throw std::invalid_argument("unknown ablation mode '" + s + "' (expected r, r+h, r+d, r+h+d)");
}

Normalizer::Normalizer(const std::array<double, kFeatureDim>& mins,
                       const std::array<double, kFeatureDim>& maxs)
    : min_(mins), max_(maxs), fitted_(true) {
    for (int i = 0; i < kFeatureDim; ++i) {
        if (min_[static_cast<std::size_t>(i)] > max_[static_cast<std::size_t>(i)]) {
            throw std::invalid_argument("Normalizer: min > max");
        }
    }
}

double Normalizer::normalize(int dim, double v) const {
    const auto d = static_cast<std::size_t>(dim);
    const double span = max_[d] - min_[d];
    if (span == 0.0) return 0.0;
    return 2.0 * (v - min_[d]) / span - 1.0;
}

double Normalizer::denormalize(int dim, double v) const {
    const auto d = static_cast<std::size_t>(dim);
    const double span = max_[d] - min_[d];
    if (span == 0.0) return min_[d];
    return min_[d] + 0.5 * (v + 1.0) * span;
}

Normalizer fit_normalizer(std::span<const Window> train_windows) {
    if (train_windows.empty()) {
        throw std::invalid_argument("fit_normalizer: no training windows");
    }
    std::array<double, kFeatureDim> lo{};
    std::array<double, kFeatureDim> hi{};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (const Window& w : train_windows) {
        for (int i = 0; i < kWindowLen; ++i) {
            const auto f = w.frame(i).features();
            for (int d = 0; d < kFeatureDim; ++d) {
                lo[static_cast<std::size_t>(d)] = std::min(lo[static_cast<std::size_t>(d)], f[static_cast<std::size_t>(d)]);
                hi[static_cast<std::size_t>(d)] = std::max(hi[static_cast<std::size_t>(d)], f[static_cast<std::size_t>(d)]);
            }
        }
    }
    return Normalizer(lo, hi);
}

Eigen::VectorXd assemble_input(const Frame& f, AblationMode mode, const Normalizer& norm) {
    if (!norm.fitted()) {
        throw std::invalid_argument("assemble_input: normalizer not fitted");
    }
    const auto feats = f.features();
    const auto idx = feature_indices(mode);
    Eigen::VectorXd x(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        x[static_cast<Eigen::Index>(i)] = norm.normalize(idx[i], feats[static_cast<std::size_t>(idx[i])]);
    }
    return x;
}

std::vector<Fold> split_loocv(std::span<const Session> sessions) {
    std::set<std::string> ids;
    for (const Session& s : sessions) ids.insert(s.participant_id);
    if (ids.size() < 2) {
        throw std::invalid_argument("split_loocv: need at least 2 participants, got " +
                                    std::to_string(ids.size()));
    }
    std::vector<Fold> folds;
    for (const std::string& held_out : ids) {
        Fold f;
        f.test_participant = held_out;
        for (const std::string& p : ids) {
            if (p != held_out) f.train_participants.push_back(p);
        }
        folds.push_back(std::move(f));
    }
    return folds;
}

}  // namespace htrail::data
