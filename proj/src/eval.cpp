#include "htrail/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "text_io.hpp"

namespace htrail::eval {

using data::kObsLen;
using data::kPredLen;
using data::kWindowLen;
using detail::fmt_real;
using detail::parse_real;
using detail::split_ws;
using geom::Pose2D;
using geom::RelPose;

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double dist(double dx, double dy) { return std::hypot(dx, dy); }

MetricsReport metrics_impl(std::span<const double> ex, std::span<const double> ey,
                           std::span<const double> eth) {
    MetricsReport r;
    r.windows = 1;
    double dsum = 0.0;
    double asum = 0.0;
    for (int i = 0; i < kPredLen; ++i) {
        const double d = dist(ex[static_cast<std::size_t>(i)], ey[static_cast<std::size_t>(i)]);
        const double a = std::abs(geom::wrap_angle(eth[static_cast<std::size_t>(i)])) * kRadToDeg;
        dsum += d;
        asum += a;
        if (i == kPredLen - 1) {
            r.fde = d;
            r.fae = a;
        }
    }
    r.mde = dsum / kPredLen;
    r.mae = asum / kPredLen;
    return r;
}

template <typename P>
MetricsReport metrics_of(std::span<const P> pred, std::span<const P> truth) {
    if (pred.size() != static_cast<std::size_t>(kPredLen) || truth.size() != pred.size()) {
        throw std::invalid_argument("compute_metrics: need 12 predicted and 12 true poses");
    }
    std::array<double, kPredLen> ex, ey, eth;
    for (int i = 0; i < kPredLen; ++i) {
        const auto& a = pred[static_cast<std::size_t>(i)];
        const auto& b = truth[static_cast<std::size_t>(i)];
        ex[static_cast<std::size_t>(i)] = a.x - b.x;
        ey[static_cast<std::size_t>(i)] = a.y - b.y;
        eth[static_cast<std::size_t>(i)] = a.theta - b.theta;
    }
    return metrics_impl(ex, ey, eth);
}

}  // namespace

int baseline_fit_n(std::span<const data::Session> sessions) {
    std::array<double, kMaxLag + 1> acc{};
    std::array<long, kMaxLag + 1> cnt{};
    for (const data::Session& s : sessions) {
        const int len = static_cast<int>(s.frames.size());
        for (int n = 1; n <= kMaxLag; ++n) {
            for (int t = n; t < len; ++t) {
                const Pose2D& h = s.frames[static_cast<std::size_t>(t)].human_world;
                const Pose2D& r = s.frames[static_cast<std::size_t>(t - n)].robot_world;
                acc[static_cast<std::size_t>(n)] += dist(h.x - r.x, h.y - r.y);
                cnt[static_cast<std::size_t>(n)] += 1;
            }
        }
    }
    int best = 0;
    double best_mean = 0.0;
    for (int n = 1; n <= kMaxLag; ++n) {
        if (cnt[static_cast<std::size_t>(n)] == 0) continue;
        const double mean =
            acc[static_cast<std::size_t>(n)] / static_cast<double>(cnt[static_cast<std::size_t>(n)]);
        if (best == 0 || mean < best_mean) {
            best = n;
            best_mean = mean;
        }
    }
    if (best == 0) throw std::invalid_argument("baseline_fit_n: sessions too short for any lag");
    return best;
}

bool baseline_applicable(const data::Window& w, int n) {
    return w.start + kObsLen - 1 - n >= 0;
}

std::vector<Pose2D> baseline_predict(const data::Window& w, const BaselineConfig& cfg) {
    if (cfg.n < 1) throw std::invalid_argument("baseline_predict: lag must be >= 1");
    if (!baseline_applicable(w, cfg.n)) {
        throw std::invalid_argument("baseline_predict: lag reaches before the session start");
    }
    const auto& frames = w.session->frames;
    const int anchor = w.start + kObsLen - 1;
    RelPose delta;  // identity
    if (!cfg.zero_offset) {
        delta = geom::relative(frames[static_cast<std::size_t>(anchor - cfg.n)].robot_world,
                               frames[static_cast<std::size_t>(anchor)].human_world);
    }
    std::vector<Pose2D> pred;
    pred.reserve(kPredLen);
    for (int i = 0; i < kPredLen; ++i) {
        const int t = w.start + kObsLen + i;
        pred.push_back(
            geom::compose(frames[static_cast<std::size_t>(t - cfg.n)].robot_world, delta));
    }
    return pred;
}

MetricsReport compute_metrics(std::span<const Pose2D> pred, std::span<const Pose2D> truth) {
    return metrics_of(pred, truth);
}

MetricsReport compute_metrics(std::span<const RelPose> pred, std::span<const RelPose> truth) {
    return metrics_of(pred, truth);
}

MetricsReport aggregate(std::span<const MetricsReport> reports) {
    if (reports.empty()) throw std::invalid_argument("aggregate: no reports");
    MetricsReport out;
    out.method = reports.front().method;
    for (const MetricsReport& r : reports) {
        out.mde += r.mde * static_cast<double>(r.windows);
        out.fde += r.fde * static_cast<double>(r.windows);
        out.mae += r.mae * static_cast<double>(r.windows);
        out.fae += r.fae * static_cast<double>(r.windows);
        out.windows += r.windows;
    }
    if (out.windows == 0) throw std::invalid_argument("aggregate: zero windows");
    const double inv = 1.0 / static_cast<double>(out.windows);
    out.mde *= inv;
    out.fde *= inv;
    out.mae *= inv;
    out.fae *= inv;
    return out;
}

namespace {

// running window-weighted sums for one method
struct Accum {
    MetricsReport sum;

    void add(const MetricsReport& r) {
        sum.mde += r.mde * static_cast<double>(r.windows);
        sum.fde += r.fde * static_cast<double>(r.windows);
        sum.mae += r.mae * static_cast<double>(r.windows);
        sum.fae += r.fae * static_cast<double>(r.windows);
        sum.windows += r.windows;
    }
    MetricsReport finish(const std::string& method) const {
        MetricsReport r = sum;
        r.method = method;
        if (r.windows > 0) {
            const double inv = 1.0 / static_cast<double>(r.windows);
            r.mde *= inv;
            r.fde *= inv;
            r.mae *= inv;
            r.fae *= inv;
        }
        return r;
    }
};

std::vector<RelPose> truth_rel(const data::Window& w) {
    std::vector<RelPose> t;
    t.reserve(kPredLen);
    for (int i = kObsLen; i < kWindowLen; ++i) {
        const auto& h = w.frame(i).human;
        t.push_back(RelPose{h[0], h[1], h[2]});
    }
    return t;
}

std::vector<Pose2D> truth_world(const data::Window& w) {
    std::vector<Pose2D> t;
    t.reserve(kPredLen);
    for (int i = kObsLen; i < kWindowLen; ++i) t.push_back(w.frame(i).human_world);
    return t;
}

}  // namespace

AblationResult run_ablation(std::span<const data::Session> sessions, const AblationConfig& cfg) {
    const auto folds = data::split_loocv(sessions);
    AblationResult res;
    Accum baseline_acc;
    std::vector<Accum> mode_acc(cfg.modes.size());

    for (const data::Fold& fold : folds) {
        try {
            std::vector<data::Session> train_sessions;
            std::vector<data::Session> test_sessions;
            for (const data::Session& s : sessions) {
                if (s.participant_id == fold.test_participant) {
                    test_sessions.push_back(s);
                } else {
                    train_sessions.push_back(s);
                }
            }
            const auto train_windows = data::window_sessions(train_sessions);
            if (train_windows.empty()) throw std::invalid_argument("no training windows");
            const data::Normalizer norm = data::fit_normalizer(train_windows);
            const int n = baseline_fit_n(train_sessions);

            FoldArtifacts art;
            art.fold = fold;
            art.baseline_n = n;
            art.normalizer = norm;
            for (data::AblationMode mode : cfg.modes) {
                art.models.push_back(model::train(train_windows, mode, norm, cfg.train).params);
            }

            std::vector<data::Window> eval_windows;
            for (const data::Window& w : data::window_sessions(test_sessions)) {
                if (baseline_applicable(w, n)) eval_windows.push_back(w);
            }
            if (eval_windows.empty()) throw std::invalid_argument("no evaluable windows");

            const BaselineConfig bl{n, cfg.baseline_zero_offset};
            for (const data::Window& w : eval_windows) {
                const auto pred = baseline_predict(w, bl);
                const auto truth = truth_world(w);
                baseline_acc.add(compute_metrics(pred, truth));
            }
            for (std::size_t mi = 0; mi < cfg.modes.size(); ++mi) {
                for (const data::Window& w : eval_windows) {
                    const auto pred = model::predict(art.models[mi], w, norm);
                    const auto truth = truth_rel(w);
                    mode_acc[mi].add(compute_metrics(std::span<const RelPose>(pred.p),
                                                     std::span<const RelPose>(truth)));
                }
            }
            res.folds.push_back(std::move(art));
        } catch (const std::exception& e) {
            throw std::runtime_error("fold holding out '" + fold.test_participant +
                                     "': " + e.what());
        }
    }

    res.table.push_back(baseline_acc.finish("Baseline"));
    for (std::size_t mi = 0; mi < cfg.modes.size(); ++mi) {
        res.table.push_back(mode_acc[mi].finish(data::mode_name(cfg.modes[mi])));
    }
    return res;
}

void export_trajectories(std::ostream& os, const data::Window& w,
                         std::span<const std::string> methods,
                         std::span<const std::vector<Pose2D>> preds) {
    if (methods.size() != preds.size()) {
        throw std::invalid_argument("export_trajectories: one prediction set per method");
    }
    for (const auto& p : preds) {
        if (p.size() != static_cast<std::size_t>(kPredLen)) {
            throw std::invalid_argument("export_trajectories: predictions must cover 12 steps");
        }
    }
    os << "step,time_s,truth_x,truth_y,truth_theta";
    for (const std::string& m : methods) {
        os << ',' << m << "_x," << m << "_y," << m << "_theta";
    }
    os << "\n";
    const double dt = 1.0 / static_cast<double>(w.session->fps);
    for (int i = 0; i < kWindowLen; ++i) {
        const Pose2D& truth = w.frame(i).human_world;
        os << (w.start + i) << ',' << fmt_real((w.start + i) * dt) << ',' << fmt_real(truth.x)
           << ',' << fmt_real(truth.y) << ',' << fmt_real(truth.theta);
        for (const auto& p : preds) {
            if (i < kObsLen) {
                os << ",,,";
            } else {
                const Pose2D& q = p[static_cast<std::size_t>(i - kObsLen)];
                os << ',' << fmt_real(q.x) << ',' << fmt_real(q.y) << ',' << fmt_real(q.theta);
            }
        }
        os << "\n";
    }
}

void write_metrics(std::ostream& os, std::span<const MetricsReport> table,
                   std::span<const std::string> comments) {
    for (const std::string& c : comments) os << "# " << c << "\n";
    os << "method\tmde_m\tfde_m\tmae_deg\tfae_deg\twindows\n";
    for (const MetricsReport& r : table) {
        os << r.method << '\t' << fmt_real(r.mde) << '\t' << fmt_real(r.fde) << '\t'
           << fmt_real(r.mae) << '\t' << fmt_real(r.fae) << '\t' << r.windows << "\n";
    }
}

std::vector<MetricsReport> read_metrics(std::istream& is) {
    std::vector<MetricsReport> out;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> tok;
        std::stringstream ss(line);
        std::string t;
        while (std::getline(ss, t, '\t')) tok.push_back(t);
        if (!header_seen) {
            if (tok.empty() || tok[0] != "method") {
                throw data::malformed_record(line_no, "expected metrics header row");
            }
            header_seen = true;
            continue;
        }
        if (tok.size() != 6) {
            throw data::malformed_record(line_no, "expected 6 tab-separated fields");
        }
        MetricsReport r;
        r.method = tok[0];
        r.mde = parse_real(tok[1], line_no);
        r.fde = parse_real(tok[2], line_no);
        r.mae = parse_real(tok[3], line_no);
        r.fae = parse_real(tok[4], line_no);
        r.windows = static_cast<long>(parse_real(tok[5], line_no));
        out.push_back(std::move(r));
    }
    if (!header_seen) throw data::malformed_record(line_no, "metrics file has no header row");
    return out;
}

std::string format_metrics_table(std::span<const MetricsReport> table) {
    std::ostringstream os;
    os << "method     mde[m]    fde[m]    mae[deg]  fae[deg]  windows\n";
    char buf[160];
    for (const MetricsReport& r : table) {
        std::snprintf(buf, sizeof(buf), "%-9s  %-8.4f  %-8.4f  %-8.3f  %-8.3f  %ld\n",
                      r.method.c_str(), r.mde, r.fde, r.mae, r.fae, r.windows);
        os << buf;
    }
    return os.str();
}

}  // namespace htrail::eval
