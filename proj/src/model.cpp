#include "htrail/model.hpp"

#include <cmath>

namespace htrail::model {

using data::kObsLen;
using data::kPredLen;
using data::kRobotDim;
using data::kWindowLen;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd sigmoid(const VectorXd& v) {
    return (1.0 / (1.0 + (-v.array()).exp())).matrix();
}

void check(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, rng::Stream& stream) {
    MatrixXd m(rows, cols);
    // column-major to match storage order, so init order equals memory order
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = stream.uniform(-0.08, 0.08);
    return m;
}

}  // namespace

GruParams::GruParams(int input, int hidden)
    : w_xz(MatrixXd::Zero(hidden, input)),
      w_hz(MatrixXd::Zero(hidden, hidden)),
      w_xr(MatrixXd::Zero(hidden, input)),
      w_hr(MatrixXd::Zero(hidden, hidden)),
      w_xh(MatrixXd::Zero(hidden, input)),
      w_hh(MatrixXd::Zero(hidden, hidden)),
      b_z(VectorXd::Zero(hidden)),
      b_r(VectorXd::Zero(hidden)),
      b_h(VectorXd::Zero(hidden)) {}

ModelParams ModelParams::zeros(data::AblationMode mode, int hidden) {
    ModelParams m;
    m.mode = mode;
    m.hidden = hidden;
    m.gru1 = GruParams(data::input_dim(mode), hidden);
    m.gru2 = GruParams(hidden, hidden);
    m.w_o = MatrixXd::Zero(data::output_dim(mode), hidden);
    m.b_o = VectorXd::Zero(data::output_dim(mode));
    return m;
}

ModelParams ModelParams::init(data::AblationMode mode, int hidden, rng::Stream& stream) {
    ModelParams m = zeros(mode, hidden);
    for (const TensorView& t : tensor_views(m)) {
        Eigen::Map<MatrixXd>(t.data, t.rows, t.cols) = uniform_matrix(t.rows, t.cols, stream);
    }
    return m;
}

HiddenState HiddenState::zero(int hidden) {
    return HiddenState{VectorXd::Zero(hidden), VectorXd::Zero(hidden)};
}

std::vector<TensorView> tensor_views(ModelParams& p) {
    std::vector<TensorView> out;
    out.reserve(20);
    auto add = [&out](const char* name, MatrixXd& m) {
        out.push_back(TensorView{name, m.data(), m.rows(), m.cols()});
    };
    auto addv = [&out](const char* name, VectorXd& v) {
        out.push_back(TensorView{name, v.data(), v.size(), 1});
    };
    auto gru = [&](const char* prefix, GruParams& g) {
        const std::string p0(prefix);
        add((p0 + ".w_xz").c_str(), g.w_xz);
        add((p0 + ".w_hz").c_str(), g.w_hz);
        add((p0 + ".w_xr").c_str(), g.w_xr);
        add((p0 + ".w_hr").c_str(), g.w_hr);
        add((p0 + ".w_xh").c_str(), g.w_xh);
        add((p0 + ".w_hh").c_str(), g.w_hh);
        addv((p0 + ".b_z").c_str(), g.b_z);
        addv((p0 + ".b_r").c_str(), g.b_r);
        addv((p0 + ".b_h").c_str(), g.b_h);
    };
    gru("gru1", p.gru1);
    gru("gru2", p.gru2);
    add("w_o", p.w_o);
    addv("b_o", p.b_o);
    return out;
}

VectorXd gru_cell(const GruParams& p, const VectorXd& h_prev, const VectorXd& x) {
    check(p.w_xz.cols() == x.size(), "gru_cell: input size mismatch");
    check(p.w_hz.cols() == h_prev.size(), "gru_cell: hidden size mismatch");
    const VectorXd z = sigmoid(p.w_xz * x + p.w_hz * h_prev + p.b_z);
    const VectorXd r = sigmoid(p.w_xr * x + p.w_hr * h_prev + p.b_r);
    const VectorXd c = (p.w_xh * x + p.w_hh * (r.cwiseProduct(h_prev)) + p.b_h).array().tanh();
    return z.cwiseProduct(h_prev) + (VectorXd::Ones(z.size()) - z).cwiseProduct(c);
}

VectorXd slice(const VectorXd& input, data::AblationMode mode) {
    check(input.size() == data::input_dim(mode), "slice: input length mismatch");
    return input.tail(data::output_dim(mode));
}

std::pair<VectorXd, HiddenState> forward_step(const ModelParams& m, const HiddenState& s,
                                              const VectorXd& input) {
    check(input.size() == m.input_dim(), "forward_step: input length mismatch");
    HiddenState next;
    next.h1 = gru_cell(m.gru1, s.h1, input);
    next.h2 = gru_cell(m.gru2, s.h2, next.h1);
    VectorXd out = m.w_o * next.h2 + m.b_o + slice(input, m.mode);
    return {std::move(out), std::move(next)};
}

namespace {

// One window's true assembled inputs; decode steps splice the previous
// output behind the first 5 (robot) entries.
std::vector<VectorXd> true_inputs(const data::Window& w, data::AblationMode mode,
                                  const data::Normalizer& norm) {
    std::vector<VectorXd> a;
    a.reserve(kWindowLen);
    for (int t = 0; t < kWindowLen; ++t) a.push_back(data::assemble_input(w.frame(t), mode, norm));
    return a;
}

struct StepCache {
    VectorXd x;
    VectorXd h1p, z1, r1, c1, h1;
    VectorXd h2p, z2, r2, c2, h2;
    VectorXd out;
};

void gru_forward_cached(const GruParams& p, const VectorXd& h_prev, const VectorXd& x,
                        VectorXd& z, VectorXd& r, VectorXd& c, VectorXd& h) {
    z = sigmoid(p.w_xz * x + p.w_hz * h_prev + p.b_z);
    r = sigmoid(p.w_xr * x + p.w_hr * h_prev + p.b_r);
    c = (p.w_xh * x + p.w_hh * (r.cwiseProduct(h_prev)) + p.b_h).array().tanh();
    h = z.cwiseProduct(h_prev) + (VectorXd::Ones(z.size()) - z).cwiseProduct(c);
}

// Unrolled 20-step forward of one window with all gate activations kept.
std::vector<StepCache> window_forward(const ModelParams& m, const std::vector<VectorXd>& a) {
    const int out_dim = m.output_dim();
    std::vector<StepCache> steps(kWindowLen);
    VectorXd h1 = VectorXd::Zero(m.hidden);
    VectorXd h2 = VectorXd::Zero(m.hidden);
    for (int t = 0; t < kWindowLen; ++t) {
        StepCache& s = steps[t];
        if (t < kObsLen) {
            s.x = a[static_cast<std::size_t>(t)];
        } else {
            s.x.resize(m.input_dim());
            s.x.head(kRobotDim) = a[static_cast<std::size_t>(t)].head(kRobotDim);
            s.x.tail(out_dim) = steps[t - 1].out;
        }
        s.h1p = h1;
        s.h2p = h2;
        gru_forward_cached(m.gru1, s.h1p, s.x, s.z1, s.r1, s.c1, s.h1);
        gru_forward_cached(m.gru2, s.h2p, s.h1, s.z2, s.r2, s.c2, s.h2);
        s.out = m.w_o * s.h2 + m.b_o + s.x.tail(out_dim);
        h1 = s.h1;
        h2 = s.h2;
    }
    return steps;
}

// Accumulates parameter gradients for one cell step; returns via gx/gh_prev.
void gru_cell_backward(const GruParams& p, const VectorXd& x, const VectorXd& h_prev,
                       const VectorXd& z, const VectorXd& r, const VectorXd& c, const VectorXd& gh,
                       GruParams& gp, VectorXd& gx, VectorXd& gh_prev) {
    const VectorXd du =
        (gh.array() * (1.0 - z.array()) * (1.0 - c.array().square())).matrix();
    const VectorXd dq =
        (gh.array() * (h_prev - c).array() * z.array() * (1.0 - z.array())).matrix();
    const VectorXd drh = p.w_hh.transpose() * du;
    const VectorXd ds =
        (drh.array() * h_prev.array() * r.array() * (1.0 - r.array())).matrix();

    gp.w_xh.noalias() += du * x.transpose();
    gp.w_hh.noalias() += du * (r.cwiseProduct(h_prev)).transpose();
    gp.b_h += du;
    gp.w_xr.noalias() += ds * x.transpose();
    gp.w_hr.noalias() += ds * h_prev.transpose();
    gp.b_r += ds;
    gp.w_xz.noalias() += dq * x.transpose();
    gp.w_hz.noalias() += dq * h_prev.transpose();
    gp.b_z += dq;

    gx.noalias() = p.w_xh.transpose() * du;
    gx.noalias() += p.w_xr.transpose() * ds;
    gx.noalias() += p.w_xz.transpose() * dq;

    gh_prev = gh.cwiseProduct(z) + drh.cwiseProduct(r);
    gh_prev.noalias() += p.w_hr.transpose() * ds;
    gh_prev.noalias() += p.w_hz.transpose() * dq;
}

}  // namespace

Eigen::MatrixXd predict_normalized(const ModelParams& m, const data::Window& w,
                                   const data::Normalizer& norm) {
    check(w.session != nullptr &&
              w.start + kWindowLen <= static_cast<int>(w.session->frames.size()) && w.start >= 0,
          "predict: incomplete window");
    check(norm.fitted(), "predict: normalizer not fitted");
    const auto a = true_inputs(w, m.mode, norm);
    const auto steps = window_forward(m, a);
    Eigen::MatrixXd out(kPredLen, m.output_dim());
    for (int t = 0; t < kPredLen; ++t) out.row(t) = steps[kObsLen + t].out.transpose();
    return out;
}

Prediction predict(const ModelParams& m, const data::Window& w, const data::Normalizer& norm) {
    const Eigen::MatrixXd raw = predict_normalized(m, w, norm);
    const std::vector<int> fidx = data::feature_indices(m.mode);

    Prediction pred;
    pred.p.reserve(kPredLen);
    const bool with_h = data::uses_haptic(m.mode);
    const bool with_d = data::uses_depth(m.mode);
    pred.haptic.resize(kPredLen, with_h ? data::kHapticDim : 0);
    pred.depth.resize(kPredLen, with_d ? data::kDepthDim : 0);
    for (int t = 0; t < kPredLen; ++t) {
        int j = 0;  // output position; feature dim is fidx[kRobotDim + j]
        auto next = [&]() {
            const double v = norm.denormalize(fidx[static_cast<std::size_t>(kRobotDim + j)],
                                              raw(t, j));
            ++j;
            return v;
        };
        geom::RelPose p;
        p.x = next();
        p.y = next();
        p.theta = geom::wrap_angle(next());
        pred.p.push_back(p);
        for (int k = 0; k < pred.haptic.cols(); ++k) pred.haptic(t, k) = next();
        for (int k = 0; k < pred.depth.cols(); ++k) pred.depth(t, k) = next();
    }
    return pred;
}

double loss(const ModelParams& m, std::span<const data::Window> windows,
            const data::Normalizer& norm) {
    check(!windows.empty(), "loss: empty batch");
    double acc = 0.0;
    for (const data::Window& w : windows) {
        const auto a = true_inputs(w, m.mode, norm);
        const auto steps = window_forward(m, a);
        for (int t = kObsLen; t < kWindowLen; ++t) {
            const VectorXd tgt = a[static_cast<std::size_t>(t)].segment(kRobotDim, data::kHumanDim);
            acc += (steps[static_cast<std::size_t>(t)].out.head(data::kHumanDim) - tgt)
                       .squaredNorm();
        }
    }
    return acc / (static_cast<double>(windows.size()) * kPredLen * data::kHumanDim);
}

double loss_and_gradients_reference(const ModelParams& m, std::span<const data::Window> windows,
                                    const data::Normalizer& norm, ModelParams& grads,
                                    bool detach_feedback) {
    check(!windows.empty(), "gradients: empty batch");
    grads = ModelParams::zeros(m.mode, m.hidden);
    const int out_dim = m.output_dim();
    const double coef =
        2.0 / (static_cast<double>(windows.size()) * kPredLen * data::kHumanDim);
    double acc = 0.0;

    for (const data::Window& w : windows) {
        const auto a = true_inputs(w, m.mode, norm);
        const auto steps = window_forward(m, a);

        VectorXd gh1 = VectorXd::Zero(m.hidden);
        VectorXd gh2 = VectorXd::Zero(m.hidden);
        VectorXd fb = VectorXd::Zero(out_dim);  // into out[t] from step t+1
        VectorXd gx1(m.input_dim()), gx2(m.hidden), gh_prev(m.hidden);
        for (int t = kWindowLen - 1; t >= 0; --t) {
            const StepCache& s = steps[static_cast<std::size_t>(t)];
            VectorXd gout = fb;
            if (t >= kObsLen) {
                const VectorXd tgt =
                    a[static_cast<std::size_t>(t)].segment(kRobotDim, data::kHumanDim);
                const VectorXd err = s.out.head(data::kHumanDim) - tgt;
                acc += err.squaredNorm();
                gout.head(data::kHumanDim) += coef * err;
            }
            if (t >= kObsLen - 1) {
                grads.w_o.noalias() += gout * s.h2.transpose();
                grads.b_o += gout;
                gh2.noalias() += m.w_o.transpose() * gout;
            }
            gru_cell_backward(m.gru2, s.h1, s.h2p, s.z2, s.r2, s.c2, gh2, grads.gru2, gx2,
                              gh_prev);
            gh2 = gh_prev;
            gh1 += gx2;
            gru_cell_backward(m.gru1, s.x, s.h1p, s.z1, s.r1, s.c1, gh1, grads.gru1, gx1,
                              gh_prev);
            gh1 = gh_prev;
            if (t >= kObsLen && !detach_feedback) {
                fb = gx1.tail(out_dim) + gout;  // input splice + residual paths
            } else {
                fb.setZero();
            }
        }
    }
    return acc / (static_cast<double>(windows.size()) * kPredLen * data::kHumanDim);
}

ModelParams gradients(const ModelParams& m, std::span<const data::Window> windows,
                      const data::Normalizer& norm) {
    ModelParams g;
    loss_and_gradients(m, windows, norm, g);
    return g;
}

}  // namespace htrail::model
