#include <omp.h>

#include <vector>

#include "htrail/model.hpp"

// Batched training kernels. A batch is cut into fixed-width chunks; each
// chunk runs the 20-step forward/backward as hidden x chunk matrix products,
// and the per-chunk gradients are reduced in chunk order afterwards. The
// partitioning and the reduction order are independent of the thread count,
// so results are bitwise stable under OMP_NUM_THREADS.

namespace htrail::model {

using data::kHumanDim;
using data::kObsLen;
using data::kPredLen;
using data::kRobotDim;
using data::kWindowLen;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr int kChunk = 16;

inline void sigmoid_inplace(MatrixXd& m) {
    m = (1.0 / (1.0 + (-m.array()).exp())).matrix();
}

struct ChunkCache {
    std::vector<MatrixXd> x;    // input_dim x b
    std::vector<MatrixXd> z1, r1, c1, h1;
    std::vector<MatrixXd> z2, r2, c2, h2;
    std::vector<MatrixXd> out;  // out_dim x b, steps kObsLen-1 .. 19 only
};

struct GruScratch {
    MatrixXd pre_z, pre_r, pre_c, rh;
};

void gru_forward_chunk(const GruParams& p, const MatrixXd& h_prev, const MatrixXd& x,
                       GruScratch& ws, MatrixXd& z, MatrixXd& r, MatrixXd& c, MatrixXd& h) {
    ws.pre_z.noalias() = p.w_xz * x;
    ws.pre_z.noalias() += p.w_hz * h_prev;
    ws.pre_z.colwise() += p.b_z;
    z = ws.pre_z;
    sigmoid_inplace(z);

    ws.pre_r.noalias() = p.w_xr * x;
    ws.pre_r.noalias() += p.w_hr * h_prev;
    ws.pre_r.colwise() += p.b_r;
    r = ws.pre_r;
    sigmoid_inplace(r);

    ws.rh = r.cwiseProduct(h_prev);
    ws.pre_c.noalias() = p.w_xh * x;
    ws.pre_c.noalias() += p.w_hh * ws.rh;
    ws.pre_c.colwise() += p.b_h;
    c = ws.pre_c.array().tanh().matrix();

    h = z.cwiseProduct(h_prev) + (1.0 - z.array()).matrix().cwiseProduct(c);
}

// Mirrors gru_cell_backward in model.cpp, on chunk matrices.
void gru_backward_chunk(const GruParams& p, const MatrixXd& x, const MatrixXd& h_prev,
                        const MatrixXd& z, const MatrixXd& r, const MatrixXd& c,
                        const MatrixXd& gh, GruParams& gp, MatrixXd& gx, MatrixXd& gh_prev,
                        GruScratch& ws) {
    MatrixXd& du = ws.pre_c;
    du = (gh.array() * (1.0 - z.array()) * (1.0 - c.array().square())).matrix();
    MatrixXd& dq = ws.pre_z;
    dq = (gh.array() * (h_prev - c).array() * z.array() * (1.0 - z.array())).matrix();
    MatrixXd& drh = ws.rh;
    drh.noalias() = p.w_hh.transpose() * du;
    MatrixXd& ds = ws.pre_r;
    ds = (drh.array() * h_prev.array() * r.array() * (1.0 - r.array())).matrix();

    gp.w_xh.noalias() += du * x.transpose();
    gp.w_hh.noalias() += du * (r.cwiseProduct(h_prev)).transpose();
    gp.b_h += du.rowwise().sum();
    gp.w_xr.noalias() += ds * x.transpose();
    gp.w_hr.noalias() += ds * h_prev.transpose();
    gp.b_r += ds.rowwise().sum();
    gp.w_xz.noalias() += dq * x.transpose();
    gp.w_hz.noalias() += dq * h_prev.transpose();
    gp.b_z += dq.rowwise().sum();

    gx.noalias() = p.w_xh.transpose() * du;
    gx.noalias() += p.w_xr.transpose() * ds;
    gx.noalias() += p.w_xz.transpose() * dq;

    gh_prev = gh.cwiseProduct(z) + drh.cwiseProduct(r);
    gh_prev.noalias() += p.w_hr.transpose() * ds;
    gh_prev.noalias() += p.w_hz.transpose() * dq;
}

// Forward + backward over windows [first, first+b); gradient contributions
// are scaled by coef and added into g. Returns the chunk's raw squared error.
double chunk_pass(const ModelParams& m, std::span<const data::Window> windows, int first, int b,
                  const data::Normalizer& norm, double coef, ModelParams& g) {
    const int in_dim = m.input_dim();
    const int out_dim = m.output_dim();
    const int hid = m.hidden;

    // true inputs and targets
    std::vector<MatrixXd> a(kWindowLen, MatrixXd(in_dim, b));
    for (int j = 0; j < b; ++j) {
        const data::Window& w = windows[static_cast<std::size_t>(first + j)];
        for (int t = 0; t < kWindowLen; ++t) {
            a[static_cast<std::size_t>(t)].col(j) = data::assemble_input(w.frame(t), m.mode, norm);
        }
    }

    ChunkCache cc;
    cc.x.assign(kWindowLen, MatrixXd());
    cc.z1.assign(kWindowLen, MatrixXd());
    cc.r1.assign(kWindowLen, MatrixXd());
    cc.c1.assign(kWindowLen, MatrixXd());
    cc.h1.assign(kWindowLen, MatrixXd());
    cc.z2.assign(kWindowLen, MatrixXd());
    cc.r2.assign(kWindowLen, MatrixXd());
    cc.c2.assign(kWindowLen, MatrixXd());
    cc.h2.assign(kWindowLen, MatrixXd());
    cc.out.assign(kWindowLen, MatrixXd());

    GruScratch ws;
    const MatrixXd hzero = MatrixXd::Zero(hid, b);

    double acc = 0.0;
    for (int t = 0; t < kWindowLen; ++t) {
        MatrixXd& x = cc.x[static_cast<std::size_t>(t)];
        if (t < kObsLen) {
            x = a[static_cast<std::size_t>(t)];
        } else {
            x.resize(in_dim, b);
            x.topRows(kRobotDim) = a[static_cast<std::size_t>(t)].topRows(kRobotDim);
            x.bottomRows(out_dim) = cc.out[static_cast<std::size_t>(t - 1)];
        }
        const MatrixXd& h1p = t == 0 ? hzero : cc.h1[static_cast<std::size_t>(t - 1)];
        const MatrixXd& h2p = t == 0 ? hzero : cc.h2[static_cast<std::size_t>(t - 1)];
        gru_forward_chunk(m.gru1, h1p, x, ws, cc.z1[static_cast<std::size_t>(t)],
                          cc.r1[static_cast<std::size_t>(t)], cc.c1[static_cast<std::size_t>(t)],
                          cc.h1[static_cast<std::size_t>(t)]);
        gru_forward_chunk(m.gru2, h2p, cc.h1[static_cast<std::size_t>(t)], ws,
                          cc.z2[static_cast<std::size_t>(t)], cc.r2[static_cast<std::size_t>(t)],
                          cc.c2[static_cast<std::size_t>(t)], cc.h2[static_cast<std::size_t>(t)]);
        if (t >= kObsLen - 1) {
            MatrixXd& out = cc.out[static_cast<std::size_t>(t)];
            out.noalias() = m.w_o * cc.h2[static_cast<std::size_t>(t)];
            out.colwise() += m.b_o;
            out += x.bottomRows(out_dim);
            if (t >= kObsLen) {
                acc += (out.topRows(kHumanDim) -
                        a[static_cast<std::size_t>(t)].middleRows(kRobotDim, kHumanDim))
                           .squaredNorm();
            }
        }
    }

    MatrixXd gh1 = MatrixXd::Zero(hid, b);
    MatrixXd gh2 = MatrixXd::Zero(hid, b);
    MatrixXd fb = MatrixXd::Zero(out_dim, b);
    MatrixXd gout(out_dim, b), gx1(in_dim, b), gx2(hid, b), gh_prev(hid, b);
    for (int t = kWindowLen - 1; t >= 0; --t) {
        gout = fb;
        if (t >= kObsLen) {
            gout.topRows(kHumanDim) +=
                coef * (cc.out[static_cast<std::size_t>(t)].topRows(kHumanDim) -
                        a[static_cast<std::size_t>(t)].middleRows(kRobotDim, kHumanDim));
        }
        if (t >= kObsLen - 1) {
            g.w_o.noalias() += gout * cc.h2[static_cast<std::size_t>(t)].transpose();
            g.b_o += gout.rowwise().sum();
            gh2.noalias() += m.w_o.transpose() * gout;
        }
        const MatrixXd& h1p = t == 0 ? hzero : cc.h1[static_cast<std::size_t>(t - 1)];
        const MatrixXd& h2p = t == 0 ? hzero : cc.h2[static_cast<std::size_t>(t - 1)];
        gru_backward_chunk(m.gru2, cc.h1[static_cast<std::size_t>(t)], h2p,
                           cc.z2[static_cast<std::size_t>(t)], cc.r2[static_cast<std::size_t>(t)],
                           cc.c2[static_cast<std::size_t>(t)], gh2, g.gru2, gx2, gh_prev, ws);
        gh2 = gh_prev;
        gh1 += gx2;
        gru_backward_chunk(m.gru1, cc.x[static_cast<std::size_t>(t)], h1p,
                           cc.z1[static_cast<std::size_t>(t)], cc.r1[static_cast<std::size_t>(t)],
                           cc.c1[static_cast<std::size_t>(t)], gh1, g.gru1, gx1, gh_prev, ws);
        gh1 = gh_prev;
        if (t >= kObsLen) {
            fb = gx1.bottomRows(out_dim) + gout;
        } else {
            fb.setZero();
        }
    }
    return acc;
}

void add_params(ModelParams& into, ModelParams& from) {
    const auto dst = tensor_views(into);
    const auto src = tensor_views(from);
    for (std::size_t i = 0; i < dst.size(); ++i) {
        Eigen::Map<VectorXd>(dst[i].data, dst[i].size()) +=
            Eigen::Map<const VectorXd>(src[i].data, src[i].size());
    }
}

}  // namespace

double loss_and_gradients(const ModelParams& m, std::span<const data::Window> windows,
                          const data::Normalizer& norm, ModelParams& grads) {
    if (windows.empty()) throw std::invalid_argument("gradients: empty batch");
    const int n = static_cast<int>(windows.size());
    const int nchunks = (n + kChunk - 1) / kChunk;
    const double coef = 2.0 / (static_cast<double>(n) * kPredLen * kHumanDim);

    std::vector<ModelParams> partial(static_cast<std::size_t>(nchunks));
    std::vector<double> partial_acc(static_cast<std::size_t>(nchunks), 0.0);

#pragma omp parallel for schedule(static)
    for (int c = 0; c < nchunks; ++c) {
        const int first = c * kChunk;
        const int b = std::min(kChunk, n - first);
        ModelParams& g = partial[static_cast<std::size_t>(c)];
        g = ModelParams::zeros(m.mode, m.hidden);
        partial_acc[static_cast<std::size_t>(c)] = chunk_pass(m, windows, first, b, norm, coef, g);
    }

    grads = ModelParams::zeros(m.mode, m.hidden);
    double acc = 0.0;
    for (int c = 0; c < nchunks; ++c) {
        add_params(grads, partial[static_cast<std::size_t>(c)]);
        acc += partial_acc[static_cast<std::size_t>(c)];
    }
    return acc / (static_cast<double>(n) * kPredLen * kHumanDim);
}

}  // namespace htrail::model
