#include "htrail/train.hpp"

#include <cmath>
#include <numeric>

namespace htrail::model {

using Eigen::VectorXd;

double clip_gradients(ModelParams& grads, double max_norm) {
    double sq = 0.0;
    const auto views = tensor_views(grads);
    for (const TensorView& t : views) {
        sq += Eigen::Map<const VectorXd>(t.data, t.size()).squaredNorm();
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (const TensorView& t : views) {
            Eigen::Map<VectorXd>(t.data, t.size()) *= scale;
        }
    }
    return norm;
}

void adam_step(ModelParams& params, ModelParams& grads, AdamState& st, double lr, double beta1,
               double beta2, double eps) {
    const auto pv = tensor_views(params);
    const auto gv = tensor_views(grads);
    if (st.m.empty()) {
        for (const TensorView& t : pv) {
            st.m.push_back(VectorXd::Zero(t.size()));
            st.v.push_back(VectorXd::Zero(t.size()));
        }
    }
    st.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < pv.size(); ++i) {
        Eigen::Map<VectorXd> p(pv[i].data, pv[i].size());
        Eigen::Map<const VectorXd> g(gv[i].data, gv[i].size());
        VectorXd& m = st.m[i];
        VectorXd& v = st.v[i];
        m = beta1 * m + (1.0 - beta1) * g;
        v = (beta2 * v.array() + (1.0 - beta2) * g.array().square()).matrix();
        p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    }
}

TrainResult train(std::span<const data::Window> windows, data::AblationMode mode,
                  const data::Normalizer& norm, const TrainConfig& cfg) {
    if (windows.empty()) throw std::invalid_argument("train: no windows");
    if (cfg.epochs < 0 || cfg.batch_size <= 0 || cfg.hidden <= 0) {
        throw std::invalid_argument("train: bad config");
    }

    rng::Stream stream(cfg.seed);
    TrainResult res;
    res.params = ModelParams::init(mode, cfg.hidden, stream);
    res.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));

    const int n = static_cast<int>(windows.size());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    AdamState st;
    ModelParams grads;
    std::vector<data::Window> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng::shuffle(order, stream);
        double acc = 0.0;
        for (int first = 0; first < n; first += cfg.batch_size) {
            const int b = std::min(cfg.batch_size, n - first);
            batch.clear();
            for (int j = 0; j < b; ++j) {
                batch.push_back(windows[static_cast<std::size_t>(order[static_cast<std::size_t>(
                    first + j)])]);
            }
            const double l = loss_and_gradients(res.params, batch, norm, grads);
            if (!std::isfinite(l)) throw numeric_error("train: non-finite loss");
            acc += l * b;
            clip_gradients(grads, cfg.clip_norm);
            adam_step(res.params, grads, st, cfg.lr);
        }
        res.loss_history.push_back(acc / n);
    }
    return res;
}

}  // namespace htrail::model
