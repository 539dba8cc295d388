#pragma once

#include <cstdint>
#include <vector>

#include "htrail/model.hpp"

namespace htrail::model {

struct TrainConfig {
    int epochs = 500;
    int batch_size = 64;
    double lr = 0.001;
    std::uint64_t seed = 1;
    double clip_norm = 5.0;
    int hidden = 64;
};

// First/second moment accumulators, aligned with the tensor_views order.
struct AdamState {
    long step = 0;
    std::vector<Eigen::VectorXd> m;
    std::vector<Eigen::VectorXd> v;
};

// Scales grads in place so the global L2 norm is at most max_norm.
// Returns the pre-clip norm.
double clip_gradients(ModelParams& grads, double max_norm);

// Standard Adam with bias correction; the state is created lazily on the
// first call.
void adam_step(ModelParams& params, ModelParams& grads, AdamState& st, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

struct TrainResult {
    ModelParams params;
    std::vector<double> loss_history;  // per-epoch mean training loss
};

// Seeded init, per-epoch shuffle, minibatch gradients -> clip -> adam.
// Deterministic given (windows order, cfg). Throws numeric_error when the
// loss stops being finite.
TrainResult train(std::span<const data::Window> windows, data::AblationMode mode,
                  const data::Normalizer& norm, const TrainConfig& cfg);

}  // namespace htrail::model
