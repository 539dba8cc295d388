#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "htrail/dataset.hpp"
#include "htrail/geometry.hpp"
#include "htrail/random.hpp"

namespace htrail::model {

// Thrown when training or inference produces non-finite numbers.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One gated recurrent cell:
//   z  = sigmoid(w_xz x + w_hz h + b_z)
//   r  = sigmoid(w_xr x + w_hr h + b_r)
//   hc = tanh(w_xh x + w_hh (r . h) + b_h)
//   h' = z . h + (1 - z) . hc
struct GruParams {
    Eigen::MatrixXd w_xz, w_hz, w_xr, w_hr, w_xh, w_hh;
    Eigen::VectorXd b_z, b_r, b_h;

    GruParams() = default;
    GruParams(int input, int hidden);  // zero initialized

    int input() const { return static_cast<int>(w_xz.cols()); }
    int hidden() const { return static_cast<int>(w_xz.rows()); }
};

// Two stacked GRUs, a linear readout, and a residual from the sliced input.
// The same parameter set drives both encoding and decoding.
struct ModelParams {
    data::AblationMode mode = data::AblationMode::R;
    int hidden = 64;
    GruParams gru1;  // input_dim(mode) -> hidden
    GruParams gru2;  // hidden -> hidden
    Eigen::MatrixXd w_o;  // output_dim(mode) x hidden
    Eigen::VectorXd b_o;

    static ModelParams zeros(data::AblationMode mode, int hidden = 64);
    // Entries uniform in [-0.08, 0.08] drawn from the stream.
    static ModelParams init(data::AblationMode mode, int hidden, rng::Stream& stream);

    int input_dim() const { return data::input_dim(mode); }
    int output_dim() const { return data::output_dim(mode); }
};

struct HiddenState {
    Eigen::VectorXd h1;
    Eigen::VectorXd h2;

    static HiddenState zero(int hidden);
};

// Flat views over every parameter tensor in one fixed order, shared by the
// optimizer, gradient clipping, serialization, and the gradient checks.
struct TensorView {
    std::string name;
    double* data;
    Eigen::Index rows;
    Eigen::Index cols;  // 1 for bias vectors

    Eigen::Index size() const { return rows * cols; }
};
std::vector<TensorView> tensor_views(ModelParams& p);

Eigen::VectorXd gru_cell(const GruParams& p, const Eigen::VectorXd& h_prev,
                         const Eigen::VectorXd& x);

// Drops the 5 leading robot features.
Eigen::VectorXd slice(const Eigen::VectorXd& input, data::AblationMode mode);

// One network step: output = w_o h2' + b_o + slice(input).
std::pair<Eigen::VectorXd, HiddenState> forward_step(const ModelParams& m, const HiddenState& s,
                                                     const Eigen::VectorXd& input);

// Raw decoder outputs in normalized space, one row per horizon step (12 x
// output_dim). The encoder consumes the 8 observed frames from a zero hidden
// state; each horizon step feeds the true normalized robot features together
// with the previous output back in.
Eigen::MatrixXd predict_normalized(const ModelParams& m, const data::Window& w,
                                   const data::Normalizer& norm);

struct Prediction {
    std::vector<geom::RelPose> p;  // 12 robot-frame poses, denormalized, wrapped
    Eigen::MatrixXd haptic;        // 12 x 2, or 12 x 0 when the mode lacks H
    Eigen::MatrixXd depth;         // 12 x 5, or 12 x 0 when the mode lacks D
};
Prediction predict(const ModelParams& m, const data::Window& w, const data::Normalizer& norm);

// Mean squared error over windows, the 12 horizon steps, and the 3 pose
// components, in normalized space.
double loss(const ModelParams& m, std::span<const data::Window> windows,
            const data::Normalizer& norm);

// Exact loss gradient via backpropagation through time, including the paths
// through outputs fed back as decoder inputs. grads is overwritten. Returns
// the loss. Chunks the batch and reduces the chunks in a fixed order, so the
// result does not depend on the thread count.
double loss_and_gradients(const ModelParams& m, std::span<const data::Window> windows,
                          const data::Normalizer& norm, ModelParams& grads);

// Single-window reference of the same computation, kept for testing the
// batched kernels. detach_feedback cuts the gradient flow through fed-back
// outputs (forward pass unchanged) to show that path matters.
double loss_and_gradients_reference(const ModelParams& m, std::span<const data::Window> windows,
                                    const data::Normalizer& norm, ModelParams& grads,
                                    bool detach_feedback = false);

ModelParams gradients(const ModelParams& m, std::span<const data::Window> windows,
                      const data::Normalizer& norm);

}  // namespace htrail::model
