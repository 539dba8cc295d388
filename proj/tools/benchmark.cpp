#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "htrail/model.hpp"
#include "htrail/sim.hpp"
#include "htrail/train.hpp"

// Times one gradient step through the per-window reference path and through
// the chunked batch kernels, and checks that they agree.

using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double max_rel_diff(htrail::model::ModelParams& a, htrail::model::ModelParams& b) {
    const auto va = htrail::model::tensor_views(a);
    const auto vb = htrail::model::tensor_views(b);
    double worst = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        for (Eigen::Index j = 0; j < va[i].size(); ++j) {
            const double x = va[i].data[j];
            const double y = vb[i].data[j];
            const double scale = std::max({std::abs(x), std::abs(y), 1e-12});
            worst = std::max(worst, std::abs(x - y) / scale);
        }
    }
    return worst;
}

}  // namespace

int main() {
    htrail::sim::SimConfig cfg;
    cfg.seed = 42;
    std::vector<htrail::data::Session> sessions;
    for (int p = 0; p < 2; ++p) {
        for (int s = 0; s < 2; ++s) {
            sessions.push_back(htrail::sim::gen_session(cfg, "p" + std::to_string(p),
                                                        "s" + std::to_string(s)));
        }
    }
    const auto windows = htrail::data::window_sessions(sessions);
    const auto norm = htrail::data::fit_normalizer(windows);

    const auto mode = htrail::data::AblationMode::RHD;
    htrail::rng::Stream stream(7);
    const auto params = htrail::model::ModelParams::init(mode, 64, stream);

    std::printf("threads: %d\n", omp_get_max_threads());
    std::printf("windows available: %zu\n", windows.size());
    std::printf("%-8s %-12s %-12s %-10s %s\n", "batch", "reference", "batched", "speedup",
                "max rel diff");

    for (const int batch : {16, 64, 256}) {
        if (windows.size() < static_cast<std::size_t>(batch)) break;
        const std::span<const htrail::data::Window> span(windows.data(),
                                                         static_cast<std::size_t>(batch));
        htrail::model::ModelParams g_ref, g_bat;
        // warm up once, then time
        htrail::model::loss_and_gradients_reference(params, span, norm, g_ref);
        htrail::model::loss_and_gradients(params, span, norm, g_bat);

        const int reps = 5;
        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r) {
            htrail::model::loss_and_gradients_reference(params, span, norm, g_ref);
        }
        const double ref_ms = ms_since(t0) / reps;

        t0 = Clock::now();
        for (int r = 0; r < reps; ++r) {
            htrail::model::loss_and_gradients(params, span, norm, g_bat);
        }
        const double bat_ms = ms_since(t0) / reps;

        std::printf("%-8d %9.2f ms %9.2f ms %9.2fx %.3e\n", batch, ref_ms, bat_ms,
                    ref_ms / bat_ms, max_rel_diff(g_ref, g_bat));
    }
    return 0;
}
