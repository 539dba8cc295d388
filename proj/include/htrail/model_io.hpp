#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "htrail/model.hpp"
#include "htrail/train.hpp"

namespace htrail::model {

// Declared tensor shapes or mode disagree with each other or with what the
// caller expects.
struct shape_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadedModel {
    ModelParams params;
    data::Normalizer normalizer;
    TrainConfig train_echo;
};

// Versioned text format ("htrail.model.v1"): header with mode and sizes, the
// normalizer ranges, the training configuration, then each tensor row-major
// at 17 significant digits. '#' lines are comments.
void write_model(std::ostream& os, const ModelParams& m, const data::Normalizer& norm,
                 const TrainConfig& echo, std::span<const std::string> comments = {});
LoadedModel read_model(std::istream& is);

void save_model(const std::string& path, const ModelParams& m, const data::Normalizer& norm,
                const TrainConfig& echo, std::span<const std::string> comments = {});
LoadedModel load_model(const std::string& path);
// Additionally rejects files whose mode differs from expected.
LoadedModel load_model(const std::string& path, data::AblationMode expected);

}  // namespace htrail::model
