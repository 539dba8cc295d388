#include "htrail/model_io.hpp"

#include <fstream>
#include <ostream>

#include "text_io.hpp"

namespace htrail::model {

using detail::fmt_real;
using detail::header_value;
using detail::parse_real;
using detail::split_ws;

namespace {

constexpr const char* kModelVersion = "htrail.model.v1";

// reads the next line that is neither blank nor a comment
bool next_content_line(std::istream& is, std::string& line, int& line_no) {
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line[0] != '#') return true;
    }
    return false;
}

long parse_count(const std::string& tok, int line) {
    const double v = parse_real(tok, line);
    const long n = static_cast<long>(v);
    if (static_cast<double>(n) != v || n < 0) {
        throw data::malformed_record(line, "bad count field '" + tok + "'");
    }
    return n;
}

std::uint64_t parse_u64(const std::string& tok, int line) {
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
    if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE) {
        throw data::malformed_record(line, "bad integer field '" + tok + "'");
    }
    return v;
}

}  // namespace

void write_model(std::ostream& os, const ModelParams& m, const data::Normalizer& norm,
                 const TrainConfig& echo, std::span<const std::string> comments) {
    os << kModelVersion << " mode=" << data::mode_name(m.mode) << " hidden=" << m.hidden
       << " input=" << m.input_dim() << " output=" << m.output_dim() << "\n";
    for (const std::string& c : comments) os << "# " << c << "\n";

    os << "normalizer";
    for (int d = 0; d < data::kFeatureDim; ++d) os << ' ' << fmt_real(norm.min(d));
    for (int d = 0; d < data::kFeatureDim; ++d) os << ' ' << fmt_real(norm.max(d));
    os << "\n";
    os << "train epochs=" << echo.epochs << " batch=" << echo.batch_size
       << " lr=" << fmt_real(echo.lr) << " seed=" << echo.seed
       << " clip=" << fmt_real(echo.clip_norm) << "\n";

    auto& mm = const_cast<ModelParams&>(m);  // views only read here
    for (const TensorView& t : tensor_views(mm)) {
        os << "tensor " << t.name << ' ' << t.rows << ' ' << t.cols << "\n";
        // row-major lines over column-major storage
        Eigen::Map<const Eigen::MatrixXd> mat(t.data, t.rows, t.cols);
        for (Eigen::Index r = 0; r < t.rows; ++r) {
            for (Eigen::Index c = 0; c < t.cols; ++c) {
                os << (c ? " " : "") << fmt_real(mat(r, c));
            }
            os << "\n";
        }
    }
}

LoadedModel read_model(std::istream& is) {
    std::string line;
    int line_no = 0;
    if (!next_content_line(is, line, line_no)) {
        throw data::malformed_record(1, "empty model file");
    }
    auto header = split_ws(line);
    if (header.empty() || header[0] != kModelVersion) {
        throw data::version_error("unsupported model format version '" +
                                  (header.empty() ? std::string("<empty>") : header[0]) +
                                  "' (expected " + kModelVersion + ")");
    }

    LoadedModel lm;
    const data::AblationMode mode = data::parse_mode(header_value(header, "mode"));
    const long hidden = parse_count(header_value(header, "hidden"), line_no);
    const long input = parse_count(header_value(header, "input"), line_no);
    const long output = parse_count(header_value(header, "output"), line_no);
    if (hidden <= 0 || input != data::input_dim(mode) || output != data::output_dim(mode)) {
        throw shape_error("model header sizes do not match mode " + data::mode_name(mode));
    }
    lm.params = ModelParams::zeros(mode, static_cast<int>(hidden));

    // normalizer line
    if (!next_content_line(is, line, line_no)) {
        throw data::malformed_record(line_no, "missing normalizer line");
    }
    auto tok = split_ws(line);
    if (tok.size() != 1 + 2 * data::kFeatureDim || tok[0] != "normalizer") {
        throw data::malformed_record(line_no, "bad normalizer line");
    }
    std::array<double, data::kFeatureDim> mins{};
    std::array<double, data::kFeatureDim> maxs{};
    for (int d = 0; d < data::kFeatureDim; ++d) {
        mins[static_cast<std::size_t>(d)] = parse_real(tok[static_cast<std::size_t>(1 + d)],
                                                       line_no);
        maxs[static_cast<std::size_t>(d)] =
            parse_real(tok[static_cast<std::size_t>(1 + data::kFeatureDim + d)], line_no);
    }
    lm.normalizer = data::Normalizer(mins, maxs);

    // training echo line
    if (!next_content_line(is, line, line_no)) {
        throw data::malformed_record(line_no, "missing train line");
    }
    tok = split_ws(line);
    if (tok.empty() || tok[0] != "train") {
        throw data::malformed_record(line_no, "bad train line");
    }
    lm.train_echo.epochs = static_cast<int>(parse_count(header_value(tok, "epochs"), line_no));
    lm.train_echo.batch_size = static_cast<int>(parse_count(header_value(tok, "batch"), line_no));
    lm.train_echo.lr = parse_real(header_value(tok, "lr"), line_no);
    lm.train_echo.seed = parse_u64(header_value(tok, "seed"), line_no);
    lm.train_echo.clip_norm = parse_real(header_value(tok, "clip"), line_no);
    lm.train_echo.hidden = static_cast<int>(hidden);

    for (const TensorView& t : tensor_views(lm.params)) {
        if (!next_content_line(is, line, line_no)) {
            throw data::malformed_record(line_no, "missing tensor '" + t.name + "'");
        }
        tok = split_ws(line);
        if (tok.size() != 4 || tok[0] != "tensor" || tok[1] != t.name) {
            throw data::malformed_record(line_no, "expected tensor '" + t.name + "'");
        }
        if (parse_count(tok[2], line_no) != t.rows || parse_count(tok[3], line_no) != t.cols) {
            throw shape_error("tensor '" + t.name + "' has unexpected shape " + tok[2] + "x" +
                              tok[3]);
        }
        Eigen::Map<Eigen::MatrixXd> mat(t.data, t.rows, t.cols);
        for (Eigen::Index r = 0; r < t.rows; ++r) {
            if (!next_content_line(is, line, line_no)) {
                throw data::malformed_record(line_no, "tensor '" + t.name + "' is truncated");
            }
            auto row = split_ws(line);
            if (static_cast<Eigen::Index>(row.size()) != t.cols) {
                throw data::malformed_record(line_no, "tensor '" + t.name + "' row has " +
                                                          std::to_string(row.size()) +
                                                          " values, expected " +
                                                          std::to_string(t.cols));
            }
            for (Eigen::Index c = 0; c < t.cols; ++c) {
                mat(r, c) = parse_real(row[static_cast<std::size_t>(c)], line_no);
            }
        }
    }
    return lm;
}

void save_model(const std::string& path, const ModelParams& m, const data::Normalizer& norm,
                const TrainConfig& echo, std::span<const std::string> comments) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_model(os, m, norm, echo, comments);
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

LoadedModel load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open model file '" + path + "'");
    return read_model(is);
}

LoadedModel load_model(const std::string& path, data::AblationMode expected) {
    LoadedModel lm = load_model(path);
    if (lm.params.mode != expected) {
        throw shape_error("model file '" + path + "' holds mode " +
                          data::mode_name(lm.params.mode) + ", expected " +
                          data::mode_name(expected));
    }
    return lm;
}

}  // namespace htrail::model
