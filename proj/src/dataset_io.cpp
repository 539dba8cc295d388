#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "htrail/dataset.hpp"
#include "text_io.hpp"

namespace htrail::data {

namespace fs = std::filesystem;

using detail::fmt_real;
using detail::header_value;
using detail::parse_real;
using detail::split_ws;

namespace {

constexpr const char* kFormatVersion = "htrail.v1";
constexpr int kFrameFields = 1 + kFeatureDim + 6;  // t, 15 features, 2 world poses

}  // namespace

malformed_record::malformed_record(int line_number, const std::string& what)
    : std::runtime_error("line " + std::to_string(line_number) + ": " + what),
      line(line_number) {}

void write_session(std::ostream& os, const Session& s, std::span<const std::string> comments) {
    os << kFormatVersion << " participant=" << s.participant_id << " session=" << s.session_id
       << " fps=" << s.fps << "\n";
    for (const std::string& c : comments) {
        os << "# " << c << "\n";
    }
    for (const Frame& f : s.frames) {
        os << f.t;
        const auto feats = f.features();
        for (double v : feats) os << ' ' << fmt_real(v);
        for (double v : {f.robot_world.x, f.robot_world.y, f.robot_world.theta, f.human_world.x,
                         f.human_world.y, f.human_world.theta}) {
            os << ' ' << fmt_real(v);
        }
        os << '\n';
    }
}

Session read_session(std::istream& is) {
    std::string line;
    int line_no = 1;
    if (!std::getline(is, line)) {
        throw malformed_record(1, "empty session file");
    }
    auto header = split_ws(line);
    if (header.empty() || header[0] != kFormatVersion) {
        throw version_error("unsupported session format version '" +
                            (header.empty() ? std::string("<empty>") : header[0]) + "' (expected " +
                            kFormatVersion + ")");
    }
    Session s;
    s.participant_id = header_value(header, "participant");
    s.session_id = header_value(header, "session");
    s.fps = static_cast<int>(parse_real(header_value(header, "fps"), line_no));

    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto tok = split_ws(line);
        if (static_cast<int>(tok.size()) != kFrameFields) {
            throw malformed_record(line_no, "expected " + std::to_string(kFrameFields) +
                                                " fields, got " + std::to_string(tok.size()));
        }
        Frame f;
        int i = 0;
        f.t = static_cast<int>(parse_real(tok[static_cast<std::size_t>(i++)], line_no));
        for (double& v : f.robot) v = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        for (double& v : f.human) v = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        for (double& v : f.haptic) v = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        for (double& v : f.depth) v = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        f.robot_world.x = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        f.robot_world.y = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        f.robot_world.theta = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        f.human_world.x = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        f.human_world.y = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        f.human_world.theta = parse_real(tok[static_cast<std::size_t>(i++)], line_no);
        s.frames.push_back(f);
    }
    return s;
}

void save_session(const Session& s, const std::string& path, std::span<const std::string> comments) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_session(os, s, comments);
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

Session load_session(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open session file '" + path + "'");
    return read_session(is);
}

std::vector<Session> load_sessions(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".htrail") {
            paths.push_back(entry.path().string());
        }
    }
    std::sort(paths.begin(), paths.end());
    std::vector<Session> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_session(p));
    return out;
}

void save_sessions(std::span<const Session> sessions, const std::string& dir) {
    fs::create_directories(dir);
    for (const Session& s : sessions) {
        const auto path = fs::path(dir) / (s.participant_id + "_" + s.session_id + ".htrail");
        save_session(s, path.string());
    }
}

}  // namespace htrail::data
