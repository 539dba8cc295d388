#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "htrail/dataset.hpp"
#include "htrail/random.hpp"

using namespace htrail::data;
namespace fs = std::filesystem;

namespace {

Frame random_frame(int t, htrail::rng::Stream& st) {
    Frame f;
    f.t = t;
    for (double& v : f.robot) v = st.uniform(-1, 1);
    for (double& v : f.human) v = st.uniform(-2, 2);
    for (double& v : f.haptic) v = st.uniform(-0.1, 0.1);
    for (double& v : f.depth) v = st.uniform(-3, 3);
    f.robot_world = {st.uniform(-3, 3), st.uniform(-3, 3), st.uniform(-3, 3)};
    f.human_world = {st.uniform(-3, 3), st.uniform(-3, 3), st.uniform(-3, 3)};
    return f;
}

Session make_session(const std::string& pid, const std::string& sid, int len, std::uint64_t seed) {
    htrail::rng::Stream st(seed);
    Session s;
    s.participant_id = pid;
    s.session_id = sid;
    s.fps = kFps;
    for (int t = 0; t < len; ++t) s.frames.push_back(random_frame(t, st));
    return s;
}

bool frames_equal(const Frame& a, const Frame& b) {
    if (a.t != b.t) return false;
    if (a.robot != b.robot || a.human != b.human || a.haptic != b.haptic || a.depth != b.depth)
        return false;
    auto pose_eq = [](const htrail::geom::Pose2D& p, const htrail::geom::Pose2D& q) {
        return p.x == q.x && p.y == q.y && p.theta == q.theta;
    };
    return pose_eq(a.robot_world, b.robot_world) && pose_eq(a.human_world, b.human_world);
}

bool sessions_equal(const Session& a, const Session& b) {
    if (a.participant_id != b.participant_id || a.session_id != b.session_id || a.fps != b.fps)
        return false;
    if (a.frames.size() != b.frames.size()) return false;
    for (std::size_t i = 0; i < a.frames.size(); ++i) {
        if (!frames_equal(a.frames[i], b.frames[i])) return false;
    }
    return true;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("htrail_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

}  // namespace

TEST_CASE("feature order is R then P then H then D") {
    Frame f;
    f.robot = {1, 2, 3, 4, 5};
    f.human = {6, 7, 8};
    f.haptic = {9, 10};
    f.depth = {11, 12, 13, 14, 15};
    const auto feats = f.features();
    for (int i = 0; i < kFeatureDim; ++i) {
        CHECK(feats[static_cast<std::size_t>(i)] == static_cast<double>(i + 1));
    }
}

TEST_CASE("window counts by session length") {
    CHECK(window_session(make_session("p", "s", 100, 1)).size() == 81);
    CHECK(window_session(make_session("p", "s", 20, 2)).size() == 1);
    CHECK(window_session(make_session("p", "s", 19, 3)).empty());
    CHECK(window_session(make_session("p", "s", 25, 4)).size() == 6);
}

TEST_CASE("window view addresses the right frames") {
    Session s = make_session("p", "s", 30, 5);
    const auto ws = window_session(s);
    REQUIRE(ws.size() == 11);
    for (std::size_t k = 0; k < ws.size(); ++k) {
        CHECK(ws[k].start == static_cast<int>(k));
        CHECK(ws[k].frame(0).t == static_cast<int>(k));
        CHECK(ws[k].frame(kWindowLen - 1).t == static_cast<int>(k) + 19);
        CHECK(ws[k].last_observed().t == static_cast<int>(k) + kObsLen - 1);
    }
}

TEST_CASE("window_sessions sums per-session counts") {
    std::vector<Session> ss;
    ss.push_back(make_session("a", "1", 40, 6));
    ss.push_back(make_session("a", "2", 19, 7));
    ss.push_back(make_session("b", "1", 20, 8));
    const auto ws = window_sessions(ss);
    CHECK(ws.size() == (40 - 19) + 0 + 1);
}

TEST_CASE("mode dimension law") {
    CHECK(input_dim(AblationMode::R) == 8);
    CHECK(input_dim(AblationMode::RH) == 10);
    CHECK(input_dim(AblationMode::RD) == 13);
    CHECK(input_dim(AblationMode::RHD) == 15);
    CHECK(output_dim(AblationMode::R) == 3);
    CHECK(output_dim(AblationMode::RH) == 5);
    CHECK(output_dim(AblationMode::RD) == 8);
    CHECK(output_dim(AblationMode::RHD) == 10);
    for (AblationMode m : kAllModes) {
        CHECK(input_dim(m) == kRobotDim + output_dim(m));
        CHECK(output_dim(m) == kHumanDim + (uses_haptic(m) ? kHapticDim : 0) +
                                   (uses_depth(m) ? kDepthDim : 0));
    }
}

TEST_CASE("feature_indices selects groups in order") {
    CHECK(feature_indices(AblationMode::R) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(feature_indices(AblationMode::RH) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(feature_indices(AblationMode::RD) ==
          std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 10, 11, 12, 13, 14});
    CHECK(feature_indices(AblationMode::RHD) ==
          std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14});
}

TEST_CASE("mode names parse and print") {
    CHECK(mode_name(AblationMode::R) == "r");
    CHECK(mode_name(AblationMode::RHD) == "r+h+d");
    for (AblationMode m : kAllModes) CHECK(parse_mode(mode_name(m)) == m);
    CHECK(parse_mode("R+H+D") == AblationMode::RHD);
    CHECK(parse_mode("r+D") == AblationMode::RD);
    CHECK_THROWS_AS(parse_mode("rh"), std::invalid_argument);
    CHECK_THROWS_AS(parse_mode(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_mode("r+x"), std::invalid_argument);
}

TEST_CASE("normalizer maps endpoints and midpoint") {
    std::array<double, kFeatureDim> lo{};
    std::array<double, kFeatureDim> hi{};
    lo.fill(-2.0);
    hi.fill(2.0);
    Normalizer n(lo, hi);
    CHECK(n.fitted());
    CHECK(n.normalize(0, -2.0) == -1.0);
    CHECK(n.normalize(0, 0.0) == 0.0);
    CHECK(n.normalize(0, 2.0) == 1.0);
    // out of range passes through unclamped
    CHECK(n.normalize(0, 4.0) == 2.0);
}

TEST_CASE("degenerate dimension maps to zero and back to the constant") {
    std::array<double, kFeatureDim> lo{};
    std::array<double, kFeatureDim> hi{};
    lo.fill(0.7);
    hi.fill(0.7);
    Normalizer n(lo, hi);
    CHECK(n.normalize(3, 0.7) == 0.0);
    CHECK(n.normalize(3, 123.0) == 0.0);
    CHECK(n.denormalize(3, 0.0) == 0.7);
    CHECK(n.denormalize(3, 0.9) == 0.7);
}

TEST_CASE("normalizer rejects min greater than max") {
    std::array<double, kFeatureDim> lo{};
    std::array<double, kFeatureDim> hi{};
    lo.fill(1.0);
    hi.fill(0.0);
    CHECK_THROWS_AS(Normalizer(lo, hi), std::invalid_argument);
}

TEST_CASE("fit_normalizer covers all frames and round-trips") {
    Session s = make_session("p", "s", 60, 9);
    const auto ws = window_session(s);
    const Normalizer n = fit_normalizer(ws);
    htrail::rng::Stream st(10);
    for (int d = 0; d < kFeatureDim; ++d) {
        // training values stay in [-1, 1]
        for (const Frame& f : s.frames) {
            const double v = n.normalize(d, f.features()[static_cast<std::size_t>(d)]);
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
        // round trip within 1e-12
        for (int k = 0; k < 50; ++k) {
            const double v = st.uniform(-5, 5);
            CHECK(n.denormalize(d, n.normalize(d, v)) == doctest::Approx(v).epsilon(1e-12));
        }
        // endpoints map to -1 / +1 exactly where non-degenerate
        CHECK(n.normalize(d, n.min(d)) == -1.0);
        CHECK(n.normalize(d, n.max(d)) == 1.0);
    }
}

TEST_CASE("fit_normalizer tracks explicit extremes") {
    Session s = make_session("p", "s", 20, 11);
    s.frames[3].robot[0] = -2.0;
    s.frames[7].robot[0] = 2.0;
    s.frames[9].robot[0] = 0.0;
    const auto ws = window_session(s);
    const Normalizer n = fit_normalizer(ws);
    CHECK(n.normalize(0, -2.0) == -1.0);
    CHECK(n.normalize(0, 0.0) == 0.0);
    CHECK(n.normalize(0, 2.0) == 1.0);
}

TEST_CASE("fit_normalizer rejects empty input") {
    std::vector<Window> none;
    CHECK_THROWS_AS(fit_normalizer(none), std::invalid_argument);
}

TEST_CASE("assemble_input matches a hand oracle") {
    Session s = make_session("p", "s", 20, 12);
    const auto ws = window_session(s);
    const Normalizer n = fit_normalizer(ws);
    const Frame& f = s.frames[5];
    for (AblationMode m : kAllModes) {
        const Eigen::VectorXd x = assemble_input(f, m, n);
        const auto idx = feature_indices(m);
        REQUIRE(x.size() == static_cast<Eigen::Index>(idx.size()));
        REQUIRE(x.size() == input_dim(m));
        const auto feats = f.features();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            CHECK(x[static_cast<Eigen::Index>(i)] ==
                  n.normalize(idx[i], feats[static_cast<std::size_t>(idx[i])]));
        }
    }
}

TEST_CASE("assemble_input of per-dimension midpoints is all zeros") {
    Session s = make_session("p", "s", 20, 13);
    const auto ws = window_session(s);
    const Normalizer n = fit_normalizer(ws);
    Frame mid;
    for (int d = 0; d < kFeatureDim; ++d) {
        const double v = 0.5 * (n.min(d) + n.max(d));
        if (d < 5) mid.robot[static_cast<std::size_t>(d)] = v;
        else if (d < 8) mid.human[static_cast<std::size_t>(d - 5)] = v;
        else if (d < 10) mid.haptic[static_cast<std::size_t>(d - 8)] = v;
        else mid.depth[static_cast<std::size_t>(d - 10)] = v;
    }
    const Eigen::VectorXd x = assemble_input(mid, AblationMode::RHD, n);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        CHECK(std::abs(x[i]) < 1e-15);
    }
}

TEST_CASE("assemble_input rejects an unfitted normalizer") {
    Session s = make_session("p", "s", 20, 14);
    Normalizer unfitted;
    CHECK_FALSE(unfitted.fitted());
    CHECK_THROWS_AS(assemble_input(s.frames[0], AblationMode::R, unfitted), std::invalid_argument);
}

TEST_CASE("split_loocv partitions participants") {
    std::vector<Session> ss;
    for (const char* p : {"p01", "p02", "p03", "p04", "p05", "p06"}) {
        ss.push_back(make_session(p, "s1", 20, 15));
        ss.push_back(make_session(p, "s2", 20, 16));
    }
    const auto folds = split_loocv(ss);
    REQUIRE(folds.size() == 6);
    std::set<std::string> held;
    for (const Fold& f : folds) {
        CHECK(f.train_participants.size() == 5);
        held.insert(f.test_participant);
        // disjoint and union = all
        std::set<std::string> all(f.train_participants.begin(), f.train_participants.end());
        CHECK(all.count(f.test_participant) == 0);
        all.insert(f.test_participant);
        CHECK(all.size() == 6);
    }
    CHECK(held.size() == 6);
}

TEST_CASE("split_loocv minimal and error cases") {
    std::vector<Session> two;
    two.push_back(make_session("a", "s1", 20, 17));
    two.push_back(make_session("b", "s1", 20, 18));
    CHECK(split_loocv(two).size() == 2);

    std::vector<Session> one;
    one.push_back(make_session("a", "s1", 20, 19));
    one.push_back(make_session("a", "s2", 20, 20));
    CHECK_THROWS_AS(split_loocv(one), std::invalid_argument);
    std::vector<Session> zero;
    CHECK_THROWS_AS(split_loocv(zero), std::invalid_argument);
}

TEST_CASE("session stream round trip is lossless") {
    Session s = make_session("p07", "s012", 35, 21);
    std::ostringstream os;
    write_session(os, s);
    std::istringstream is(os.str());
    const Session back = read_session(is);
    CHECK(sessions_equal(s, back));
}

TEST_CASE("session round trip survives a second write byte-for-byte") {
    Session s = make_session("px", "sy", 25, 22);
    std::ostringstream a;
    write_session(a, s);
    std::istringstream is(a.str());
    const Session back = read_session(is);
    std::ostringstream b;
    write_session(b, back);
    CHECK(a.str() == b.str());
}

TEST_CASE("comments are written and ignored on read") {
    Session s = make_session("p", "s", 20, 23);
    std::vector<std::string> comments{"generator: test", "seed=23"};
    std::ostringstream os;
    write_session(os, s, comments);
    CHECK(os.str().find("# generator: test") != std::string::npos);
    std::istringstream is(os.str());
    const Session back = read_session(is);
    CHECK(sessions_equal(s, back));
}

TEST_CASE("unknown version tag raises version_error") {
    std::istringstream is("htrail.v9 participant=p session=s fps=4\n");
    CHECK_THROWS_AS(read_session(is), version_error);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_session(empty), malformed_record);
}

TEST_CASE("truncated frame line raises malformed_record naming the line") {
    Session s = make_session("p", "s", 3, 24);
    std::ostringstream os;
    write_session(os, s);
    std::string text = os.str();
    // drop the last field of the final line
    text.pop_back();  // newline
    text = text.substr(0, text.find_last_of(' '));
    text += '\n';
    std::istringstream is(text);
    try {
        read_session(is);
        FAIL("expected malformed_record");
    } catch (const malformed_record& e) {
        CHECK(e.line == 4);  // header + 3 frames; last frame line is 4
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("non-numeric field raises malformed_record") {
    Session s = make_session("p", "s", 2, 25);
    std::ostringstream os;
    write_session(os, s);
    std::string text = os.str();
    const auto pos = text.find_last_of(' ');
    text = text.substr(0, pos + 1) + "bogus\n";
    std::istringstream is(text);
    CHECK_THROWS_AS(read_session(is), malformed_record);
}

TEST_CASE("missing header field raises missing_field") {
    std::istringstream is("htrail.v1 participant=p fps=4\n");
    CHECK_THROWS_AS(read_session(is), missing_field);
    std::istringstream is2("htrail.v1 session=s fps=4\n");
    CHECK_THROWS_AS(read_session(is2), missing_field);
}

TEST_CASE("save_sessions / load_sessions round trip, sorted") {
    TempDir dir;
    std::vector<Session> ss;
    ss.push_back(make_session("p02", "s001", 22, 26));
    ss.push_back(make_session("p01", "s002", 24, 27));
    ss.push_back(make_session("p01", "s001", 21, 28));
    save_sessions(ss, dir.path.string());
    const auto back = load_sessions(dir.path.string());
    REQUIRE(back.size() == 3);
    // sorted by filename: p01_s001, p01_s002, p02_s001
    CHECK(back[0].participant_id == "p01");
    CHECK(back[0].session_id == "s001");
    CHECK(back[1].participant_id == "p01");
    CHECK(back[1].session_id == "s002");
    CHECK(back[2].participant_id == "p02");
    CHECK(sessions_equal(back[0], ss[2]));
    CHECK(sessions_equal(back[1], ss[1]));
    CHECK(sessions_equal(back[2], ss[0]));
}

TEST_CASE("load_session propagates open failure") {
    CHECK_THROWS_AS(load_session("/nonexistent/definitely_missing.htrail"), std::runtime_error);
}
