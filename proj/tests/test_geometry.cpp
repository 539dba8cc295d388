#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "htrail/geometry.hpp"
#include "htrail/random.hpp"

using namespace htrail::geom;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent oracle: plain rotation-matrix arithmetic, no reuse of compose().
Pose2D compose_oracle(const Pose2D& base, const RelPose& rel) {
    const double c = std::cos(base.theta);
    const double s = std::sin(base.theta);
    Pose2D out;
    out.x = base.x + c * rel.x - s * rel.y;
    out.y = base.y + s * rel.x + c * rel.y;
    out.theta = wrap_angle(base.theta + rel.theta);
    return out;
}

RelPose relative_oracle(const Pose2D& base, const Pose2D& target) {
    const double c = std::cos(base.theta);
    const double s = std::sin(base.theta);
    const double dx = target.x - base.x;
    const double dy = target.y - base.y;
    RelPose out;
    out.x = c * dx + s * dy;
    out.y = -s * dx + c * dy;
    out.theta = wrap_angle(target.theta - base.theta);
    return out;
}

Pose2D random_pose(htrail::rng::Stream& st, double span = 10.0) {
    return Pose2D{st.uniform(-span, span), st.uniform(-span, span), st.uniform(-kPi, kPi)};
}

}  // namespace

TEST_CASE("wrap_angle known values") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(wrap_angle(2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(wrap_angle(0.5) == 0.5);
    CHECK(wrap_angle(-0.5) == -0.5);
    CHECK(wrap_angle(kPi + 0.1) == doctest::Approx(-kPi + 0.1).epsilon(1e-12));
}

TEST_CASE("wrap_angle range, congruence, idempotence") {
    htrail::rng::Stream st(11);
    for (int i = 0; i < 10000; ++i) {
        const double a = st.uniform(-50.0, 50.0);
        const double w = wrap_angle(a);
        CHECK(w > -kPi);
        CHECK(w <= kPi);
        // congruent mod 2pi
        CHECK(std::remainder(w - a, 2.0 * kPi) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(wrap_angle(w) == w);
    }
}

TEST_CASE("wrap_angle rejects non-finite input") {
    CHECK_THROWS_AS(wrap_angle(std::numeric_limits<double>::infinity()), std::invalid_argument);
    CHECK_THROWS_AS(wrap_angle(-std::numeric_limits<double>::infinity()), std::invalid_argument);
    CHECK_THROWS_AS(wrap_angle(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
}

TEST_CASE("compose known values") {
    {
        const Pose2D p = compose({0, 0, 0}, {1, 2, 0.3});
        CHECK(p.x == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(p.y == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(p.theta == doctest::Approx(0.3).epsilon(1e-15));
    }
    {
        const Pose2D p = compose({0, 0, kPi / 2}, {1, 0, 0});
        CHECK(std::abs(p.x) < 1e-15);
        CHECK(p.y == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(p.theta == doctest::Approx(kPi / 2).epsilon(1e-15));
    }
}

TEST_CASE("relative known values") {
    {
        const Pose2D p{2.5, -1.0, 0.7};
        const RelPose r = relative(p, p);
        CHECK(r.x == 0.0);
        CHECK(r.y == 0.0);
        CHECK(r.theta == 0.0);
    }
    {
        const RelPose r = relative({0, 0, kPi / 2}, {0, 1, kPi / 2});
        CHECK(r.x == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::abs(r.y) < 1e-15);
        CHECK(std::abs(r.theta) < 1e-15);
    }
}

TEST_CASE("compose and relative match rotation-matrix oracle") {
    htrail::rng::Stream st(23);
    for (int i = 0; i < 5000; ++i) {
        const Pose2D base = random_pose(st);
        const RelPose rel{st.uniform(-5, 5), st.uniform(-5, 5), st.uniform(-kPi, kPi)};
        const Pose2D got = compose(base, rel);
        const Pose2D want = compose_oracle(base, rel);
        CHECK(got.x == doctest::Approx(want.x).epsilon(1e-12));
        CHECK(got.y == doctest::Approx(want.y).epsilon(1e-12));
        CHECK(got.theta == doctest::Approx(want.theta).epsilon(1e-12));

        const Pose2D target = random_pose(st);
        const RelPose gr = relative(base, target);
        const RelPose wr = relative_oracle(base, target);
        CHECK(gr.x == doctest::Approx(wr.x).epsilon(1e-12));
        CHECK(gr.y == doctest::Approx(wr.y).epsilon(1e-12));
        CHECK(gr.theta == doctest::Approx(wr.theta).epsilon(1e-12));
    }
}

TEST_CASE("compose inverts relative and vice versa") {
    htrail::rng::Stream st(37);
    for (int i = 0; i < 5000; ++i) {
        const Pose2D a = random_pose(st);
        const Pose2D b = random_pose(st);
        const Pose2D back = compose(a, relative(a, b));
        CHECK(std::abs(back.x - b.x) < 1e-12);
        CHECK(std::abs(back.y - b.y) < 1e-12);
        CHECK(std::abs(wrap_angle(back.theta - b.theta)) < 1e-12);

        const RelPose rel{st.uniform(-5, 5), st.uniform(-5, 5), st.uniform(-kPi, kPi)};
        const RelPose rel2 = relative(a, compose(a, rel));
        CHECK(std::abs(rel2.x - rel.x) < 1e-12);
        CHECK(std::abs(rel2.y - rel.y) < 1e-12);
        CHECK(std::abs(wrap_angle(rel2.theta - rel.theta)) < 1e-12);
    }
}

TEST_CASE("relative distance symmetry") {
    htrail::rng::Stream st(41);
    for (int i = 0; i < 2000; ++i) {
        const Pose2D a = random_pose(st);
        const Pose2D b = random_pose(st);
        const RelPose ab = relative(a, b);
        const RelPose ba = relative(b, a);
        CHECK(std::hypot(ab.x, ab.y) == doctest::Approx(std::hypot(ba.x, ba.y)).epsilon(1e-12));
    }
}

TEST_CASE("displacement is invariant under a common base change") {
    htrail::rng::Stream st(43);
    for (int i = 0; i < 2000; ++i) {
        const Pose2D c = random_pose(st);
        const Pose2D p = random_pose(st);
        const Pose2D q = random_pose(st);
        const RelPose rp = relative(c, p);
        const RelPose rq = relative(c, q);
        const double d_rel = std::hypot(rp.x - rq.x, rp.y - rq.y);
        const double d_world = std::hypot(p.x - q.x, p.y - q.y);
        CHECK(std::abs(d_rel - d_world) < 1e-9);
    }
}

TEST_CASE("robot_delta equals relative") {
    {
        const RelPose d = robot_delta({0, 0, 0}, {0.1, 0, 0});
        CHECK(d.x == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(d.y == 0.0);
        CHECK(d.theta == 0.0);
    }
    {
        const Pose2D p{1.0, -2.0, 0.4};
        const RelPose d = robot_delta(p, p);
        CHECK(d.x == 0.0);
        CHECK(d.y == 0.0);
        CHECK(d.theta == 0.0);
    }
    htrail::rng::Stream st(47);
    for (int i = 0; i < 1000; ++i) {
        const Pose2D prev = random_pose(st);
        const Pose2D curr = random_pose(st);
        const RelPose d = robot_delta(prev, curr);
        const RelPose r = relative(prev, curr);
        CHECK(d.x == r.x);
        CHECK(d.y == r.y);
        CHECK(d.theta == r.theta);
    }
}

TEST_CASE("results carry wrapped angles") {
    htrail::rng::Stream st(53);
    for (int i = 0; i < 2000; ++i) {
        const Pose2D base = random_pose(st);
        // deliberately unwrapped rel theta
        const RelPose rel{st.uniform(-1, 1), st.uniform(-1, 1), st.uniform(-20.0, 20.0)};
        const Pose2D p = compose(base, rel);
        CHECK(p.theta > -kPi);
        CHECK(p.theta <= kPi);
        const RelPose r = relative(base, p);
        CHECK(r.theta > -kPi);
        CHECK(r.theta <= kPi);
    }
}
