#include <doctest.h>

#include <cmath>

#include "rpr/error.hpp"
#include "rpr/kinematics.hpp"
#include "rpr/model.hpp"

using namespace rpr;

namespace {

const char* kReference = R"(# reference
a1x = 0
a1y = 0
a2x = 15.91
a2y = 0
a3x = 0
a3y = 10
d1 = 17.04
d2 = 16.54
d3 = 20.84
edge_assignment = 12-23-31
rho1 = 17
grid_n = 512
)";

ErrorKind kind_of(std::string_view text) {
    try {
        load_config(text);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Numerical;
}

std::string field_of(std::string_view text) {
    try {
        load_config(text);
    } catch (const Error& e) {
        return e.field();
    }
    return {};
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("reference config parses to the reference geometry") {
    const auto c = load_config(kReference);
    CHECK(c.geometry == ManipulatorGeometry::reference());
    REQUIRE(c.rho1.has_value());
    CHECK(*c.rho1 == 17.0);
    CHECK(c.grid_n == 512);
}

TEST_CASE("format_config round-trips exactly") {
    const auto c = load_config(kReference);
    const auto again = load_config(format_config(c));
    CHECK(again.geometry == c.geometry);
    CHECK(again.rho1 == c.rho1);
    CHECK(again.grid_n == c.grid_n);
    CHECK(format_config(again) == format_config(c));
}

TEST_CASE("triangle inequality violation is a validation error naming the side") {
    const char* text = "a1x=0\na1y=0\na2x=15.91\na2y=0\na3x=0\na3y=10\nd1=1\nd2=1\nd3=3\n";
    CHECK(kind_of(text) == ErrorKind::Validation);
}

TEST_CASE("coincident anchors are rejected") {
    const char* text = "a1x=0\na1y=0\na2x=0\na2y=0\na3x=0\na3y=10\nd1=17.04\nd2=16.54\nd3=20.84\n";
    CHECK(kind_of(text) == ErrorKind::Validation);
}

TEST_CASE("unknown, duplicate and missing keys are parse errors") {
    CHECK(kind_of(std::string(kReference) + "colour = red\n") == ErrorKind::Parse);
    CHECK(field_of(std::string(kReference) + "colour = red\n") == "colour");
    CHECK(kind_of(std::string(kReference) + "d1 = 3\n") == ErrorKind::Parse);
    CHECK(kind_of("a1x = 0\n") == ErrorKind::Parse);
    CHECK(kind_of("a1x 0\n") == ErrorKind::Parse);
}

TEST_CASE("malformed numbers and bad grid sizes are rejected") {
    std::string text = kReference;
    text.replace(text.find("17.04"), 5, "17.x4");
    CHECK(kind_of(text) == ErrorKind::Parse);
    std::string grid = kReference;
    grid.replace(grid.find("512"), 3, "8");
    CHECK(kind_of(grid) == ErrorKind::Validation);
    std::string rho = kReference;
    rho.replace(rho.find("rho1 = 17"), 9, "rho1 = -1");
    CHECK(kind_of(rho) == ErrorKind::Validation);
}

TEST_CASE("edge assignment notation") {
    const auto e = EdgeAssignment::parse("12-23-31");
    CHECK(e == EdgeAssignment{});
    CHECK(e.to_string() == "12-23-31");
    const auto f = EdgeAssignment::parse("23-12-31");
    CHECK(f.edge_of_side[0] == Edge::B2B3);
    CHECK(f.edge_of_side[1] == Edge::B1B2);
    CHECK_THROWS_AS(EdgeAssignment::parse("12-12-31"), Error);
    CHECK_THROWS_AS(EdgeAssignment::parse("12-23"), Error);
}

TEST_CASE("platform frame reproduces the side lengths, counter-clockwise") {
    const auto g = ManipulatorGeometry::reference();
    const auto f = platform_frame(g);
    CHECK(std::abs(norm(f.p2) - g.d1) < 1e-12);
    CHECK(std::abs(norm(f.p3 - f.p2) - g.d2) < 1e-12);
    CHECK(std::abs(norm(f.p3) - g.d3) < 1e-12);
    CHECK(f.p3.y > 0.0);
}

TEST_CASE("construction is deterministic") {
    const auto a = load_config(kReference), b = load_config(kReference);
    const Manipulator ma(a.geometry), mb(b.geometry);
    CHECK(ma.frame().p2 == mb.frame().p2);
    CHECK(ma.frame().p3 == mb.frame().p3);
}

}
