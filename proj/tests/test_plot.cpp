#include <doctest.h>

#include <string>

#include "rpr/error.hpp"
#include "rpr/plot.hpp"

using namespace rpr;

namespace {

std::size_t occurrences(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t at = s.find(needle); at != std::string::npos; at = s.find(needle, at + 1)) ++n;
    return n;
}

void check_document(const std::string& svg) {
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(occurrences(svg, "<svg ") == 1);
    CHECK(svg.size() > 7);
    CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
    CHECK(occurrences(svg, "<g ") + occurrences(svg, "<g>") == occurrences(svg, "</g>"));
}

AtlasData small_atlas() {
    AtlasData d;
    d.curves.push_back({"S0", "workspace", {{6.2, 1.0}, {0.05, 1.1}, {0.3, 1.2}}, {}});
    d.curves.push_back({"J0", "joint", {{10.0, 10.0}, {20.0, 25.0}}, {}});
    d.info.push_back({"S0", "workspace", "singular_piece", "singular", 0, 6, 4});
    d.info.push_back({"J0", "joint", "singular_image", "singular", 0, 6, 4});
    d.points.push_back({"C1", "cusp", {12.0, 14.0}, 0.3});
    d.points.push_back({"N1", "node", {15.5, 20.25}, 0.9});
    d.points.push_back({"C1.1", "triple_tangency", {1.0, 2.0}, 0.001});
    d.regions.push_back({0, 6, 100, {15.0, 15.0}});
    d.manifest.push_back({"rho1", "17"});
    return d;
}

}  // namespace

TEST_SUITE("plot") {

TEST_CASE("both figures render from an empty atlas") {
    const AtlasData empty;
    for (const auto& name : figure_names()) check_document(render_figure(empty, name));
}

TEST_CASE("unknown figure names are rejected") {
    try {
        render_figure(AtlasData{}, "histogram");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
    }
}

TEST_CASE("markers carry the point ids and exact coordinates") {
    const auto d = small_atlas();
    const auto joint = render_figure(d, "jointspace");
    check_document(joint);
    CHECK(joint.find("data-id=\"C1\" data-x=\"12\" data-y=\"14\"") != std::string::npos);
    CHECK(joint.find("data-id=\"N1\" data-x=\"15.5\" data-y=\"20.25\"") != std::string::npos);
    CHECK(joint.find("data-id=\"C1.1\"") == std::string::npos);
    CHECK(occurrences(joint, "class=\"count-text\"") == 1);

    const auto ws = render_figure(d, "workspace");
    check_document(ws);
    CHECK(ws.find("data-id=\"C1.1\" data-x=\"1\" data-y=\"2\"") != std::string::npos);
    CHECK(ws.find("data-id=\"C1\" ") == std::string::npos);
}

TEST_CASE("workspace polylines break at the torus seam") {
    const auto ws = render_figure(small_atlas(), "workspace");
    const auto at = ws.find("data-curve=\"S0\"");
    REQUIRE(at != std::string::npos);
    const auto line = ws.substr(at, ws.find('\n', at) - at);
    CHECK(occurrences(line, "M") == 2);
    CHECK(occurrences(line, "L") == 1);
}

TEST_CASE("rendering is deterministic") {
    const auto d = small_atlas();
    CHECK(render_figure(d, "workspace") == render_figure(d, "workspace"));
    CHECK(render_figure(d, "jointspace") == render_figure(d, "jointspace"));
}

}
