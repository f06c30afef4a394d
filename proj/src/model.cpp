#include "rpr/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "rpr/error.hpp"

namespace rpr {

const char* to_string(DiagnosticKind kind) {
    switch (kind) {
        case DiagnosticKind::NonConvergence: return "NONCONVERGENCE";
        case DiagnosticKind::SingularInput: return "SINGULAR_INPUT";
        case DiagnosticKind::ResolutionWarning: return "RESOLUTION_WARNING";
        case DiagnosticKind::LinkBreak: return "LINK_BREAK";
        case DiagnosticKind::ProbeFailure: return "PROBE_FAILURE";
        case DiagnosticKind::VerificationFailure: return "VERIFICATION_FAILURE";
        case DiagnosticKind::MissingCurve: return "MISSING_CURVE";
        case DiagnosticKind::StepFailure: return "STEP_FAILURE";
    }
    return "UNKNOWN";
}

namespace {

Edge parse_edge(std::string_view tok) {
    if (tok == "12" || tok == "21") return Edge::B1B2;
    if (tok == "23" || tok == "32") return Edge::B2B3;
    if (tok == "31" || tok == "13") return Edge::B3B1;
    throw Error(ErrorKind::Parse, fmt::format("edge_assignment: unknown edge '{}'", tok),
                "edge_assignment");
}

const char* edge_token(Edge e) {
    switch (e) {
        case Edge::B1B2: return "12";
        case Edge::B2B3: return "23";
        case Edge::B3B1: return "31";
    }
    return "??";
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(std::string_view key, std::string_view value) {
    double out = 0.0;
    const auto* end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc{} || ptr != end || !std::isfinite(out)) {
        throw Error(ErrorKind::Parse, fmt::format("{}: '{}' is not a number", key, value),
                    std::string(key));
    }
    return out;
}

}  // namespace

EdgeAssignment EdgeAssignment::parse(std::string_view text) {
    EdgeAssignment out;
    std::size_t start = 0;
    for (int i = 0; i < 3; ++i) {
        const auto dash = text.find('-', start);
        const bool last = i == 2;
        if (last != (dash == std::string_view::npos)) {
            throw Error(ErrorKind::Parse,
                        fmt::format("edge_assignment: expected three edges, got '{}'", text),
                        "edge_assignment");
        }
        out.edge_of_side[i] = parse_edge(text.substr(start, last ? text.npos : dash - start));
        start = dash + 1;
    }
    const auto& e = out.edge_of_side;
    if (e[0] == e[1] || e[1] == e[2] || e[0] == e[2]) {
        throw Error(ErrorKind::Validation,
                    fmt::format("edge_assignment: '{}' repeats an edge", text), "edge_assignment");
    }
    return out;
}

std::string EdgeAssignment::to_string() const {
    return fmt::format("{}-{}-{}", edge_token(edge_of_side[0]), edge_token(edge_of_side[1]),
                       edge_token(edge_of_side[2]));
}

ManipulatorGeometry ManipulatorGeometry::reference() {
    ManipulatorGeometry g;
    g.a1 = {0.0, 0.0};
    g.a2 = {15.91, 0.0};
    g.a3 = {0.0, 10.0};
    g.d1 = 17.04;
    g.d2 = 16.54;
    g.d3 = 20.84;
    return g;
}

double ManipulatorGeometry::side_length(Edge e) const {
    const std::array<double, 3> d{d1, d2, d3};
    for (int i = 0; i < 3; ++i) {
        if (edges.edge_of_side[i] == e) return d[i];
    }
    throw Error(ErrorKind::Validation, "edge_assignment does not cover every edge",
                "edge_assignment");
}

void ManipulatorGeometry::validate() const {
    const std::array<std::pair<const char*, double>, 3> sides{
        {{"d1", d1}, {"d2", d2}, {"d3", d3}}};
    for (const auto& [name, v] : sides) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::Validation, fmt::format("{} must be a positive length", name),
                        name);
        }
    }
    const std::array<std::pair<const char*, Vec2>, 3> anchors{{{"a1", a1}, {"a2", a2}, {"a3", a3}}};
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (norm(anchors[i].second - anchors[j].second) <= 1e-12) {
                throw Error(ErrorKind::Validation,
                            fmt::format("base anchors {} and {} coincide", anchors[i].first,
                                        anchors[j].first),
                            anchors[j].first);
            }
        }
    }
    // Throws if the assignment is not a permutation.
    (void)EdgeAssignment::parse(edges.to_string());
    for (int i = 0; i < 3; ++i) {
        const double a = sides[i].second;
        const double b = sides[(i + 1) % 3].second;
        const double c = sides[(i + 2) % 3].second;
        if (!(a < b + c)) {
            throw Error(ErrorKind::Validation,
                        fmt::format("triangle inequality violated: {} = {} >= {} + {}",
                                    sides[i].first, a, b, c),
                        sides[i].first);
        }
    }
}

PlatformFrame platform_frame(const ManipulatorGeometry& g) {
    g.validate();
    const double l12 = g.side_length(Edge::B1B2);
    const double l23 = g.side_length(Edge::B2B3);
    const double l31 = g.side_length(Edge::B3B1);
    // Law of cosines at B1; p3 is placed above the B1B2 axis.
    const double c = (l12 * l12 + l31 * l31 - l23 * l23) / (2.0 * l12 * l31);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    return {{l12, 0.0}, {l31 * c, l31 * s}};
}

void SliceConfig::validate() const {
    if (!(rho1 > 0.0) || !std::isfinite(rho1)) {
        throw Error(ErrorKind::Validation, "rho1 must be positive", "rho1");
    }
    if (grid_n < 16) throw Error(ErrorKind::Validation, "grid_n must be at least 16", "grid_n");
    for (const auto& [name, r] : {std::pair{"theta_range", theta_range}, std::pair{"alpha_range", alpha_range}}) {
        if (!(r.hi > r.lo) || r.width() > kTwoPi + 1e-12) {
            throw Error(ErrorKind::Validation, fmt::format("{} must be a non-empty interval of at most 2pi", name),
                        name);
        }
    }
}

AnalysisConfig load_config(std::string_view text) {
    static const std::array<const char*, 12> kKeys{"a1x", "a1y", "a2x", "a2y", "a3x", "a3y",
                                                   "d1",  "d2",  "d3",  "edge_assignment",
                                                   "rho1", "grid_n"};
    std::map<std::string, std::string, std::less<>> values;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == line.npos) {
            throw Error(ErrorKind::Parse, fmt::format("line {}: expected 'key = value'", line_no));
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (std::find(kKeys.begin(), kKeys.end(), key) == kKeys.end()) {
            throw Error(ErrorKind::Parse, fmt::format("line {}: unknown key '{}'", line_no, key),
                        std::string(key));
        }
        if (value.empty()) {
            throw Error(ErrorKind::Parse, fmt::format("line {}: '{}' has no value", line_no, key),
                        std::string(key));
        }
        if (!values.emplace(std::string(key), std::string(value)).second) {
            throw Error(ErrorKind::Parse, fmt::format("line {}: duplicate key '{}'", line_no, key),
                        std::string(key));
        }
    }
    auto number = [&](const char* key) {
        const auto it = values.find(key);
        if (it == values.end()) {
            throw Error(ErrorKind::Parse, fmt::format("missing required key '{}'", key), key);
        }
        return parse_number(key, it->second);
    };

    AnalysisConfig c;
    auto& g = c.geometry;
    g.a1 = {number("a1x"), number("a1y")};
    g.a2 = {number("a2x"), number("a2y")};
    g.a3 = {number("a3x"), number("a3y")};
    g.d1 = number("d1");
    g.d2 = number("d2");
    g.d3 = number("d3");
    if (const auto it = values.find("edge_assignment"); it != values.end()) {
        g.edges = EdgeAssignment::parse(it->second);
    }
    if (values.contains("rho1")) {
        c.rho1 = number("rho1");
        if (!(*c.rho1 > 0.0)) throw Error(ErrorKind::Validation, "rho1 must be positive", "rho1");
    }
    if (values.contains("grid_n")) {
        const double n = number("grid_n");
        if (n != std::floor(n) || n < 16 || n > 1 << 16) {
            throw Error(ErrorKind::Validation, "grid_n must be an integer in [16, 65536]", "grid_n");
        }
        c.grid_n = static_cast<int>(n);
    }
    g.validate();
    return c;
}

AnalysisConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Parse, fmt::format("cannot read config file '{}'", path));
    std::stringstream ss;
    ss << in.rdbuf();
    return load_config(ss.str());
}

ManipulatorGeometry load_geometry(std::string_view text) { return load_config(text).geometry; }

std::string format_config(const AnalysisConfig& c) {
    const auto& g = c.geometry;
    std::string out = fmt::format(
        "a1x = {}\na1y = {}\na2x = {}\na2y = {}\na3x = {}\na3y = {}\n"
        "d1 = {}\nd2 = {}\nd3 = {}\nedge_assignment = {}\n",
        g.a1.x, g.a1.y, g.a2.x, g.a2.y, g.a3.x, g.a3.y, g.d1, g.d2, g.d3, g.edges.to_string());
    if (c.rho1) out += fmt::format("rho1 = {}\n", *c.rho1);
    out += fmt::format("grid_n = {}\n", c.grid_n);
    return out;
}

}  // namespace rpr
