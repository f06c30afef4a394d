#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "rpr/vec2.hpp"

namespace rpr {

enum class Edge { B1B2, B2B3, B3B1 };

/// Which platform edge each of the side lengths d1, d2, d3 measures.
struct EdgeAssignment {
    std::array<Edge, 3> edge_of_side{Edge::B1B2, Edge::B2B3, Edge::B3B1};

    /// Parses the "12-23-31" notation: the i-th token is the edge measured by d_i.
    static EdgeAssignment parse(std::string_view text);
    std::string to_string() const;

    friend bool operator==(const EdgeAssignment&, const EdgeAssignment&) = default;
};

struct ManipulatorGeometry {
    Vec2 a1, a2, a3;
    double d1 = 0.0, d2 = 0.0, d3 = 0.0;
    EdgeAssignment edges;

    /// Base anchors and side lengths of the reference manipulator.
    static ManipulatorGeometry reference();

    /// Throws Error(Validation) naming the offending field.
    void validate() const;

    double side_length(Edge e) const;
    std::array<Vec2, 3> anchors() const { return {a1, a2, a3}; }

    friend bool operator==(const ManipulatorGeometry&, const ManipulatorGeometry&) = default;
};

/// Platform triangle with B1 at the local origin and B1B2 on the local x-axis.
struct PlatformFrame {
    Vec2 p2;
    Vec2 p3;
};

PlatformFrame platform_frame(const ManipulatorGeometry& g);

struct AngleRange {
    double lo = 0.0;
    double hi = kTwoPi;

    double width() const { return hi - lo; }
    bool full_period() const { return std::abs(width() - kTwoPi) < 1e-12; }
};

struct SliceConfig {
    double rho1 = 17.0;
    AngleRange theta_range;
    AngleRange alpha_range;
    int grid_n = 512;

    void validate() const;
};

/// Contents of a configuration file.
struct AnalysisConfig {
    ManipulatorGeometry geometry;
    std::optional<double> rho1;
    int grid_n = 512;
};

/// Parses the flat `key = value` configuration format; see README for the grammar.
AnalysisConfig load_config(std::string_view text);
AnalysisConfig load_config_file(const std::string& path);
ManipulatorGeometry load_geometry(std::string_view text);

/// Canonical text rendering; load_config(format_config(c)) reproduces c exactly.
std::string format_config(const AnalysisConfig& c);

}  // namespace rpr
