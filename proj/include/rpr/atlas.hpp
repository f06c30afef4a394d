#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rpr/charsurf.hpp"
#include "rpr/model.hpp"
#include "rpr/verify.hpp"

namespace rpr {

const char* tool_version();

struct AnalyzeOptions {
    std::optional<double> rho1;      // overrides the config value
    std::optional<int> grid_n;       // overrides the config value
    std::optional<JointWindow> window;  // defaults to the padded bounding box of the images
    int region_resolution = 256;
    CharOptions chars;
    VerifyOptions verify;
};

struct Provenance {
    std::string tool_version;
    /// CRC-32 of the canonical config text, as 8 hex digits.
    std::string config_hash;
    std::vector<std::pair<std::string, double>> tolerances;
};

/// Everything computed for one rho1 slice.
struct SliceAtlas {
    AnalysisConfig config;
    SliceConfig slice;
    std::vector<TracedCurve> workspace;
    std::vector<TracedCurve> images;
    CuspDetection cusps;
    NodeDetection nodes;
    JointWindow window;
    RegionMap region_map;
    SegmentLabeling segments;
    CharResult chars;
    RegionDecomposition basic_regions;
    std::vector<BasicComponent> components;
    VerificationReport report;
    Provenance provenance;
    Diagnostics diagnostics;
};

/// Trace, project, detect cusps and nodes, count regions, label segments, build characteristic
/// curves and basic regions, then verify. The expected census is set only for the reference
/// geometry at rho1 = 17 unless opts.verify.expected is given.
SliceAtlas analyze_slice(const AnalysisConfig& config, const AnalyzeOptions& opts = {});

std::string config_hash(const AnalysisConfig& config);

// ---------------------------------------------------------------------------
// Persistence. An atlas directory holds:
//   curves.csv          id,domain,x,y,tx,ty           one row per sample
//   curve_index.csv     id,domain,kind,aspect,segment,high_count,low_count
//   points.csv          id,kind,x,y,angle
//   segments.csv        id,curve,s_begin,s_end,high_count,low_count,aspect_a,aspect_b,role_a,role_b,images
//   regions.csv         id,count,cells,x,y
//   basic_regions.csv   id,label,aspect,theta1,alpha,rho2,rho3,joint_count,cells,boundary
//   manifest.txt        key = value lines
// Numbers are written with 12 significant digits; reruns produce byte-identical files.

void write_atlas(const SliceAtlas& atlas, const std::filesystem::path& dir);

struct CurveRow {
    std::string id;
    std::string domain;  // "workspace" or "joint"
    std::vector<Vec2> points;
    std::vector<Vec2> tangents;
};

struct CurveInfo {
    std::string id, domain, kind, aspect;
    int segment = -1;
    int high_count = 0, low_count = 0;
};

struct PointRow {
    std::string id, kind;
    Vec2 p;
    double angle = 0.0;
};

struct RegionRow {
    int id = 0, count = 0;
    std::size_t cells = 0;
    Vec2 p;
};

/// The parts of an atlas directory the plots need, read back from disk.
struct AtlasData {
    std::vector<CurveRow> curves;
    std::vector<CurveInfo> info;
    std::vector<PointRow> points;
    std::vector<RegionRow> regions;
    std::vector<std::pair<std::string, std::string>> manifest;

    const CurveInfo* info_of(const std::string& id) const;
    std::optional<std::string> manifest_value(const std::string& key) const;
};

/// Throws Error(Validation) when a required file is missing or malformed.
AtlasData read_atlas(const std::filesystem::path& dir);

}  // namespace rpr
