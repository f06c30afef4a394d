#pragma once

#include <array>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rpr/error.hpp"
#include "rpr/kinematics.hpp"
#include "rpr/singularity.hpp"

namespace rpr {

/// Arc position on a traced workspace curve.
struct CurveParam {
    int curve_id = -1;
    double s = 0.0;
};

struct JointAnalysisOptions {
    double cusp_tol = 1e-6;
    double cusp_exclusion = 1e-3;
    double node_angle_min = 1.0 * std::numbers::pi / 180.0;
    /// Solutions closer than this (torus metric) count as one image at a special point.
    double image_cluster_tol = 1e-4;
    /// Newton stalls near a multiple root; approximations this close to a known one merge into it.
    double anchor_radius = 5e-3;
    FkOptions fk;
};

struct CuspPoint {
    int id = 0;
    std::string label;
    Vec2 location;  // (rho2, rho3)
    CurveParam source;
    /// Pose where three solutions coalesce.
    SlicePose triple_pose;
    /// Aspect shared by the two coalescing solutions that the cusp connects.
    AspectLabel aspect = AspectLabel::Singular;
    double speed = 0.0;
    /// Unit direction from the cusp into the region bounded by its two branches.
    Vec2 opening;
    /// Distinct solutions of the direct kinematics at `location`.
    int distinct_solutions = 0;
};

struct NodePoint {
    int id = 0;
    std::string label;
    Vec2 location;
    std::array<CurveParam, 2> params;
    std::array<SlicePose, 2> pair_poses;
    /// Unit image tangents of the two branches at the node.
    std::array<Vec2, 2> tangents;
    double angle = 0.0;
    int distinct_solutions = 0;
    /// Solution counts in the four sectors between the branches, in cyclic order.
    std::array<int, 4> sector_counts{};
};

struct SuspectPoint {
    Vec2 location;
    std::string reason;
};

struct CuspDetection {
    std::vector<CuspPoint> cusps;
    std::vector<SuspectPoint> suspects;
    Diagnostics diagnostics;
};

struct NodeDetection {
    std::vector<NodePoint> nodes;
    std::vector<SuspectPoint> suspects;
    Diagnostics diagnostics;
};

/// Strict local minima of the normalized image speed below cusp_tol, refined by Brent's
/// golden-section minimization and confirmed by a triple-coalescence probe.
CuspDetection detect_cusps(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                           const std::vector<TracedCurve>& images,
                           const JointAnalysisOptions& opts = {});

/// Transversal self- and mutual intersections of the image curves, refined by Newton in the
/// two arc parameters and confirmed by the sector counts around each crossing.
NodeDetection detect_nodes(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                           const std::vector<TracedCurve>& images,
                           const std::vector<CuspPoint>& cusps,
                           const JointAnalysisOptions& opts = {});

/// Distinct direct-kinematics solutions at a joint point. `anchors` are known multiple roots:
/// solutions within anchor_radius of one are absorbed into it. Anchors come first in the result.
std::vector<Vec2> distinct_solutions(const Manipulator& m, const JointCoords& joint,
                                     const std::vector<Vec2>& anchors,
                                     const JointAnalysisOptions& opts = {});

struct JointWindow {
    double rho2_min = 0.0, rho2_max = 1.0, rho3_min = 0.0, rho3_max = 1.0;

    bool contains(Vec2 p) const {
        return p.x >= rho2_min && p.x <= rho2_max && p.y >= rho3_min && p.y <= rho3_max;
    }
    void validate() const;
};

/// Bounding box of the image curves, padded by `margin` and clipped to non-negative lengths.
JointWindow image_window(const std::vector<TracedCurve>& images, double margin = 1.0);

struct Region {
    int id = 0;
    int count = 0;
    std::size_t cells = 0;
    Vec2 representative;
};

struct RegionMap {
    JointWindow window;
    int nx = 0, ny = 0;
    /// Per cell: solution count at the cell center.
    std::vector<int> counts;
    /// Per cell: region id, or -1 for cells on a singular curve or flagged near-singular.
    std::vector<int> labels;
    std::vector<Region> regions;

    Vec2 cell_center(int ix, int iy) const;
    std::optional<std::pair<int, int>> cell_of(Vec2 p) const;
    int count_at(Vec2 p) const;
};

RegionMap count_solutions_map(const Manipulator& m, double rho1, const JointWindow& window,
                              int resolution, const std::vector<TracedCurve>& images,
                              const FkOptions& fk = {});

/// Which solution pair coalesces when crossing an image curve at a given arc position.
struct CrossingProbe {
    Vec2 high_point, low_point;
    int high_count = 0, low_count = 0;
    /// Solutions at high_point that coalesce on the crossing, and their aspects.
    std::array<SlicePose, 2> lost_pair;
    std::array<AspectLabel, 2> lost_aspects{AspectLabel::Singular, AspectLabel::Singular};
    SlicePose coalescence;
    double probe_radius = 0.0;
};

std::optional<CrossingProbe> probe_crossing(const Manipulator& m, const TracedCurve& workspace,
                                            const TracedCurve& image, double s,
                                            const JointAnalysisOptions& opts = {});

struct SegmentLabel {
    int id = 0;
    int curve_id = -1;
    /// Arc interval [s_begin, s_end]; s_end may exceed the curve length for closed curves.
    double s_begin = 0.0, s_end = 0.0;
    bool probed = false;
    CrossingProbe probe;
    /// Role tags of the lost solutions (basic-region ids), filled once regions are known.
    std::array<int, 2> lost_roles{-1, -1};

    double s_mid() const { return 0.5 * (s_begin + s_end); }
    bool contains(double s, double length) const;
};

struct SegmentLabeling {
    std::vector<SegmentLabel> segments;
    Diagnostics diagnostics;
};

/// Splits each image curve at its cusps and nodes and probes every piece.
SegmentLabeling label_segments(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                               const std::vector<TracedCurve>& images,
                               const std::vector<CuspPoint>& cusps,
                               const std::vector<NodePoint>& nodes,
                               const JointAnalysisOptions& opts = {});

/// Index of the segment containing arc position s on a curve, or -1.
int segment_at(const std::vector<SegmentLabel>& segments, const TracedCurve& curve, double s);

}  // namespace rpr
