#pragma once

#include <array>
#include <string>
#include <vector>

#include "rpr/jointspace.hpp"

namespace rpr {

enum class CharKind { SingularImage, NonsingularImage };
const char* to_string(CharKind k);

enum class EndKind { Open, Cusp, Node, Closed };
const char* to_string(EndKind k);

struct CharEnd {
    EndKind kind = EndKind::Open;
    int point_id = -1;  // cusp or node id
};

/// A workspace image of joint-space singular segments: either a piece of the singular curve
/// itself or a chain of nonsingular preimages of it within one aspect.
struct CharCurve {
    int id = 0;
    CharKind kind = CharKind::NonsingularImage;
    AspectLabel aspect = AspectLabel::Singular;
    TracedCurve curve;
    int source_curve = -1;
    /// Arc position on the source singular curve imaged by each sample (lifted, monotone).
    std::vector<double> source_s;
    /// Segment of the source image curve for each sample; -1 for snapped endpoints.
    std::vector<int> source_segment;
    std::array<CharEnd, 2> ends;
    /// Basic regions adjacent to this curve.
    std::vector<int> bounded_regions;

    /// Segments this curve images, in order of first appearance.
    std::vector<int> segments() const;
};

struct CharOptions {
    /// Preimages this close to the singular sample itself belong to its double root.
    double own_exclusion = 2e-3;
    /// Preimages with smaller |singular_value| are coalescing pairs, not characteristic points.
    double min_singular_value = 1e-7;
    /// Largest pose change accepted in one continuation substep.
    double link_max = 0.05;
    /// Open chain ends this close to a cusp or node pose are closed onto it.
    double snap_radius = 0.05;
    JointAnalysisOptions joint;
};

struct CharResult {
    std::vector<CharCurve> curves;
    std::vector<CharCurve> singular_images;
    Diagnostics diagnostics;

    std::vector<const CharCurve*> of_aspect(AspectLabel a) const;
};

/// Nonsingular preimages of every singular-curve sample, linked sample to sample within each
/// aspect, plus the singular curves split at cusps and nodes.
CharResult characteristic_curves(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                                 const std::vector<CuspPoint>& cusps,
                                 const std::vector<NodePoint>& nodes,
                                 const std::vector<SegmentLabel>& segments,
                                 const CharOptions& opts = {});

/// Number of distinct workspace images (singular piece included) of the segment, counted as
/// the nonsingular chains passing over arc position s plus one.
int workspace_image_count(const CharResult& chars, const TracedCurve& source, double s);

struct BasicRegion {
    int id = 0;
    std::string label;
    AspectLabel aspect = AspectLabel::Singular;
    SlicePose representative;
    Vec2 joint_image;
    /// Direct-kinematics count at joint_image.
    int joint_count = 0;
    std::size_t cells = 0;
    std::vector<int> boundary;           // characteristic curve ids
    std::vector<int> singular_boundary;  // singular curve ids
};

struct RegionDecomposition {
    AngleRange theta, alpha;
    int nx = 0, ny = 0;
    std::vector<int> labels;  // per cell, -1 on a curve
    std::vector<BasicRegion> regions;
    /// Free cells in components too small to resolve, left unlabeled.
    std::size_t unresolved_cells = 0;

    Vec2 cell_center(int ix, int iy) const;
    /// Region containing the pose, or -1 on a curve or outside the slice window.
    int region_at(Vec2 angles) const;
};

/// Connected components of the slice minus all singular and characteristic curves.
RegionDecomposition decompose_basic_regions(const Manipulator& m, const SliceConfig& slice,
                                            const std::vector<TracedCurve>& workspace,
                                            const CharResult& chars, const FkOptions& fk = {},
                                            std::size_t min_cells = 16);

struct BasicComponent {
    int region_id = 0;
    AspectLabel aspect = AspectLabel::Singular;
    /// Joint images of (a subsample of) the region's cells.
    std::vector<Vec2> image;
};

std::vector<BasicComponent> basic_components(const Manipulator& m, double rho1,
                                             const RegionDecomposition& regions,
                                             std::size_t max_points = 4096);

/// Regions whose image contains joint point q: those holding one of its preimages.
std::vector<int> regions_containing(const Manipulator& m, const RegionDecomposition& regions,
                                    const JointCoords& q, const FkOptions& fk = {});

}  // namespace rpr
