#pragma once

#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rpr/charsurf.hpp"

namespace rpr {

enum class ImageClass { TripleTangency, CharCusp, SingularCrossing, CharCrossing };
const char* to_string(ImageClass c);

/// One workspace preimage of a cusp or node.
struct PointImage {
    SlicePose pose;
    ImageClass kind = ImageClass::CharCusp;
    /// Tangency angle, crossing angle, or turning angle of the characteristic curve (CharCusp).
    double angle = 0.0;
    /// Independent measurement of the same angle; NaN when not applicable.
    double check_angle = std::numeric_limits<double>::quiet_NaN();
    /// Distance from the pose to the nearest traced curve used in the measurement.
    double curve_distance = 0.0;
    /// Characteristic curves incident to this image.
    std::vector<int> curves;
    bool pass = false;
};

struct CuspImageSet {
    int cusp_id = 0;
    std::vector<PointImage> images;
    double tangency_angle = 0.0;
};

struct NodeImageSet {
    int node_id = 0;
    std::vector<PointImage> images;
};

struct Census {
    int cusps = 0;
    int nodes = 0;
    int tangencies = 0;
    int char_cusps = 0;
    int singular_char_crossings = 0;
    int char_char_crossings = 0;

    bool operator==(const Census&) const = default;
};

/// The counts reported for the reference geometry at rho1 = 17.
Census reference_census();

struct VerifyOptions {
    double tangency_tol = 2.0 * std::numbers::pi / 180.0;
    double transversal_min = 5.0 * std::numbers::pi / 180.0;
    /// Curves must pass within this many workspace grid cells of an image.
    double match_cells = 2.0;
    int grid_n = 512;
    std::optional<Census> expected;
    JointAnalysisOptions joint;

    double match_tol() const { return match_cells * 2.0 * std::numbers::pi / grid_n; }
};

struct VerificationReport {
    Census counts;
    std::optional<Census> expected;
    bool pass = false;
    std::vector<std::string> mismatches;
    std::vector<CuspImageSet> cusps;
    std::vector<NodeImageSet> nodes;
    VerifyOptions tolerances;
    Diagnostics diagnostics;
};

struct TangencyCheck {
    double angle = std::numbers::pi / 2;
    bool found = false;
    bool pass = false;
};

/// Unoriented angle between the local tangents of two workspace curves at `point`, each taken
/// from a quadratic fit of its five samples nearest the point. found is false when either curve
/// misses the point by more than match_tol.
TangencyCheck check_tangency(const TracedCurve& a, const TracedCurve& b, Vec2 point, double tol,
                             double match_tol);

/// Unit tangent at `center` of a least-squares quadratic through ordered samples near it.
Vec2 fitted_tangent(const std::vector<Vec2>& points, Vec2 center);

CuspImageSet cusp_images(const Manipulator& m, const CuspPoint& cusp,
                         const std::vector<TracedCurve>& workspace, const CharResult& chars,
                         const VerifyOptions& opts, Diagnostics* diagnostics = nullptr);

NodeImageSet node_images(const Manipulator& m, const NodePoint& node,
                         const std::vector<TracedCurve>& workspace, const CharResult& chars,
                         const VerifyOptions& opts, Diagnostics* diagnostics = nullptr);

VerificationReport verify_census(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                                 const std::vector<CuspPoint>& cusps,
                                 const std::vector<NodePoint>& nodes, const CharResult& chars,
                                 const VerifyOptions& opts);

}  // namespace rpr
