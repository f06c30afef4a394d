#pragma once

#include <vector>

#include "rpr/error.hpp"
#include "rpr/kinematics.hpp"
#include "rpr/model.hpp"

namespace rpr {

/// Determinant of the three normalized leg-line coordinate rows (u_i, v_i, w_i), where the
/// leg line through A_i and B_i is u_i x + v_i y + w_i = 0 with u_i^2 + v_i^2 = 1. Zero exactly
/// when the leg lines are concurrent or all parallel. Throws ZeroLengthLeg.
double singular_value(const Manipulator& m, const SlicePose& pose);

struct SingularValueGradient {
    double value = 0.0;
    Vec2 gradient;  // d/d(theta1, alpha)
};

SingularValueGradient singular_value_with_gradient(const Manipulator& m, const SlicePose& pose);

AspectLabel aspect_of(const Manipulator& m, const SlicePose& pose, double singular_tol = 1e-8);

/// Unit tangent of the level set through `pose`: perp(grad) / |grad|.
Vec2 singular_tangent(const Manipulator& m, const SlicePose& pose);

/// Moves `angles` onto the zero set along the gradient (a few Newton steps).
Vec2 project_to_singular(const Manipulator& m, Vec2 angles, double rho1, int iterations = 8);

/// |dg t| / |dg|_F for the IK differential dg and the level-set tangent t; vanishes where the
/// singular curve is tangent to the kernel of dg, i.e. at the preimage of a cusp.
double image_speed(const Manipulator& m, const SlicePose& pose);

enum class CurveDomain { WorkspaceSlice, JointSlice };

struct CurveSample {
    Vec2 point;
    Vec2 tangent;
};

/// Ordered polyline. Workspace samples are lifted (continuous across the torus seam); a
/// closed curve repeats its first sample at the end, shifted by `winding` periods.
struct TracedCurve {
    int id = 0;
    CurveDomain domain = CurveDomain::WorkspaceSlice;
    double rho1 = 0.0;
    std::vector<CurveSample> samples;
    bool closed = false;
    int winding_theta = 0;
    int winding_alpha = 0;
    /// Cumulative workspace arc length at each sample (joint curves inherit their source's).
    std::vector<double> arc;
    /// Joint curves: id of the workspace curve they image, sample i <-> source sample i.
    int source_id = -1;
    /// Joint curves: normalized image speed at each sample.
    std::vector<double> speed;

    double length() const { return arc.empty() ? 0.0 : arc.back(); }
    std::size_t size() const { return samples.size(); }
};

struct TraceResult {
    std::vector<TracedCurve> curves;
    int grid_n_used = 0;
    int ambiguous_cells = 0;
    Diagnostics diagnostics;
};

/// Marching squares on the (theta1, alpha) grid with edge roots refined to machine precision.
TraceResult trace_singular_curves(const Manipulator& m, const SliceConfig& slice);

/// Pointwise inverse kinematics with tangents pushed forward by the IK differential.
TracedCurve map_curve_to_jointspace(const Manipulator& m, const TracedCurve& curve);

/// Continuous parameterization of a workspace curve by arc position `s` (wrapped for closed
/// curves): linear interpolation between samples, projected onto the zero set.
Vec2 curve_point_at(const Manipulator& m, const TracedCurve& curve, double s);

/// Index k with arc[k] <= s <= arc[k + 1] (s wrapped for closed curves).
std::size_t curve_segment_at(const TracedCurve& curve, double s);

/// Wraps an arc position into [0, length) for closed curves, clamps otherwise.
double wrap_arc(const TracedCurve& curve, double s);

/// Sum of polyline segment lengths.
double polyline_length(const TracedCurve& curve);

}  // namespace rpr
