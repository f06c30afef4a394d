#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rpr/error.hpp"
#include "rpr/model.hpp"
#include "rpr/vec2.hpp"

namespace rpr {

/// Workspace slice coordinates: B1 = A1 + rho1 (cos theta1, sin theta1), platform orientation alpha.
struct SlicePose {
    double theta1 = 0.0;
    double alpha = 0.0;
    double rho1 = 0.0;

    Vec2 angles() const { return {theta1, alpha}; }
    SlicePose normalized() const { return {wrap_angle(theta1), wrap_angle(alpha), rho1}; }
    static SlicePose at(Vec2 angles, double rho1) { return {angles.x, angles.y, rho1}; }
};

struct JointCoords {
    double rho1 = 0.0;
    double rho2 = 0.0;
    double rho3 = 0.0;

    Vec2 slice() const { return {rho2, rho3}; }
    static JointCoords at(double rho1, Vec2 slice) { return {rho1, slice.x, slice.y}; }
};

struct PlatformPoints {
    Vec2 b1, b2, b3;
};

enum class AspectLabel { WA1, WA2, Singular };
const char* to_string(AspectLabel a);

/// Immutable kinematic model: validated geometry plus its platform frame.
class Manipulator {
public:
    explicit Manipulator(ManipulatorGeometry g);

    const ManipulatorGeometry& geometry() const { return geometry_; }
    const PlatformFrame& frame() const { return frame_; }

    PlatformPoints platform_points(const SlicePose& pose) const;

    /// Upper bound on any leg length over the whole workspace slice at rho1.
    double max_leg_length(double rho1) const;

private:
    ManipulatorGeometry geometry_;
    PlatformFrame frame_;
};

JointCoords inverse_kinematics(const Manipulator& m, const SlicePose& pose);

/// d(rho2, rho3) / d(theta1, alpha). Throws ZeroLengthLeg where a leg vanishes.
Mat2 ik_jacobian(const Manipulator& m, const SlicePose& pose);

/// f_i = |B_i - A_i|^2 - rho_i^2 for i = 2, 3.
std::pair<double, double> residuals(const Manipulator& m, const SlicePose& pose,
                                    const JointCoords& joint);

struct ResidualJacobian {
    Vec2 f;
    Mat2 jacobian;  // d(f2, f3) / d(theta1, alpha)
};

ResidualJacobian residuals_with_jacobian(const Manipulator& m, const SlicePose& pose,
                                         const JointCoords& joint);

/// Leg angles theta2, theta3 with the x-axis. Throws ZeroLengthLeg.
std::pair<double, double> passive_angles(const Manipulator& m, const SlicePose& pose);

struct Configuration {
    SlicePose pose;
    PlatformPoints platform;
    double theta2 = 0.0;
    double theta3 = 0.0;
    double det_j = 0.0;
    AspectLabel aspect = AspectLabel::Singular;
};

struct FkOptions {
    int grid_n = 256;
    double dedupe_tol = 1e-6;
    double singular_tol = 1e-8;
    int max_iterations = 50;
    /// Newton stops once the leg-length error drops below this.
    double newton_tol = 1e-12;
    /// Additional Newton starting points in (theta1, alpha).
    std::vector<Vec2> extra_seeds;
};

struct SolutionSet {
    JointCoords joint;
    std::vector<Configuration> solutions;
    int nonconverged = 0;
    bool singular_input = false;
    Diagnostics diagnostics;

    std::size_t count() const { return solutions.size(); }
    int count_in(AspectLabel a) const;
};

/// All isolated solutions of the two leg-closure equations on the (theta1, alpha) torus,
/// ordered by ascending alpha then theta1.
SolutionSet forward_kinematics(const Manipulator& m, const JointCoords& joint,
                               const FkOptions& opts = {});

/// Damped Newton on the closure equations from `seed`; nullopt when it does not converge.
std::optional<Vec2> newton_solve(const Manipulator& m, const JointCoords& joint, Vec2 seed,
                                 int max_iterations = 50, double tol = 1e-12);

Configuration make_configuration(const Manipulator& m, const SlicePose& pose,
                                 double singular_tol = 1e-8);

/// Groups poses whose torus distance is below `tol` (single linkage). Returns cluster sizes
/// and the index of each pose's cluster.
struct Clustering {
    std::vector<int> cluster_of;
    std::vector<int> sizes;
    std::size_t count() const { return sizes.size(); }
};
Clustering cluster_poses(const std::vector<Vec2>& poses, double tol);

// ---------------------------------------------------------------------------
// Continuation of solution branches along joint-space paths at fixed rho1.

/// Continuous path lambda in [0, 1] -> (rho2, rho3).
struct JointPath {
    std::function<Vec2(double)> point;
    std::function<Vec2(double)> velocity;

    bool closed(double tol = 1e-12) const { return norm(point(1.0) - point(0.0)) < tol; }
};

JointPath straight_path(Vec2 from, Vec2 to);
/// Full circle starting at center + radius (cos phase, sin phase).
JointPath circle_path(Vec2 center, double radius, double phase, bool counter_clockwise = true);
/// Traverses `first` on [0, 1/2] and `second` on [1/2, 1].
JointPath concatenate(const JointPath& first, const JointPath& second);
JointPath reversed(const JointPath& p);

enum class BranchEventKind { Coalescence, Birth };

struct BranchEvent {
    double path_parameter = 0.0;
    BranchEventKind kind = BranchEventKind::Coalescence;
    /// Coalescence: indices into the start set. Birth: indices into the end set.
    std::pair<int, int> branch_ids{-1, -1};
    SlicePose location;
    /// Torus distance between the two branches when the event was declared.
    double separation = 0.0;
};

struct ContinuationOptions {
    double initial_step = 0.01;
    double max_step = 0.05;
    double min_step = 1e-13;
    /// Largest allowed per-step motion of a branch on the torus.
    double max_move = 0.1;
    FkOptions fk;
};

struct ContinuationResult {
    /// Final pose of each start branch; nullopt for branches lost at a coalescence.
    std::vector<std::optional<Vec2>> final_poses;
    std::vector<BranchEvent> events;
    SolutionSet end_set;
    /// start index -> index into end_set (-1 when the branch was lost).
    std::vector<int> end_index;
    /// Closed paths only: start index -> start index reached after one traversal (-1 if lost).
    std::optional<std::vector<int>> permutation;
    Diagnostics diagnostics;
};

/// Predictor-corrector tracking of every solution in `start` along `path` (path(0) must be
/// start.joint). Throws Error(Numerical) when branches cannot be kept apart.
ContinuationResult continue_solutions(const Manipulator& m, const JointPath& path,
                                      const SolutionSet& start,
                                      const ContinuationOptions& opts = {});

}  // namespace rpr
