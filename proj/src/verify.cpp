#include "rpr/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace rpr {

const char* to_string(ImageClass c) {
    switch (c) {
        case ImageClass::TripleTangency: return "triple_tangency";
        case ImageClass::CharCusp: return "char_cusp";
        case ImageClass::SingularCrossing: return "singular_crossing";
        case ImageClass::CharCrossing: return "char_crossing";
    }
    return "char_cusp";
}

Census reference_census() { return {6, 6, 6, 8, 12, 6}; }

namespace {

struct Nearest {
    std::size_t index = 0;
    double distance = std::numeric_limits<double>::infinity();
};

Nearest nearest_sample(const TracedCurve& c, Vec2 p) {
    Nearest best;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double d = torus_distance(c.samples[i].point, p);
        if (d < best.distance) best = {i, d};
    }
    return best;
}

/// Samples i-half..i+half (wrapping on closed curves), expressed next to `center`.
std::vector<Vec2> window(const TracedCurve& c, std::size_t i, int half, Vec2 center) {
    std::vector<Vec2> out;
    const long n = static_cast<long>(c.closed ? c.size() - 1 : c.size());
    for (long k = static_cast<long>(i) - half; k <= static_cast<long>(i) + half; ++k) {
        long j = k;
        if (c.closed) {
            j = ((k % n) + n) % n;
        } else if (j < 0 || j >= n) {
            continue;
        }
        out.push_back(center + torus_delta(center, c.samples[j].point));
    }
    return out;
}

/// Samples from the given end of a chain, nearest first.
std::vector<Vec2> end_window(const TracedCurve& c, int end, std::size_t count, Vec2 center) {
    std::vector<Vec2> out;
    const std::size_t n = c.size();
    for (std::size_t k = 0; k < std::min(count, n); ++k) {
        const std::size_t j = end == 0 ? k : n - 1 - k;
        out.push_back(center + torus_delta(center, c.samples[j].point));
    }
    return out;
}

Vec2 kernel_direction(const Mat2& a) {
    const Vec2 r0 = a.row0(), r1 = a.row1();
    const Vec2 r = norm(r0) >= norm(r1) ? r0 : r1;
    return normalized(perp(r));
}

double turning_angle(const TracedCurve& c, std::size_t i, int offset, Vec2 center) {
    const auto w = window(c, i, offset, center);
    if (w.size() < 3) return 0.0;
    const Vec2 in = w[static_cast<std::size_t>(offset)] - w.front();
    const Vec2 out = w.back() - w[static_cast<std::size_t>(offset)];
    if (norm(in) == 0.0 || norm(out) == 0.0) return 0.0;
    return std::acos(std::clamp(dot(in, out) / (norm(in) * norm(out)), -1.0, 1.0));
}

}  // namespace

Vec2 fitted_tangent(const std::vector<Vec2>& points, Vec2 center) {
    if (points.size() < 2) return {1.0, 0.0};
    // Frame from the principal axis of the point cloud.
    Vec2 mean{0.0, 0.0};
    for (const Vec2 p : points) mean = mean + p;
    mean = mean / static_cast<double>(points.size());
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const Vec2 p : points) {
        const Vec2 d = p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const Vec2 u{std::cos(phi), std::sin(phi)};
    const Vec2 v = perp(u);
    if (points.size() < 3) return u;
    // eta = c0 + c1 xi + c2 xi^2 by normal equations.
    double s[5] = {0, 0, 0, 0, 0}, t[3] = {0, 0, 0};
    for (const Vec2 p : points) {
        const double xi = dot(p - center, u), eta = dot(p - center, v);
        double pw = 1.0;
        for (int k = 0; k < 5; ++k) {
            s[k] += pw;
            if (k < 3) t[k] += pw * eta;
            pw *= xi;
        }
    }
    const double a[3][3] = {{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}};
    auto det3 = [](const double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double d = det3(a);
    if (std::abs(d) < 1e-300) return u;
    double b[3][3];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) b[r][c] = c == 1 ? t[r] : a[r][c];
    }
    const double c1 = det3(b) / d;
    return normalized(u + c1 * v);
}

TangencyCheck check_tangency(const TracedCurve& a, const TracedCurve& b, Vec2 point, double tol,
                             double match_tol) {
    TangencyCheck out;
    const auto na = nearest_sample(a, point);
    const auto nb = nearest_sample(b, point);
    if (na.distance > match_tol || nb.distance > match_tol) return out;
    const Vec2 ta = fitted_tangent(window(a, na.index, 2, point), point);
    const Vec2 tb = fitted_tangent(window(b, nb.index, 2, point), point);
    out.found = true;
    out.angle = line_angle(ta, tb);
    out.pass = out.angle < tol;
    return out;
}

CuspImageSet cusp_images(const Manipulator& m, const CuspPoint& cusp,
                         const std::vector<TracedCurve>& workspace, const CharResult& chars,
                         const VerifyOptions& opts, Diagnostics* diagnostics) {
    CuspImageSet out;
    out.cusp_id = cusp.id;
    const double rho1 = cusp.triple_pose.rho1;
    const Vec2 x0 = cusp.triple_pose.angles();
    const auto ws_it = std::find_if(workspace.begin(), workspace.end(),
                                    [&](const TracedCurve& c) { return c.id == cusp.source.curve_id; });
    auto note = [&](DiagnosticKind k, std::string msg) {
        if (diagnostics) diagnostics->push_back({k, std::move(msg)});
    };

    // Characteristic points generated next to the triple point: the third preimage of
    // g(x(s0 + d)) lies near x(s0 - 2d).
    PointImage triple;
    triple.pose = cusp.triple_pose;
    triple.kind = ImageClass::TripleTangency;
    const Vec2 ts = singular_tangent(m, cusp.triple_pose);
    if (ws_it != workspace.end()) {
        const auto& ws = *ws_it;
        const double s0 = cusp.source.s;
        const double delta = 1e-3;
        std::vector<Vec2> pts{x0};
        for (int j = 1; j <= 4; ++j) {
            for (double sign : {1.0, -1.0}) {
                const Vec2 xs = curve_point_at(m, ws, s0 + sign * j * delta);
                const JointCoords q = inverse_kinematics(m, SlicePose::at(xs, rho1));
                const Vec2 seed = curve_point_at(m, ws, s0 - sign * 2.0 * j * delta);
                const auto r = newton_solve(m, q, seed, opts.joint.fk.max_iterations, opts.joint.fk.newton_tol);
                if (!r || torus_distance(*r, xs) < 0.5 * j * delta || torus_distance(*r, x0) > 0.05) continue;
                pts.push_back(x0 + torus_delta(x0, *r));
            }
        }
        if (pts.size() >= 4) {
            triple.angle = line_angle(fitted_tangent(pts, x0), ts);
        } else {
            triple.angle = std::numbers::pi / 2;
            note(DiagnosticKind::VerificationFailure,
                 fmt::format("cusp {}: no characteristic points generated near the triple point", cusp.label));
        }
        // Cross-check on the traced curves.
        std::vector<Vec2> char_pts;
        for (const auto& c : chars.curves) {
            for (int e = 0; e < 2; ++e) {
                if (c.ends[e].kind != EndKind::Cusp || c.ends[e].point_id != cusp.id) continue;
                triple.curves.push_back(c.id);
                for (const Vec2 p : end_window(c.curve, e, 5, x0)) char_pts.push_back(p);
            }
        }
        const auto ns = nearest_sample(ws, x0);
        if (!char_pts.empty()) {
            std::sort(char_pts.begin(), char_pts.end(),
                      [&](Vec2 a, Vec2 b) { return norm(a - x0) < norm(b - x0); });
            char_pts.resize(std::min<std::size_t>(char_pts.size(), 5));
            triple.curve_distance = std::max(ns.distance, norm(char_pts.front() - x0));
            triple.check_angle =
                line_angle(fitted_tangent(window(ws, ns.index, 2, x0), x0), fitted_tangent(char_pts, x0));
        } else {
            triple.curve_distance = std::numeric_limits<double>::infinity();
            note(DiagnosticKind::MissingCurve,
                 fmt::format("cusp {}: no characteristic curve ends at the triple point", cusp.label));
        }
    }
    triple.pass = triple.angle < opts.tangency_tol && !std::isnan(triple.check_angle) &&
                  triple.check_angle < opts.tangency_tol && triple.curve_distance <= opts.match_tol();
    out.tangency_angle = triple.angle;
    out.images.push_back(triple);

    const auto sols = distinct_solutions(m, JointCoords::at(rho1, cusp.location), {x0}, opts.joint);
    for (std::size_t i = 1; i < sols.size(); ++i) {
        PointImage img;
        img.pose = SlicePose::at(sols[i], rho1);
        img.kind = ImageClass::CharCusp;
        img.curve_distance = std::numeric_limits<double>::infinity();
        const CharCurve* best = nullptr;
        Nearest bn;
        for (const auto& c : chars.curves) {
            const auto n = nearest_sample(c.curve, sols[i]);
            if (n.distance < bn.distance) {
                bn = n;
                best = &c;
            }
        }
        if (best && bn.distance <= opts.match_tol()) {
            img.curve_distance = bn.distance;
            img.curves.push_back(best->id);
            img.angle = turning_angle(best->curve, bn.index, 3, sols[i]);
            img.pass = img.angle > std::numbers::pi / 2;
        } else {
            note(DiagnosticKind::MissingCurve,
                 fmt::format("cusp {}: no characteristic curve through image ({:.6f}, {:.6f})", cusp.label,
                             sols[i].x, sols[i].y));
        }
        out.images.push_back(img);
    }
    return out;
}

NodeImageSet node_images(const Manipulator& m, const NodePoint& node,
                         const std::vector<TracedCurve>& workspace, const CharResult& chars,
                         const VerifyOptions& opts, Diagnostics* diagnostics) {
    (void)workspace;
    NodeImageSet out;
    out.node_id = node.id;
    const double rho1 = node.pair_poses[0].rho1;
    auto note = [&](DiagnosticKind k, std::string msg) {
        if (diagnostics) diagnostics->push_back({k, std::move(msg)});
    };
    const auto sols = distinct_solutions(m, JointCoords::at(rho1, node.location),
                                         {node.pair_poses[0].angles(), node.pair_poses[1].angles()},
                                         opts.joint);
    for (int k = 0; k < 2; ++k) {
        PointImage img;
        img.pose = node.pair_poses[k];
        img.kind = ImageClass::SingularCrossing;
        const Vec2 p = img.pose.angles();
        const Vec2 ts = singular_tangent(m, img.pose);
        double min_angle = std::numbers::pi / 2;
        std::vector<AspectLabel> aspects;
        for (const auto& c : chars.curves) {
            for (int e = 0; e < 2; ++e) {
                if (c.ends[e].kind != EndKind::Node || c.ends[e].point_id != node.id) continue;
                const Vec2 end = e == 0 ? c.curve.samples.front().point : c.curve.samples.back().point;
                if (torus_distance(end, p) > 1e-9) continue;
                img.curves.push_back(c.id);
                aspects.push_back(c.aspect);
                min_angle = std::min(min_angle, line_angle(fitted_tangent(end_window(c.curve, e, 5, p), p), ts));
            }
        }
        img.angle = min_angle;
        img.check_angle = line_angle(kernel_direction(ik_jacobian(m, img.pose)), ts);
        const bool both = std::find(aspects.begin(), aspects.end(), AspectLabel::WA1) != aspects.end() &&
                          std::find(aspects.begin(), aspects.end(), AspectLabel::WA2) != aspects.end();
        img.pass = both && img.angle > opts.transversal_min;
        if (!both) {
            note(DiagnosticKind::MissingCurve,
                 fmt::format("node {}: characteristic curves of both aspects do not meet pair pose {}",
                             node.label, k));
        }
        out.images.push_back(img);
    }
    for (std::size_t i = 2; i < sols.size(); ++i) {
        PointImage img;
        img.pose = SlicePose::at(sols[i], rho1);
        img.kind = ImageClass::CharCrossing;
        img.curve_distance = std::numeric_limits<double>::infinity();
        struct Piece {
            const CharCurve* c;
            Nearest n;
        };
        std::vector<Piece> pieces;
        for (const auto& c : chars.curves) {
            // One piece per run of samples within match_tol.
            Nearest run;
            bool in = false;
            for (std::size_t j = 0; j <= c.curve.size(); ++j) {
                const double d = j < c.curve.size() ? torus_distance(c.curve.samples[j].point, sols[i])
                                                    : std::numeric_limits<double>::infinity();
                if (d <= opts.match_tol()) {
                    if (!in || d < run.distance) run = {j, d};
                    in = true;
                } else if (in) {
                    pieces.push_back({&c, run});
                    in = false;
                    run = {};
                }
            }
        }
        std::sort(pieces.begin(), pieces.end(),
                  [](const Piece& a, const Piece& b) { return a.n.distance < b.n.distance; });
        if (pieces.size() >= 2) {
            const Vec2 t0 = fitted_tangent(window(pieces[0].c->curve, pieces[0].n.index, 2, sols[i]), sols[i]);
            const Vec2 t1 = fitted_tangent(window(pieces[1].c->curve, pieces[1].n.index, 2, sols[i]), sols[i]);
            img.angle = line_angle(t0, t1);
            img.curve_distance = pieces[1].n.distance;
            img.curves = {pieces[0].c->id, pieces[1].c->id};
            // Pull the two branch image tangents back through the local inverse.
            const Mat2 dg = ik_jacobian(m, img.pose);
            const double det = dg.det();
            if (std::abs(det) > 0.0) {
                const Mat2 inv{dg.d / det, -dg.b / det, -dg.c / det, dg.a / det};
                img.check_angle = line_angle(inv * node.tangents[0], inv * node.tangents[1]);
            }
            img.pass = img.angle > opts.transversal_min;
        } else {
            note(DiagnosticKind::MissingCurve,
                 fmt::format("node {}: fewer than two characteristic curves through image ({:.6f}, {:.6f})",
                             node.label, sols[i].x, sols[i].y));
        }
        out.images.push_back(img);
    }
    return out;
}

VerificationReport verify_census(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                                 const std::vector<CuspPoint>& cusps,
                                 const std::vector<NodePoint>& nodes, const CharResult& chars,
                                 const VerifyOptions& opts) {
    VerificationReport r;
    r.tolerances = opts;
    r.expected = opts.expected;
    r.counts.cusps = static_cast<int>(cusps.size());
    r.counts.nodes = static_cast<int>(nodes.size());
    for (const auto& c : cusps) {
        auto set = cusp_images(m, c, workspace, chars, opts, &r.diagnostics);
        for (const auto& img : set.images) {
            if (!img.pass) {
                r.diagnostics.push_back({DiagnosticKind::VerificationFailure,
                                         fmt::format("cusp {}: {} image at ({:.6f}, {:.6f}) fails (angle {:.4g} deg)",
                                                     c.label, to_string(img.kind), img.pose.theta1,
                                                     img.pose.alpha, img.angle * 180.0 / std::numbers::pi)});
                continue;
            }
            if (img.kind == ImageClass::TripleTangency) ++r.counts.tangencies;
            if (img.kind == ImageClass::CharCusp) ++r.counts.char_cusps;
        }
        r.cusps.push_back(std::move(set));
    }
    for (const auto& n : nodes) {
        auto set = node_images(m, n, workspace, chars, opts, &r.diagnostics);
        for (const auto& img : set.images) {
            if (!img.pass) {
                r.diagnostics.push_back({DiagnosticKind::VerificationFailure,
                                         fmt::format("node {}: {} image at ({:.6f}, {:.6f}) fails (angle {:.4g} deg)",
                                                     n.label, to_string(img.kind), img.pose.theta1,
                                                     img.pose.alpha, img.angle * 180.0 / std::numbers::pi)});
                continue;
            }
            if (img.kind == ImageClass::SingularCrossing) ++r.counts.singular_char_crossings;
            if (img.kind == ImageClass::CharCrossing) ++r.counts.char_char_crossings;
        }
        r.nodes.push_back(std::move(set));
    }
    if (r.expected) {
        const auto& e = *r.expected;
        auto cmp = [&](const char* name, int got, int want) {
            if (got != want) r.mismatches.push_back(fmt::format("{}: {} (expected {})", name, got, want));
        };
        cmp("cusps", r.counts.cusps, e.cusps);
        cmp("nodes", r.counts.nodes, e.nodes);
        cmp("tangencies", r.counts.tangencies, e.tangencies);
        cmp("char_cusps", r.counts.char_cusps, e.char_cusps);
        cmp("singular_char_crossings", r.counts.singular_char_crossings, e.singular_char_crossings);
        cmp("char_char_crossings", r.counts.char_char_crossings, e.char_char_crossings);
    }
    const bool all_images = std::none_of(r.diagnostics.begin(), r.diagnostics.end(), [](const Diagnostic& d) {
        return d.kind == DiagnosticKind::VerificationFailure || d.kind == DiagnosticKind::MissingCurve;
    });
    r.pass = r.mismatches.empty() && (r.expected.has_value() || all_images);
    return r;
}

}  // namespace rpr
