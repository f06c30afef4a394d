#include "rpr/jointspace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

#include "rpr/raster.hpp"

namespace rpr {

namespace {

const TracedCurve& source_of(const std::vector<TracedCurve>& workspace, const TracedCurve& image) {
    for (const auto& c : workspace) {
        if (c.id == image.source_id) return c;
    }
    throw Error(ErrorKind::Validation, fmt::format("no workspace curve with id {}", image.source_id),
                "source_id");
}

Vec2 image_point(const Manipulator& m, double rho1, Vec2 angles) {
    return inverse_kinematics(m, SlicePose::at(angles, rho1)).slice();
}

/// Unit image tangent dg t at a singular pose, oriented with the workspace curve.
Vec2 image_tangent(const Manipulator& m, const SlicePose& pose) {
    const Vec2 v = ik_jacobian(m, pose) * singular_tangent(m, pose);
    const double n = norm(v);
    return n > 0.0 ? v / n : Vec2{0.0, 0.0};
}

double speed_at(const Manipulator& m, const TracedCurve& ws, double s) {
    try {
        return image_speed(m, SlicePose::at(curve_point_at(m, ws, s), ws.rho1));
    } catch (const Error&) {
        return 1.0;
    }
}

/// Cyclic arc distance on a closed curve, plain difference otherwise.
double arc_distance(const TracedCurve& c, double a, double b) {
    double d = std::abs(wrap_arc(c, a) - wrap_arc(c, b));
    if (c.closed) d = std::min(d, c.length() - d);
    return d;
}

/// Image velocity projected on a fixed reference direction; it changes sign where the image
/// tangent reverses, so a cusp is a simple root even though the speed has a kink there.
double signed_speed(const Manipulator& m, const TracedCurve& ws, double s, Vec2 ref) {
    const SlicePose pose = SlicePose::at(curve_point_at(m, ws, s), ws.rho1);
    const Mat2 dg = ik_jacobian(m, pose);
    return dot(dg * singular_tangent(m, pose), ref) / dg.frobenius();
}

/// Brent stops near sqrt(eps) in the arc parameter; a bracketed root of the signed speed
/// reaches machine precision.
void polish_cusp(const Manipulator& m, const TracedCurve& ws, double lo, double hi, double& s_min,
                 double& v_min) {
    try {
        const Vec2 ref = image_tangent(m, SlicePose::at(curve_point_at(m, ws, lo), ws.rho1));
        auto g = [&](double s) { return signed_speed(m, ws, s, ref); };
        const double glo = g(lo), ghi = g(hi);
        if (!(glo * ghi < 0.0)) return;
        std::uintmax_t iters = 100;
        const auto [a, b] = boost::math::tools::toms748_solve(
            g, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52), iters);
        const double s = 0.5 * (a + b);
        const double v = speed_at(m, ws, s);
        if (v < v_min) {
            s_min = s;
            v_min = v;
        }
    } catch (const Error&) {
    }
}

struct TripleProbe {
    std::vector<Configuration> near;
    Vec2 probe;
};

/// Direct kinematics just inside the wedge of a candidate cusp; a genuine cusp shows three
/// solutions clustered around the coalescence pose.
std::optional<TripleProbe> probe_triple(const Manipulator& m, const TracedCurve& ws, double s0,
                                        Vec2 x0, const JointAnalysisOptions& opts) {
    for (double delta : {2e-3, 1e-3, 5e-4, 2.5e-4}) {
        const Vec2 qa = image_point(m, ws.rho1, curve_point_at(m, ws, s0 + delta));
        const Vec2 qb = image_point(m, ws.rho1, curve_point_at(m, ws, s0 - delta));
        const Vec2 probe = 0.5 * (qa + qb);
        FkOptions fk = opts.fk;
        for (double k : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
            fk.extra_seeds.push_back(curve_point_at(m, ws, s0 + k * delta));
        }
        const auto set = forward_kinematics(m, JointCoords::at(ws.rho1, probe), fk);
        TripleProbe out{{}, probe};
        for (const auto& c : set.solutions) {
            if (torus_distance(c.pose.angles(), x0) < 20.0 * delta) out.near.push_back(c);
        }
        if (out.near.size() == 3) return out;
    }
    return std::nullopt;
}

}  // namespace

std::vector<Vec2> distinct_solutions(const Manipulator& m, const JointCoords& joint,
                                     const std::vector<Vec2>& anchors,
                                     const JointAnalysisOptions& opts) {
    FkOptions fk = opts.fk;
    fk.extra_seeds.insert(fk.extra_seeds.end(), anchors.begin(), anchors.end());
    const auto set = forward_kinematics(m, joint, fk);
    std::vector<Vec2> rest;
    for (const auto& c : set.solutions) {
        const Vec2 p = c.pose.angles();
        const bool absorbed = std::any_of(anchors.begin(), anchors.end(), [&](Vec2 a) {
            return torus_distance(a, p) < opts.anchor_radius;
        });
        if (!absorbed) rest.push_back(p);
    }
    std::vector<Vec2> out(anchors.begin(), anchors.end());
    const auto clusters = cluster_poses(rest, opts.image_cluster_tol);
    std::vector<bool> taken(clusters.count(), false);
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const int c = clusters.cluster_of[i];
        if (taken[c]) continue;
        taken[c] = true;
        out.push_back({wrap_angle(rest[i].x), wrap_angle(rest[i].y)});
    }
    return out;
}

CuspDetection detect_cusps(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                           const std::vector<TracedCurve>& images,
                           const JointAnalysisOptions& opts) {
    CuspDetection out;
    struct Found {
        int curve;
        double s;
        double speed;
    };
    std::vector<Found> found;
    for (const auto& img : images) {
        const auto& ws = source_of(workspace, img);
        const std::size_t n = img.closed ? img.size() - 1 : img.size();
        if (n < 3) continue;
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t prev, next;
            if (img.closed) {
                prev = (k + n - 1) % n;
                next = (k + 1) % n;
            } else {
                if (k == 0 || k + 1 == n) continue;
                prev = k - 1;
                next = k + 1;
            }
            if (!(img.speed[k] <= img.speed[prev] && img.speed[k] < img.speed[next])) continue;
            const double lo = prev < k ? ws.arc[prev] : ws.arc[prev] - ws.length();
            const double hi = next > k ? ws.arc[next] : ws.arc[next] + ws.length();
            auto f = [&](double s) { return speed_at(m, ws, s); };
            auto [s_min, v_min] = boost::math::tools::brent_find_minima(f, lo, hi, 52);
            if (v_min < 1e-3) polish_cusp(m, ws, lo, hi, s_min, v_min);
            if (v_min >= opts.cusp_tol) {
                if (v_min < 1e-3) {
                    out.suspects.push_back(
                        {image_point(m, ws.rho1, curve_point_at(m, ws, s_min)),
                         fmt::format("image speed minimum {:.3g} above cusp tolerance", v_min)});
                }
                continue;
            }
            const double s = wrap_arc(ws, s_min);
            const bool dup = std::any_of(found.begin(), found.end(), [&](const Found& f2) {
                return f2.curve == ws.id && arc_distance(ws, f2.s, s) < 1e-6;
            });
            if (!dup) found.push_back({ws.id, s, v_min});
        }
    }

    for (const auto& f : found) {
        const auto& ws = *std::find_if(workspace.begin(), workspace.end(),
                                       [&](const TracedCurve& c) { return c.id == f.curve; });
        const Vec2 x0 = curve_point_at(m, ws, f.s);
        const SlicePose pose = SlicePose::at(x0, ws.rho1).normalized();
        const Vec2 loc = image_point(m, ws.rho1, x0);
        const auto triple = probe_triple(m, ws, f.s, x0, opts);
        if (!triple) {
            out.suspects.push_back({loc, "no triple coalescence near speed minimum"});
            out.diagnostics.push_back({DiagnosticKind::VerificationFailure,
                                       fmt::format("cusp candidate at ({:.6f}, {:.6f}) has no "
                                                   "triple solution nearby",
                                                   loc.x, loc.y)});
            continue;
        }
        CuspPoint c;
        c.location = loc;
        c.source = {ws.id, f.s};
        c.triple_pose = pose;
        c.speed = f.speed;
        int wa1 = 0;
        for (const auto& cfg : triple->near) wa1 += cfg.aspect == AspectLabel::WA1 ? 1 : 0;
        c.aspect = wa1 >= 2 ? AspectLabel::WA1 : AspectLabel::WA2;
        c.opening = normalized(triple->probe - loc);
        c.distinct_solutions = static_cast<int>(
            distinct_solutions(m, JointCoords::at(ws.rho1, loc), {pose.angles()}, opts).size());
        out.cusps.push_back(c);
    }
    std::sort(out.cusps.begin(), out.cusps.end(), [](const CuspPoint& a, const CuspPoint& b) {
        return std::tie(a.source.curve_id, a.source.s) < std::tie(b.source.curve_id, b.source.s);
    });
    for (std::size_t i = 0; i < out.cusps.size(); ++i) {
        out.cusps[i].id = static_cast<int>(i);
        out.cusps[i].label = fmt::format("C{}", i + 1);
    }
    return out;
}

namespace {

struct SegRef {
    int image;  // index into images
    int k;      // segment k -> k+1
};

bool pattern_ok(const std::array<int, 4>& c) {
    for (int r = 0; r < 4; ++r) {
        const int n = c[r];
        if (n >= 4 && c[(r + 1) % 4] == n - 2 && c[(r + 2) % 4] == n - 4 && c[(r + 3) % 4] == n - 2) {
            return true;
        }
    }
    return false;
}

}  // namespace

NodeDetection detect_nodes(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                           const std::vector<TracedCurve>& images,
                           const std::vector<CuspPoint>& cusps,
                           const JointAnalysisOptions& opts) {
    NodeDetection out;
    std::vector<SegRef> segs;
    Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    double longest = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        for (std::size_t k = 0; k + 1 < img.size(); ++k) {
            segs.push_back({static_cast<int>(i), static_cast<int>(k)});
            const Vec2 a = img.samples[k].point, b = img.samples[k + 1].point;
            lo = {std::min({lo.x, a.x, b.x}), std::min({lo.y, a.y, b.y})};
            hi = {std::max({hi.x, a.x, b.x}), std::max({hi.y, a.y, b.y})};
            longest = std::max(longest, norm(b - a));
        }
    }
    if (segs.empty()) return out;

    // Bucket grid; every segment is registered in each cell its bounding box touches.
    const double cell = std::max({longest, (hi.x - lo.x) / 512.0, (hi.y - lo.y) / 512.0, 1e-9});
    const int gx = static_cast<int>((hi.x - lo.x) / cell) + 1;
    std::unordered_map<long long, std::vector<int>> buckets;
    auto key = [&](int ix, int iy) { return static_cast<long long>(iy) * gx + ix; };
    for (std::size_t n = 0; n < segs.size(); ++n) {
        const auto& img = images[segs[n].image];
        const Vec2 a = img.samples[segs[n].k].point, b = img.samples[segs[n].k + 1].point;
        const int x0 = static_cast<int>((std::min(a.x, b.x) - lo.x) / cell);
        const int x1 = static_cast<int>((std::max(a.x, b.x) - lo.x) / cell);
        const int y0 = static_cast<int>((std::min(a.y, b.y) - lo.y) / cell);
        const int y1 = static_cast<int>((std::max(a.y, b.y) - lo.y) / cell);
        for (int iy = y0; iy <= y1; ++iy) {
            for (int ix = x0; ix <= x1; ++ix) buckets[key(ix, iy)].push_back(static_cast<int>(n));
        }
    }

    auto near_cusp = [&](const TracedCurve& ws, double s) {
        const double spacing = ws.length() / std::max<std::size_t>(ws.size(), 1);
        const double zone = std::max(opts.cusp_exclusion, 5.0 * spacing);
        for (const auto& c : cusps) {
            if (c.source.curve_id == ws.id && arc_distance(ws, c.source.s, s) < zone) return &c;
        }
        return static_cast<const CuspPoint*>(nullptr);
    };

    std::set<std::pair<int, int>> tested;
    struct Hit {
        int ia, ib;
        double sa, sb;
    };
    std::vector<Hit> hits;
    for (const auto& [_, list] : buckets) {
        for (std::size_t p = 0; p < list.size(); ++p) {
            for (std::size_t q = p + 1; q < list.size(); ++q) {
                const int u = std::min(list[p], list[q]), v = std::max(list[p], list[q]);
                if (!tested.insert({u, v}).second) continue;
                const auto& A = segs[u];
                const auto& B = segs[v];
                const auto& ia = images[A.image];
                const auto& ib = images[B.image];
                if (A.image == B.image) {
                    const int n = static_cast<int>(ia.size()) - 1;
                    const int d = std::abs(A.k - B.k);
                    if (d <= 1 || (ia.closed && d == n - 1)) continue;
                }
                const Vec2 p0 = ia.samples[A.k].point, r = ia.samples[A.k + 1].point - p0;
                const Vec2 q0 = ib.samples[B.k].point, w = ib.samples[B.k + 1].point - q0;
                const double den = cross(r, w);
                if (std::abs(den) < 1e-300) continue;
                const double ta = cross(q0 - p0, w) / den;
                const double tb = cross(q0 - p0, r) / den;
                if (ta < 0.0 || ta >= 1.0 || tb < 0.0 || tb >= 1.0) continue;
                const auto& wa = source_of(workspace, ia);
                const auto& wb = source_of(workspace, ib);
                const double sa = wa.arc[A.k] + ta * (wa.arc[A.k + 1] - wa.arc[A.k]);
                const double sb = wb.arc[B.k] + tb * (wb.arc[B.k + 1] - wb.arc[B.k]);
                const auto* ca = near_cusp(wa, sa);
                if (ca && ca == near_cusp(wb, sb)) continue;
                hits.push_back({A.image, B.image, sa, sb});
            }
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        return std::tie(a.ia, a.sa, a.ib, a.sb) < std::tie(b.ia, b.sa, b.ib, b.sb);
    });

    for (const auto& h : hits) {
        const auto& wa = source_of(workspace, images[h.ia]);
        const auto& wb = source_of(workspace, images[h.ib]);
        const double rho1 = wa.rho1;
        auto F = [&](double s, double t) {
            return image_point(m, rho1, curve_point_at(m, wa, s)) -
                   image_point(m, rho1, curve_point_at(m, wb, t));
        };
        double s = h.sa, t = h.sb;
        Vec2 r = F(s, t);
        bool ok = false;
        for (int it = 0; it < 30; ++it) {
            const double e = 1e-6;
            const Vec2 ds = (F(s + e, t) - F(s - e, t)) / (2.0 * e);
            const Vec2 dt = (F(s, t + e) - F(s, t - e)) / (2.0 * e);
            const Mat2 J{ds.x, dt.x, ds.y, dt.y};
            const double det = J.det();
            if (std::abs(det) < 1e-300) break;
            const double step_s = (J.d * r.x - J.b * r.y) / det;
            const double step_t = (-J.c * r.x + J.a * r.y) / det;
            s -= step_s;
            t -= step_t;
            r = F(s, t);
            if (norm(r) < 1e-12 || std::max(std::abs(step_s), std::abs(step_t)) < 1e-12) {
                ok = norm(r) < 1e-9;
                break;
            }
        }
        const Vec2 xa = curve_point_at(m, wa, s), xb = curve_point_at(m, wb, t);
        const Vec2 loc = image_point(m, rho1, xa);
        if (!ok) {
            out.suspects.push_back({loc, "crossing refinement did not converge"});
            out.diagnostics.push_back(
                {DiagnosticKind::NonConvergence,
                 fmt::format("node refinement failed near ({:.6f}, {:.6f})", loc.x, loc.y)});
            continue;
        }
        if (torus_distance(xa, xb) < 1e-6) continue;  // same pose reached twice: not a crossing
        const SlicePose pa = SlicePose::at(xa, rho1).normalized();
        const SlicePose pb = SlicePose::at(xb, rho1).normalized();
        const Vec2 ta = image_tangent(m, pa), tb = image_tangent(m, pb);
        const double angle = line_angle(ta, tb);
        if (angle < opts.node_angle_min) {
            out.suspects.push_back(
                {loc, fmt::format("near-tangent crossing ({:.3g} deg)", angle * 180.0 / std::numbers::pi)});
            continue;
        }
        const bool dup = std::any_of(out.nodes.begin(), out.nodes.end(), [&](const NodePoint& n) {
            return norm(n.location - loc) < 1e-7;
        });
        if (dup) continue;

        NodePoint node;
        node.location = loc;
        node.params = {CurveParam{wa.id, wrap_arc(wa, s)}, CurveParam{wb.id, wrap_arc(wb, t)}};
        node.pair_poses = {pa, pb};
        node.tangents = {ta, tb};
        node.angle = angle;
        node.distinct_solutions = static_cast<int>(
            distinct_solutions(m, JointCoords::at(rho1, loc), {pa.angles(), pb.angles()}, opts).size());
        bool pattern = false;
        const std::array<Vec2, 4> dirs{ta + tb, tb - ta, -1.0 * (ta + tb), ta - tb};
        for (double eps : {0.02, 0.01, 0.005, 0.002}) {
            std::array<int, 4> counts{};
            bool clean = true;
            for (int i = 0; i < 4; ++i) {
                FkOptions fk = opts.fk;
                fk.extra_seeds = {pa.angles(), pb.angles()};
                const auto set = forward_kinematics(m, JointCoords::at(rho1, loc + eps * dirs[i]), fk);
                counts[i] = static_cast<int>(set.count());
                clean = clean && !set.singular_input;
            }
            node.sector_counts = counts;
            if (clean && pattern_ok(counts)) {
                pattern = true;
                break;
            }
        }
        if (!pattern) {
            out.suspects.push_back({loc, "sector counts do not match a transversal fold crossing"});
            out.diagnostics.push_back(
                {DiagnosticKind::VerificationFailure,
                 fmt::format("node at ({:.6f}, {:.6f}) has sector counts {},{},{},{}", loc.x, loc.y,
                             node.sector_counts[0], node.sector_counts[1], node.sector_counts[2],
                             node.sector_counts[3])});
            continue;
        }
        out.nodes.push_back(node);
    }
    std::sort(out.nodes.begin(), out.nodes.end(), [](const NodePoint& a, const NodePoint& b) {
        return std::tie(a.params[0].curve_id, a.params[0].s) < std::tie(b.params[0].curve_id, b.params[0].s);
    });
    for (std::size_t i = 0; i < out.nodes.size(); ++i) {
        out.nodes[i].id = static_cast<int>(i);
        out.nodes[i].label = fmt::format("N{}", i + 1);
    }
    return out;
}

void JointWindow::validate() const {
    if (!(rho2_max > rho2_min) || !(rho3_max > rho3_min)) {
        throw Error(ErrorKind::Validation, "joint window must have positive extent", "window");
    }
    if (rho2_min < 0.0 || rho3_min < 0.0) {
        throw Error(ErrorKind::Validation, "joint window must lie in rho >= 0", "window");
    }
}

JointWindow image_window(const std::vector<TracedCurve>& images, double margin) {
    JointWindow w{1e300, -1e300, 1e300, -1e300};
    for (const auto& c : images) {
        for (const auto& s : c.samples) {
            w.rho2_min = std::min(w.rho2_min, s.point.x);
            w.rho2_max = std::max(w.rho2_max, s.point.x);
            w.rho3_min = std::min(w.rho3_min, s.point.y);
            w.rho3_max = std::max(w.rho3_max, s.point.y);
        }
    }
    if (w.rho2_min > w.rho2_max) return {0.0, 1.0, 0.0, 1.0};
    return {std::max(0.0, w.rho2_min - margin), w.rho2_max + margin, std::max(0.0, w.rho3_min - margin),
            w.rho3_max + margin};
}

Vec2 RegionMap::cell_center(int ix, int iy) const {
    return {window.rho2_min + (ix + 0.5) * (window.rho2_max - window.rho2_min) / nx,
            window.rho3_min + (iy + 0.5) * (window.rho3_max - window.rho3_min) / ny};
}

std::optional<std::pair<int, int>> RegionMap::cell_of(Vec2 p) const {
    if (!window.contains(p)) return std::nullopt;
    const int ix = std::min(nx - 1, static_cast<int>((p.x - window.rho2_min) /
                                                      (window.rho2_max - window.rho2_min) * nx));
    const int iy = std::min(ny - 1, static_cast<int>((p.y - window.rho3_min) /
                                                      (window.rho3_max - window.rho3_min) * ny));
    return std::make_pair(ix, iy);
}

int RegionMap::count_at(Vec2 p) const {
    const auto c = cell_of(p);
    return c ? counts[c->second * nx + c->first] : -1;
}

RegionMap count_solutions_map(const Manipulator& m, double rho1, const JointWindow& window,
                              int resolution, const std::vector<TracedCurve>& images,
                              const FkOptions& fk) {
    window.validate();
    if (resolution < 4) throw Error(ErrorKind::Validation, "resolution must be at least 4", "resolution");
    RegionMap map;
    map.window = window;
    map.nx = map.ny = resolution;
    LabelGrid grid({window.rho2_min, window.rho3_min},
                   {window.rho2_max - window.rho2_min, window.rho3_max - window.rho3_min}, resolution,
                   resolution, false, false);
    for (const auto& c : images) {
        for (std::size_t k = 0; k + 1 < c.size(); ++k) grid.block_segment(c.samples[k].point, c.samples[k + 1].point);
    }
    const int nregions = grid.label_components();
    const auto clearance = grid.clearance();
    std::vector<int> best(nregions, -1);
    map.regions.resize(nregions);
    for (int i = 0; i < resolution * resolution; ++i) {
        const int l = grid.labels()[i];
        if (l < 0) continue;
        ++map.regions[l].cells;
        if (best[l] < 0 || clearance[i] > clearance[best[l]]) best[l] = i;
    }
    for (int l = 0; l < nregions; ++l) {
        auto& r = map.regions[l];
        r.id = l;
        r.representative = grid.cell_center(best[l] % resolution, best[l] / resolution);
        r.count = static_cast<int>(forward_kinematics(m, JointCoords::at(rho1, r.representative), fk).count());
    }
    map.labels = grid.labels();
    map.counts.resize(map.labels.size());
    for (std::size_t i = 0; i < map.labels.size(); ++i) {
        map.counts[i] = map.labels[i] < 0 ? -1 : map.regions[map.labels[i]].count;
    }
    return map;
}

std::optional<CrossingProbe> probe_crossing(const Manipulator& m, const TracedCurve& workspace,
                                            const TracedCurve& image, double s,
                                            const JointAnalysisOptions& opts) {
    (void)image;
    const double rho1 = workspace.rho1;
    const Vec2 x = curve_point_at(m, workspace, s);
    const SlicePose pose = SlicePose::at(x, rho1).normalized();
    const Vec2 q = image_point(m, rho1, x);
    Vec2 nu;
    try {
        nu = perp(image_tangent(m, pose));
    } catch (const Error&) {
        return std::nullopt;
    }
    if (norm(nu) == 0.0) return std::nullopt;
    for (double eps : {0.02, 0.01, 0.005, 0.0025}) {
        const Vec2 pp = q + eps * nu, pm = q - eps * nu;
        if (pp.x <= 0.0 || pp.y <= 0.0 || pm.x <= 0.0 || pm.y <= 0.0) continue;
        FkOptions fk = opts.fk;
        fk.extra_seeds = {x};
        const auto sp = forward_kinematics(m, JointCoords::at(rho1, pp), fk);
        const auto sm = forward_kinematics(m, JointCoords::at(rho1, pm), fk);
        if (sp.singular_input || sm.singular_input) continue;
        const int cp = static_cast<int>(sp.count()), cm = static_cast<int>(sm.count());
        if (std::abs(cp - cm) != 2) continue;
        const bool plus_high = cp > cm;
        const auto& start = plus_high ? sp : sm;
        const Vec2 high = plus_high ? pp : pm, low = plus_high ? pm : pp;
        ContinuationOptions copts;
        copts.fk = opts.fk;
        ContinuationResult run;
        try {
            run = continue_solutions(m, straight_path(high, low), start, copts);
        } catch (const Error&) {
            continue;
        }
        if (run.events.size() != 1 || run.events[0].kind != BranchEventKind::Coalescence) continue;
        const auto& ev = run.events[0];
        if (torus_distance(ev.location.angles(), x) > 0.5) continue;
        CrossingProbe p;
        p.high_point = high;
        p.low_point = low;
        p.high_count = plus_high ? cp : cm;
        p.low_count = plus_high ? cm : cp;
        const auto& a = start.solutions[ev.branch_ids.first];
        const auto& b = start.solutions[ev.branch_ids.second];
        p.lost_pair = {a.pose, b.pose};
        p.lost_aspects = {a.aspect, b.aspect};
        p.coalescence = ev.location;
        p.probe_radius = eps;
        return p;
    }
    return std::nullopt;
}

bool SegmentLabel::contains(double s, double length) const {
    if (s < s_begin && length > 0.0) s += length;
    return s >= s_begin && s <= s_end;
}

SegmentLabeling label_segments(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                               const std::vector<TracedCurve>& images,
                               const std::vector<CuspPoint>& cusps,
                               const std::vector<NodePoint>& nodes,
                               const JointAnalysisOptions& opts) {
    SegmentLabeling out;
    for (const auto& img : images) {
        const auto& ws = source_of(workspace, img);
        const double len = ws.length();
        std::vector<double> breaks;
        for (const auto& c : cusps) {
            if (c.source.curve_id == ws.id) breaks.push_back(wrap_arc(ws, c.source.s));
        }
        for (const auto& n : nodes) {
            for (const auto& p : n.params) {
                if (p.curve_id == ws.id) breaks.push_back(wrap_arc(ws, p.s));
            }
        }
        std::sort(breaks.begin(), breaks.end());
        std::vector<std::pair<double, double>> spans;
        if (ws.closed) {
            if (breaks.empty()) {
                spans.emplace_back(0.0, len);
            } else {
                for (std::size_t i = 0; i < breaks.size(); ++i) {
                    const double b = i + 1 < breaks.size() ? breaks[i + 1] : breaks[0] + len;
                    spans.emplace_back(breaks[i], b);
                }
            }
        } else {
            double a = 0.0;
            for (double b : breaks) {
                spans.emplace_back(a, b);
                a = b;
            }
            spans.emplace_back(a, len);
        }
        for (const auto& [a, b] : spans) {
            if (b - a < 1e-9) continue;
            SegmentLabel seg;
            seg.id = static_cast<int>(out.segments.size());
            seg.curve_id = ws.id;
            seg.s_begin = a;
            seg.s_end = b;
            for (double f : {0.5, 0.3, 0.7}) {
                const auto p = probe_crossing(m, ws, img, a + f * (b - a), opts);
                if (p) {
                    seg.probed = true;
                    seg.probe = *p;
                    break;
                }
            }
            if (!seg.probed) {
                out.diagnostics.push_back(
                    {DiagnosticKind::ProbeFailure,
                     fmt::format("segment {} of curve {} ({:.6f}..{:.6f}) could not be labeled", seg.id,
                                 ws.id, a, b)});
            }
            out.segments.push_back(seg);
        }
    }
    return out;
}

int segment_at(const std::vector<SegmentLabel>& segments, const TracedCurve& curve, double s) {
    s = wrap_arc(curve, s);
    for (const auto& seg : segments) {
        if (seg.curve_id == curve.id && seg.contains(s, curve.closed ? curve.length() : 0.0)) return seg.id;
    }
    return -1;
}

}  // namespace rpr
