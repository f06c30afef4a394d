#include "rpr/charsurf.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "rpr/raster.hpp"

namespace rpr {

const char* to_string(CharKind k) {
    return k == CharKind::SingularImage ? "singular" : "nonsingular";
}

const char* to_string(EndKind k) {
    switch (k) {
        case EndKind::Open: return "open";
        case EndKind::Cusp: return "cusp";
        case EndKind::Node: return "node";
        case EndKind::Closed: return "closed";
    }
    return "open";
}

std::vector<int> CharCurve::segments() const {
    std::vector<int> out;
    for (int s : source_segment) {
        if (s >= 0 && std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
    }
    return out;
}

std::vector<const CharCurve*> CharResult::of_aspect(AspectLabel a) const {
    std::vector<const CharCurve*> out;
    for (const auto& c : curves) {
        if (c.aspect == a) out.push_back(&c);
    }
    return out;
}

namespace {

// Lifting a pose across the seam perturbs it by rounding only; closer than this is the same pose.
constexpr double kSamePose = 1e-12;

struct Chain {
    AspectLabel aspect;
    std::vector<Vec2> points;  // wrapped
    std::vector<double> s;
    int first_sample = 0;
    int last_sample = 0;
};

struct Special {
    Vec2 pose;
    EndKind kind;
    int id;
};

/// Follows a nonsingular preimage of the moving joint point g(x(s)) from s0 to s1, halving the
/// step while Newton fails, jumps further than link_max or changes aspect.
struct Tracked {
    Vec2 p;
    double s;
    bool complete;
    /// Accepted intermediate (s, pose) steps, in tracking order; dense where the step shrank.
    std::vector<std::pair<double, Vec2>> path;
};

Tracked track_preimage(const Manipulator& m, const TracedCurve& ws, Vec2 p, double s0, double s1,
                       AspectLabel aspect, const CharOptions& opts) {
    const double rho1 = ws.rho1;
    const double dir = s1 >= s0 ? 1.0 : -1.0;
    double s = s0;
    double h = std::abs(s1 - s0);
    int halvings = 0;
    std::vector<std::pair<double, Vec2>> path;
    while (dir * (s1 - s) > 0.0) {
        const double target = dir > 0.0 ? std::min(s1, s + h) : std::max(s1, s - h);
        const Vec2 x = curve_point_at(m, ws, target);
        const JointCoords q = inverse_kinematics(m, SlicePose::at(x, rho1));
        const auto r = newton_solve(m, q, p, opts.joint.fk.max_iterations, opts.joint.fk.newton_tol);
        bool ok = false;
        if (r && torus_distance(*r, p) < opts.link_max) {
            const double d = singular_value(m, SlicePose::at(*r, rho1));
            ok = std::abs(d) >= opts.min_singular_value &&
                 (d > 0.0 ? AspectLabel::WA1 : AspectLabel::WA2) == aspect;
        }
        if (ok) {
            p = *r;
            s = target;
            path.emplace_back(s, p);
            h *= 2.0;
        } else {
            h *= 0.5;
            if (++halvings > 60 || h < 1e-12) return {p, s, false, std::move(path)};
        }
    }
    return {p, s, true, std::move(path)};
}

void finish_curve(CharCurve& c, double rho1) {
    c.curve.domain = CurveDomain::WorkspaceSlice;
    c.curve.rho1 = rho1;
    const std::size_t n = c.curve.samples.size();
    c.curve.arc.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        c.curve.arc[i] = c.curve.arc[i - 1] + norm(c.curve.samples[i].point - c.curve.samples[i - 1].point);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 < n ? i + 1 : n - 1;
        const Vec2 d = c.curve.samples[b].point - c.curve.samples[a].point;
        c.curve.samples[i].tangent = norm(d) > 0.0 ? normalized(d) : Vec2{1.0, 0.0};
    }
}

}  // namespace

CharResult characteristic_curves(const Manipulator& m, const std::vector<TracedCurve>& workspace,
                                 const std::vector<CuspPoint>& cusps,
                                 const std::vector<NodePoint>& nodes,
                                 const std::vector<SegmentLabel>& segments,
                                 const CharOptions& opts) {
    CharResult out;
    std::vector<Special> specials;
    for (const auto& c : cusps) specials.push_back({c.triple_pose.angles(), EndKind::Cusp, c.id});
    for (const auto& n : nodes) {
        for (const auto& p : n.pair_poses) specials.push_back({p.angles(), EndKind::Node, n.id});
    }

    for (const auto& ws : workspace) {
        const double rho1 = ws.rho1;
        const int n = static_cast<int>(ws.closed ? ws.size() - 1 : ws.size());
        std::vector<Chain> done, active;
        for (int k = 0; k < n; ++k) {
            const Vec2 x = ws.samples[k].point;
            const JointCoords q = inverse_kinematics(m, SlicePose::at(x, rho1));
            FkOptions fk = opts.joint.fk;
            for (const auto& c : active) fk.extra_seeds.push_back(c.points.back());
            const auto set = forward_kinematics(m, q, fk);
            std::vector<std::pair<Vec2, AspectLabel>> kept;
            for (const auto& cfg : set.solutions) {
                const Vec2 p = cfg.pose.angles();
                if (torus_distance(p, x) < opts.own_exclusion) continue;
                const double d = singular_value(m, cfg.pose);
                if (std::abs(d) < opts.min_singular_value) continue;
                kept.emplace_back(p, d > 0.0 ? AspectLabel::WA1 : AspectLabel::WA2);
            }
            std::vector<bool> claimed(kept.size(), false);
            std::vector<Chain> still;
            for (auto& c : active) {
                const Vec2 last = c.points.back();
                int match = -1;
                const auto r = track_preimage(m, ws, last, c.s.back(), ws.arc[k], c.aspect, opts);
                if (r.complete) {
                    for (std::size_t j = 0; j < kept.size(); ++j) {
                        if (!claimed[j] && kept[j].second == c.aspect && torus_distance(r.p, kept[j].first) < 1e-6) {
                            match = static_cast<int>(j);
                            break;
                        }
                    }
                } else {
                    for (const auto& [sv, pv] : r.path) {
                        c.points.push_back(pv);
                        c.s.push_back(sv);
                    }
                }
                if (match >= 0) {
                    claimed[match] = true;
                    c.points.push_back(kept[match].first);
                    c.s.push_back(ws.arc[k]);
                    c.last_sample = k;
                    still.push_back(std::move(c));
                } else {
                    done.push_back(std::move(c));
                }
            }
            active = std::move(still);
            for (std::size_t j = 0; j < kept.size(); ++j) {
                if (claimed[j]) continue;
                active.push_back({kept[j].second, {kept[j].first}, {ws.arc[k]}, k, k});
            }
        }
        for (auto& c : active) done.push_back(std::move(c));

        // Births: follow each chain backwards from its first sample to where it appears.
        for (auto& c : done) {
            if (c.first_sample == 0) continue;
            const double s_prev = ws.arc[c.first_sample - 1];
            const auto r = track_preimage(m, ws, c.points.front(), c.s.front(), s_prev, c.aspect, opts);
            if (!r.complete) {
                for (const auto& [sv, pv] : r.path) {
                    c.points.insert(c.points.begin(), pv);
                    c.s.insert(c.s.begin(), sv);
                }
            }
        }

        // Deterministic order: by first sample, then by first point.
        std::sort(done.begin(), done.end(), [](const Chain& a, const Chain& b) {
            return std::tie(a.first_sample, a.points[0].y, a.points[0].x) <
                   std::tie(b.first_sample, b.points[0].y, b.points[0].x);
        });

        // Join chains across the closing seam of the singular curve.
        std::vector<bool> closed(done.size(), false);
        if (ws.closed && n > 1) {
            const JointCoords q0 = inverse_kinematics(m, SlicePose::at(ws.samples[0].point, rho1));
            for (std::size_t e = 0; e < done.size(); ++e) {
                if (done[e].points.empty() || done[e].last_sample != n - 1) continue;
                const auto r = newton_solve(m, q0, done[e].points.back(), opts.joint.fk.max_iterations,
                                            opts.joint.fk.newton_tol);
                if (!r) continue;
                for (std::size_t b = 0; b < done.size(); ++b) {
                    if (done[b].points.empty() || done[b].first_sample != 0 ||
                        done[b].aspect != done[e].aspect ||
                        torus_distance(*r, done[b].points.front()) > 1e-6) {
                        continue;
                    }
                    if (b == e) {
                        closed[e] = true;
                        done[e].points.push_back(done[e].points.front());
                        done[e].s.push_back(done[e].s.front() + ws.length());
                    } else {
                        auto& tail = done[e];
                        const double shift = ws.length();
                        for (std::size_t i = 0; i < done[b].points.size(); ++i) {
                            tail.points.push_back(done[b].points[i]);
                            tail.s.push_back(done[b].s[i] + shift);
                        }
                        tail.last_sample = done[b].last_sample;
                        // The absorbed chain may itself have been the one closing onto e.
                        done[b].points.clear();
                        if (closed[b]) closed[e] = true;
                    }
                    break;
                }
            }
        }

        // Split chains that run through a cusp triple pose; both pieces then end at the cusp.
        {
            const double len = ws.length();
            auto find_crossing = [&](const Chain& c) -> std::optional<std::pair<std::size_t, Vec2>> {
                for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
                    for (const auto& cu : cusps) {
                        if (cu.source.curve_id != ws.id) continue;
                        const Vec2 tp = cu.triple_pose.angles();
                        if (torus_distance(c.points[i], tp) > opts.snap_radius ||
                            torus_distance(c.points[i + 1], tp) > opts.snap_radius) {
                            continue;
                        }
                        for (int k = 0; k <= 2; ++k) {
                            const double s0 = cu.source.s + k * len;
                            if (c.s[i] < s0 && s0 <= c.s[i + 1]) return std::pair{i, tp};
                        }
                    }
                }
                return std::nullopt;
            };
            std::vector<Chain> split;
            std::vector<bool> split_closed;
            for (std::size_t i = 0; i < done.size(); ++i) {
                Chain c = std::move(done[i]);
                bool is_closed = closed[i];
                if (c.points.size() < 2) continue;
                while (auto hit = find_crossing(c)) {
                    const auto [at, tp] = *hit;
                    if (is_closed) {
                        // Rotate so the loop opens at the cusp; the duplicated closing point is dropped.
                        Chain r{c.aspect, {tp}, {c.s[at]}, c.first_sample, c.last_sample};
                        for (std::size_t j = at + 1; j < c.points.size(); ++j) {
                            r.points.push_back(c.points[j]);
                            r.s.push_back(c.s[j]);
                        }
                        for (std::size_t j = 1; j <= at; ++j) {
                            r.points.push_back(c.points[j]);
                            r.s.push_back(c.s[j] + len);
                        }
                        r.points.push_back(tp);
                        r.s.push_back(r.s.back());
                        c = std::move(r);
                        is_closed = false;
                        continue;
                    }
                    Chain head{c.aspect, {c.points.begin(), c.points.begin() + at + 1},
                               {c.s.begin(), c.s.begin() + at + 1}, c.first_sample, c.last_sample};
                    head.points.push_back(tp);
                    head.s.push_back(head.s.back());
                    Chain tail{c.aspect, {tp}, {c.s[at + 1]}, c.first_sample, c.last_sample};
                    tail.points.insert(tail.points.end(), c.points.begin() + at + 1, c.points.end());
                    tail.s.insert(tail.s.end(), c.s.begin() + at + 1, c.s.end());
                    split.push_back(std::move(head));
                    split_closed.push_back(false);
                    c = std::move(tail);
                }
                split.push_back(std::move(c));
                split_closed.push_back(is_closed);
            }
            done = std::move(split);
            closed = std::move(split_closed);
        }

        for (std::size_t i = 0; i < done.size(); ++i) {
            auto& ch = done[i];
            if (ch.points.size() < 2) continue;
            CharCurve cc;
            cc.kind = CharKind::NonsingularImage;
            cc.aspect = ch.aspect;
            cc.source_curve = ws.id;
            cc.curve.closed = closed[i];
            std::vector<Vec2> lifted{ch.points[0]};
            for (std::size_t j = 1; j < ch.points.size(); ++j) {
                lifted.push_back(lifted.back() + torus_delta(ch.points[j - 1], ch.points[j]));
            }
            std::vector<double> s = ch.s;
            std::vector<int> seg;
            for (double v : s) seg.push_back(segment_at(segments, ws, v));
            auto snap = [&](Vec2 end) -> std::optional<Special> {
                std::optional<Special> best;
                double bd = opts.snap_radius;
                for (const auto& sp : specials) {
                    const double d = torus_distance(end, sp.pose);
                    if (d < bd) {
                        bd = d;
                        best = sp;
                    }
                }
                return best;
            };
            if (cc.curve.closed) {
                cc.ends = {CharEnd{EndKind::Closed, -1}, CharEnd{EndKind::Closed, -1}};
            } else {
                if (auto sp = snap(lifted.front())) {
                    if (torus_distance(lifted.front(), sp->pose) > kSamePose) {
                        lifted.insert(lifted.begin(), lifted.front() + torus_delta(lifted.front(), sp->pose));
                        s.insert(s.begin(), s.front());
                        seg.insert(seg.begin(), -1);
                    } else {
                        seg.front() = -1;
                    }
                    cc.ends[0] = {sp->kind, sp->id};
                }
                if (auto sp = snap(lifted.back())) {
                    if (torus_distance(lifted.back(), sp->pose) > kSamePose) {
                        lifted.push_back(lifted.back() + torus_delta(lifted.back(), sp->pose));
                        s.push_back(s.back());
                        seg.push_back(-1);
                    } else {
                        seg.back() = -1;
                    }
                    cc.ends[1] = {sp->kind, sp->id};
                }
                for (int e = 0; e < 2; ++e) {
                    if (cc.ends[e].kind != EndKind::Open) continue;
                    const Vec2 p = e == 0 ? lifted.front() : lifted.back();
                    out.diagnostics.push_back(
                        {DiagnosticKind::LinkBreak,
                         fmt::format("characteristic chain ends at ({:.6f}, {:.6f}) away from any "
                                     "cusp or node image",
                                     wrap_angle(p.x), wrap_angle(p.y))});
                }
            }
            for (const Vec2 p : lifted) cc.curve.samples.push_back({p, {}});
            cc.source_s = std::move(s);
            cc.source_segment = std::move(seg);
            finish_curve(cc, rho1);
            out.curves.push_back(std::move(cc));
        }

        // Singular curve pieces, one per segment.
        for (const auto& segl : segments) {
            if (segl.curve_id != ws.id) continue;
            CharCurve cc;
            cc.kind = CharKind::SingularImage;
            cc.aspect = AspectLabel::Singular;
            cc.source_curve = ws.id;
            const int steps = std::max(2, static_cast<int>((segl.s_end - segl.s_begin) /
                                                           (ws.length() / std::max(n, 1))) + 1);
            Vec2 prev;
            for (int i = 0; i <= steps; ++i) {
                const double sv = segl.s_begin + (segl.s_end - segl.s_begin) * i / steps;
                Vec2 p = curve_point_at(m, ws, sv);
                if (i > 0) p = prev + torus_delta(prev, p);
                prev = p;
                cc.curve.samples.push_back({p, {}});
                cc.source_s.push_back(sv);
                cc.source_segment.push_back(segl.id);
            }
            finish_curve(cc, rho1);
            out.singular_images.push_back(std::move(cc));
        }
    }
    for (std::size_t i = 0; i < out.curves.size(); ++i) {
        out.curves[i].id = static_cast<int>(i);
        out.curves[i].curve.id = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < out.singular_images.size(); ++i) {
        out.singular_images[i].id = static_cast<int>(i);
        out.singular_images[i].curve.id = static_cast<int>(i);
    }
    return out;
}

int workspace_image_count(const CharResult& chars, const TracedCurve& source, double s) {
    s = wrap_arc(source, s);
    int count = 1;
    for (const auto& c : chars.curves) {
        if (c.source_curve != source.id) continue;
        // Chains joined across the seam carry source positions shifted by one curve length.
        for (std::size_t i = 0; i + 1 < c.source_s.size(); ++i) {
            const double lo = c.source_s[i], hi = c.source_s[i + 1];
            if (lo < hi && ((s >= lo && s < hi) || (s + source.length() >= lo && s + source.length() < hi))) {
                ++count;
                break;
            }
        }
    }
    return count;
}

Vec2 RegionDecomposition::cell_center(int ix, int iy) const {
    return {theta.lo + (ix + 0.5) * theta.width() / nx, alpha.lo + (iy + 0.5) * alpha.width() / ny};
}

int RegionDecomposition::region_at(Vec2 angles) const {
    auto index = [](double v, const AngleRange& r, int n) {
        if (r.full_period()) v = r.lo + wrap_angle(v - r.lo);
        if (v < r.lo || v > r.hi) return -1;
        return std::min(n - 1, static_cast<int>((v - r.lo) / r.width() * n));
    };
    const int ix = index(angles.x, theta, nx), iy = index(angles.y, alpha, ny);
    if (ix < 0 || iy < 0) return -1;
    return labels[iy * nx + ix];
}

RegionDecomposition decompose_basic_regions(const Manipulator& m, const SliceConfig& slice,
                                            const std::vector<TracedCurve>& workspace,
                                            const CharResult& chars, const FkOptions& fk,
                                            std::size_t min_cells) {
    RegionDecomposition out;
    out.theta = slice.theta_range;
    out.alpha = slice.alpha_range;
    out.nx = out.ny = slice.grid_n;
    LabelGrid grid({out.theta.lo, out.alpha.lo}, {out.theta.width(), out.alpha.width()}, out.nx, out.ny,
                   out.theta.full_period(), out.alpha.full_period());
    auto block = [&](const TracedCurve& c) {
        for (std::size_t k = 0; k + 1 < c.size(); ++k) grid.block_segment(c.samples[k].point, c.samples[k + 1].point);
        if (c.size() == 1) grid.block_point(c.samples[0].point);
    };
    for (const auto& c : workspace) block(c);
    for (const auto& c : chars.curves) block(c.curve);
    const int raw = grid.label_components();
    const auto clearance = grid.clearance();
    out.labels = grid.labels();
    // Components below min_cells are wedge tips chopped up by the raster, not regions.
    std::vector<std::size_t> size(raw, 0);
    for (int l : out.labels) {
        if (l >= 0) ++size[l];
    }
    std::vector<int> remap(raw, -1);
    int count = 0;
    for (int l = 0; l < raw; ++l) {
        if (size[l] >= min_cells) {
            remap[l] = count++;
        } else {
            out.unresolved_cells += size[l];
        }
    }
    for (int& l : out.labels) {
        if (l >= 0) l = remap[l];
    }
    std::vector<int> best(count, -1);
    out.regions.resize(count);
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        const int l = out.labels[i];
        if (l < 0) continue;
        ++out.regions[l].cells;
        if (best[l] < 0 || clearance[i] > clearance[best[l]]) best[l] = static_cast<int>(i);
    }
    const double rho1 = slice.rho1;
    for (int l = 0; l < count; ++l) {
        auto& r = out.regions[l];
        r.id = l;
        const Vec2 c = grid.cell_center(best[l] % out.nx, best[l] / out.nx);
        r.representative = SlicePose::at(c, rho1);
        r.aspect = aspect_of(m, r.representative);
        r.joint_image = inverse_kinematics(m, r.representative).slice();
        r.joint_count = static_cast<int>(forward_kinematics(m, JointCoords::at(rho1, r.joint_image), fk).count());
    }
    // Labels WAb{aspect}{k}, k counting regions in id order across both aspects as in WAb_11..WAb_26.
    int k = 0;
    for (auto& r : out.regions) {
        const int a = r.aspect == AspectLabel::WA1 ? 1 : r.aspect == AspectLabel::WA2 ? 2 : 0;
        r.label = fmt::format("WAb{}{}", a, ++k);
    }

    // Adjacency: regions touching the cells of each curve.
    auto touch = [&](const TracedCurve& c, auto&& record) {
        std::set<int> seen;
        for (const auto& smp : c.samples) {
            int ix, iy;
            if (!grid.cell_of(smp.point, ix, iy)) continue;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    int jx = ix + dx, jy = iy + dy;
                    if (out.theta.full_period()) jx = (jx + out.nx) % out.nx;
                    if (out.alpha.full_period()) jy = (jy + out.ny) % out.ny;
                    if (jx < 0 || jy < 0 || jx >= out.nx || jy >= out.ny) continue;
                    const int l = out.labels[jy * out.nx + jx];
                    if (l >= 0) seen.insert(l);
                }
            }
        }
        for (int l : seen) record(l);
    };
    for (const auto& c : chars.curves) {
        touch(c.curve, [&](int l) { out.regions[l].boundary.push_back(c.id); });
    }
    for (const auto& c : workspace) {
        touch(c, [&](int l) { out.regions[l].singular_boundary.push_back(c.id); });
    }
    return out;
}

std::vector<BasicComponent> basic_components(const Manipulator& m, double rho1,
                                             const RegionDecomposition& regions,
                                             std::size_t max_points) {
    std::vector<BasicComponent> out(regions.regions.size());
    std::vector<std::vector<int>> cells(regions.regions.size());
    for (std::size_t i = 0; i < regions.labels.size(); ++i) {
        if (regions.labels[i] >= 0) cells[regions.labels[i]].push_back(static_cast<int>(i));
    }
    for (std::size_t r = 0; r < out.size(); ++r) {
        out[r].region_id = static_cast<int>(r);
        out[r].aspect = regions.regions[r].aspect;
        const std::size_t stride = std::max<std::size_t>(1, (cells[r].size() + max_points - 1) / max_points);
        for (std::size_t j = 0; j < cells[r].size(); j += stride) {
            const int i = cells[r][j];
            const Vec2 c = regions.cell_center(i % regions.nx, i / regions.nx);
            out[r].image.push_back(inverse_kinematics(m, SlicePose::at(c, rho1)).slice());
        }
    }
    return out;
}

std::vector<int> regions_containing(const Manipulator& m, const RegionDecomposition& regions,
                                    const JointCoords& q, const FkOptions& fk) {
    std::vector<int> out;
    for (const auto& c : forward_kinematics(m, q, fk).solutions) {
        const int r = regions.region_at(c.pose.angles());
        if (r >= 0 && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace rpr
