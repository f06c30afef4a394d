#include "rpr/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/crc.hpp>
#include <fmt/format.h>

#include "rpr/error.hpp"

namespace rpr {

#ifndef RPR_VERSION
#define RPR_VERSION "0.0.0"
#endif

const char* tool_version() { return RPR_VERSION; }

std::string config_hash(const AnalysisConfig& config) {
    const std::string text = format_config(config);
    boost::crc_32_type crc;
    crc.process_bytes(text.data(), text.size());
    return fmt::format("{:08x}", crc.checksum());
}

namespace {

bool is_reference(const AnalysisConfig& c, double rho1) {
    return c.geometry == ManipulatorGeometry::reference() && std::abs(rho1 - 17.0) < 1e-12;
}

Provenance make_provenance(const AnalysisConfig& config, const AnalyzeOptions& opts) {
    Provenance p;
    p.tool_version = tool_version();
    p.config_hash = config_hash(config);
    const auto& j = opts.chars.joint;
    p.tolerances = {
        {"fk.dedupe_tol", j.fk.dedupe_tol},
        {"fk.singular_tol", j.fk.singular_tol},
        {"fk.newton_tol", j.fk.newton_tol},
        {"fk.grid_n", j.fk.grid_n},
        {"cusp_tol", j.cusp_tol},
        {"cusp_exclusion", j.cusp_exclusion},
        {"node_angle_min", j.node_angle_min},
        {"image_cluster_tol", j.image_cluster_tol},
        {"anchor_radius", j.anchor_radius},
        {"char.own_exclusion", opts.chars.own_exclusion},
        {"char.min_singular_value", opts.chars.min_singular_value},
        {"char.link_max", opts.chars.link_max},
        {"char.snap_radius", opts.chars.snap_radius},
        {"tangency_tol", opts.verify.tangency_tol},
        {"transversal_min", opts.verify.transversal_min},
        {"match_cells", opts.verify.match_cells},
        {"match_tol", opts.verify.match_tol()},
        {"region_resolution", opts.region_resolution},
    };
    return p;
}

void append(Diagnostics& to, const Diagnostics& from) { to.insert(to.end(), from.begin(), from.end()); }

/// Basic region of the given aspect at the pose, or at the nearest cell of a small ring search
/// when the pose itself falls on a rasterized curve.
int role_of(const RegionDecomposition& r, Vec2 pose, AspectLabel aspect) {
    auto ok = [&](int id) { return id >= 0 && r.regions[id].aspect == aspect; };
    if (const int id = r.region_at(pose); ok(id)) return id;
    if (r.nx <= 0 || r.ny <= 0) return -1;
    const double h = std::min(r.theta.width() / r.nx, r.alpha.width() / r.ny);
    for (int ring = 1; ring <= 4; ++ring) {
        const int steps = 8 * ring;
        for (int k = 0; k < steps; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / steps;
            const int id = r.region_at(pose + ring * h * Vec2{std::cos(phi), std::sin(phi)});
            if (ok(id)) return id;
        }
    }
    return -1;
}

}  // namespace

SliceAtlas analyze_slice(const AnalysisConfig& config, const AnalyzeOptions& opts_in) {
    AnalyzeOptions opts = opts_in;
    SliceAtlas a;
    a.config = config;
    if (opts.rho1) a.config.rho1 = *opts.rho1;
    if (opts.grid_n) a.config.grid_n = *opts.grid_n;
    if (!a.config.rho1) throw Error(ErrorKind::Validation, "rho1 is not set", "rho1");
    a.config.geometry.validate();
    a.slice.rho1 = *a.config.rho1;
    a.slice.grid_n = a.config.grid_n;
    a.slice.validate();
    if (opts.window) opts.window->validate();
    if (opts.region_resolution < 2) {
        throw Error(ErrorKind::Validation, "region resolution must be at least 2", "region_resolution");
    }
    opts.verify.grid_n = a.slice.grid_n;
    if (!opts.verify.expected && is_reference(a.config, a.slice.rho1)) {
        opts.verify.expected = reference_census();
    }
    opts.verify.joint = opts.chars.joint;

    const Manipulator m(a.config.geometry);
    auto traced = trace_singular_curves(m, a.slice);
    a.workspace = std::move(traced.curves);
    append(a.diagnostics, traced.diagnostics);
    for (const auto& c : a.workspace) a.images.push_back(map_curve_to_jointspace(m, c));

    const auto& jopts = opts.chars.joint;
    a.cusps = detect_cusps(m, a.workspace, a.images, jopts);
    a.nodes = detect_nodes(m, a.workspace, a.images, a.cusps.cusps, jopts);
    append(a.diagnostics, a.cusps.diagnostics);
    append(a.diagnostics, a.nodes.diagnostics);

    a.window = opts.window ? *opts.window : image_window(a.images);
    a.region_map = count_solutions_map(m, a.slice.rho1, a.window, opts.region_resolution, a.images,
                                       jopts.fk);
    a.segments = label_segments(m, a.workspace, a.images, a.cusps.cusps, a.nodes.nodes, jopts);
    append(a.diagnostics, a.segments.diagnostics);

    a.chars = characteristic_curves(m, a.workspace, a.cusps.cusps, a.nodes.nodes,
                                    a.segments.segments, opts.chars);
    append(a.diagnostics, a.chars.diagnostics);
    a.basic_regions = decompose_basic_regions(m, a.slice, a.workspace, a.chars, jopts.fk);
    a.components = basic_components(m, a.slice.rho1, a.basic_regions);

    for (auto& seg : a.segments.segments) {
        if (!seg.probed) continue;
        for (int i = 0; i < 2; ++i) {
            seg.lost_roles[i] = role_of(a.basic_regions, seg.probe.lost_pair[i].angles(),
                                        seg.probe.lost_aspects[i]);
        }
    }

    a.report = verify_census(m, a.workspace, a.cusps.cusps, a.nodes.nodes, a.chars, opts.verify);
    append(a.diagnostics, a.report.diagnostics);
    a.provenance = make_provenance(a.config, opts);
    return a;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (v == 0.0) return "0";  // folds -0
    return fmt::format("{:.12g}", v);
}

Vec2 wrapped(Vec2 p) { return {wrap_angle(p.x), wrap_angle(p.y)}; }

/// Samples of a joint image curve with arc in [s0, s1], endpoints interpolated; s1 may pass
/// the end of a closed curve.
std::vector<CurveSample> arc_slice(const TracedCurve& c, double s0, double s1) {
    std::vector<CurveSample> out;
    const double len = c.length();
    const std::size_t n = c.size();
    if (n < 2 || len <= 0.0) return out;
    auto at = [&](double s) {
        if (c.closed) s = std::fmod(std::fmod(s, len) + len, len);
        s = std::clamp(s, 0.0, len);
        const auto it = std::upper_bound(c.arc.begin(), c.arc.end(), s);
        const std::size_t i = std::min<std::size_t>(
            n - 2, static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - c.arc.begin() - 1, 0)));
        const double h = c.arc[i + 1] - c.arc[i];
        const double t = h > 0.0 ? (s - c.arc[i]) / h : 0.0;
        const Vec2 p = c.samples[i].point + t * (c.samples[i + 1].point - c.samples[i].point);
        const Vec2 d = c.samples[i + 1].point - c.samples[i].point;
        return CurveSample{p, norm(d) > 0.0 ? normalized(d) : c.samples[i].tangent};
    };
    out.push_back(at(s0));
    const int laps = c.closed ? 1 : 0;
    for (int lap = 0; lap <= laps; ++lap) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = c.arc[i] + lap * len;
            if (s > s0 && s < s1) out.push_back(c.samples[i]);
        }
    }
    out.push_back(at(s1));
    return out;
}

struct Table {
    std::ofstream os;
    Table(const std::filesystem::path& p, const char* header) : os(p, std::ios::binary) {
        if (!os) throw Error(ErrorKind::Validation, fmt::format("cannot write {}", p.string()), "out");
        os << header << '\n';
    }
};

std::string segment_counts(const SliceAtlas& a, int seg, int which) {
    if (seg < 0 || seg >= static_cast<int>(a.segments.segments.size())) return "0";
    const auto& s = a.segments.segments[seg];
    if (!s.probed) return "0";
    return std::to_string(which == 0 ? s.probe.high_count : s.probe.low_count);
}

}  // namespace

void write_atlas(const SliceAtlas& a, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Validation, fmt::format("cannot create {}: {}", dir.string(), ec.message()), "out");

    Table curves(dir / "curves.csv", "id,domain,x,y,tx,ty");
    Table index(dir / "curve_index.csv", "id,domain,kind,aspect,segment,high_count,low_count");
    auto emit = [&](const std::string& id, const char* domain, const std::vector<Vec2>& pts,
                    const std::vector<Vec2>& tans, const char* kind, const char* aspect, int seg) {
        const bool ws = std::string_view(domain) == "workspace";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Vec2 p = ws ? wrapped(pts[i]) : pts[i];
            curves.os << id << ',' << domain << ',' << num(p.x) << ',' << num(p.y) << ','
                      << num(tans[i].x) << ',' << num(tans[i].y) << '\n';
        }
        index.os << id << ',' << domain << ',' << kind << ',' << aspect << ',' << seg << ','
                 << segment_counts(a, seg, 0) << ',' << segment_counts(a, seg, 1) << '\n';
    };
    auto split = [](const std::vector<CurveSample>& s) {
        std::pair<std::vector<Vec2>, std::vector<Vec2>> out;
        for (const auto& x : s) {
            out.first.push_back(x.point);
            out.second.push_back(x.tangent);
        }
        return out;
    };

    for (const auto& c : a.workspace) {
        const auto [p, t] = split(c.samples);
        emit(fmt::format("W{}", c.id), "workspace", p, t, "singular", "singular", -1);
    }
    for (const auto& seg : a.segments.segments) {
        const auto it = std::find_if(a.images.begin(), a.images.end(),
                                     [&](const TracedCurve& c) { return c.id == seg.curve_id; });
        if (it == a.images.end()) continue;
        const auto [p, t] = split(arc_slice(*it, seg.s_begin, seg.s_end));
        emit(fmt::format("J{}", seg.id), "joint", p, t, "singular_image", "singular", seg.id);
    }
    for (const auto& c : a.chars.singular_images) {
        const auto [p, t] = split(c.curve.samples);
        const auto segs = c.segments();
        emit(fmt::format("S{}", c.id), "workspace", p, t, "singular_piece", "singular",
             segs.empty() ? -1 : segs.front());
    }
    for (const auto& c : a.chars.curves) {
        // One row group per run of constant source segment; snapped ends join their neighbour.
        const std::size_t n = c.curve.size();
        std::size_t begin = 0;
        int run = 0;
        while (begin < n) {
            int seg = -1;
            std::size_t end = begin;
            while (end < n && (c.source_segment[end] == seg || c.source_segment[end] < 0 || seg < 0)) {
                if (seg < 0 && c.source_segment[end] >= 0) seg = c.source_segment[end];
                ++end;
            }
            std::vector<Vec2> p, t;
            // Repeat the previous run's last sample so consecutive runs share an endpoint.
            for (std::size_t i = begin > 0 ? begin - 1 : 0; i < end; ++i) {
                p.push_back(c.curve.samples[i].point);
                t.push_back(c.curve.samples[i].tangent);
            }
            emit(fmt::format("K{}.{}", c.id, run++), "workspace", p, t, "characteristic",
                 to_string(c.aspect), seg);
            begin = end;
        }
    }

    Table points(dir / "points.csv", "id,kind,x,y,angle");
    auto point = [&](const std::string& id, const char* kind, Vec2 p, double angle) {
        points.os << id << ',' << kind << ',' << num(p.x) << ',' << num(p.y) << ',' << num(angle) << '\n';
    };
    for (const auto& c : a.cusps.cusps) {
        point(c.label, "cusp", c.location, std::atan2(c.opening.y, c.opening.x));
    }
    for (const auto& n : a.nodes.nodes) point(n.label, "node", n.location, n.angle);
    for (const auto& set : a.report.cusps) {
        for (std::size_t j = 0; j < set.images.size(); ++j) {
            const auto& im = set.images[j];
            point(fmt::format("C{}.{}", set.cusp_id + 1, j), to_string(im.kind), wrapped(im.pose.angles()),
                  im.angle);
        }
    }
    for (const auto& set : a.report.nodes) {
        for (std::size_t j = 0; j < set.images.size(); ++j) {
            const auto& im = set.images[j];
            point(fmt::format("N{}.{}", set.node_id + 1, j), to_string(im.kind), wrapped(im.pose.angles()),
                  im.angle);
        }
    }

    {
        Table t(dir / "segments.csv",
                "id,curve,s_begin,s_end,high_count,low_count,aspect_a,aspect_b,role_a,role_b,images");
        for (const auto& s : a.segments.segments) {
            const auto it = std::find_if(a.workspace.begin(), a.workspace.end(),
                                         [&](const TracedCurve& c) { return c.id == s.curve_id; });
            const int images = it == a.workspace.end() ? 0 : workspace_image_count(a.chars, *it, s.s_mid());
            t.os << s.id << ',' << s.curve_id << ',' << num(s.s_begin) << ',' << num(s.s_end) << ','
                 << (s.probed ? s.probe.high_count : 0) << ',' << (s.probed ? s.probe.low_count : 0) << ','
                 << to_string(s.probe.lost_aspects[0]) << ',' << to_string(s.probe.lost_aspects[1]) << ','
                 << s.lost_roles[0] << ',' << s.lost_roles[1] << ',' << images << '\n';
        }
    }
    {
        Table t(dir / "regions.csv", "id,count,cells,x,y");
        for (const auto& r : a.region_map.regions) {
            t.os << r.id << ',' << r.count << ',' << r.cells << ',' << num(r.representative.x) << ','
                 << num(r.representative.y) << '\n';
        }
    }
    {
        Table t(dir / "basic_regions.csv",
                "id,label,aspect,theta1,alpha,rho2,rho3,joint_count,cells,boundary");
        for (const auto& r : a.basic_regions.regions) {
            std::string boundary;
            for (int b : r.boundary) boundary += (boundary.empty() ? "" : ";") + std::to_string(b);
            t.os << r.id << ',' << r.label << ',' << to_string(r.aspect) << ','
                 << num(r.representative.theta1) << ',' << num(r.representative.alpha) << ','
                 << num(r.joint_image.x) << ',' << num(r.joint_image.y) << ',' << r.joint_count << ','
                 << r.cells << ',' << boundary << '\n';
        }
    }

    std::ofstream man(dir / "manifest.txt", std::ios::binary);
    if (!man) throw Error(ErrorKind::Validation, "cannot write manifest", "out");
    auto kv = [&](std::string_view k, const std::string& v) { man << k << " = " << v << '\n'; };
    kv("tool_version", a.provenance.tool_version);
    kv("config_hash", a.provenance.config_hash);
    std::istringstream cfg(format_config(a.config));
    for (std::string line; std::getline(cfg, line);) man << "config." << line << '\n';
    kv("rho1", num(a.slice.rho1));
    kv("grid_n", std::to_string(a.slice.grid_n));
    kv("window", fmt::format("{} {} {} {}", num(a.window.rho2_min), num(a.window.rho2_max),
                             num(a.window.rho3_min), num(a.window.rho3_max)));
    for (const auto& [k, v] : a.provenance.tolerances) kv("tolerance." + k, num(v));
    auto census = [](const Census& c) {
        return fmt::format("{} {} {} {} {} {}", c.cusps, c.nodes, c.tangencies, c.char_cusps,
                           c.singular_char_crossings, c.char_char_crossings);
    };
    kv("census", census(a.report.counts));
    kv("census_expected", a.report.expected ? census(*a.report.expected) : "none");
    kv("census_pass", a.report.pass ? "true" : "false");
    kv("singular_curves", std::to_string(a.workspace.size()));
    kv("characteristic_curves", std::to_string(a.chars.curves.size()));
    kv("basic_regions", std::to_string(a.basic_regions.regions.size()));
    kv("unresolved_cells", std::to_string(a.basic_regions.unresolved_cells));
    kv("diagnostics", std::to_string(a.diagnostics.size()));
    for (std::size_t i = 0; i < a.diagnostics.size(); ++i) {
        kv(fmt::format("diagnostic.{}", i),
           fmt::format("{}: {}", to_string(a.diagnostics[i].kind), a.diagnostics[i].message));
    }
    if (!man) throw Error(ErrorKind::Validation, "short write on manifest", "out");
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

template <typename F>
void read_table(const std::filesystem::path& p, std::size_t columns, F&& row) {
    std::ifstream is(p);
    if (!is) throw Error(ErrorKind::Validation, fmt::format("missing atlas file {}", p.string()), "out");
    std::string line;
    std::getline(is, line);
    for (int n = 2; std::getline(is, line); ++n) {
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != columns) {
            throw Error(ErrorKind::Validation, fmt::format("{}:{}: expected {} fields", p.string(), n, columns));
        }
        try {
            row(f);
        } catch (const std::logic_error&) {
            throw Error(ErrorKind::Validation, fmt::format("{}:{}: malformed number", p.string(), n));
        }
    }
}

}  // namespace

const CurveInfo* AtlasData::info_of(const std::string& id) const {
    for (const auto& i : info) {
        if (i.id == id) return &i;
    }
    return nullptr;
}

std::optional<std::string> AtlasData::manifest_value(const std::string& key) const {
    for (const auto& [k, v] : manifest) {
        if (k == key) return v;
    }
    return std::nullopt;
}

AtlasData read_atlas(const std::filesystem::path& dir) {
    AtlasData d;
    read_table(dir / "curves.csv", 6, [&](const std::vector<std::string>& f) {
        if (d.curves.empty() || d.curves.back().id != f[0]) d.curves.push_back({f[0], f[1], {}, {}});
        d.curves.back().points.push_back({std::stod(f[2]), std::stod(f[3])});
        d.curves.back().tangents.push_back({std::stod(f[4]), std::stod(f[5])});
    });
    read_table(dir / "curve_index.csv", 7, [&](const std::vector<std::string>& f) {
        d.info.push_back({f[0], f[1], f[2], f[3], std::stoi(f[4]), std::stoi(f[5]), std::stoi(f[6])});
    });
    read_table(dir / "points.csv", 5, [&](const std::vector<std::string>& f) {
        d.points.push_back({f[0], f[1], {std::stod(f[2]), std::stod(f[3])}, std::stod(f[4])});
    });
    read_table(dir / "regions.csv", 5, [&](const std::vector<std::string>& f) {
        d.regions.push_back({std::stoi(f[0]), std::stoi(f[1]), std::stoul(f[2]),
                             {std::stod(f[3]), std::stod(f[4])}});
    });
    std::ifstream man(dir / "manifest.txt");
    if (!man) throw Error(ErrorKind::Validation, "missing atlas manifest", "out");
    for (std::string line; std::getline(man, line);) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        d.manifest.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }
    return d;
}

}  // namespace rpr
