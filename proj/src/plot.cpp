#include "rpr/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "rpr/error.hpp"

namespace rpr {

const std::vector<std::string>& figure_names() {
    static const std::vector<std::string> names{"workspace", "jointspace"};
    return names;
}

namespace {

constexpr double kWidth = 720, kHeight = 760;
constexpr double kLeft = 80, kTop = 40, kPlot = 600;

const char* kStyle = R"(<style>
  .frame { fill: none; stroke: #222; stroke-width: 1; }
  .tick { stroke: #222; stroke-width: 1; }
  .grid { stroke: #ddd; stroke-width: 0.5; }
  text { font-family: Helvetica, Arial, sans-serif; font-size: 12px; fill: #222; }
  .axis-label { font-size: 14px; }
  .curve { fill: none; stroke-width: 1.4; stroke-linejoin: round; }
  .wa2 { stroke-dasharray: 5 3; }
  .role-6-4 { stroke: #000000; }
  .role-4-2 { stroke: #5aaee0; }
  .role-2-0 { stroke: #8c8c8c; }
  .role-other { stroke: #b04a9c; }
  .cusp { fill: #d62728; }
  .node { fill: #1f5fbf; }
  .tangency { fill: #d62728; }
  .char-cusp { fill: #d62728; }
  .singular-crossing { fill: #1f5fbf; }
  .char-crossing { fill: #1f5fbf; }
  .count-disk { fill: #f5a623; stroke: #a86a00; stroke-width: 0.8; }
  .count-text { font-size: 11px; text-anchor: middle; dominant-baseline: central; }
</style>
)";

struct Axes {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * kPlot; }
    double py(double y) const { return kTop + kPlot - (y - y0) / (y1 - y0) * kPlot; }
    bool inside(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

std::string num(double v) {
    if (v == 0.0) return "0";
    return fmt::format("{:.12g}", v);
}

std::string role_class(const CurveInfo* info) {
    if (!info || info->segment < 0) return "role-other";
    const int h = info->high_count, l = info->low_count;
    if (h == 6 && l == 4) return "role-6-4";
    if (h == 4 && l == 2) return "role-4-2";
    if (h == 2 && l == 0) return "role-2-0";
    return "role-other";
}

/// 1, 2 or 5 times a power of ten, giving about `target` intervals over `span`.
double nice_step(double span, int target) {
    const double raw = span / target;
    const double p = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * p >= raw) return m * p;
    }
    return 10.0 * p;
}

void frame(std::ostringstream& os, const Axes& ax, const std::vector<std::pair<double, std::string>>& xt,
           const std::vector<std::pair<double, std::string>>& yt, std::string_view xl,
           std::string_view yl) {
    for (const auto& [v, label] : xt) {
        const double x = ax.px(v);
        os << fmt::format("<line class=\"grid\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                          x, kTop, x, kTop + kPlot);
        os << fmt::format("<line class=\"tick\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                          x, kTop + kPlot, x, kTop + kPlot + 5);
        os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", x,
                          kTop + kPlot + 20, label);
    }
    for (const auto& [v, label] : yt) {
        const double y = ax.py(v);
        os << fmt::format("<line class=\"grid\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                          kLeft, y, kLeft + kPlot, y);
        os << fmt::format("<line class=\"tick\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                          kLeft - 5, y, kLeft, y);
        os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" dominant-baseline=\"central\">{}</text>\n",
                          kLeft - 8, y, label);
    }
    os << fmt::format("<rect class=\"frame\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n", kLeft, kTop,
                      kPlot, kPlot);
    os << fmt::format("<text class=\"axis-label\" x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                      kLeft + kPlot / 2, kTop + kPlot + 42, xl);
    os << fmt::format("<text class=\"axis-label\" transform=\"translate({:.2f},{:.2f}) rotate(-90)\" "
                      "text-anchor=\"middle\">{}</text>\n",
                      kLeft - 52, kTop + kPlot / 2, yl);
}

std::vector<std::pair<double, std::string>> linear_ticks(double lo, double hi) {
    std::vector<std::pair<double, std::string>> t;
    const double step = nice_step(hi - lo, 6);
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
        t.emplace_back(v, fmt::format("{:g}", std::abs(v) < 1e-12 * step ? 0.0 : v));
    }
    return t;
}

/// Polyline pieces; a new piece starts wherever consecutive points jump by more than `jump`.
void polylines(std::ostringstream& os, const Axes& ax, const CurveRow& c, const std::string& cls,
               double jump) {
    std::string path;
    Vec2 prev{};
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const Vec2 p = c.points[i];
        const bool restart = i == 0 || std::abs(p.x - prev.x) > jump || std::abs(p.y - prev.y) > jump;
        path += fmt::format("{}{:.2f},{:.2f}", restart ? (i == 0 ? "M" : " M") : " L", ax.px(p.x), ax.py(p.y));
        prev = p;
    }
    if (path.empty()) return;
    os << fmt::format("<path class=\"curve {}\" data-curve=\"{}\" d=\"{}\"/>\n", cls, c.id, path);
}

void marker(std::ostringstream& os, const Axes& ax, const PointRow& p, const char* cls, double r) {
    os << fmt::format(
        "<circle class=\"{}\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" data-id=\"{}\" data-x=\"{}\" data-y=\"{}\"/>\n",
        cls, ax.px(p.p.x), ax.py(p.p.y), r, p.id, num(p.p.x), num(p.p.y));
}

void legend(std::ostringstream& os, const std::vector<std::pair<std::string, std::string>>& entries) {
    double x = kLeft;
    const double y = kTop + kPlot + 70;
    for (const auto& [cls, label] : entries) {
        if (cls.rfind("role-", 0) == 0 || cls.find(' ') != std::string::npos) {
            os << fmt::format("<line class=\"curve {}\" x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\"/>\n",
                              cls, x, y, x + 22, y);
        } else {
            os << fmt::format("<circle class=\"{}\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\"/>\n", cls, x + 11, y);
        }
        os << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" dominant-baseline=\"central\">{}</text>\n", x + 28, y,
                          label);
        x += 40 + 7.0 * static_cast<double>(label.size());
    }
}

std::string workspace_figure(const AtlasData& d) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const Axes ax{0.0, two_pi, 0.0, two_pi};
    std::ostringstream os;
    const std::vector<std::pair<double, std::string>> ticks{
        {0.0, "0"}, {two_pi / 4, "π/2"}, {two_pi / 2, "π"}, {3 * two_pi / 4, "3π/2"}, {two_pi, "2π"}};
    frame(os, ax, ticks, ticks, "θ1 (rad)", "α (rad)");

    const bool have_pieces = std::any_of(d.info.begin(), d.info.end(),
                                         [](const CurveInfo& i) { return i.kind == "singular_piece"; });
    os << "<g id=\"curves\">\n";
    for (const auto& c : d.curves) {
        if (c.domain != "workspace") continue;
        const CurveInfo* info = d.info_of(c.id);
        const std::string kind = info ? info->kind : "";
        if (kind == "singular" && have_pieces) continue;
        std::string cls = role_class(info);
        if (info && info->aspect == "WA2") cls += " wa2";
        polylines(os, ax, c, cls, std::numbers::pi);
    }
    os << "</g>\n<g id=\"points\">\n";
    for (const auto& p : d.points) {
        if (p.kind == "triple_tangency") marker(os, ax, p, "tangency", 6.5);
        else if (p.kind == "char_cusp") marker(os, ax, p, "char-cusp", 3.0);
        else if (p.kind == "singular_crossing") marker(os, ax, p, "singular-crossing", 6.5);
        else if (p.kind == "char_crossing") marker(os, ax, p, "char-crossing", 3.0);
    }
    os << "</g>\n";
    legend(os, {{"role-6-4", "6→4"}, {"role-4-2", "4→2"}, {"role-2-0", "2→0"}, {"role-6-4 wa2", "WA2"},
                {"tangency", "tangency"}, {"char-cusp", "char. cusp"}, {"singular-crossing", "crossing"}});
    return os.str();
}

std::string jointspace_figure(const AtlasData& d) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    if (const auto w = d.manifest_value("window")) {
        std::istringstream is(*w);
        is >> x0 >> x1 >> y0 >> y1;
        if (!is) x0 = std::numeric_limits<double>::infinity();
    }
    if (!(x0 < x1 && y0 < y1)) {
        x0 = y0 = std::numeric_limits<double>::infinity();
        x1 = y1 = -x0;
        for (const auto& c : d.curves) {
            if (c.domain != "joint") continue;
            for (const Vec2 p : c.points) {
                x0 = std::min(x0, p.x);
                x1 = std::max(x1, p.x);
                y0 = std::min(y0, p.y);
                y1 = std::max(y1, p.y);
            }
        }
    }
    if (!(x0 < x1 && y0 < y1)) {
        x0 = y0 = 0.0;
        x1 = y1 = 1.0;
    }
    // Equal scale on both axes.
    const double span = std::max(x1 - x0, y1 - y0);
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const Axes ax{cx - span / 2, cx + span / 2, cy - span / 2, cy + span / 2};

    std::ostringstream os;
    frame(os, ax, linear_ticks(ax.x0, ax.x1), linear_ticks(ax.y0, ax.y1), "ρ2", "ρ3");
    os << "<g id=\"regions\">\n";
    for (const auto& r : d.regions) {
        if (r.cells < 40 || !ax.inside(r.p)) continue;
        os << fmt::format("<circle class=\"count-disk\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"9\"/>\n", ax.px(r.p.x),
                          ax.py(r.p.y));
        os << fmt::format("<text class=\"count-text\" x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", ax.px(r.p.x),
                          ax.py(r.p.y), r.count);
    }
    os << "</g>\n<g id=\"curves\">\n";
    for (const auto& c : d.curves) {
        if (c.domain != "joint") continue;
        polylines(os, ax, c, role_class(d.info_of(c.id)), std::numeric_limits<double>::infinity());
    }
    os << "</g>\n<g id=\"points\">\n";
    for (const auto& p : d.points) {
        if (p.kind == "cusp") marker(os, ax, p, "cusp", 5.0);
        else if (p.kind == "node") marker(os, ax, p, "node", 5.0);
    }
    os << "</g>\n";
    legend(os, {{"role-6-4", "6→4"}, {"role-4-2", "4→2"}, {"role-2-0", "2→0"}, {"cusp", "cusp"},
                {"node", "node"}, {"count-disk", "solution count"}});
    return os.str();
}

}  // namespace

std::string render_figure(const AtlasData& atlas, std::string_view figure) {
    std::string body;
    if (figure == "workspace") body = workspace_figure(atlas);
    else if (figure == "jointspace") body = jointspace_figure(atlas);
    else throw Error(ErrorKind::Validation, fmt::format("unknown figure '{}'", figure), "figure");

    std::string title = std::string(figure);
    if (const auto r = atlas.manifest_value("rho1")) title += fmt::format(" slice, ρ1 = {}", *r);
    std::string out = fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
        kWidth, kHeight);
    out += kStyle;
    out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
    out += fmt::format("<text class=\"axis-label\" x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\">{}</text>\n",
                       kLeft + kPlot / 2, title);
    out += body;
    out += "</svg>\n";
    return out;
}

}  // namespace rpr
