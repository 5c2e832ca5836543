#include "formsim/render.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "formsim/errors.hpp"

namespace formsim {

namespace {

constexpr double kPitchW = 340.0;
constexpr double kPitchH = 440.0;
constexpr double kMargin = 30.0;

// Normalized shape coordinates to SVG, leaving room around the shape.
struct Canvas {
    double sx(double x) const { return kMargin + (0.1 + 0.8 * x) * kPitchW; }
    double sy(double y) const { return kMargin + (0.9 - 0.8 * y) * kPitchH; }
};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_vfs_svg(const std::vector<Vec2>& roles, const std::optional<TemplateOverlay>& overlay) {
    const auto vfs = normalize_formation(roles).roles;
    std::vector<Vec2> tmpl;
    if (overlay) {
        if (overlay->roles.size() != roles.size() || overlay->row_to_col.size() != roles.size())
            throw ContractViolation("template overlay must match the VFS role count");
        tmpl = normalize_formation(overlay->roles).roles;
    }
    const Canvas c;
    std::string svg = fmt::format(
        R"(<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">)"
        "\n",
        kPitchW + 2 * kMargin, kPitchH + 2 * kMargin);
    svg += fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="#2e7d32" stroke="#ffffff" stroke-width="2"/>)"
                       "\n",
                       kMargin, kMargin, kPitchW, kPitchH);
    svg += fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#ffffff" stroke-opacity="0.5"/>)"
                       "\n",
                       kMargin, kMargin + kPitchH / 2, kMargin + kPitchW, kMargin + kPitchH / 2);
    // Attack direction marker.
    svg += fmt::format(R"(<path d="M {0} {1} l -8 14 l 16 0 z" fill="#ffffff" fill-opacity="0.6"/>)"
                       "\n",
                       kMargin + kPitchW / 2, kMargin + 6);

    if (overlay) {
        for (std::size_t i = 0; i < vfs.size(); ++i) {
            const auto& t = tmpl[overlay->row_to_col[i]];
            svg += fmt::format(
                R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="#ffeb3b" stroke-dasharray="4 3"/>)"
                "\n",
                c.sx(vfs[i].x), c.sy(vfs[i].y), c.sx(t.x), c.sy(t.y));
        }
        for (const auto& t : tmpl)
            svg += fmt::format(
                R"(<circle cx="{:.2f}" cy="{:.2f}" r="9" fill="none" stroke="#ffeb3b" stroke-width="2"/>)"
                "\n",
                c.sx(t.x), c.sy(t.y));
        svg += fmt::format(R"(<text x="{}" y="{}" font-family="sans-serif" font-size="14" fill="#ffeb3b">{}</text>)"
                           "\n",
                           kMargin + 6, kMargin + kPitchH - 8, escape(overlay->scheme));
    }
    for (std::size_t i = 0; i < vfs.size(); ++i) {
        svg += fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="7" fill="#1565c0" stroke="#ffffff"/>)"
                           "\n",
                           c.sx(vfs[i].x), c.sy(vfs[i].y));
        svg += fmt::format(
            R"(<text x="{:.2f}" y="{:.2f}" font-family="sans-serif" font-size="9" fill="#ffffff" text-anchor="middle">{}</text>)"
            "\n",
            c.sx(vfs[i].x), c.sy(vfs[i].y) + 3, i + 1);
    }
    svg += "</svg>\n";
    return svg;
}

std::string render_confusion_svg(const ConfusionMatrix& m) {
    const auto n = m.labels.size();
    constexpr double cell = 36.0, left = 70.0, top = 70.0;
    const double size = left + cell * static_cast<double>(n) + 10;
    std::string svg = fmt::format(
        R"(<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">)"
        "\n",
        size, size + 20);
    svg += R"(<rect width="100%" height="100%" fill="#ffffff"/>)"
           "\n";
    for (std::size_t j = 0; j < n; ++j) {
        const double x = left + cell * (static_cast<double>(j) + 0.5);
        svg += fmt::format(
            R"~(<text x="{0:.1f}" y="{1:.1f}" transform="rotate(-60 {0:.1f} {1:.1f})" font-family="sans-serif" font-size="10">{2}</text>)~"
            "\n",
            x, top - 6, escape(m.labels[j]));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double y = top + cell * static_cast<double>(i);
        svg += fmt::format(
            R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>)"
            "\n",
            left - 6, y + cell / 2 + 3, escape(m.labels[i]));
        for (std::size_t j = 0; j < n; ++j) {
            const double p = m.percent(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            const double shade = std::clamp(p / 100.0, 0.0, 1.0);
            const int r = static_cast<int>(std::lround(255 - 230 * shade));
            const int g = static_cast<int>(std::lround(255 - 150 * shade));
            svg += fmt::format(
                R"(<rect x="{:.1f}" y="{:.1f}" width="{}" height="{}" fill="#{:02x}{:02x}ff" stroke="#cccccc"/>)"
                "\n",
                left + cell * static_cast<double>(j), y, cell, cell, r, g);
            if (p > 0.0)
                svg += fmt::format(
                    R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="9" text-anchor="middle" fill="{}">{:.0f}</text>)"
                    "\n",
                    left + cell * (static_cast<double>(j) + 0.5), y + cell / 2 + 3, shade > 0.55 ? "#ffffff" : "#000000",
                    p);
        }
    }
    svg += fmt::format(
        R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11" text-anchor="middle">predicted (columns) / annotated (rows), percent per row</text>)"
        "\n",
        size / 2, size + 12);
    svg += "</svg>\n";
    return svg;
}

}  // namespace formsim
