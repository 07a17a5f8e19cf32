#pragma once

#include "qdraw/rng.hpp"
#include "qdraw/sketch/drawing.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

namespace qdraw::sketch {

/// Procedural three-class doodle corpus in the simplified-drawing format.
/// Used when the public dataset bucket is unreachable; the drawings flow
/// through the identical parse/normalize/fit pipeline. The classes share
/// deliberately overlapping traits (portrait rectangles with inner features,
/// occasional keypads on phones, odd orientations) so they stay confusable.
namespace synth {

namespace detail {

using std::numbers::pi;

/// FNV-1a, pinned here so per-class seeds do not depend on std::hash.
inline std::uint64_t category_mix(const char *s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (; *s; ++s)
        h = (h ^ static_cast<std::uint64_t>(*s)) * 1099511628211ULL;
    return h;
}

struct Pen {
    qdraw::Rng &rng;
    double noise;
    double angle; // whole-drawing rotation
    double cx, cy;

    std::vector<std::array<double, 2>> pts;

    void raw(double x, double y) {
        // rotate about the drawing center, jitter, clamp to the canvas
        const double dx = x - cx, dy = y - cy;
        double rx = cx + dx * std::cos(angle) - dy * std::sin(angle);
        double ry = cy + dx * std::sin(angle) + dy * std::cos(angle);
        rx += rng.uniform(-noise, noise);
        ry += rng.uniform(-noise, noise);
        pts.push_back({std::clamp(rx, 0.0, 255.0), std::clamp(ry, 0.0, 255.0)});
    }

    Stroke finish() {
        Stroke s;
        for (const auto &p : pts) {
            s.x.push_back(std::round(p[0]));
            s.y.push_back(std::round(p[1]));
        }
        pts.clear();
        return s;
    }
};

/// Closed rectangle drawn corner to corner with midpoints on each edge.
inline Stroke rect(Pen &pen, double x0, double y0, double x1, double y1, int per_edge = 2) {
    const double xs[4] = {x0, x1, x1, x0};
    const double ys[4] = {y0, y0, y1, y1};
    for (int e = 0; e < 4; ++e) {
        const int next = (e + 1) % 4;
        for (int k = 0; k < per_edge; ++k) {
            const double t = static_cast<double>(k) / per_edge;
            pen.raw(xs[e] + (xs[next] - xs[e]) * t, ys[e] + (ys[next] - ys[e]) * t);
        }
    }
    pen.raw(xs[0], ys[0]);
    return pen.finish();
}

inline Stroke circle(Pen &pen, double cx, double cy, double r, int n = 12) {
    for (int k = 0; k <= n; ++k) {
        const double a = 2.0 * pi * static_cast<double>(k) / n;
        pen.raw(cx + r * std::cos(a), cy + r * std::sin(a));
    }
    return pen.finish();
}

inline Stroke dash(Pen &pen, double x0, double y0, double x1, double y1) {
    pen.raw(x0, y0);
    pen.raw((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    pen.raw(x1, y1);
    return pen.finish();
}

/// Small grid of dashes (buttons / keypad keys) inside a frame.
inline void button_grid(Pen &pen, std::vector<Stroke> &out, double x0, double y0, double x1,
                        double y1, int rows, int cols, double dropout) {
    const double cw = (x1 - x0) / cols, ch = (y1 - y0) / rows;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (pen.rng.bernoulli(dropout))
                continue;
            const double bx = x0 + cw * (c + 0.25), by = y0 + ch * (r + 0.5);
            out.push_back(dash(pen, bx, by, bx + cw * 0.5, by));
        }
}

} // namespace detail

inline RawDrawing drawing(const std::string &category, qdraw::Rng &rng) {
    detail::Pen pen{rng, rng.uniform(1.0, 3.5), rng.uniform(-0.18, 0.18), 128.0, 128.0};
    RawDrawing d;
    d.category = category;

    if (category == "calculator") {
        const double w = rng.uniform(90.0, 150.0);
        const double h = std::min(w * rng.uniform(1.2, 1.8), 230.0);
        const double x0 = 128.0 - w / 2.0, y0 = 128.0 - h / 2.0;
        d.strokes.push_back(detail::rect(pen, x0, y0, x0 + w, y0 + h));
        const double display_h = rng.bernoulli(0.15) ? h * 0.45 : h * 0.2; // sometimes screen-like
        if (rng.bernoulli(0.8))
            d.strokes.push_back(detail::rect(pen, x0 + w * 0.12, y0 + h * 0.08, x0 + w * 0.88,
                                             y0 + h * 0.08 + display_h, 1));
        const int rows = 2 + static_cast<int>(rng.uniform_index(2));
        const int cols = 2 + static_cast<int>(rng.uniform_index(2));
        detail::button_grid(pen, d.strokes, x0 + w * 0.15, y0 + h * 0.45, x0 + w * 0.85,
                            y0 + h * 0.92, rows, cols, 0.25);
    } else if (category == "camera") {
        const bool portrait = rng.bernoulli(0.12);
        double w = rng.uniform(120.0, 180.0);
        double h = w * rng.uniform(0.55, 0.85);
        if (portrait)
            std::swap(w, h);
        const double x0 = 128.0 - w / 2.0, y0 = 128.0 - h / 2.0;
        d.strokes.push_back(detail::rect(pen, x0, y0, x0 + w, y0 + h));
        const double r = std::min(w, h) * rng.uniform(0.22, 0.38);
        if (rng.bernoulli(0.95))
            d.strokes.push_back(detail::circle(pen, 128.0, 128.0, r));
        else
            d.strokes.push_back(
                detail::rect(pen, 128.0 - r, 128.0 - r, 128.0 + r, 128.0 + r, 1));
        if (rng.bernoulli(0.7)) // viewfinder bump
            d.strokes.push_back(detail::rect(pen, x0 + w * 0.12, y0 - h * 0.18, x0 + w * 0.4, y0,
                                             1));
        if (rng.bernoulli(0.4)) // shutter button
            d.strokes.push_back(
                detail::dash(pen, x0 + w * 0.75, y0 - h * 0.08, x0 + w * 0.88, y0 - h * 0.08));
    } else if (category == "cellphone") {
        const double w = rng.uniform(70.0, 115.0);
        const double h = std::min(w * rng.uniform(1.6, 2.4), 235.0);
        const double x0 = 128.0 - w / 2.0, y0 = 128.0 - h / 2.0;
        d.strokes.push_back(detail::rect(pen, x0, y0, x0 + w, y0 + h));
        if (rng.bernoulli(0.9))
            d.strokes.push_back(detail::rect(pen, x0 + w * 0.1, y0 + h * 0.12, x0 + w * 0.9,
                                             y0 + h * 0.78, 1));
        if (rng.bernoulli(0.3)) // old handset keypad, calculator-like
            detail::button_grid(pen, d.strokes, x0 + w * 0.15, y0 + h * 0.8, x0 + w * 0.85,
                                y0 + h * 0.97, 2, 3, 0.3);
        if (rng.bernoulli(0.4)) // round home button, lens-like
            d.strokes.push_back(
                detail::circle(pen, 128.0, y0 + h * 0.9, w * rng.uniform(0.05, 0.09), 8));
        if (rng.bernoulli(0.5)) // speaker slot
            d.strokes.push_back(
                detail::dash(pen, 128.0 - w * 0.15, y0 + h * 0.06, 128.0 + w * 0.15,
                             y0 + h * 0.06));
    } else {
        throw std::invalid_argument("synth::drawing: unknown category '" + category + "'");
    }
    return d;
}

/// Per-class blocks in sorted category order; fully determined by the seed.
inline std::vector<RawDrawing> corpus(std::size_t per_class, std::uint64_t seed) {
    std::vector<RawDrawing> out;
    out.reserve(per_class * 3);
    for (const char *cat : {"calculator", "camera", "cellphone"}) {
        qdraw::Rng rng(seed ^ detail::category_mix(cat));
        for (std::size_t i = 0; i < per_class; ++i)
            out.push_back(drawing(cat, rng));
    }
    return out;
}

/// Materializes category files in the simplified ndjson format, one per class,
/// so the normal cached-fetch path can run without a network.
inline void write_ndjson(const std::filesystem::path &cache_dir, std::size_t per_class,
                         std::uint64_t seed) {
    std::filesystem::create_directories(cache_dir);
    for (const char *cat : {"calculator", "camera", "cellphone"}) {
        qdraw::Rng rng(seed ^ detail::category_mix(cat));
        std::ofstream out(cache_dir / (std::string(cat) + ".ndjson"));
        if (!out)
            throw std::runtime_error("synth::write_ndjson: cannot write in " +
                                     cache_dir.string());
        for (std::size_t i = 0; i < per_class; ++i) {
            const RawDrawing d = drawing(cat, rng);
            nlohmann::json strokes = nlohmann::json::array();
            for (const Stroke &s : d.strokes) {
                nlohmann::json xs = nlohmann::json::array(), ys = nlohmann::json::array();
                for (std::size_t k = 0; k < s.x.size(); ++k) {
                    xs.push_back(static_cast<int>(s.x[k]));
                    ys.push_back(static_cast<int>(s.y[k]));
                }
                strokes.push_back(nlohmann::json::array({xs, ys}));
            }
            nlohmann::json j{{"word", d.category}, {"recognized", true}, {"drawing", strokes}};
            out << j.dump() << "\n";
        }
    }
}

} // namespace synth
} // namespace qdraw::sketch
