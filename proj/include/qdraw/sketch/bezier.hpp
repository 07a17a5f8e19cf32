#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qdraw::sketch {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double norm() const { return std::hypot(x, y); }
};

/// Cubic Bezier segment: p0/p3 are anchors, p1/p2 regulate curvature.
/// eos marks the last segment of a stroke; valid distinguishes real segments
/// from zero padding rows in encoded datasets.
struct BezierSegment {
    Vec2 p0, p1, p2, p3;
    int eos = 0;
    int valid = 1;
};

/// Bernstein-form evaluation at parameter t in [0, 1].
inline Vec2 bezier_point(const BezierSegment &seg, double t) {
    const double u = 1.0 - t;
    const double b0 = u * u * u;
    const double b1 = 3.0 * t * u * u;
    const double b2 = 3.0 * t * t * u;
    const double b3 = t * t * t;
    return seg.p0 * b0 + seg.p1 * b1 + seg.p2 * b2 + seg.p3 * b3;
}

namespace detail {

/// Chord-length parameters in [0, 1] over a point run. Returns false when the
/// run has zero total length (all points coincide).
inline bool chord_params(const std::vector<Vec2> &pts, std::size_t lo, std::size_t hi,
                         std::vector<double> &t) {
    t.assign(hi - lo + 1, 0.0);
    double total = 0.0;
    for (std::size_t i = lo + 1; i <= hi; ++i) {
        total += (pts[i] - pts[i - 1]).norm();
        t[i - lo] = total;
    }
    if (total <= 0.0)
        return false;
    for (double &u : t)
        u /= total;
    return true;
}

/// Least-squares cubic with anchored endpoints. Falls back to control points
/// at the chord thirds when the normal equations are singular (e.g. two-point
/// runs), which reproduces straight lines exactly.
inline BezierSegment fit_one(const std::vector<Vec2> &pts, std::size_t lo, std::size_t hi,
                             const std::vector<double> &t) {
    BezierSegment seg;
    seg.p0 = pts[lo];
    seg.p3 = pts[hi];
    const Vec2 chord = seg.p3 - seg.p0;
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    Vec2 r1{}, r2{};
    for (std::size_t i = lo; i <= hi; ++i) {
        const double u = t[i - lo];
        const double w = 1.0 - u;
        const double b0 = w * w * w;
        const double b1 = 3.0 * u * w * w;
        const double b2 = 3.0 * u * u * w;
        const double b3 = u * u * u;
        a11 += b1 * b1;
        a12 += b1 * b2;
        a22 += b2 * b2;
        const Vec2 rhs = pts[i] - seg.p0 * b0 - seg.p3 * b3;
        r1 = r1 + rhs * b1;
        r2 = r2 + rhs * b2;
    }
    const double det = a11 * a22 - a12 * a12;
    if (std::abs(det) > 1e-12 * std::max({a11, a22, 1.0})) {
        seg.p1 = (r1 * a22 - r2 * a12) * (1.0 / det);
        seg.p2 = (r2 * a11 - r1 * a12) * (1.0 / det);
    } else {
        seg.p1 = seg.p0 + chord * (1.0 / 3.0);
        seg.p2 = seg.p0 + chord * (2.0 / 3.0);
    }
    return seg;
}

inline Vec2 bezier_deriv(const BezierSegment &seg, double t) {
    const double u = 1.0 - t;
    return ((seg.p1 - seg.p0) * (u * u) + (seg.p2 - seg.p1) * (2.0 * t * u) +
            (seg.p3 - seg.p2) * (t * t)) *
           3.0;
}

inline Vec2 bezier_deriv2(const BezierSegment &seg, double t) {
    return ((seg.p2 - seg.p1 * 2.0 + seg.p0) * (1.0 - t) +
            (seg.p3 - seg.p2 * 2.0 + seg.p1) * t) *
           6.0;
}

/// One Newton-Raphson step moving a point's parameter toward the nearest
/// point of the curve (Graphics Gems "NewtonRaphsonRootFind").
inline double reparam_step(const BezierSegment &seg, Vec2 point, double t) {
    const Vec2 d = bezier_point(seg, t) - point;
    const Vec2 d1 = bezier_deriv(seg, t);
    const Vec2 d2 = bezier_deriv2(seg, t);
    const double num = d.x * d1.x + d.y * d1.y;
    const double den = d1.x * d1.x + d1.y * d1.y + d.x * d2.x + d.y * d2.y;
    if (den == 0.0)
        return t;
    const double next = t - num / den;
    return next < 0.0 ? 0.0 : next > 1.0 ? 1.0 : next;
}

struct FitResult {
    BezierSegment seg;
    double max_res = 0.0;
    std::size_t worst = 0;
};

/// Anchored least squares at chord parameters followed by parameter
/// correction + refit rounds (alternating minimization); keeps the best
/// iterate and stops once progress stalls. The returned residual is the
/// geometric point-to-curve distance (at the corrected parameters).
inline FitResult fit_refined(const std::vector<Vec2> &pts, std::size_t lo, std::size_t hi,
                             const std::vector<double> &chord) {
    std::vector<double> t = chord;
    FitResult best;
    best.max_res = std::numeric_limits<double>::infinity();
    int stalled = 0;
    for (int round = 0; round < 128 && stalled < 6; ++round) {
        const BezierSegment seg = fit_one(pts, lo, hi, t);
        double max_res = 0.0;
        std::size_t worst = lo;
        for (std::size_t i = lo; i <= hi; ++i) {
            const double res = (bezier_point(seg, t[i - lo]) - pts[i]).norm();
            if (res > max_res) {
                max_res = res;
                worst = i;
            }
        }
        if (max_res < best.max_res * 0.99) {
            best = {seg, max_res, worst};
            stalled = 0;
        } else {
            ++stalled;
        }
        if (max_res < 1e-13)
            break;
        for (std::size_t i = lo + 1; i < hi; ++i) {
            double u = t[i - lo];
            u = reparam_step(seg, pts[i], u);
            t[i - lo] = reparam_step(seg, pts[i], u);
        }
    }
    return best;
}

inline void fit_recursive(const std::vector<Vec2> &pts, std::size_t lo, std::size_t hi,
                          double threshold, std::vector<BezierSegment> &out) {
    std::vector<double> t;
    if (!chord_params(pts, lo, hi, t)) {
        BezierSegment seg;
        seg.p0 = seg.p1 = seg.p2 = seg.p3 = pts[lo];
        out.push_back(seg);
        return;
    }
    // accept/split is decided on the plain chord-parameterization residual;
    // accepted segments are then polished, which can only shrink the
    // geometric residual below the accepted bound
    const BezierSegment seg = fit_one(pts, lo, hi, t);
    double max_res = 0.0;
    std::size_t worst = lo;
    for (std::size_t i = lo; i <= hi; ++i) {
        const double res = (bezier_point(seg, t[i - lo]) - pts[i]).norm();
        if (res > max_res) {
            max_res = res;
            worst = i;
        }
    }
    if (max_res <= threshold || hi - lo < 2) {
        out.push_back(fit_refined(pts, lo, hi, t).seg);
        return;
    }
    // endpoints are interpolated, so the worst point is interior; clamp anyway
    const std::size_t split = std::min(std::max(worst, lo + 1), hi - 1);
    fit_recursive(pts, lo, split, threshold, out);
    fit_recursive(pts, split, hi, threshold, out);
}

inline double bbox_diagonal(const std::vector<Vec2> &pts) {
    double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
    for (const Vec2 &p : pts) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    return std::hypot(xmax - xmin, ymax - ymin);
}

} // namespace detail

/// Adaptive least-squares encoding of one stroke as cubic segments.
///
/// Endpoints are anchored at the stroke's first/last points; interior points
/// enter via their chord-length parameters. When the worst residual exceeds
/// tol * diagonal the stroke is split at that point and both halves refit, so
/// consecutive segments share endpoints exactly. `diagonal` is the owning
/// sketch's bounding-box diagonal; it defaults to the stroke's own.
inline std::vector<BezierSegment> fit_bezier(const std::vector<Vec2> &points, double tol,
                                             std::optional<double> diagonal = std::nullopt) {
    if (points.size() < 2)
        throw std::invalid_argument("fit_bezier: need at least 2 points, got " +
                                    std::to_string(points.size()));
    if (tol <= 0.0)
        throw std::invalid_argument("fit_bezier: tol must be positive");
    std::vector<BezierSegment> out;
    const double diag = diagonal.value_or(detail::bbox_diagonal(points));
    detail::fit_recursive(points, 0, points.size() - 1, tol * diag, out);
    out.back().eos = 1;
    return out;
}

} // namespace qdraw::sketch
