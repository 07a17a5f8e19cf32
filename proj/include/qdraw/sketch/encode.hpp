#pragma once

#include "qdraw/rng.hpp"
#include "qdraw/sketch/bezier.hpp"
#include "qdraw/sketch/drawing.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace qdraw::sketch {

enum class Split { Train, Val };

inline const char *split_name(Split s) { return s == Split::Train ? "train" : "val"; }

/// Row layout of an encoded sample matrix: 8 control-point coordinates,
/// end-of-stroke flag, valid flag.
constexpr std::size_t kRowWidth = 10;

struct EncodedSample {
    std::vector<double> rows; // n_rows x kRowWidth, zero padded
    int label = 0;
    Split split = Split::Train;
    std::size_t n_valid = 0;

    double at(std::size_t row, std::size_t col) const { return rows[row * kRowWidth + col]; }
};

struct EncodedDataset {
    std::size_t n_rows = 0; // N: global max segment count
    std::vector<std::string> class_names;
    std::vector<EncodedSample> samples;
    std::size_t dropped = 0;

    std::size_t count(Split s) const {
        std::size_t c = 0;
        for (const EncodedSample &e : samples)
            c += e.split == s ? 1 : 0;
        return c;
    }
};

struct EncodeOptions {
    double tol = 0.02;
    double split = 0.8;
    std::uint64_t seed = 0;
    std::size_t segment_cap = 64;
    std::ostream *log = &std::cerr;
};

namespace detail {

struct FittedSketch {
    std::vector<BezierSegment> segments;
    int label = 0;
};

/// Normalizes a drawing to the unit box (longer side to [0, 1], shorter axis
/// centered) and fits every stroke. Fitted curvature points may overshoot the
/// data bounding box, so a second exact unit-box rescale over all control
/// points follows; it is a uniform similarity, which leaves chord parameters
/// and the residual/diagonal ratio untouched. Returns false for zero-extent
/// drawings.
inline bool fit_drawing(const RawDrawing &raw, double tol, std::size_t segment_cap,
                        std::vector<BezierSegment> &out) {
    double xmin = raw.strokes[0].x[0], xmax = xmin;
    double ymin = raw.strokes[0].y[0], ymax = ymin;
    for (const Stroke &s : raw.strokes)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    const double w = xmax - xmin, h = ymax - ymin;
    const double longest = std::max(w, h);
    if (longest <= 0.0)
        return false;
    const double scale = 1.0 / longest;
    const double offx = (1.0 - w * scale) / 2.0;
    const double offy = (1.0 - h * scale) / 2.0;
    const double diag = std::hypot(w * scale, h * scale);

    out.clear();
    for (const Stroke &s : raw.strokes) {
        std::vector<Vec2> pts(s.x.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            pts[i] = {(s.x[i] - xmin) * scale + offx, (s.y[i] - ymin) * scale + offy};
        const std::vector<BezierSegment> segs = fit_bezier(pts, tol, diag);
        out.insert(out.end(), segs.begin(), segs.end());
        if (out.size() > segment_cap)
            return false;
    }

    double cxmin = out[0].p0.x, cxmax = cxmin, cymin = out[0].p0.y, cymax = cymin;
    for (const BezierSegment &seg : out)
        for (const Vec2 *p : {&seg.p0, &seg.p1, &seg.p2, &seg.p3}) {
            cxmin = std::min(cxmin, p->x);
            cxmax = std::max(cxmax, p->x);
            cymin = std::min(cymin, p->y);
            cymax = std::max(cymax, p->y);
        }
    const double cw = cxmax - cxmin, ch = cymax - cymin;
    const double clong = std::max(cw, ch);
    const double coffx = (clong - cw) / (2.0 * clong);
    const double coffy = (clong - ch) / (2.0 * clong);
    for (BezierSegment &seg : out)
        for (Vec2 *p : {&seg.p0, &seg.p1, &seg.p2, &seg.p3}) {
            // division form so box extremes land on exactly 0 and 1
            p->x = (p->x - cxmin) / clong + coffx;
            p->y = (p->y - cymin) / clong + coffy;
        }
    return true;
}

} // namespace detail

/// Builds the padded fixed-length dataset: per-sketch unit-box normalization,
/// per-stroke Bezier fitting, zero padding to the global maximum segment
/// count, and a seeded stratified train/validation split. Class indices follow
/// the sorted category names. Sketches that exceed the segment cap or have
/// zero extent are dropped with a warning.
inline EncodedDataset encode_dataset(const std::vector<RawDrawing> &drawings,
                                     const EncodeOptions &opt) {
    if (drawings.empty())
        throw std::invalid_argument("encode_dataset: no drawings");
    if (!(opt.split > 0.0 && opt.split < 1.0))
        throw std::invalid_argument("encode_dataset: split fraction must be in (0, 1)");

    EncodedDataset ds;
    std::set<std::string> names;
    for (const RawDrawing &d : drawings)
        names.insert(d.category);
    ds.class_names.assign(names.begin(), names.end());
    std::map<std::string, int> label_of;
    for (std::size_t i = 0; i < ds.class_names.size(); ++i)
        label_of[ds.class_names[i]] = static_cast<int>(i);

    std::vector<detail::FittedSketch> fitted;
    fitted.reserve(drawings.size());
    for (const RawDrawing &d : drawings) {
        detail::FittedSketch f;
        f.label = label_of[d.category];
        if (!detail::fit_drawing(d, opt.tol, opt.segment_cap, f.segments)) {
            ds.dropped += 1;
            if (opt.log)
                *opt.log << "encode_dataset: dropping a '" << d.category
                         << "' drawing (zero extent or over " << opt.segment_cap
                         << " segments)\n";
            continue;
        }
        ds.n_rows = std::max(ds.n_rows, f.segments.size());
        fitted.push_back(std::move(f));
    }
    if (fitted.empty())
        throw std::invalid_argument("encode_dataset: every drawing was dropped");

    ds.samples.reserve(fitted.size());
    for (const detail::FittedSketch &f : fitted) {
        EncodedSample sample;
        sample.label = f.label;
        sample.n_valid = f.segments.size();
        sample.rows.assign(ds.n_rows * kRowWidth, 0.0);
        for (std::size_t r = 0; r < f.segments.size(); ++r) {
            const BezierSegment &s = f.segments[r];
            double *row = &sample.rows[r * kRowWidth];
            row[0] = s.p0.x; row[1] = s.p0.y;
            row[2] = s.p1.x; row[3] = s.p1.y;
            row[4] = s.p2.x; row[5] = s.p2.y;
            row[6] = s.p3.x; row[7] = s.p3.y;
            row[8] = s.eos;
            row[9] = 1.0;
        }
        ds.samples.push_back(std::move(sample));
    }

    // stratified split: per class, shuffle indices and tag the first
    // round(count * split) as training
    Rng rng(opt.seed);
    for (std::size_t cls = 0; cls < ds.class_names.size(); ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < ds.samples.size(); ++i)
            if (ds.samples[i].label == static_cast<int>(cls))
                idx.push_back(i);
        rng.shuffle(idx);
        const std::size_t n_train =
            static_cast<std::size_t>(std::lround(static_cast<double>(idx.size()) * opt.split));
        for (std::size_t k = 0; k < idx.size(); ++k)
            ds.samples[idx[k]].split = k < n_train ? Split::Train : Split::Val;
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Dataset container (text, bit-stable for fixed inputs and seed)
// ---------------------------------------------------------------------------

namespace detail {

inline void write_double(std::ostream &os, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf;
}

} // namespace detail

inline void save_dataset(const std::string &path, const EncodedDataset &ds) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_dataset: cannot open " + path);
    out << "qdraw-dataset 1\n";
    out << "classes " << ds.class_names.size() << "\n";
    for (std::size_t i = 0; i < ds.class_names.size(); ++i)
        out << "class " << i << " " << ds.class_names[i] << "\n";
    out << "n_rows " << ds.n_rows << "\n";
    out << "samples " << ds.samples.size() << "\n";
    for (const EncodedSample &s : ds.samples) {
        out << "sample " << s.label << " " << split_name(s.split) << " " << s.n_valid << "\n";
        for (std::size_t r = 0; r < s.n_valid; ++r) {
            for (std::size_t c = 0; c < kRowWidth; ++c) {
                if (c)
                    out << " ";
                detail::write_double(out, s.at(r, c));
            }
            out << "\n";
        }
    }
    out << "end\n";
    if (!out)
        throw std::runtime_error("save_dataset: write failed for " + path);
}

inline EncodedDataset load_dataset(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_dataset: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "qdraw-dataset 1")
        throw std::runtime_error("load_dataset: bad header in " + path);
    EncodedDataset ds;
    std::size_t n_classes = 0, n_samples = 0;
    auto expect = [&](const char *tag) {
        if (!std::getline(in, line))
            throw std::runtime_error("load_dataset: truncated file " + path);
        std::istringstream ls(line);
        std::string got;
        ls >> got;
        if (got != tag)
            throw std::runtime_error("load_dataset: expected '" + std::string(tag) + "', got '" +
                                     got + "'");
        return ls;
    };
    {
        auto ls = expect("classes");
        ls >> n_classes;
    }
    ds.class_names.resize(n_classes);
    for (std::size_t i = 0; i < n_classes; ++i) {
        auto ls = expect("class");
        std::size_t idx;
        ls >> idx >> ds.class_names.at(idx);
    }
    {
        auto ls = expect("n_rows");
        ls >> ds.n_rows;
    }
    {
        auto ls = expect("samples");
        ls >> n_samples;
    }
    ds.samples.reserve(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        auto ls = expect("sample");
        EncodedSample s;
        std::string split_tag;
        ls >> s.label >> split_tag >> s.n_valid;
        if (split_tag != "train" && split_tag != "val")
            throw std::runtime_error("load_dataset: bad split tag '" + split_tag + "'");
        s.split = split_tag == "train" ? Split::Train : Split::Val;
        if (s.n_valid > ds.n_rows)
            throw std::runtime_error("load_dataset: sample exceeds n_rows");
        s.rows.assign(ds.n_rows * kRowWidth, 0.0);
        for (std::size_t r = 0; r < s.n_valid; ++r) {
            if (!std::getline(in, line))
                throw std::runtime_error("load_dataset: truncated sample rows");
            const char *cursor = line.c_str();
            for (std::size_t c = 0; c < kRowWidth; ++c) {
                char *next = nullptr;
                s.rows[r * kRowWidth + c] = std::strtod(cursor, &next);
                if (next == cursor)
                    throw std::runtime_error("load_dataset: short row in sample");
                cursor = next;
            }
        }
        ds.samples.push_back(std::move(s));
    }
    if (!std::getline(in, line) || line != "end")
        throw std::runtime_error("load_dataset: missing end marker in " + path);
    return ds;
}

} // namespace qdraw::sketch
