#pragma once

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace qdraw::sketch {

/// One pen stroke in source coordinates: paired x/y arrays of equal length.
struct Stroke {
    std::vector<double> x;
    std::vector<double> y;
};

/// A drawing as parsed from a simplified QuickDraw category file.
struct RawDrawing {
    std::string category;
    std::vector<Stroke> strokes;
};

/// Point stream with a pen-lift flag: f = 1 on the last point of each stroke.
struct SequencePoint {
    double x = 0.0;
    double y = 0.0;
    int f = 0;
};

struct SketchSequence {
    std::vector<SequencePoint> points;
    std::size_t length() const { return points.size(); }
};

/// Parses one line of a simplified category file:
///   {"word": "camera", "drawing": [[[x...], [y...]], ...], ...}
/// Drawings with no strokes, single-point strokes, or ragged x/y arrays are
/// rejected.
inline RawDrawing parse_drawing(const std::string &line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception &e) {
        throw std::invalid_argument(std::string("parse_drawing: malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("word") || !j.contains("drawing"))
        throw std::invalid_argument("parse_drawing: missing 'word' or 'drawing' field");
    RawDrawing out;
    out.category = j["word"].get<std::string>();
    const nlohmann::json &strokes = j["drawing"];
    if (!strokes.is_array() || strokes.empty())
        throw std::invalid_argument("parse_drawing: drawing has no strokes");
    for (const nlohmann::json &s : strokes) {
        if (!s.is_array() || s.size() != 2)
            throw std::invalid_argument("parse_drawing: stroke is not an [x, y] array pair");
        Stroke stroke;
        stroke.x = s[0].get<std::vector<double>>();
        stroke.y = s[1].get<std::vector<double>>();
        if (stroke.x.size() != stroke.y.size())
            throw std::invalid_argument("parse_drawing: ragged stroke arrays (|x|=" +
                                        std::to_string(stroke.x.size()) + ", |y|=" +
                                        std::to_string(stroke.y.size()) + ")");
        if (stroke.x.size() < 2)
            throw std::invalid_argument("parse_drawing: stroke with fewer than 2 points");
        out.strokes.push_back(std::move(stroke));
    }
    return out;
}

/// Concatenates the strokes of a drawing into the flagged point sequence.
inline SketchSequence to_sequence(const RawDrawing &raw) {
    if (raw.strokes.empty())
        throw std::invalid_argument("to_sequence: drawing has no strokes");
    SketchSequence seq;
    for (const Stroke &s : raw.strokes) {
        for (std::size_t i = 0; i < s.x.size(); ++i)
            seq.points.push_back({s.x[i], s.y[i], i + 1 == s.x.size() ? 1 : 0});
    }
    return seq;
}

} // namespace qdraw::sketch
