#pragma once

#include "qdraw/harness/train.hpp"

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

namespace qdraw::harness {

namespace detail {

struct Series {
    const std::vector<double> *data;
    const char *color;
    const char *label;
};

inline void panel(std::ostream &os, double ox, double oy, double w, double h,
                  const std::string &title, const std::vector<Series> &series, int epochs) {
    double lo = 1e300, hi = -1e300;
    for (const Series &s : series)
        for (double v : *s.data) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi - lo < 1e-9) {
        hi += 0.5;
        lo -= 0.5;
    }
    const double pad = 0.06 * (hi - lo);
    lo -= pad;
    hi += pad;
    os << "<rect x='" << ox << "' y='" << oy << "' width='" << w << "' height='" << h
       << "' fill='white' stroke='#888'/>\n";
    os << "<text x='" << ox + w / 2 << "' y='" << oy - 8
       << "' text-anchor='middle' font-size='13'>" << title << "</text>\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", hi);
    os << "<text x='" << ox - 4 << "' y='" << oy + 10
       << "' text-anchor='end' font-size='10'>" << buf << "</text>\n";
    std::snprintf(buf, sizeof buf, "%.3g", lo);
    os << "<text x='" << ox - 4 << "' y='" << oy + h
       << "' text-anchor='end' font-size='10'>" << buf << "</text>\n";
    os << "<text x='" << ox + w << "' y='" << oy + h + 14
       << "' text-anchor='end' font-size='10'>epoch " << epochs << "</text>\n";
    double legend_y = oy + 14;
    for (const Series &s : series) {
        os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
        for (std::size_t e = 0; e < s.data->size(); ++e) {
            const double x =
                ox + w * (s.data->size() < 2
                              ? 0.5
                              : static_cast<double>(e) / static_cast<double>(s.data->size() - 1));
            const double y = oy + h - h * (((*s.data)[e]) - lo) / (hi - lo);
            os << x << "," << y << " ";
        }
        os << "'/>\n";
        os << "<text x='" << ox + w - 6 << "' y='" << legend_y
           << "' text-anchor='end' font-size='10' fill='" << s.color << "'>" << s.label
           << "</text>\n";
        legend_y += 12;
    }
}

} // namespace detail

/// Two-panel learning-curve figure (loss and accuracy per epoch).
inline void save_curves_svg(const std::string &path, const ExperimentRecord &r) {
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("save_curves_svg: cannot open " + path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='760' height='300' "
          "font-family='sans-serif'>\n";
    os << "<text x='380' y='18' text-anchor='middle' font-size='14'>"
       << models::kind_name(r.kind) << " seed " << r.seed << "</text>\n";
    const int epochs = static_cast<int>(r.train_loss.size());
    detail::panel(os, 50, 50, 300, 210, "cross-entropy loss",
                  {{&r.train_loss, "#1f77b4", "train"}, {&r.val_loss, "#d62728", "val"}}, epochs);
    detail::panel(os, 420, 50, 300, 210, "accuracy",
                  {{&r.train_acc, "#1f77b4", "train"}, {&r.val_acc, "#d62728", "val"}}, epochs);
    os << "</svg>\n";
}

} // namespace qdraw::harness
