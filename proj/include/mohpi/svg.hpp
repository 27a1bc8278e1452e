#pragma once

// Static SVG charts: importance-vs-weighting lines and the stacked ablation
// chart. Output depends only on the input (fixed number formatting, no ids or
// timestamps).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "mohpi/ablation.hpp"
#include "mohpi/fanova.hpp"

namespace mohpi {

namespace svg {

inline constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                         "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

inline const char* color(std::size_t i) { return kPalette[i % kPalette.size()]; }

inline std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v == 0.0 ? 0.0 : v);
    return buf;
}

inline std::string label(double v, int digits)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, std::abs(v) < 1e-15 ? 0.0 : v);
    return buf;
}

inline std::string escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

struct Frame {
    double width = 760;
    double height = 440;
    double left = 64;
    double right = 200;
    double top = 40;
    double bottom = 56;
    double y_lo = 0.0;
    double y_hi = 1.0;

    double px(double w1) const { return left + w1 * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y_lo) / (y_hi - y_lo) * (height - top - bottom); }
    double plot_right() const { return width - right; }
};

inline std::string open(const Frame& f, std::string_view title)
{
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(f.width) + "\" height=\"" +
        num(f.height) + "\" viewBox=\"0 0 " + num(f.width) + " " + num(f.height) +
        "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"" + num(f.width) + "\" height=\"" + num(f.height) + "\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(f.left) + "\" y=\"24\" font-size=\"14\">" + escape(title) + "</text>\n";
    return s;
}

inline std::string axes(const Frame& f, std::string_view x_label, std::string_view y_label, int y_digits)
{
    std::string s;
    const double x0 = f.px(0.0), x1 = f.px(1.0), y0 = f.py(f.y_lo), y1 = f.py(f.y_hi);
    s += "<g stroke=\"#333\" fill=\"none\">\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) + "\"/>\n";
    s += "<line x1=\"" + num(x0) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\"/>\n";
    s += "</g>\n<g fill=\"#333\">\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = i / 5.0;
        const double x = f.px(t);
        s += "<line x1=\"" + num(x) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x) + "\" y2=\"" + num(y0 + 5) +
            "\" stroke=\"#333\"/>\n";
        s += "<text x=\"" + num(x) + "\" y=\"" + num(y0 + 18) + "\" text-anchor=\"middle\">" + label(t, 1) + "</text>\n";
        const double yv = f.y_lo + t * (f.y_hi - f.y_lo);
        const double y = f.py(yv);
        s += "<line x1=\"" + num(x0 - 5) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y) +
            "\" stroke=\"#333\"/>\n";
        s += "<text x=\"" + num(x0 - 8) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + label(yv, y_digits) +
            "</text>\n";
    }
    s += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(f.height - 14) + "\" text-anchor=\"middle\">" +
        escape(x_label) + "</text>\n";
    s += "<text transform=\"translate(16 " + num((y0 + y1) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
        escape(y_label) + "</text>\n";
    s += "</g>\n";
    return s;
}

inline std::string legend_entry(const Frame& f, std::size_t row, const char* fill, std::string_view text)
{
    const double x = f.plot_right() + 16;
    const double y = f.top + 8 + 18.0 * static_cast<double>(row);
    return "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) + "\" width=\"12\" height=\"12\" fill=\"" + fill +
        "\"/>\n<text x=\"" + num(x + 18) + "\" y=\"" + num(y + 1) + "\">" + escape(text) + "</text>\n";
}

} // namespace svg

// One polyline per hyperparameter over w1, y = importance fraction.
inline std::string render_fanova_svg(const std::vector<ImportanceCurve>& curves, std::string_view x_label = "w1")
{
    svg::Frame f;
    std::string s = svg::open(f, "Hyperparameter importance per weighting");
    s += svg::axes(f, std::string("weight of ") + std::string(x_label), "importance", 1);
    s += "<g fill=\"none\" stroke-width=\"2\">\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
        std::string points;
        for (const auto& p : curves[i].points) {
            if (!points.empty()) {
                points += ' ';
            }
            points += svg::num(f.px(p.w1)) + "," + svg::num(f.py(std::clamp(p.importance, 0.0, 1.0)));
        }
        s += "<polyline stroke=\"" + std::string(svg::color(i)) + "\" points=\"" + points + "\"/>\n";
    }
    s += "</g>\n<g>\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
        s += svg::legend_entry(f, i, svg::color(i), curves[i].hyperparameter);
    }
    s += "</g>\n</svg>\n";
    return s;
}

struct NegativeDelta {
    double w1 = 0.0;
    std::string hyperparameter;
    double delta = 0.0;
};

struct StackBand {
    std::string hyperparameter;
    std::vector<double> values; // positive delta per path, 0 when absent
};

// Data behind the stacked ablation chart: base = 1 - default cost (higher is
// better); one band per hyperparameter with any positive delta, in canonical
// order. Negative deltas are not stacked and are listed separately.
struct AblationStack {
    std::vector<double> w1;
    std::vector<double> base;
    std::vector<StackBand> bands;
    std::vector<NegativeDelta> negatives;

    std::vector<double> top() const
    {
        std::vector<double> t = base;
        for (const auto& b : bands) {
            for (std::size_t k = 0; k < t.size(); ++k) {
                t[k] += b.values[k];
            }
        }
        return t;
    }
};

inline AblationStack ablation_stack(const std::vector<AblationPath>& paths, const std::vector<std::string>& hyperparameters)
{
    AblationStack st;
    for (const auto& p : paths) {
        st.w1.push_back(p.weight.w1);
        st.base.push_back(1.0 - p.default_performance);
    }
    for (const auto& hp : hyperparameters) {
        StackBand band{hp, std::vector<double>(paths.size(), 0.0)};
        bool any = false;
        for (std::size_t k = 0; k < paths.size(); ++k) {
            for (const auto& step : paths[k].steps) {
                if (step.hyperparameter != hp) {
                    continue;
                }
                if (step.delta > 0.0) {
                    band.values[k] = step.delta;
                    any = true;
                } else if (step.delta < 0.0) {
                    st.negatives.push_back({paths[k].weight.w1, hp, step.delta});
                }
            }
        }
        if (any) {
            st.bands.push_back(std::move(band));
        }
    }
    std::stable_sort(st.negatives.begin(), st.negatives.end(),
                     [](const auto& a, const auto& b) { return a.w1 < b.w1; });
    return st;
}

inline std::string render_ablation_svg(const std::vector<AblationPath>& paths,
                                       const std::vector<std::string>& hyperparameters, std::string_view x_label = "w1")
{
    const AblationStack st = ablation_stack(paths, hyperparameters);
    const auto top = st.top();
    svg::Frame f;
    f.right = 260;
    if (!st.base.empty()) {
        f.y_lo = *std::min_element(st.base.begin(), st.base.end());
        f.y_hi = *std::max_element(top.begin(), top.end());
    }
    const double pad = std::max(0.05 * (f.y_hi - f.y_lo), 1e-3);
    f.y_lo -= pad;
    f.y_hi += pad;
    std::string s = svg::open(f, "Ablation: performance gained per hyperparameter");
    s += svg::axes(f, std::string("weight of ") + std::string(x_label), "1 - weighted cost", 3);

    // Bands as polygons between the running lower and upper envelopes. A
    // single path is drawn as a bar.
    const std::size_t n = st.w1.size();
    auto band_shape = [&](const std::vector<double>& lower, const std::vector<double>& upper, const char* fill) {
        if (n == 1) {
            const double x = f.px(st.w1[0]);
            const double half = 0.04 * (f.plot_right() - f.left);
            return "<rect x=\"" + svg::num(x - half) + "\" y=\"" + svg::num(f.py(upper[0])) + "\" width=\"" +
                svg::num(2 * half) + "\" height=\"" + svg::num(f.py(lower[0]) - f.py(upper[0])) + "\" fill=\"" + fill +
                "\"/>\n";
        }
        std::string pts;
        for (std::size_t k = 0; k < n; ++k) {
            pts += (pts.empty() ? "" : " ") + svg::num(f.px(st.w1[k])) + "," + svg::num(f.py(upper[k]));
        }
        for (std::size_t k = n; k-- > 0;) {
            pts += " " + svg::num(f.px(st.w1[k])) + "," + svg::num(f.py(lower[k]));
        }
        return "<polygon fill=\"" + std::string(fill) + "\" points=\"" + pts + "\"/>\n";
    };
    s += "<g stroke=\"none\">\n";
    if (n > 0) {
        s += band_shape(std::vector<double>(n, f.y_lo), st.base, svg::color(0));
        std::vector<double> running = st.base;
        for (std::size_t b = 0; b < st.bands.size(); ++b) {
            std::vector<double> upper = running;
            for (std::size_t k = 0; k < n; ++k) {
                upper[k] += st.bands[b].values[k];
            }
            s += band_shape(running, upper, svg::color(b + 1));
            running = std::move(upper);
        }
    }
    s += "</g>\n<g>\n";
    s += svg::legend_entry(f, 0, svg::color(0), "default");
    for (std::size_t b = 0; b < st.bands.size(); ++b) {
        s += svg::legend_entry(f, b + 1, svg::color(b + 1), st.bands[b].hyperparameter);
    }
    s += "</g>\n";
    if (!st.negatives.empty()) {
        const double x = f.plot_right() + 16;
        double y = f.top + 8 + 18.0 * static_cast<double>(st.bands.size() + 2);
        s += "<g font-size=\"11\">\n<text x=\"" + svg::num(x) + "\" y=\"" + svg::num(y) +
            "\" font-weight=\"bold\">Negative deltas (not stacked)</text>\n";
        constexpr std::size_t kMaxRows = 12;
        for (std::size_t i = 0; i < st.negatives.size() && i < kMaxRows; ++i) {
            y += 15;
            const auto& nd = st.negatives[i];
            s += "<text x=\"" + svg::num(x) + "\" y=\"" + svg::num(y) + "\">w1=" + svg::label(nd.w1, 2) + " " +
                svg::escape(nd.hyperparameter) + " " + svg::label(nd.delta, 4) + "</text>\n";
        }
        if (st.negatives.size() > kMaxRows) {
            y += 15;
            s += "<text x=\"" + svg::num(x) + "\" y=\"" + svg::num(y) + "\">(" +
                std::to_string(st.negatives.size() - kMaxRows) + " more)</text>\n";
        }
        s += "</g>\n";
    }
    s += "</svg>\n";
    return s;
}

} // namespace mohpi
