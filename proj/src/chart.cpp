#include "bpdet/chart.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bpdet {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

std::vector<Series> collect(const MetricsTable& table, const ChartConfig& config) {
    std::vector<std::string> names = config.variants;
    if (names.empty()) {
        for (const auto& r : table.records)
            if (std::find(names.begin(), names.end(), r.variant) == names.end())
                names.push_back(r.variant);
    }
    std::vector<Series> out;
    for (const auto& name : names) {
        Series s;
        s.name = name;
        if (config.x_metric.empty()) {
            for (const auto& r : table.records)
                if (r.variant == name && r.node == config.node && r.metric == config.metric)
                    s.points.emplace_back(r.x, r.value);
        } else {
            std::map<double, std::pair<bool, double>> xs;  // sweep x -> x_metric value
            for (const auto& r : table.records)
                if (r.variant == name && r.node == config.node && r.metric == config.x_metric)
                    xs[r.x] = {true, r.value};
            for (const auto& r : table.records) {
                if (r.variant != name || r.node != config.node || r.metric != config.metric)
                    continue;
                auto it = xs.find(r.x);
                if (it != xs.end() && it->second.first)
                    s.points.emplace_back(it->second.second, r.value);
            }
        }
        std::sort(s.points.begin(), s.points.end());
        if (!s.points.empty()) out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

void render_chart(const MetricsTable& table, const ChartConfig& config,
                  const std::string& path) {
    auto series = collect(table, config);
    if (series.empty()) throw std::runtime_error("render_chart: no matching records");

    double x_min = 1e300, x_max = -1e300, y_min = 1e300, y_max = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            x_min = std::min(x_min, x);
            x_max = std::max(x_max, x);
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    if (x_max == x_min) x_max = x_min + 1;
    if (y_max == y_min) y_max = y_min + 1;
    double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;

    const double ml = 70, mr = 170, mt = 50, mb = 60;
    const double pw = config.width - ml - mr, ph = config.height - mt - mb;
    auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
    auto py = [&](double y) { return mt + (y_max - y) / (y_max - y_min) * ph; };

    std::ofstream f(path);
    if (!f) throw std::runtime_error("render_chart: cannot write " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << config.width << "\" height=\""
      << config.height << "\" viewBox=\"0 0 " << config.width << ' ' << config.height
      << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<text x=\"" << config.width / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << config.title << "</text>\n";

    // axes with 6 ticks each
    f << "<g stroke=\"#444\" stroke-width=\"1\" fill=\"none\">\n";
    f << "<path d=\"M" << ml << ' ' << mt << " L" << ml << ' ' << mt + ph << " L" << ml + pw
      << ' ' << mt + ph << "\"/>\n</g>\n";
    f << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 5; ++i) {
        double xv = x_min + i * (x_max - x_min) / 5;
        double yv = y_min + i * (y_max - y_min) / 5;
        f << "<line x1=\"" << fmt(px(xv)) << "\" y1=\"" << mt + ph << "\" x2=\"" << fmt(px(xv))
          << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"#444\"/>\n";
        f << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << mt + ph + 18
          << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
        f << "<line x1=\"" << ml - 5 << "\" y1=\"" << fmt(py(yv)) << "\" x2=\"" << ml
          << "\" y2=\"" << fmt(py(yv)) << "\" stroke=\"#444\"/>\n";
        f << "<text x=\"" << ml - 8 << "\" y=\"" << fmt(py(yv) + 4)
          << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
    }
    f << "<text x=\"" << ml + pw / 2 << "\" y=\"" << config.height - 14
      << "\" text-anchor=\"middle\">" << config.x_label << "</text>\n";
    f << "<text x=\"18\" y=\"" << mt + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << mt + ph / 2 << ")\">" << config.y_label << "</text>\n";
    f << "</g>\n";

    for (size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
        f << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (auto [x, y] : series[i].points) f << fmt(px(x)) << ',' << fmt(py(y)) << ' ';
        f << "\"/>\n";
        double ly = mt + 16 + 18.0 * i;
        f << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
          << ml + pw + 34 << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n";
        f << "<text x=\"" << ml + pw + 40 << "\" y=\"" << fmt(ly)
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[i].name << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace bpdet
