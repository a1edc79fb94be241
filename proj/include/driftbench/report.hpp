#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "driftbench/csv.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/metrics.hpp"
#include "driftbench/regimes.hpp"

namespace driftbench {

struct SummaryRow {
    Task task = Task::mortality;
    Repr repr = Repr::item_id;
    RegimeKind kind = RegimeKind::one_time;
    std::string feature;
    double train_fraction = 1.0;
    int test_year = 0;
    int n = 0;
    int n_ok = 0;
    int n_degenerate = 0;
    int n_error = 0;
    double mean_auroc = std::numeric_limits<double>::quiet_NaN();
    double se_auroc = std::numeric_limits<double>::quiet_NaN();
    double mean_auprc = std::numeric_limits<double>::quiet_NaN();
    double se_auprc = std::numeric_limits<double>::quiet_NaN();
};

// Mean +- SE per (task, representation, regime, feature, fraction, test_year).
// Degenerate and error repeats stay visible through the status counts; the
// means cover records with finite metrics.
inline std::vector<SummaryRow> summarize(const std::vector<EvalRecord>& records) {
    using Key = std::tuple<std::string, std::string, std::string, std::string, double, int>;
    std::map<Key, std::vector<const EvalRecord*>> groups;
    for (const auto& r : records)
        groups[{to_string(r.task), to_string(r.repr), to_string(r.kind), r.feature, r.train_fraction,
                r.test_year}]
            .push_back(&r);

    std::vector<SummaryRow> rows;
    for (const auto& [key, group] : groups) {
        SummaryRow row;
        row.task = group.front()->task;
        row.repr = group.front()->repr;
        row.kind = group.front()->kind;
        row.feature = group.front()->feature;
        row.train_fraction = group.front()->train_fraction;
        row.test_year = group.front()->test_year;
        row.n = static_cast<int>(group.size());
        std::vector<double> aurocs, auprcs;
        for (const auto* r : group) {
            if (r->status == "ok")
                ++row.n_ok;
            else if (r->status.rfind("degenerate", 0) == 0)
                ++row.n_degenerate;
            else
                ++row.n_error;
            if (!std::isnan(r->auroc)) aurocs.push_back(r->auroc);
            if (!std::isnan(r->auprc)) auprcs.push_back(r->auprc);
        }
        if (!aurocs.empty()) row.mean_auroc = mean_of(aurocs);
        if (!auprcs.empty()) row.mean_auprc = mean_of(auprcs);
        if (aurocs.size() >= 2) row.se_auroc = standard_error(aurocs);
        if (auprcs.size() >= 2) row.se_auprc = standard_error(auprcs);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_summary_csv(const std::vector<SummaryRow>& rows, const std::string& path) {
    CsvWriter w(path);
    w.row({"task", "representation", "regime", "feature", "train_fraction", "test_year", "n",
           "n_ok", "n_degenerate", "n_error", "mean_auroc", "se_auroc", "mean_auprc", "se_auprc"});
    for (const auto& r : rows)
        w.row({to_string(r.task), to_string(r.repr), to_string(r.kind), r.feature,
               fmt_double(r.train_fraction), std::to_string(r.test_year), std::to_string(r.n),
               std::to_string(r.n_ok), std::to_string(r.n_degenerate), std::to_string(r.n_error),
               fmt_double(r.mean_auroc), fmt_double(r.se_auroc), fmt_double(r.mean_auprc),
               fmt_double(r.se_auprc)});
    w.close();
}

// ---------------------------------------------------------------------------
// Static SVG charts. Plain markup, no external references; tests count the
// class attributes (series / errbar / sig / changeover).

namespace svg {

struct Frame {
    double width = 860, height = 460;
    double left = 64, right = 24, top = 28, bottom = 48;
    double x_min = 0, x_max = 1, y_min = 0, y_max = 1;

    double x(double v) const {
        return left + (v - x_min) / (x_max - x_min) * (width - left - right);
    }
    double y(double v) const {
        return height - bottom - (v - y_min) / (y_max - y_min) * (height - top - bottom);
    }
};

inline std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

inline const char* series_color(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return colors[i % 8];
}

struct Point {
    double x = 0, y = 0, se = 0;
    bool has_se = false;
};

struct Series {
    std::string label;
    std::vector<Point> points;
};

inline std::string render(const std::string& title, const std::string& x_label, Frame f,
                          const std::vector<Series>& series, const std::vector<double>& x_ticks,
                          const std::vector<std::pair<double, double>>& shaded_spans,
                          double changeover_x, bool draw_changeover) {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
        << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n";
    out << "<rect width=\"" << f.width << "\" height=\"" << f.height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << f.width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
        << esc(title) << "</text>\n";

    for (const auto& [lo, hi] : shaded_spans)
        out << "<rect class=\"sig\" x=\"" << f.x(lo) << "\" y=\"" << f.top << "\" width=\""
            << f.x(hi) - f.x(lo) << "\" height=\"" << f.height - f.top - f.bottom
            << "\" fill=\"#fdd\" opacity=\"0.6\"/>\n";

    // Axes and ticks.
    out << "<line x1=\"" << f.left << "\" y1=\"" << f.height - f.bottom << "\" x2=\""
        << f.width - f.right << "\" y2=\"" << f.height - f.bottom << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
        << f.height - f.bottom << "\" stroke=\"black\"/>\n";
    for (double t = std::ceil(f.y_min * 10.0) / 10.0; t <= f.y_max + 1e-9; t += 0.1) {
        out << "<line x1=\"" << f.left - 4 << "\" y1=\"" << f.y(t) << "\" x2=\"" << f.left
            << "\" y2=\"" << f.y(t) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << f.left - 8 << "\" y=\"" << f.y(t) + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_double(std::round(t * 100) / 100)
            << "</text>\n";
    }
    for (double t : x_ticks) {
        out << "<line x1=\"" << f.x(t) << "\" y1=\"" << f.height - f.bottom << "\" x2=\"" << f.x(t)
            << "\" y2=\"" << f.height - f.bottom + 4 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << f.x(t) << "\" y=\"" << f.height - f.bottom + 18
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_double(t) << "</text>\n";
    }
    out << "<text x=\"" << (f.left + f.width - f.right) / 2 << "\" y=\"" << f.height - 10
        << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << (f.top + f.height - f.bottom) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << (f.top + f.height - f.bottom) / 2 << ")\">AUROC</text>\n";

    if (draw_changeover)
        out << "<line class=\"changeover\" x1=\"" << f.x(changeover_x) << "\" y1=\"" << f.top
            << "\" x2=\"" << f.x(changeover_x) << "\" y2=\"" << f.height - f.bottom
            << "\" stroke=\"#444\" stroke-dasharray=\"5,4\"/>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& sr = series[s];
        const char* color = series_color(s);
        std::ostringstream pts;
        for (const auto& p : sr.points) pts << f.x(p.x) << "," << f.y(p.y) << " ";
        out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
        for (const auto& p : sr.points) {
            out << "<circle cx=\"" << f.x(p.x) << "\" cy=\"" << f.y(p.y) << "\" r=\"3\" fill=\""
                << color << "\"/>\n";
            if (p.has_se) {
                out << "<line class=\"errbar\" x1=\"" << f.x(p.x) << "\" y1=\"" << f.y(p.y - p.se)
                    << "\" x2=\"" << f.x(p.x) << "\" y2=\"" << f.y(p.y + p.se) << "\" stroke=\""
                    << color << "\"/>\n";
            }
        }
        out << "<rect x=\"" << f.width - f.right - 170 << "\" y=\"" << f.top + 18 * static_cast<double>(s)
            << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
        out << "<text x=\"" << f.width - f.right - 156 << "\" y=\"" << f.top + 18 * static_cast<double>(s) + 9
            << "\" font-size=\"11\">" << esc(sr.label) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace svg

namespace detail {

inline svg::Frame fit_frame(const std::vector<svg::Series>& series, double x_min, double x_max) {
    svg::Frame f;
    f.x_min = x_min;
    f.x_max = x_max > x_min ? x_max : x_min + 1;
    double lo = 1.0, hi = 0.0;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            lo = std::min(lo, p.y - (p.has_se ? p.se : 0.0));
            hi = std::max(hi, p.y + (p.has_se ? p.se : 0.0));
        }
    if (lo > hi) {
        lo = 0.0;
        hi = 1.0;
    }
    f.y_min = std::max(0.0, std::floor((lo - 0.05) * 10.0) / 10.0);
    f.y_max = std::min(1.0, std::ceil((hi + 0.05) * 10.0) / 10.0);
    if (f.y_max - f.y_min < 0.2) f.y_min = std::max(0.0, f.y_max - 0.2);
    return f;
}

}  // namespace detail

// Per-year AUROC curves, one series per representation, with +-SE error
// bars, a dashed rule at the changeover year, and shaded year spans where
// the paired representation comparison is significant.
inline std::string svg_regime_chart(const std::vector<SummaryRow>& summary,
                                    const std::vector<ComparisonRow>& comparisons, Task task,
                                    RegimeKind kind, int changeover_year, double threshold) {
    std::set<int> years;
    std::map<Repr, svg::Series> by_repr;
    for (const auto& r : summary) {
        if (r.task != task || r.kind != kind || !r.feature.empty() || r.train_fraction != 1.0)
            continue;
        if (r.test_year == 0) continue;
        years.insert(r.test_year);
        auto& series = by_repr[r.repr];
        series.label = to_string(r.repr);
        svg::Point p;
        p.x = r.test_year;
        p.y = r.mean_auroc;
        if (!std::isnan(r.se_auroc)) {
            p.se = r.se_auroc;
            p.has_se = true;
        }
        series.points.push_back(p);
    }
    if (years.empty()) throw ReportError("no records for " + to_string(task) + "/" + to_string(kind));

    std::vector<svg::Series> series;
    for (auto& [repr, s] : by_repr) {
        std::sort(s.points.begin(), s.points.end(),
                  [](const svg::Point& a, const svg::Point& b) { return a.x < b.x; });
        series.push_back(std::move(s));
    }
    std::vector<double> ticks(years.begin(), years.end());
    std::vector<std::pair<double, double>> shaded;
    for (const auto& c : comparisons)
        if (c.task == task && c.kind == kind && c.valid && c.p_value < threshold)
            shaded.emplace_back(c.test_year - 0.5, c.test_year + 0.5);

    auto frame = detail::fit_frame(series, *years.begin() - 0.5, *years.rbegin() + 0.5);
    const bool draw_rule = changeover_year > *years.begin() - 1 && changeover_year <= *years.rbegin();
    return svg::render(to_string(task) + " / " + to_string(kind), "test year", frame, series, ticks,
                       shaded, changeover_year - 0.5, draw_rule);
}

// Saturation sweep: AUROC vs training fraction for one test year.
inline std::string svg_saturation_chart(const std::vector<SummaryRow>& summary, Task task,
                                        int test_year) {
    std::map<Repr, svg::Series> by_repr;
    std::set<double> fractions;
    for (const auto& r : summary) {
        if (r.task != task || r.kind != RegimeKind::one_time || !r.feature.empty()) continue;
        if (r.test_year != test_year) continue;
        fractions.insert(r.train_fraction);
        auto& series = by_repr[r.repr];
        series.label = to_string(r.repr);
        svg::Point p;
        p.x = r.train_fraction;
        p.y = r.mean_auroc;
        if (!std::isnan(r.se_auroc)) {
            p.se = r.se_auroc;
            p.has_se = true;
        }
        series.points.push_back(p);
    }
    if (fractions.empty())
        throw ReportError("no saturation records for " + to_string(task) + " at year " +
                          std::to_string(test_year));
    std::vector<svg::Series> series;
    for (auto& [repr, s] : by_repr) {
        std::sort(s.points.begin(), s.points.end(),
                  [](const svg::Point& a, const svg::Point& b) { return a.x < b.x; });
        series.push_back(std::move(s));
    }
    std::vector<double> ticks(fractions.begin(), fractions.end());
    auto frame = detail::fit_frame(series, *fractions.begin() - 0.05, *fractions.rbegin() + 0.05);
    return svg::render(to_string(task) + " / train-set saturation (test year " +
                           std::to_string(test_year) + ")",
                       "training fraction", frame, series, ticks, {}, 0, false);
}

// Single-feature ablation curves: one series per concept.
inline std::string svg_ablation_chart(const std::vector<SummaryRow>& summary, Task task,
                                      int changeover_year) {
    std::map<std::string, svg::Series> by_feature;
    std::set<int> years;
    for (const auto& r : summary) {
        if (r.task != task || r.feature.empty()) continue;
        years.insert(r.test_year);
        auto& series = by_feature[r.feature];
        series.label = r.feature;
        svg::Point p;
        p.x = r.test_year;
        p.y = r.mean_auroc;
        if (!std::isnan(r.se_auroc)) {
            p.se = r.se_auroc;
            p.has_se = true;
        }
        series.points.push_back(p);
    }
    if (years.empty()) throw ReportError("no ablation records for " + to_string(task));
    std::vector<svg::Series> series;
    for (auto& [name, s] : by_feature) {
        std::sort(s.points.begin(), s.points.end(),
                  [](const svg::Point& a, const svg::Point& b) { return a.x < b.x; });
        series.push_back(std::move(s));
    }
    std::vector<double> ticks(years.begin(), years.end());
    auto frame = detail::fit_frame(series, *years.begin() - 0.5, *years.rbegin() + 0.5);
    const bool draw_rule = changeover_year > *years.begin() - 1 && changeover_year <= *years.rbegin();
    return svg::render(to_string(task) + " / single-feature ablation", "test year", frame, series,
                       ticks, {}, changeover_year - 0.5, draw_rule);
}

inline std::vector<ComparisonRow> read_comparisons_csv(const std::string& path) {
    CsvReader reader(path);
    const int c_task = reader.column("task");
    const int c_regime = reader.column("regime");
    const int c_year = reader.column("test_year");
    const int c_n = reader.column("n_effective");
    const int c_stat = reader.column("statistic");
    const int c_p = reader.column("p_value");
    const int c_sig = reader.column("significant");
    std::vector<ComparisonRow> rows;
    std::vector<std::string> f;
    while (reader.next(f)) {
        ComparisonRow r;
        r.task = parse_task(f[static_cast<std::size_t>(c_task)]);
        r.kind = parse_regime(f[static_cast<std::size_t>(c_regime)]);
        r.test_year = static_cast<int>(parse_i64(f[static_cast<std::size_t>(c_year)], reader.where()));
        r.n_effective = static_cast<int>(parse_i64(f[static_cast<std::size_t>(c_n)], reader.where()));
        r.statistic = parse_double(f[static_cast<std::size_t>(c_stat)], reader.where());
        r.p_value = parse_double(f[static_cast<std::size_t>(c_p)], reader.where());
        r.significant = f[static_cast<std::size_t>(c_sig)] == "1";
        r.valid = !std::isnan(r.p_value);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace driftbench
