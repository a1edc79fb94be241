#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftbench/cohort.hpp"
#include "driftbench/csv.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/matrix.hpp"

namespace driftbench {

constexpr int kWindowHours = 24;
constexpr double kLosThresholdDays = 3.0;

// The set of grid columns for one experiment, with the itemid -> column
// resolution rule baked in. For the Item-ID representation each trained
// itemid is its own column; for the Clinically Aggregated representation all
// member itemids of a concept share one column. Events whose itemid resolves
// to no column are dropped (and counted by the callers).
struct ColumnUniverse {
    enum class Kind { item_id, aggregated } kind = Kind::item_id;
    std::vector<std::string> keys;  // ordered column keys
    std::unordered_map<std::int64_t, std::int32_t> column_of_itemid;

    std::int64_t size() const { return static_cast<std::int64_t>(keys.size()); }

    std::int32_t resolve(std::int64_t itemid) const {
        auto it = column_of_itemid.find(itemid);
        return it == column_of_itemid.end() ? -1 : it->second;
    }
};

// Item-ID universe: the distinct itemids observed in the given (training)
// events, numerically ascending. Fixing this from training data is what
// makes a vocabulary changeover invisible to an already-trained model.
inline ColumnUniverse itemid_universe(std::span<const ChartEvent> events) {
    std::set<std::int64_t> ids;
    for (const auto& e : events) ids.insert(e.itemid);
    ColumnUniverse u;
    u.kind = ColumnUniverse::Kind::item_id;
    for (auto id : ids) {
        u.column_of_itemid.emplace(id, static_cast<std::int32_t>(u.keys.size()));
        u.keys.push_back(std::to_string(id));
    }
    return u;
}

// Item-ID universe restricted to an allowed itemid set (feature ablations).
inline ColumnUniverse itemid_universe(std::span<const ChartEvent> events,
                                      const std::vector<std::int64_t>& allowed) {
    std::set<std::int64_t> allowed_set(allowed.begin(), allowed.end());
    std::set<std::int64_t> ids;
    for (const auto& e : events)
        if (allowed_set.count(e.itemid)) ids.insert(e.itemid);
    ColumnUniverse u;
    u.kind = ColumnUniverse::Kind::item_id;
    for (auto id : ids) {
        u.column_of_itemid.emplace(id, static_cast<std::int32_t>(u.keys.size()));
        u.keys.push_back(std::to_string(id));
    }
    return u;
}

inline ColumnUniverse aggregated_universe(const AggregationMap& map) {
    ColumnUniverse u;
    u.kind = ColumnUniverse::Kind::aggregated;
    std::vector<const AggregationMap::Entry*> sorted;
    for (const auto& e : map.entries) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->concept_name < b->concept_name; });
    for (const auto* e : sorted) {
        const auto col = static_cast<std::int32_t>(u.keys.size());
        u.keys.push_back(e->concept_name);
        for (auto id : e->itemids) u.column_of_itemid.emplace(id, col);
    }
    return u;
}

// 24 x |columns| grid of hourly means; mask marks observed cells.
struct HourlyGrid {
    std::int64_t stay_id = 0;
    std::int64_t n_columns = 0;
    std::vector<double> values;        // 24 * n_columns, hour-major
    std::vector<std::uint8_t> mask;
    std::int64_t dropped_events = 0;   // itemids outside the universe

    double& value_at(int hour, std::int64_t col) { return values[static_cast<std::size_t>(hour * n_columns + col)]; }
    double value_at(int hour, std::int64_t col) const { return values[static_cast<std::size_t>(hour * n_columns + col)]; }
    bool observed(int hour, std::int64_t col) const { return mask[static_cast<std::size_t>(hour * n_columns + col)] != 0; }
};

// Hourly bucketing by averaging. Values landing in one cell are summed in
// ascending value order, so the result is invariant to event order and to
// any relabeling of itemids within a column.
inline HourlyGrid bucket_hourly(std::span<const ChartEvent> events, const IcuStay& stay,
                                const ColumnUniverse& universe) {
    HourlyGrid grid;
    grid.stay_id = stay.stay_id;
    grid.n_columns = universe.size();
    grid.values.assign(static_cast<std::size_t>(kWindowHours * grid.n_columns), 0.0);
    grid.mask.assign(static_cast<std::size_t>(kWindowHours * grid.n_columns), 0);

    std::vector<std::pair<std::int64_t, double>> cells;  // (cell index, value)
    cells.reserve(events.size());
    for (const auto& e : events) {
        if (e.stay_id != stay.stay_id)
            throw PipelineError("bucket_hourly: event stay_id " + std::to_string(e.stay_id) +
                                " does not belong to stay " + std::to_string(stay.stay_id));
        if (e.hour < 0 || e.hour >= kWindowHours)
            throw PipelineError("bucket_hourly: event hour " + std::to_string(e.hour) +
                                " outside [0,24)");
        const std::int32_t col = universe.resolve(e.itemid);
        if (col < 0) {
            ++grid.dropped_events;
            continue;
        }
        cells.emplace_back(static_cast<std::int64_t>(e.hour) * grid.n_columns + col, e.value);
    }
    std::sort(cells.begin(), cells.end());

    std::size_t i = 0;
    while (i < cells.size()) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < cells.size() && cells[j].first == cells[i].first) sum += cells[j++].second;
        grid.values[static_cast<std::size_t>(cells[i].first)] = sum / static_cast<double>(j - i);
        grid.mask[static_cast<std::size_t>(cells[i].first)] = 1;
        i = j;
    }
    return grid;
}

// Per-column fill defaults for hours before the first observation: the
// training-set mean of observed cells, 0 for never-observed columns.
struct FillStats {
    std::vector<double> fill;  // aligned with the universe columns

    double for_column(std::int64_t col, const ColumnUniverse& universe) const {
        if (col < 0 || static_cast<std::size_t>(col) >= fill.size())
            throw PipelineError("fill stats missing for column '" +
                                (col >= 0 && col < universe.size() ? universe.keys[static_cast<std::size_t>(col)]
                                                                   : std::to_string(col)) +
                                "'");
        return fill[static_cast<std::size_t>(col)];
    }
};

inline FillStats compute_fill_stats(std::span<const HourlyGrid> training_grids,
                                    const ColumnUniverse& universe) {
    if (training_grids.empty())
        throw PipelineError("compute_fill_stats: need at least one training grid");
    const std::int64_t cols = universe.size();
    std::vector<double> sum(static_cast<std::size_t>(cols), 0.0);
    std::vector<std::int64_t> count(static_cast<std::size_t>(cols), 0);
    for (const auto& g : training_grids) {
        if (g.n_columns != cols)
            throw PipelineError("compute_fill_stats: grid width mismatch");
        for (int h = 0; h < kWindowHours; ++h)
            for (std::int64_t c = 0; c < cols; ++c)
                if (g.observed(h, c)) {
                    sum[static_cast<std::size_t>(c)] += g.value_at(h, c);
                    ++count[static_cast<std::size_t>(c)];
                }
    }
    FillStats stats;
    stats.fill.resize(static_cast<std::size_t>(cols), 0.0);
    for (std::int64_t c = 0; c < cols; ++c)
        if (count[static_cast<std::size_t>(c)] > 0)
            stats.fill[static_cast<std::size_t>(c)] =
                sum[static_cast<std::size_t>(c)] / static_cast<double>(count[static_cast<std::size_t>(c)]);
    return stats;
}

// The three simple-imputation channels for one grid column, in hour order.
struct ImputedColumn {
    double value[kWindowHours];
    double mask[kWindowHours];
    double delta[kWindowHours];  // hours since last observation; t+1 before the first
};

inline ImputedColumn impute_column(const HourlyGrid& grid, std::int64_t col, double fill_default) {
    ImputedColumn out{};
    double last_value = fill_default;
    int last_hour = -1;  // admission reference point
    bool seen = false;
    for (int t = 0; t < kWindowHours; ++t) {
        if (grid.observed(t, col)) {
            seen = true;
            last_value = grid.value_at(t, col);
            last_hour = t;
            out.value[t] = last_value;
            out.mask[t] = 1.0;
            out.delta[t] = 0.0;
        } else {
            out.value[t] = seen ? last_value : fill_default;
            out.mask[t] = 0.0;
            out.delta[t] = static_cast<double>(t - last_hour);
        }
    }
    return out;
}

struct FeatureMatrix {
    Matrix X;
    std::vector<std::string> column_names;
    std::vector<std::int8_t> mortality;
    std::vector<std::int8_t> los;
    std::vector<std::int64_t> stay_ids;
    std::int64_t dropped_events = 0;
};

// One row per stay: for each universe column, 24 hours x (value, mask,
// delta), then age. Labels: mortality as generated; los = los_days >= 3.
inline FeatureMatrix build_matrix(const std::vector<IcuStay>& stays, const EventIndex& events,
                                  const ColumnUniverse& universe, const FillStats& fill) {
    const std::int64_t cols = universe.size();
    if (static_cast<std::int64_t>(fill.fill.size()) != cols)
        throw PipelineError("build_matrix: fill stats cover " + std::to_string(fill.fill.size()) +
                            " columns, universe has " + std::to_string(cols));
    const std::int64_t width = cols * kWindowHours * 3 + 1;

    FeatureMatrix fm;
    fm.X = Matrix(static_cast<std::int64_t>(stays.size()), width);
    fm.column_names.reserve(static_cast<std::size_t>(width));
    for (std::int64_t c = 0; c < cols; ++c) {
        const std::string& key = universe.keys[static_cast<std::size_t>(c)];
        for (int h = 0; h < kWindowHours; ++h) {
            fm.column_names.push_back(key + "_h" + std::to_string(h) + "_value");
            fm.column_names.push_back(key + "_h" + std::to_string(h) + "_mask");
            fm.column_names.push_back(key + "_h" + std::to_string(h) + "_delta");
        }
    }
    fm.column_names.push_back("age");

    for (std::size_t r = 0; r < stays.size(); ++r) {
        const IcuStay& stay = stays[r];
        const HourlyGrid grid = bucket_hourly(events.for_stay(stay.stay_id), stay, universe);
        fm.dropped_events += grid.dropped_events;
        auto row = fm.X.row(static_cast<std::int64_t>(r));
        std::size_t o = 0;
        for (std::int64_t c = 0; c < cols; ++c) {
            const ImputedColumn ic = impute_column(grid, c, fill.for_column(c, universe));
            for (int h = 0; h < kWindowHours; ++h) {
                row[o++] = ic.value[h];
                row[o++] = ic.mask[h];
                row[o++] = ic.delta[h];
            }
        }
        row[o++] = static_cast<double>(stay.age);
        fm.mortality.push_back(static_cast<std::int8_t>(stay.mortality));
        fm.los.push_back(stay.los_days >= kLosThresholdDays ? 1 : 0);
        fm.stay_ids.push_back(stay.stay_id);
    }
    return fm;
}

// Train/test matrices of one experiment must agree column-for-column.
inline void check_column_alignment(const FeatureMatrix& train, const FeatureMatrix& test) {
    if (train.column_names != test.column_names)
        throw PipelineError("train and test feature matrices have diverging column universes");
}

inline void write_matrix_csv(const FeatureMatrix& fm, const std::string& path) {
    CsvWriter w(path);
    std::vector<std::string> header{"stay_id"};
    header.insert(header.end(), fm.column_names.begin(), fm.column_names.end());
    header.push_back("mortality");
    header.push_back("los");
    w.row(header);
    for (std::int64_t r = 0; r < fm.X.rows; ++r) {
        std::vector<std::string> fields;
        fields.reserve(static_cast<std::size_t>(fm.X.cols) + 3);
        fields.push_back(std::to_string(fm.stay_ids[static_cast<std::size_t>(r)]));
        for (double v : fm.X.row(r)) fields.push_back(fmt_double(v));
        fields.push_back(std::to_string(static_cast<int>(fm.mortality[static_cast<std::size_t>(r)])));
        fields.push_back(std::to_string(static_cast<int>(fm.los[static_cast<std::size_t>(r)])));
        w.row(fields);
    }
    w.close();
}

}  // namespace driftbench
