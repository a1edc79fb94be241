#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "driftbench/cohort.hpp"
#include "driftbench/csv.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/forest.hpp"
#include "driftbench/metrics.hpp"
#include "driftbench/parallel.hpp"
#include "driftbench/pipeline.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

constexpr double kSignificanceThreshold = 0.01;

enum class Task { mortality, los };
enum class Repr { item_id, aggregated };
enum class RegimeKind { year_agnostic, one_time, continuous, short_term };

inline std::string to_string(Task t) { return t == Task::mortality ? "mortality" : "los"; }
inline std::string to_string(Repr r) { return r == Repr::item_id ? "item_id" : "aggregated"; }
inline std::string to_string(RegimeKind k) {
    switch (k) {
        case RegimeKind::year_agnostic: return "year_agnostic";
        case RegimeKind::one_time: return "one_time";
        case RegimeKind::continuous: return "continuous";
        default: return "short_term";
    }
}

inline Task parse_task(const std::string& s) {
    if (s == "mortality") return Task::mortality;
    if (s == "los") return Task::los;
    throw ConfigError("unknown task '" + s + "' (expected mortality or los)");
}

inline Repr parse_repr(const std::string& s) {
    if (s == "item_id") return Repr::item_id;
    if (s == "aggregated") return Repr::aggregated;
    throw ConfigError("unknown representation '" + s + "' (expected item_id or aggregated)");
}

inline RegimeKind parse_regime(const std::string& s) {
    if (s == "year_agnostic") return RegimeKind::year_agnostic;
    if (s == "one_time") return RegimeKind::one_time;
    if (s == "continuous") return RegimeKind::continuous;
    if (s == "short_term") return RegimeKind::short_term;
    throw ConfigError("unknown regime '" + s + "'");
}

inline int label_of(const IcuStay& stay, Task task) {
    return task == Task::mortality ? stay.mortality : (stay.los_days >= kLosThresholdDays ? 1 : 0);
}

struct RegimeSpec {
    RegimeKind kind = RegimeKind::one_time;
    Task task = Task::mortality;
    Repr repr = Repr::item_id;
    int n_repeats = 20;
    double train_fraction = 1.0;
    std::vector<int> train_years;  // one_time only
    std::vector<int> test_years;   // year-specific regimes
    std::optional<std::string> feature;  // ablation: restrict to one concept's itemids
    std::uint64_t master_seed = 0;
};

struct EvalRecord {
    Task task = Task::mortality;
    Repr repr = Repr::item_id;
    RegimeKind kind = RegimeKind::one_time;
    std::string train_years;
    int test_year = 0;  // 0 for the pooled year-agnostic split
    int repeat = 0;
    double train_fraction = 1.0;
    std::string feature;
    double auroc = std::numeric_limits<double>::quiet_NaN();
    double auprc = std::numeric_limits<double>::quiet_NaN();
    std::int64_t n_train = 0;
    std::int64_t n_test = 0;
    std::uint64_t seed = 0;
    std::string status = "ok";
    std::string best_hp;  // in-memory only, not part of the results.csv schema
};

struct ExperimentContext {
    const std::vector<IcuStay>* stays = nullptr;  // filtered cohort
    const EventIndex* events = nullptr;
    const AggregationMap* map = nullptr;
    SearchSpace space;
    int cv_folds = 5;
    int jobs = 1;
};

namespace detail {

// Seed plan. Every record's seed is a pure function of (master_seed, regime,
// task, train_fraction, feature, model year, repeat). The representation is
// deliberately excluded so Item-ID and Aggregated runs share train/test
// partitions and Wilcoxon pairing is meaningful. One-time and year-agnostic
// models are shared across test years, so their model-year tag is 0.
inline std::uint64_t base_seed(const RegimeSpec& spec, int model_year, int repeat) {
    return mix_seed(spec.master_seed, hash_str(to_string(spec.kind)), hash_str(to_string(spec.task)),
                    std::bit_cast<std::uint64_t>(spec.train_fraction),
                    spec.feature ? hash_str(*spec.feature) : 0ULL,
                    static_cast<std::uint64_t>(model_year), static_cast<std::uint64_t>(repeat));
}
inline std::uint64_t split_seed(std::uint64_t base) { return mix_seed(base, 1); }
inline std::uint64_t search_seed(std::uint64_t base) { return mix_seed(base, 2); }
inline std::uint64_t final_seed(std::uint64_t base) { return mix_seed(base, 3); }

inline std::vector<IcuStay> stays_in_years(const std::vector<IcuStay>& stays,
                                           const std::vector<int>& years) {
    const std::set<int> wanted(years.begin(), years.end());
    std::vector<IcuStay> out;
    for (const auto& s : stays)
        if (wanted.count(s.admit_year)) out.push_back(s);
    return out;
}

inline std::string format_years(const std::vector<int>& years) {
    if (years.empty()) return "all";
    std::vector<int> sorted = years;
    std::sort(sorted.begin(), sorted.end());
    bool contiguous = true;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] != sorted[i - 1] + 1) contiguous = false;
    if (sorted.size() == 1) return std::to_string(sorted[0]);
    if (contiguous) return std::to_string(sorted.front()) + "-" + std::to_string(sorted.back());
    std::string s;
    for (std::size_t i = 0; i < sorted.size(); ++i) s += (i ? ";" : "") + std::to_string(sorted[i]);
    return s;
}

// Deterministic per-class shuffle, then per-class floor(fraction * n) keep.
// Selected stays come back in their original order.
inline std::vector<IcuStay> stratified_subsample(const std::vector<IcuStay>& stays, Task task,
                                                 double fraction, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < stays.size(); ++i)
        (label_of(stays[i], task) ? pos : neg).push_back(i);
    Rng rng(seed);
    auto pick = [&](std::vector<std::size_t>& idx) {
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        idx.resize(static_cast<std::size_t>(
            std::floor(fraction * static_cast<double>(idx.size()))));
    };
    pick(pos);
    pick(neg);
    std::vector<std::size_t> keep;
    keep.insert(keep.end(), pos.begin(), pos.end());
    keep.insert(keep.end(), neg.begin(), neg.end());
    std::sort(keep.begin(), keep.end());
    std::vector<IcuStay> out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(stays[i]);
    return out;
}

// Stratified 80/20-style split; both halves keep original stay order.
inline std::pair<std::vector<IcuStay>, std::vector<IcuStay>> stratified_split(
    const std::vector<IcuStay>& stays, Task task, double train_share, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < stays.size(); ++i)
        (label_of(stays[i], task) ? pos : neg).push_back(i);
    Rng rng(seed);
    std::vector<std::size_t> train_idx, test_idx;
    auto deal = [&](std::vector<std::size_t>& idx) {
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
        const auto n_train = static_cast<std::size_t>(
            std::floor(train_share * static_cast<double>(idx.size())));
        train_idx.insert(train_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        test_idx.insert(test_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    };
    deal(pos);
    deal(neg);
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());
    std::pair<std::vector<IcuStay>, std::vector<IcuStay>> out;
    for (auto i : train_idx) out.first.push_back(stays[i]);
    for (auto i : test_idx) out.second.push_back(stays[i]);
    return out;
}

struct TestSet {
    int year = 0;
    const std::vector<IcuStay>* stays = nullptr;
};

// Train one model (hyperparameter search included) and evaluate it on each
// test set. Failures are recorded per record, never thrown: year-sliced
// training pools can be tiny and skewed, and the grid must keep going.
inline std::vector<EvalRecord> run_model_unit(const ExperimentContext& ctx, const RegimeSpec& spec,
                                              const std::vector<IcuStay>& train_stays,
                                              const std::vector<TestSet>& tests,
                                              std::uint64_t base, int repeat,
                                              const std::string& train_years_str) {
    EvalRecord proto;
    proto.task = spec.task;
    proto.repr = spec.repr;
    proto.kind = spec.kind;
    proto.train_years = train_years_str;
    proto.repeat = repeat;
    proto.train_fraction = spec.train_fraction;
    proto.feature = spec.feature.value_or("");
    proto.seed = base;
    proto.n_train = static_cast<std::int64_t>(train_stays.size());

    auto emit_all = [&](const std::string& status) {
        std::vector<EvalRecord> out;
        for (const auto& t : tests) {
            EvalRecord r = proto;
            r.test_year = t.year;
            r.n_test = static_cast<std::int64_t>(t.stays->size());
            r.status = status;
            out.push_back(std::move(r));
        }
        return out;
    };

    if (train_stays.empty()) throw RegimeError("empty training pool for " + to_string(spec.kind));

    // Column universe and fill statistics come from training rows only.
    std::vector<ChartEvent> train_events;
    for (const auto& s : train_stays) {
        const auto span = ctx.events->for_stay(s.stay_id);
        train_events.insert(train_events.end(), span.begin(), span.end());
    }
    ColumnUniverse universe;
    if (spec.repr == Repr::aggregated) {
        universe = aggregated_universe(*ctx.map);
    } else if (spec.feature) {
        const auto* entry = ctx.map->find(*spec.feature);
        if (!entry) throw RegimeError("ablation concept '" + *spec.feature + "' not in the aggregation map");
        universe = itemid_universe(train_events, entry->itemids);
    } else {
        universe = itemid_universe(train_events);
    }

    std::vector<HourlyGrid> train_grids;
    train_grids.reserve(train_stays.size());
    for (const auto& s : train_stays)
        train_grids.push_back(bucket_hourly(ctx.events->for_stay(s.stay_id), s, universe));
    const FillStats fill = compute_fill_stats(train_grids, universe);
    const FeatureMatrix train = build_matrix(train_stays, *ctx.events, universe, fill);

    const auto& y = spec.task == Task::mortality ? train.mortality : train.los;
    std::int64_t n_pos = 0;
    for (auto v : y) n_pos += (v != 0);
    const std::int64_t n_neg = static_cast<std::int64_t>(y.size()) - n_pos;

    std::string status = "ok";
    HyperParams hp;
    if (train_stays.size() < 10) status = "degenerate:small_pool";
    if (n_pos == 0 || n_neg == 0) status = "degenerate:single_class";

    if (status == "ok" && std::min(n_pos, n_neg) >= ctx.cv_folds) {
        try {
            const auto search = random_search(train.X, y, ctx.space, ctx.cv_folds, search_seed(base));
            hp = search.best;
        } catch (const Error& e) {
            return emit_all(std::string("error:search:") + e.what());
        }
    } else if (status == "ok") {
        // Too skewed for stratified CV; fall back to the first candidate of
        // each list and mark the records.
        status = "degenerate:cv_infeasible";
    }
    if (status != "ok") {
        hp.n_trees = ctx.space.n_trees.front();
        hp.max_depth = ctx.space.max_depth.front();
        hp.min_samples_leaf = ctx.space.min_samples_leaf.front();
        hp.max_features_fraction = ctx.space.max_features_fraction.front();
        hp.bootstrap = ctx.space.bootstrap.front() != 0;
    }

    ForestModel model;
    try {
        model = fit_forest(train.X, y, hp, final_seed(base));
    } catch (const Error& e) {
        return emit_all(std::string("error:fit:") + e.what());
    }
    if (model.degenerate && status == "ok") status = "degenerate:single_class";
    proto.best_hp = hp.to_string();
    proto.status = status;

    std::vector<EvalRecord> out;
    for (const auto& t : tests) {
        EvalRecord r = proto;
        r.test_year = t.year;
        r.n_test = static_cast<std::int64_t>(t.stays->size());
        try {
            const FeatureMatrix test = build_matrix(*t.stays, *ctx.events, universe, fill);
            check_column_alignment(train, test);
            const auto scores = predict_proba(model, test.X);
            const auto& yt = spec.task == Task::mortality ? test.mortality : test.los;
            std::vector<int> yi(yt.begin(), yt.end());
            r.auroc = auroc(scores, yi);
            r.auprc = auprc(scores, yi);
        } catch (const Error& e) {
            r.status = std::string("error:eval:") + e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace detail

// Year-agnostic baseline: per repeat, a stratified 80/20 split of all years
// pooled; the 80% drives fill stats, the column universe, and model
// selection; the 20% is scored once.
inline std::vector<EvalRecord> run_year_agnostic(const ExperimentContext& ctx, RegimeSpec spec) {
    spec.kind = RegimeKind::year_agnostic;
    std::vector<std::vector<EvalRecord>> per_repeat(static_cast<std::size_t>(spec.n_repeats));
    parallel_for(spec.n_repeats, ctx.jobs, [&](std::int64_t r) {
        const std::uint64_t base = detail::base_seed(spec, 0, static_cast<int>(r));
        const auto [train, test] =
            detail::stratified_split(*ctx.stays, spec.task, 0.8, detail::split_seed(base));
        std::vector<detail::TestSet> tests{{0, &test}};
        per_repeat[static_cast<std::size_t>(r)] =
            detail::run_model_unit(ctx, spec, train, tests, base, static_cast<int>(r), "all");
    });
    std::vector<EvalRecord> records;
    for (auto& v : per_repeat) records.insert(records.end(), v.begin(), v.end());
    return records;
}

// One-time training: one model per repeat, trained on the fixed early years
// (subsampled to train_fraction, stratified), evaluated on every test year.
inline std::vector<EvalRecord> run_one_time(const ExperimentContext& ctx, RegimeSpec spec) {
    spec.kind = RegimeKind::one_time;
    if (spec.train_years.empty()) throw RegimeError("one_time: train_years must be non-empty");
    for (int ty : spec.test_years)
        for (int tr : spec.train_years)
            if (tr >= ty)
                throw RegimeError("one_time: train year " + std::to_string(tr) +
                                  " does not precede test year " + std::to_string(ty));
    const auto pool = detail::stays_in_years(*ctx.stays, spec.train_years);
    if (pool.empty()) throw RegimeError("one_time: no stays in the training years");
    std::vector<std::vector<IcuStay>> test_stays;
    for (int y : spec.test_years) test_stays.push_back(detail::stays_in_years(*ctx.stays, {y}));
    const std::string years_str = detail::format_years(spec.train_years);

    std::vector<std::vector<EvalRecord>> per_repeat(static_cast<std::size_t>(spec.n_repeats));
    parallel_for(spec.n_repeats, ctx.jobs, [&](std::int64_t r) {
        const std::uint64_t base = detail::base_seed(spec, 0, static_cast<int>(r));
        std::vector<IcuStay> train = pool;
        if (spec.train_fraction < 1.0)
            train = detail::stratified_subsample(pool, spec.task, spec.train_fraction,
                                                 detail::split_seed(base));
        if (train.empty()) throw RegimeError("one_time: training pool empty after subsampling");
        std::vector<detail::TestSet> tests;
        for (std::size_t i = 0; i < spec.test_years.size(); ++i)
            tests.push_back({spec.test_years[i], &test_stays[i]});
        per_repeat[static_cast<std::size_t>(r)] =
            detail::run_model_unit(ctx, spec, train, tests, base, static_cast<int>(r), years_str);
    });
    std::vector<EvalRecord> records;
    for (auto& v : per_repeat) records.insert(records.end(), v.begin(), v.end());
    return records;
}

namespace detail {

// Shared driver for the continuous / short-term regimes: one model per
// (test year, repeat), training pool chosen by `pool_years`.
template <typename PoolYears>
inline std::vector<EvalRecord> run_year_specific(const ExperimentContext& ctx, const RegimeSpec& spec,
                                                 PoolYears pool_years) {
    if (spec.test_years.empty()) throw RegimeError(to_string(spec.kind) + ": test_years must be non-empty");
    struct Unit {
        int year;
        int repeat;
    };
    std::vector<Unit> units;
    std::vector<std::vector<IcuStay>> pools, tests;
    std::vector<std::string> pool_strs;
    for (int y : spec.test_years) {
        const auto years = pool_years(y);
        auto pool = stays_in_years(*ctx.stays, years);
        if (pool.empty())
            throw RegimeError(to_string(spec.kind) + ": no training data before test year " +
                              std::to_string(y));
        pools.push_back(std::move(pool));
        tests.push_back(stays_in_years(*ctx.stays, {y}));
        pool_strs.push_back(format_years(years));
    }
    for (std::size_t yi = 0; yi < spec.test_years.size(); ++yi)
        for (int r = 0; r < spec.n_repeats; ++r)
            units.push_back({static_cast<int>(yi), r});

    std::vector<std::vector<EvalRecord>> per_unit(units.size());
    parallel_for(static_cast<std::int64_t>(units.size()), ctx.jobs, [&](std::int64_t u) {
        const Unit unit = units[static_cast<std::size_t>(u)];
        const int year = spec.test_years[static_cast<std::size_t>(unit.year)];
        const std::uint64_t base = base_seed(spec, year, unit.repeat);
        std::vector<IcuStay> train = pools[static_cast<std::size_t>(unit.year)];
        if (spec.train_fraction < 1.0)
            train = stratified_subsample(train, spec.task, spec.train_fraction, split_seed(base));
        std::vector<TestSet> ts{{year, &tests[static_cast<std::size_t>(unit.year)]}};
        per_unit[static_cast<std::size_t>(u)] = run_model_unit(
            ctx, spec, train, ts, base, unit.repeat, pool_strs[static_cast<std::size_t>(unit.year)]);
    });
    std::vector<EvalRecord> records;
    for (auto& v : per_unit) records.insert(records.end(), v.begin(), v.end());
    return records;
}

}  // namespace detail

// Continuous training: all prior years train the model tested on year Y, so
// the column universe absorbs post-changeover itemids once they are seen.
inline std::vector<EvalRecord> run_continuous(const ExperimentContext& ctx, RegimeSpec spec) {
    spec.kind = RegimeKind::continuous;
    int first_year = std::numeric_limits<int>::max();
    for (const auto& s : *ctx.stays) first_year = std::min(first_year, s.admit_year);
    return detail::run_year_specific(ctx, spec, [&](int y) {
        std::vector<int> years;
        for (int t = first_year; t < y; ++t) years.push_back(t);
        return years;
    });
}

// Short-term training: only the single previous year.
inline std::vector<EvalRecord> run_short_term(const ExperimentContext& ctx, RegimeSpec spec) {
    spec.kind = RegimeKind::short_term;
    return detail::run_year_specific(ctx, spec, [](int y) { return std::vector<int>{y - 1}; });
}

// Saturation sweep: the one-time regime repeated per training fraction.
inline std::vector<EvalRecord> run_saturation(const ExperimentContext& ctx, RegimeSpec spec,
                                              const std::vector<double>& fractions) {
    std::vector<EvalRecord> records;
    for (double f : fractions) {
        if (f <= 0.0 || f > 1.0)
            throw RegimeError("saturation fraction " + fmt_double(f) + " outside (0,1]");
        RegimeSpec s = spec;
        s.train_fraction = f;
        auto part = run_one_time(ctx, s);
        records.insert(records.end(), part.begin(), part.end());
    }
    return records;
}

// Single-feature ablation: Item-ID matrices restricted to one concept's
// itemids, one-time regime.
inline std::vector<EvalRecord> run_ablation(const ExperimentContext& ctx, RegimeSpec spec,
                                            const std::vector<std::string>& concepts) {
    std::vector<EvalRecord> records;
    for (const auto& name : concepts) {
        if (!ctx.map->find(name))
            throw RegimeError("ablation concept '" + name + "' not in the aggregation map");
        RegimeSpec s = spec;
        s.repr = Repr::item_id;
        s.feature = name;
        auto part = run_one_time(ctx, s);
        records.insert(records.end(), part.begin(), part.end());
    }
    return records;
}

// ---------------------------------------------------------------------------
// Representation comparison (Item-ID vs Aggregated), paired per
// (test_year, repeat).

struct ComparisonRow {
    Task task = Task::mortality;
    RegimeKind kind = RegimeKind::one_time;
    int test_year = 0;
    int n_effective = 0;
    double statistic = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();
    bool significant = false;
    bool valid = false;
    std::string note;
};

inline std::vector<ComparisonRow> compare(const std::vector<EvalRecord>& a,
                                          const std::vector<EvalRecord>& b) {
    auto group = [](const std::vector<EvalRecord>& records) {
        std::map<int, std::map<int, double>> by_year;  // year -> repeat -> auroc
        for (const auto& r : records) by_year[r.test_year][r.repeat] = r.auroc;
        return by_year;
    };
    const auto ga = group(a);
    const auto gb = group(b);
    std::set<int> years;
    for (const auto& [y, _] : ga) years.insert(y);
    for (const auto& [y, _] : gb) years.insert(y);

    std::vector<ComparisonRow> rows;
    for (int y : years) {
        const auto ia = ga.find(y);
        const auto ib = gb.find(y);
        if (ia == ga.end() || ib == gb.end() || ia->second.size() != ib->second.size())
            throw RegimeError("compare: record sets do not share test year " + std::to_string(y));
        std::vector<double> va, vb;
        for (const auto& [rep, auc] : ia->second) {
            const auto jt = ib->second.find(rep);
            if (jt == ib->second.end())
                throw RegimeError("compare: unpaired repeat " + std::to_string(rep) + " at year " +
                                  std::to_string(y));
            if (std::isnan(auc) || std::isnan(jt->second)) continue;  // error records drop the pair
            va.push_back(auc);
            vb.push_back(jt->second);
        }
        ComparisonRow row;
        row.kind = a.empty() ? RegimeKind::one_time : a.front().kind;
        row.task = a.empty() ? Task::mortality : a.front().task;
        row.test_year = y;
        try {
            const auto res = wilcoxon_signed_rank(va, vb);
            row.n_effective = res.n_effective;
            row.statistic = res.statistic;
            row.p_value = res.p_value;
            row.significant = res.p_value < kSignificanceThreshold;
            row.valid = true;
        } catch (const MetricError& e) {
            row.note = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// results.csv / comparisons.csv

inline void sort_records(std::vector<EvalRecord>& records) {
    std::sort(records.begin(), records.end(), [](const EvalRecord& x, const EvalRecord& y) {
        const auto kx = std::make_tuple(to_string(x.task), to_string(x.repr), to_string(x.kind),
                                        x.feature, x.train_fraction, x.test_year, x.repeat);
        const auto ky = std::make_tuple(to_string(y.task), to_string(y.repr), to_string(y.kind),
                                        y.feature, y.train_fraction, y.test_year, y.repeat);
        return kx < ky;
    });
}

inline void write_results_csv(std::vector<EvalRecord> records, const std::string& path) {
    sort_records(records);
    CsvWriter w(path);
    w.row({"task", "representation", "regime", "train_years", "test_year", "repeat",
           "train_fraction", "feature", "auroc", "auprc", "n_train", "n_test", "seed", "status"});
    for (const auto& r : records)
        w.row({to_string(r.task), to_string(r.repr), to_string(r.kind), r.train_years,
               std::to_string(r.test_year), std::to_string(r.repeat), fmt_double(r.train_fraction),
               r.feature, fmt_double(r.auroc), fmt_double(r.auprc), std::to_string(r.n_train),
               std::to_string(r.n_test), std::to_string(r.seed), r.status});
    w.close();
}

inline std::vector<EvalRecord> read_results_csv(const std::string& path) {
    CsvReader reader(path);
    const int c_task = reader.column("task");
    const int c_repr = reader.column("representation");
    const int c_regime = reader.column("regime");
    const int c_train_years = reader.column("train_years");
    const int c_year = reader.column("test_year");
    const int c_repeat = reader.column("repeat");
    const int c_fraction = reader.column("train_fraction");
    const int c_feature = reader.column("feature");
    const int c_auroc = reader.column("auroc");
    const int c_auprc = reader.column("auprc");
    const int c_ntrain = reader.column("n_train");
    const int c_ntest = reader.column("n_test");
    const int c_seed = reader.column("seed");
    const int c_status = reader.column("status");
    std::vector<EvalRecord> records;
    std::vector<std::string> f;
    while (reader.next(f)) {
        EvalRecord r;
        r.task = parse_task(f[static_cast<std::size_t>(c_task)]);
        r.repr = parse_repr(f[static_cast<std::size_t>(c_repr)]);
        r.kind = parse_regime(f[static_cast<std::size_t>(c_regime)]);
        r.train_years = f[static_cast<std::size_t>(c_train_years)];
        r.test_year = static_cast<int>(parse_i64(f[static_cast<std::size_t>(c_year)], reader.where()));
        r.repeat = static_cast<int>(parse_i64(f[static_cast<std::size_t>(c_repeat)], reader.where()));
        r.train_fraction = parse_double(f[static_cast<std::size_t>(c_fraction)], reader.where());
        r.feature = f[static_cast<std::size_t>(c_feature)];
        r.auroc = parse_double(f[static_cast<std::size_t>(c_auroc)], reader.where());
        r.auprc = parse_double(f[static_cast<std::size_t>(c_auprc)], reader.where());
        r.n_train = parse_i64(f[static_cast<std::size_t>(c_ntrain)], reader.where());
        r.n_test = parse_i64(f[static_cast<std::size_t>(c_ntest)], reader.where());
        r.seed = parse_u64(f[static_cast<std::size_t>(c_seed)], reader.where());
        r.status = f[static_cast<std::size_t>(c_status)];
        records.push_back(std::move(r));
    }
    return records;
}

inline void write_comparisons_csv(std::vector<ComparisonRow> rows, const std::string& path) {
    std::sort(rows.begin(), rows.end(), [](const ComparisonRow& x, const ComparisonRow& y) {
        return std::make_tuple(to_string(x.task), to_string(x.kind), x.test_year) <
               std::make_tuple(to_string(y.task), to_string(y.kind), y.test_year);
    });
    CsvWriter w(path);
    w.row({"task", "regime", "test_year", "n_effective", "statistic", "p_value", "significant"});
    for (const auto& r : rows)
        w.row({to_string(r.task), to_string(r.kind), std::to_string(r.test_year),
               std::to_string(r.n_effective), fmt_double(r.statistic), fmt_double(r.p_value),
               r.significant ? "1" : "0"});
    w.close();
}

}  // namespace driftbench
