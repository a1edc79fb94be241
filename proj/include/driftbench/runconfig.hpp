#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "driftbench/cohort.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/kvconfig.hpp"
#include "driftbench/pipeline.hpp"
#include "driftbench/regimes.hpp"
#include "driftbench/synth.hpp"

namespace driftbench {

struct RegimeParams {
    bool enabled = true;
    std::vector<int> train_years;  // one_time only; defaults to the first two cohort years
    std::vector<int> test_years;
    int n_repeats = 20;
};

struct RunConfig {
    // [cohort]
    enum class Source { synthetic, csv } source = Source::synthetic;
    std::string synth_config_path;
    std::string stays_path, events_path, map_path;

    // [experiment]
    std::vector<Task> tasks{Task::mortality, Task::los};
    std::vector<Repr> representations{Repr::item_id, Repr::aggregated};
    std::uint64_t master_seed = 42;
    int jobs = 1;

    RegimeParams year_agnostic, one_time, continuous, short_term;

    // [saturation] (disabled unless the section is present)
    bool saturation_enabled = false;
    std::vector<double> saturation_fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<Repr> saturation_representations{Repr::aggregated};
    Task saturation_task = Task::mortality;
    int saturation_repeats = 20;

    // [ablation] (disabled unless the section is present)
    bool ablation_enabled = false;
    std::vector<std::string> ablation_concepts;
    Task ablation_task = Task::mortality;
    int ablation_repeats = 5;

    SearchSpace space;

    // [output]
    bool dump_features = false;
};

namespace detail {

inline std::string resolve_path(const std::string& base_dir, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

inline void parse_regime_section(const KvSection& sec, RegimeParams& out) {
    out.enabled = sec.get_bool("enabled", true);
    if (sec.has("train_years")) out.train_years = sec.get_year_list("train_years");
    if (sec.has("test_years")) out.test_years = sec.get_year_list("test_years");
    out.n_repeats = static_cast<int>(sec.get_i64("n_repeats", out.n_repeats));
    if (out.n_repeats < 1) throw ConfigError("n_repeats must be positive (" + sec.where("n_repeats") + ")");
}

}  // namespace detail

inline RunConfig parse_run_config(const std::vector<KvSection>& sections, const std::string& origin,
                                  const std::string& base_dir) {
    RunConfig cfg;
    bool saw_cohort = false;
    for (const auto& sec : sections) {
        if (sec.name == "cohort") {
            saw_cohort = true;
            const std::string source = sec.get_str("source", "synthetic");
            if (source == "synthetic") {
                cfg.source = RunConfig::Source::synthetic;
                cfg.synth_config_path = detail::resolve_path(base_dir, sec.get_str("synth_config"));
            } else if (source == "csv") {
                cfg.source = RunConfig::Source::csv;
                cfg.stays_path = detail::resolve_path(base_dir, sec.get_str("stays"));
                cfg.events_path = detail::resolve_path(base_dir, sec.get_str("events"));
            } else {
                throw ConfigError(origin + ": cohort source must be 'synthetic' or 'csv', got '" +
                                  source + "'");
            }
            if (sec.has("map")) cfg.map_path = detail::resolve_path(base_dir, sec.get_str("map"));
        } else if (sec.name == "experiment") {
            if (sec.has("tasks")) {
                cfg.tasks.clear();
                for (const auto& t : sec.get_list("tasks")) cfg.tasks.push_back(parse_task(t));
            }
            if (sec.has("representations")) {
                cfg.representations.clear();
                for (const auto& r : sec.get_list("representations"))
                    cfg.representations.push_back(parse_repr(r));
            }
            cfg.master_seed = sec.get_u64("master_seed", cfg.master_seed);
            cfg.jobs = static_cast<int>(sec.get_i64("jobs", cfg.jobs));
        } else if (sec.name == "regime") {
            if (sec.arg == "year_agnostic")
                detail::parse_regime_section(sec, cfg.year_agnostic);
            else if (sec.arg == "one_time")
                detail::parse_regime_section(sec, cfg.one_time);
            else if (sec.arg == "continuous")
                detail::parse_regime_section(sec, cfg.continuous);
            else if (sec.arg == "short_term")
                detail::parse_regime_section(sec, cfg.short_term);
            else
                throw ConfigError(origin + ": unknown regime section [regime " + sec.arg + "]");
        } else if (sec.name == "saturation") {
            cfg.saturation_enabled = sec.get_bool("enabled", true);
            if (sec.has("fractions")) cfg.saturation_fractions = sec.get_double_list("fractions");
            if (sec.has("task")) cfg.saturation_task = parse_task(sec.get_str("task"));
            if (sec.has("representations")) {
                cfg.saturation_representations.clear();
                for (const auto& r : sec.get_list("representations"))
                    cfg.saturation_representations.push_back(parse_repr(r));
            }
            cfg.saturation_repeats = static_cast<int>(sec.get_i64("n_repeats", cfg.saturation_repeats));
        } else if (sec.name == "ablation") {
            cfg.ablation_enabled = sec.get_bool("enabled", true);
            cfg.ablation_concepts = sec.get_list("concepts");
            if (sec.has("task")) cfg.ablation_task = parse_task(sec.get_str("task"));
            cfg.ablation_repeats = static_cast<int>(sec.get_i64("n_repeats", cfg.ablation_repeats));
        } else if (sec.name == "search") {
            if (sec.has("n_trees")) {
                cfg.space.n_trees.clear();
                for (auto v : sec.get_i64_list("n_trees")) cfg.space.n_trees.push_back(static_cast<int>(v));
            }
            if (sec.has("max_depth")) {
                cfg.space.max_depth.clear();
                for (auto v : sec.get_i64_list("max_depth"))
                    cfg.space.max_depth.push_back(static_cast<int>(v));
            }
            if (sec.has("min_samples_leaf")) {
                cfg.space.min_samples_leaf.clear();
                for (auto v : sec.get_i64_list("min_samples_leaf"))
                    cfg.space.min_samples_leaf.push_back(static_cast<int>(v));
            }
            if (sec.has("max_features_fraction"))
                cfg.space.max_features_fraction = sec.get_double_list("max_features_fraction");
            if (sec.has("bootstrap"))
                cfg.space.bootstrap = {sec.get_bool("bootstrap", true) ? 1 : 0};
            cfg.space.n_iter = static_cast<int>(sec.get_i64("n_iter", cfg.space.n_iter));
        } else if (sec.name == "output") {
            cfg.dump_features = sec.get_bool("dump_features", false);
        } else {
            throw ConfigError(origin + ": unknown section [" + sec.name + "] in run config");
        }
    }
    if (!saw_cohort) throw ConfigError(origin + ": missing required [cohort] section");
    if (cfg.tasks.empty() || cfg.representations.empty())
        throw ConfigError(origin + ": need at least one task and one representation");
    if (cfg.jobs < 1) throw ConfigError(origin + ": jobs must be positive");
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    return parse_run_config(parse_kv_file(path), path,
                            std::filesystem::path(path).parent_path().string());
}

struct LoadedCohort {
    Cohort cohort;                 // filtered
    AggregationMap map;
    std::size_t excluded_stays = 0;
    std::optional<SynthConfig> synth;  // present for synthetic sources
};

inline LoadedCohort load_cohort(const RunConfig& cfg) {
    LoadedCohort out;
    if (cfg.source == RunConfig::Source::synthetic) {
        const SynthConfig synth = load_synth_config(cfg.synth_config_path);
        out.cohort = generate_cohort(synth);
        out.map = cfg.map_path.empty() ? aggregation_map_from_config(synth)
                                       : read_aggregation_map(cfg.map_path);
        out.synth = synth;
    } else {
        out.cohort.stays = read_stays_csv(cfg.stays_path);
        out.cohort.events = read_events_csv(cfg.events_path);
        std::sort(out.cohort.events.begin(), out.cohort.events.end(),
                  [](const ChartEvent& a, const ChartEvent& b) {
                      return std::make_tuple(a.stay_id, a.hour, a.itemid, a.value) <
                             std::make_tuple(b.stay_id, b.hour, b.itemid, b.value);
                  });
        if (cfg.map_path.empty())
            throw ConfigError("csv cohorts need an aggregation map ([cohort] map = ...)");
        out.map = read_aggregation_map(cfg.map_path);
    }
    const std::size_t before = out.cohort.stays.size();
    out.cohort.stays = filter_cohort(out.cohort.stays);
    out.excluded_stays = before - out.cohort.stays.size();
    return out;
}

struct RunOutputs {
    std::vector<EvalRecord> records;
    std::vector<ComparisonRow> comparisons;
    std::vector<std::string> summary_lines;  // one per (task, representation, regime)
};

namespace detail {

inline std::string one_line_summary(const std::vector<EvalRecord>& records, Task task, Repr repr,
                                    RegimeKind kind) {
    int n = 0, ok = 0, degenerate = 0, error = 0;
    double auroc_sum = 0.0;
    int auroc_n = 0;
    for (const auto& r : records) {
        if (r.task != task || r.repr != repr || r.kind != kind) continue;
        ++n;
        if (r.status == "ok")
            ++ok;
        else if (r.status.rfind("degenerate", 0) == 0)
            ++degenerate;
        else
            ++error;
        if (!std::isnan(r.auroc)) {
            auroc_sum += r.auroc;
            ++auroc_n;
        }
    }
    std::string line = to_string(task) + " " + to_string(repr) + " " + to_string(kind) + ": " +
                       std::to_string(n) + " records (ok=" + std::to_string(ok) +
                       ", degenerate=" + std::to_string(degenerate) +
                       ", error=" + std::to_string(error) + ")";
    if (auroc_n > 0) {
        const double mean = auroc_sum / auroc_n;
        line += ", mean AUROC " + fmt_double(std::round(mean * 1000.0) / 1000.0);
    }
    return line;
}

// Debug dump of the one_time repeat-0 train matrix and first-test-year
// matrix per (task, representation).
inline void dump_feature_matrices(const RunConfig& cfg, const LoadedCohort& loaded,
                                  const ExperimentContext& ctx, const std::string& out_dir) {
    if (!cfg.one_time.enabled || cfg.one_time.test_years.empty()) return;
    for (Task task : cfg.tasks) {
        for (Repr repr : cfg.representations) {
            RegimeSpec spec;
            spec.kind = RegimeKind::one_time;
            spec.task = task;
            spec.repr = repr;
            spec.train_years = cfg.one_time.train_years;
            spec.test_years = {cfg.one_time.test_years.front()};
            spec.master_seed = cfg.master_seed;

            const auto train_stays = detail::stays_in_years(*ctx.stays, spec.train_years);
            const auto test_stays = detail::stays_in_years(*ctx.stays, spec.test_years);
            std::vector<ChartEvent> train_events;
            for (const auto& s : train_stays) {
                const auto span = ctx.events->for_stay(s.stay_id);
                train_events.insert(train_events.end(), span.begin(), span.end());
            }
            const ColumnUniverse universe = repr == Repr::aggregated
                                                ? aggregated_universe(*ctx.map)
                                                : itemid_universe(train_events);
            std::vector<HourlyGrid> grids;
            for (const auto& s : train_stays)
                grids.push_back(bucket_hourly(ctx.events->for_stay(s.stay_id), s, universe));
            const FillStats fill = compute_fill_stats(grids, universe);
            const auto train = build_matrix(train_stays, *ctx.events, universe, fill);
            const auto test = build_matrix(test_stays, *ctx.events, universe, fill);
            const std::string stem = out_dir + "/features_" + to_string(task) + "_" + to_string(repr);
            write_matrix_csv(train, stem + "_train.csv");
            write_matrix_csv(test, stem + "_test.csv");
        }
    }
    (void)loaded;
}

}  // namespace detail

// Executes the configured experiment grid and writes results.csv and
// comparisons.csv into out_dir. Deterministic for a fixed (config, seed):
// records are computed under the per-unit seed plan and sorted before
// writing, so --jobs never changes a byte.
inline RunOutputs execute_run(RunConfig cfg, const std::string& out_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              std::optional<int> jobs_override = std::nullopt) {
    if (seed_override) cfg.master_seed = *seed_override;
    if (jobs_override) cfg.jobs = *jobs_override;

    LoadedCohort loaded = load_cohort(cfg);
    if (loaded.cohort.stays.empty()) throw RegimeError("cohort is empty after the inclusion filter");
    const EventIndex index(loaded.cohort.events);

    ExperimentContext ctx;
    ctx.stays = &loaded.cohort.stays;
    ctx.events = &index;
    ctx.map = &loaded.map;
    ctx.space = cfg.space;
    ctx.jobs = cfg.jobs;

    // Default year windows from the cohort: first two years train the
    // one_time regime, later years are tested; year-specific regimes test
    // every year with at least one predecessor.
    int y0 = loaded.cohort.stays.front().admit_year, y1 = y0;
    for (const auto& s : loaded.cohort.stays) {
        y0 = std::min(y0, s.admit_year);
        y1 = std::max(y1, s.admit_year);
    }
    if (cfg.one_time.train_years.empty()) {
        cfg.one_time.train_years = {y0};
        if (y1 > y0) cfg.one_time.train_years.push_back(y0 + 1);
    }
    if (cfg.one_time.test_years.empty())
        for (int y = cfg.one_time.train_years.back() + 1; y <= y1; ++y)
            cfg.one_time.test_years.push_back(y);
    if (cfg.continuous.test_years.empty())
        for (int y = y0 + 1; y <= y1; ++y) cfg.continuous.test_years.push_back(y);
    if (cfg.short_term.test_years.empty()) cfg.short_term.test_years = cfg.continuous.test_years;

    RunOutputs out;
    auto append = [&](std::vector<EvalRecord>&& records) {
        out.records.insert(out.records.end(), std::make_move_iterator(records.begin()),
                           std::make_move_iterator(records.end()));
    };

    for (Task task : cfg.tasks) {
        for (Repr repr : cfg.representations) {
            RegimeSpec spec;
            spec.task = task;
            spec.repr = repr;
            spec.master_seed = cfg.master_seed;
            if (cfg.year_agnostic.enabled) {
                spec.n_repeats = cfg.year_agnostic.n_repeats;
                append(run_year_agnostic(ctx, spec));
                out.summary_lines.push_back(
                    detail::one_line_summary(out.records, task, repr, RegimeKind::year_agnostic));
            }
            if (cfg.one_time.enabled) {
                spec.n_repeats = cfg.one_time.n_repeats;
                spec.train_years = cfg.one_time.train_years;
                spec.test_years = cfg.one_time.test_years;
                append(run_one_time(ctx, spec));
                out.summary_lines.push_back(
                    detail::one_line_summary(out.records, task, repr, RegimeKind::one_time));
            }
            if (cfg.continuous.enabled) {
                spec.n_repeats = cfg.continuous.n_repeats;
                spec.train_years.clear();
                spec.test_years = cfg.continuous.test_years;
                append(run_continuous(ctx, spec));
                out.summary_lines.push_back(
                    detail::one_line_summary(out.records, task, repr, RegimeKind::continuous));
            }
            if (cfg.short_term.enabled) {
                spec.n_repeats = cfg.short_term.n_repeats;
                spec.train_years.clear();
                spec.test_years = cfg.short_term.test_years;
                append(run_short_term(ctx, spec));
                out.summary_lines.push_back(
                    detail::one_line_summary(out.records, task, repr, RegimeKind::short_term));
            }
        }
    }

    if (cfg.saturation_enabled) {
        for (Repr repr : cfg.saturation_representations) {
            RegimeSpec spec;
            spec.task = cfg.saturation_task;
            spec.repr = repr;
            spec.master_seed = cfg.master_seed;
            spec.n_repeats = cfg.saturation_repeats;
            spec.train_years = cfg.one_time.train_years;
            spec.test_years = cfg.one_time.test_years;
            append(run_saturation(ctx, spec, cfg.saturation_fractions));
        }
    }
    if (cfg.ablation_enabled) {
        RegimeSpec spec;
        spec.task = cfg.ablation_task;
        spec.repr = Repr::item_id;
        spec.master_seed = cfg.master_seed;
        spec.n_repeats = cfg.ablation_repeats;
        spec.train_years = cfg.one_time.train_years;
        spec.test_years = cfg.one_time.test_years;
        append(run_ablation(ctx, spec, cfg.ablation_concepts));
    }

    // Representation comparisons per (task, regime) where both sides exist,
    // over the plain regime curves (full fraction, no feature restriction).
    const bool have_both =
        std::count(cfg.representations.begin(), cfg.representations.end(), Repr::item_id) > 0 &&
        std::count(cfg.representations.begin(), cfg.representations.end(), Repr::aggregated) > 0;
    if (have_both) {
        for (Task task : cfg.tasks) {
            for (RegimeKind kind : {RegimeKind::year_agnostic, RegimeKind::one_time,
                                    RegimeKind::continuous, RegimeKind::short_term}) {
                std::vector<EvalRecord> item, agg;
                for (const auto& r : out.records) {
                    if (r.task != task || r.kind != kind || !r.feature.empty() ||
                        r.train_fraction != 1.0)
                        continue;
                    (r.repr == Repr::item_id ? item : agg).push_back(r);
                }
                if (item.empty() || agg.empty()) continue;
                auto rows = compare(agg, item);
                out.comparisons.insert(out.comparisons.end(), rows.begin(), rows.end());
            }
        }
    }

    std::filesystem::create_directories(out_dir);
    write_results_csv(out.records, out_dir + "/results.csv");
    write_comparisons_csv(out.comparisons, out_dir + "/comparisons.csv");
    if (cfg.dump_features) detail::dump_feature_matrices(cfg, loaded, ctx, out_dir);
    return out;
}

}  // namespace driftbench
