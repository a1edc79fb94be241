// driftbench: synthetic EHR cohorts with a recording-system changeover,
// feature pipelines, random-forest training regimes, and drift reports.
//
// Exit codes: 0 success, 2 configuration error, 3 ingestion error,
// 4 runtime failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "driftbench/cohort.hpp"
#include "driftbench/report.hpp"
#include "driftbench/runconfig.hpp"
#include "driftbench/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIngest = 3;
constexpr int kExitRuntime = 4;

using namespace driftbench;

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
    const SynthConfig cfg = load_synth_config(config_path);
    const Cohort cohort = generate_cohort(cfg);
    std::filesystem::create_directories(out_dir);
    write_stays_csv(cohort.stays, out_dir + "/stays.csv");
    write_events_csv(cohort.events, out_dir + "/events.csv");
    write_oracle_csv(cohort, out_dir + "/oracle.csv");
    write_aggregation_map(aggregation_map_from_config(cfg), out_dir + "/aggregation_map.csv");
    {
        std::ofstream echo(out_dir + "/cohort_config_resolved.cfg", std::ios::binary);
        write_synth_config(cfg, echo);
        if (!echo) throw Error("cannot write resolved config echo");
    }
    std::cout << "synth: " << cohort.stays.size() << " stays, " << cohort.events.size()
              << " events, years " << cfg.year_start << "-" << cfg.year_end << ", changeover "
              << cfg.changeover_year << "\n";
    std::cout << "synth: wrote stays.csv events.csv oracle.csv aggregation_map.csv "
                 "cohort_config_resolved.cfg to "
              << out_dir << "\n";
    return kExitOk;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<int> jobs) {
    const RunConfig cfg = load_run_config(config_path);
    const RunOutputs out = execute_run(cfg, out_dir, seed, jobs);
    for (const auto& line : out.summary_lines) std::cout << line << "\n";
    std::cout << "run: " << out.records.size() << " records -> " << out_dir << "/results.csv, "
              << out.comparisons.size() << " comparisons -> " << out_dir << "/comparisons.csv\n";
    return kExitOk;
}

int cmd_report(const std::string& results_path, const std::string& comparisons_path,
               const std::string& out_dir, const std::set<std::string>& charts, double threshold,
               int changeover_year, int saturation_year) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw ConfigError("significance threshold must lie in (0,1)");
    const auto records = read_results_csv(results_path);
    if (records.empty()) throw ReportError(results_path + " contains no records");
    std::vector<ComparisonRow> comparisons;
    if (!comparisons_path.empty()) comparisons = read_comparisons_csv(comparisons_path);

    std::filesystem::create_directories(out_dir);
    const auto summary = summarize(records);
    write_summary_csv(summary, out_dir + "/summary.csv");
    std::cout << "report: " << summary.size() << " summary rows -> " << out_dir << "/summary.csv\n";

    auto write_chart = [&](const std::string& name, const std::string& content) {
        const std::string path = out_dir + "/" + name;
        std::ofstream f(path, std::ios::binary);
        f << content;
        if (!f) throw Error("cannot write " + path);
        std::cout << "report: wrote " << path << "\n";
    };

    if (charts.count("regime")) {
        for (Task task : {Task::mortality, Task::los}) {
            for (RegimeKind kind :
                 {RegimeKind::one_time, RegimeKind::continuous, RegimeKind::short_term}) {
                bool any = false;
                for (const auto& r : records)
                    any |= (r.task == task && r.kind == kind && r.feature.empty() &&
                            r.train_fraction == 1.0 && r.test_year != 0);
                if (!any) continue;
                write_chart("regime_" + to_string(task) + "_" + to_string(kind) + ".svg",
                            svg_regime_chart(summary, comparisons, task, kind, changeover_year,
                                             threshold));
            }
        }
    }
    if (charts.count("saturation")) {
        for (Task task : {Task::mortality, Task::los}) {
            std::set<int> years;
            for (const auto& r : records)
                if (r.task == task && r.train_fraction != 1.0 && r.feature.empty())
                    years.insert(r.test_year);
            if (years.empty()) continue;
            const int year = saturation_year > 0 ? saturation_year : *years.rbegin();
            write_chart("saturation_" + to_string(task) + ".svg",
                        svg_saturation_chart(summary, task, year));
        }
    }
    if (charts.count("ablation")) {
        for (Task task : {Task::mortality, Task::los}) {
            bool any = false;
            for (const auto& r : records) any |= (r.task == task && !r.feature.empty());
            if (!any) continue;
            write_chart("ablation_" + to_string(task) + ".svg",
                        svg_ablation_chart(summary, task, changeover_year));
        }
    }
    return kExitOk;
}

int cmd_validate(const std::string& stays_path, const std::string& events_path,
                 const std::string& map_path) {
    const auto stays = read_stays_csv(stays_path);
    const auto events = read_events_csv(events_path);
    const auto map = read_aggregation_map(map_path);

    std::set<std::int64_t> stay_ids;
    for (const auto& s : stays) stay_ids.insert(s.stay_id);
    const auto included = filter_cohort(stays);

    std::set<std::int64_t> mapped;
    for (const auto& e : map.entries) mapped.insert(e.itemids.begin(), e.itemids.end());
    std::size_t unmapped_events = 0, orphan_events = 0;
    std::set<std::int64_t> unmapped_ids;
    for (const auto& e : events) {
        if (!mapped.count(e.itemid)) {
            ++unmapped_events;
            unmapped_ids.insert(e.itemid);
        }
        if (!stay_ids.count(e.stay_id)) ++orphan_events;
    }

    std::cout << "validate: " << stays.size() << " stays, " << events.size() << " events, "
              << map.entries.size() << " concepts / " << mapped.size() << " mapped itemids\n";
    std::cout << "validate: inclusion filter keeps " << included.size() << " stays (excludes "
              << stays.size() - included.size() << ")\n";
    int warnings = 0;
    if (unmapped_events > 0) {
        ++warnings;
        std::cout << "validate: warning: " << unmapped_events << " events across "
                  << unmapped_ids.size() << " itemids are not covered by the map\n";
    }
    if (orphan_events > 0) {
        ++warnings;
        std::cout << "validate: warning: " << orphan_events
                  << " events reference stay_ids missing from stays.csv\n";
    }
    std::cout << "validate: " << (warnings == 0 ? "ok, no warnings" : "ok with warnings") << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftbench: temporal-drift evaluation for clinical predictors"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    synth->add_option("--config", config_path, "cohort config file")->required();
    synth->add_option("--out", out_dir, "output directory");

    auto* run = app.add_subcommand("run", "execute the configured experiment grid");
    run->add_option("--config", config_path, "run config file")->required();
    run->add_option("--out", out_dir, "output directory");
    std::uint64_t seed_value = 0;
    auto* seed_opt = run->add_option("--seed", seed_value, "override the config master seed");
    int jobs_value = 1;
    auto* jobs_opt = run->add_option("--jobs", jobs_value, "worker threads (never changes results)");

    std::string results_path, comparisons_path, charts_arg = "regime,saturation,ablation";
    double threshold = 0.01;
    int changeover_year = 2008, saturation_year = 0;
    auto* report = app.add_subcommand("report", "summary tables and SVG charts from results.csv");
    report->add_option("--results", results_path, "results.csv path")->required();
    report->add_option("--comparisons", comparisons_path, "comparisons.csv path");
    report->add_option("--out", out_dir, "output directory");
    report->add_option("--charts", charts_arg, "comma list: regime,saturation,ablation");
    report->add_option("--threshold", threshold, "significance threshold for shading");
    report->add_option("--changeover-year", changeover_year, "vertical rule position");
    report->add_option("--saturation-year", saturation_year, "test year for the saturation chart");

    std::string stays_path, events_path, map_path;
    auto* validate = app.add_subcommand("validate", "schema-check an ingested cohort");
    validate->add_option("--stays", stays_path, "stays.csv path")->required();
    validate->add_option("--events", events_path, "events.csv path")->required();
    validate->add_option("--map", map_path, "aggregation map csv path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (synth->parsed()) return cmd_synth(config_path, out_dir);
        if (run->parsed())
            return cmd_run(config_path, out_dir,
                           seed_opt->count() ? std::optional(seed_value) : std::nullopt,
                           jobs_opt->count() ? std::optional(jobs_value) : std::nullopt);
        if (report->parsed()) {
            std::set<std::string> charts;
            std::istringstream ss(charts_arg);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                if (tok != "regime" && tok != "saturation" && tok != "ablation")
                    throw ConfigError("unknown chart '" + tok + "'");
                charts.insert(tok);
            }
            return cmd_report(results_path, comparisons_path, out_dir, charts, threshold,
                              changeover_year, saturation_year);
        }
        if (validate->parsed()) return cmd_validate(stays_path, events_path, map_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IngestError& e) {
        std::cerr << "ingest error: " << e.what() << "\n";
        return kExitIngest;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
