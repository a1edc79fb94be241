#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "driftbench/cohort.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/kvconfig.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

// One measured clinical concept. The recording vocabulary changes at the
// changeover year: stays admitted before it emit pre-era itemids, stays
// admitted at or after it emit post-era itemids.
struct ConceptSpec {
    std::string name;
    std::vector<std::int64_t> pre_itemids;
    std::vector<std::int64_t> post_itemids;
    double baseline = 0.0;
    double severity_slope = 0.0;
    double noise_sd = 1.0;
    double obs_prob_pre = 0.5;
    double obs_prob_post = 0.5;
    double unit_scale_post = 1.0;
    bool gcs_analog = false;
};

struct SynthConfig {
    int year_start = 2001;
    int year_end = 2012;
    int changeover_year = 2008;  // year_end + 1 means "never"
    int patients_per_year = 500;
    std::vector<ConceptSpec> concepts;
    double mortality_steepness = 6.0;
    double mortality_midpoint = 0.7;
    double los_base_days = 1.5;
    double los_severity_scale = 6.0;
    std::uint64_t master_seed = 42;
};

inline void validate_config(const SynthConfig& cfg) {
    if (cfg.year_start > cfg.year_end)
        throw ConfigError("year_start must not exceed year_end");
    if (cfg.changeover_year < cfg.year_start || cfg.changeover_year > cfg.year_end + 1)
        throw ConfigError("changeover_year must lie in [year_start, year_end + 1]; got " +
                          std::to_string(cfg.changeover_year));
    if (cfg.patients_per_year <= 0)
        throw ConfigError("patients_per_year must be positive");
    if (cfg.concepts.empty())
        throw ConfigError("concepts: at least one concept is required");
    if (cfg.mortality_midpoint <= 0.0 || cfg.mortality_midpoint >= 1.0)
        throw ConfigError("mortality_midpoint must lie in (0,1)");
    if (cfg.los_base_days <= 0.0)
        throw ConfigError("los_base_days must be positive");
    if (cfg.los_severity_scale <= 0.0)
        throw ConfigError("los_severity_scale must be positive");

    std::set<std::string> names;
    std::set<std::int64_t> all_ids;
    bool has_dominant = false;
    for (const auto& c : cfg.concepts) {
        const std::string at = "concept '" + c.name + "'";
        if (c.name.empty()) throw ConfigError("concepts: empty concept name");
        if (!names.insert(c.name).second) throw ConfigError("duplicate " + at);
        if (c.pre_itemids.empty()) throw ConfigError(at + ": pre_itemids must be non-empty");
        if (c.post_itemids.empty()) throw ConfigError(at + ": post_itemids must be non-empty");
        for (auto id : c.pre_itemids) {
            if (id <= 0) throw ConfigError(at + ": itemids must be positive");
            if (!all_ids.insert(id).second)
                throw ConfigError(at + ": itemid " + std::to_string(id) +
                                  " already used by another concept or era");
        }
        for (auto id : c.post_itemids) {
            if (id <= 0) throw ConfigError(at + ": itemids must be positive");
            if (!all_ids.insert(id).second)
                throw ConfigError(at + ": itemid " + std::to_string(id) +
                                  " already used by another concept or era");
        }
        if (c.obs_prob_pre < 0.0 || c.obs_prob_pre > 1.0)
            throw ConfigError(at + ": obs_prob_pre must lie in [0,1]");
        if (c.obs_prob_post < 0.0 || c.obs_prob_post > 1.0)
            throw ConfigError(at + ": obs_prob_post must lie in [0,1]");
        if (c.noise_sd < 0.0) throw ConfigError(at + ": noise_sd must be nonnegative");
        if (c.unit_scale_post <= 0.0) throw ConfigError(at + ": unit_scale_post must be positive");
        if (std::fabs(c.severity_slope) > c.noise_sd) has_dominant = true;
    }
    if (!has_dominant)
        throw ConfigError("concepts: at least one concept must have |severity_slope| > noise_sd");
}

// Documented default cohort: 12 admission years, changeover in 2008, 500
// stays per year, 15 concepts (one dominant GCS analog, a handful of
// moderately informative vitals/labs, several pure-noise ones). Pre-era ids
// sit in the low CareVue-style range, post-era ids in the 22xxxx
// MetaVision-style range, one post-era id per concept.
inline SynthConfig default_config() {
    SynthConfig cfg;
    auto add = [&](std::string name, std::vector<std::int64_t> pre, std::vector<std::int64_t> post,
                   double baseline, double slope, double noise, double p_pre, double p_post,
                   bool gcs = false) {
        ConceptSpec c;
        c.name = std::move(name);
        c.pre_itemids = std::move(pre);
        c.post_itemids = std::move(post);
        c.baseline = baseline;
        c.severity_slope = slope;
        c.noise_sd = noise;
        c.obs_prob_pre = p_pre;
        c.obs_prob_post = p_post;
        c.gcs_analog = gcs;
        cfg.concepts.push_back(std::move(c));
    };
    add("gcs_total", {198, 454}, {220739}, 13.5, -10.0, 0.6, 0.9, 0.9, true);
    add("heart_rate", {211, 212}, {220045}, 86.0, 22.0, 11.0, 0.95, 0.95);
    add("systolic_bp", {51, 455}, {220179}, 122.0, -28.0, 14.0, 0.9, 0.9);
    add("diastolic_bp", {8368, 8441}, {220180}, 68.0, -12.0, 9.0, 0.9, 0.9);
    add("resp_rate", {618, 619}, {220210}, 17.0, 9.0, 3.5, 0.9, 0.9);
    add("spo2", {646, 834}, {220277}, 97.0, -5.0, 2.0, 0.9, 0.9);
    add("temperature", {678, 679}, {223761}, 36.9, 1.3, 0.5, 0.7, 0.7);
    add("wbc", {861, 1127, 1542}, {220546}, 8.5, 6.5, 3.0, 0.35, 0.35);
    add("lactate", {818, 1531}, {225668}, 1.5, 3.2, 0.8, 0.3, 0.3);
    add("creatinine", {791, 1525}, {220615}, 1.0, 1.6, 0.45, 0.3, 0.3);
    add("urine_output", {55, 57}, {226559}, 110.0, -45.0, 55.0, 0.8, 0.8);
    add("hematocrit", {813, 3761}, {220545}, 33.0, 0.0, 4.5, 0.35, 0.35);
    add("platelet_count", {828, 3789}, {227457}, 240.0, 0.0, 60.0, 0.3, 0.3);
    add("sodium", {837, 1536}, {220645}, 139.0, 0.0, 3.5, 0.3, 0.3);
    add("glucose", {811, 1529}, {220621}, 135.0, 0.0, 35.0, 0.4, 0.4);
    return cfg;
}

inline AggregationMap aggregation_map_from_config(const SynthConfig& cfg) {
    AggregationMap map;
    for (const auto& c : cfg.concepts) {
        AggregationMap::Entry e;
        e.concept_name = c.name;
        e.itemids = c.pre_itemids;
        e.itemids.insert(e.itemids.end(), c.post_itemids.begin(), c.post_itemids.end());
        std::sort(e.itemids.begin(), e.itemids.end());
        map.entries.push_back(std::move(e));
    }
    std::sort(map.entries.begin(), map.entries.end(),
              [](const auto& a, const auto& b) { return a.concept_name < b.concept_name; });
    map.validate();
    return map;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace detail {

// Fixed per-stay draw order; the whole stay comes from one derived stream,
// so years (and stays) can be generated in parallel and merged without
// changing a single byte.
inline void generate_stay(const SynthConfig& cfg, int year, int index_in_year, Cohort& out) {
    const std::uint64_t year_seed = mix_seed(cfg.master_seed, 0x5ca1eULL, static_cast<std::uint64_t>(year));
    Rng rng(mix_seed(year_seed, static_cast<std::uint64_t>(index_in_year)));

    IcuStay stay;
    stay.stay_id = static_cast<std::int64_t>(year - cfg.year_start) * cfg.patients_per_year +
                   index_in_year + 1;
    stay.admit_year = year;

    const double severity = rng.u01();
    stay.age = static_cast<int>(rng.uniform_int(16, 90));
    stay.mortality =
        rng.bernoulli(logistic(cfg.mortality_steepness * (severity - cfg.mortality_midpoint))) ? 1 : 0;
    stay.los_days = std::max(
        1.5, cfg.los_base_days + rng.exponential(cfg.los_severity_scale * severity + 0.5));
    stay.icu_hours = std::max(36.0, 24.0 * stay.los_days * rng.uniform(0.3, 1.0));

    const bool post_era = year >= cfg.changeover_year;
    std::vector<ChartEvent> stay_events;
    for (const auto& c : cfg.concepts) {
        const double obs_prob = post_era ? c.obs_prob_post : c.obs_prob_pre;
        const auto& ids = post_era ? c.post_itemids : c.pre_itemids;
        for (int hour = 0; hour < 24; ++hour) {
            if (!rng.bernoulli(obs_prob)) continue;
            const double value = c.baseline + c.severity_slope * severity + rng.normal(0.0, c.noise_sd);
            ChartEvent e;
            e.stay_id = stay.stay_id;
            e.itemid = ids[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(ids.size()) - 1))];
            e.hour = hour;
            e.value = post_era ? value * c.unit_scale_post : value;
            stay_events.push_back(e);
        }
    }
    std::sort(stay_events.begin(), stay_events.end(), [](const ChartEvent& a, const ChartEvent& b) {
        return a.hour != b.hour ? a.hour < b.hour : a.itemid < b.itemid;
    });

    out.stays.push_back(stay);
    out.latent_severity.push_back(severity);
    out.events.insert(out.events.end(), stay_events.begin(), stay_events.end());
}

}  // namespace detail

// One admission year of the cohort. Year seeds derive from
// (master_seed, year) alone, so disjoint years can be generated in parallel
// and concatenated in year order to reproduce the serial output exactly.
inline Cohort generate_year(const SynthConfig& cfg, int year) {
    if (year < cfg.year_start || year > cfg.year_end)
        throw ConfigError("generate_year: year " + std::to_string(year) + " outside [" +
                          std::to_string(cfg.year_start) + "," + std::to_string(cfg.year_end) + "]");
    Cohort cohort;
    for (int i = 0; i < cfg.patients_per_year; ++i) detail::generate_stay(cfg, year, i, cohort);
    return cohort;
}

// Deterministic synthetic cohort: patients_per_year stays per year in
// [year_start, year_end], severity-driven labels and measurements, era-pure
// itemids. Output order: stays ascending by stay_id, events by
// (stay_id, hour, itemid).
inline Cohort generate_cohort(const SynthConfig& cfg) {
    validate_config(cfg);
    Cohort cohort;
    cohort.stays.reserve(static_cast<std::size_t>((cfg.year_end - cfg.year_start + 1)) *
                         static_cast<std::size_t>(cfg.patients_per_year));
    for (int year = cfg.year_start; year <= cfg.year_end; ++year)
        for (int i = 0; i < cfg.patients_per_year; ++i) detail::generate_stay(cfg, year, i, cohort);
    return cohort;
}

// ---------------------------------------------------------------------------
// Config file round-trip

inline SynthConfig parse_synth_config(const std::vector<KvSection>& sections,
                                      const std::string& origin) {
    SynthConfig cfg;
    cfg.concepts.clear();
    bool saw_cohort = false;
    for (const auto& sec : sections) {
        if (sec.name == "cohort") {
            saw_cohort = true;
            cfg.year_start = static_cast<int>(sec.get_i64("year_start", cfg.year_start));
            cfg.year_end = static_cast<int>(sec.get_i64("year_end", cfg.year_end));
            cfg.changeover_year = static_cast<int>(sec.get_i64("changeover_year", cfg.changeover_year));
            cfg.patients_per_year =
                static_cast<int>(sec.get_i64("patients_per_year", cfg.patients_per_year));
            cfg.master_seed = sec.get_u64("master_seed", cfg.master_seed);
        } else if (sec.name == "labels") {
            cfg.mortality_steepness = sec.get_double("mortality_steepness", cfg.mortality_steepness);
            cfg.mortality_midpoint = sec.get_double("mortality_midpoint", cfg.mortality_midpoint);
            cfg.los_base_days = sec.get_double("los_base_days", cfg.los_base_days);
            cfg.los_severity_scale = sec.get_double("los_severity_scale", cfg.los_severity_scale);
        } else if (sec.name == "concept") {
            if (sec.arg.empty())
                throw ConfigError(origin + ": [concept] section needs a name, e.g. [concept heart_rate]");
            ConceptSpec c;
            c.name = sec.arg;
            c.pre_itemids = sec.get_i64_list("pre_itemids");
            c.post_itemids = sec.get_i64_list("post_itemids");
            c.baseline = sec.get_double("baseline");
            c.severity_slope = sec.get_double("severity_slope");
            c.noise_sd = sec.get_double("noise_sd");
            c.obs_prob_pre = sec.get_double("obs_prob_pre");
            c.obs_prob_post = sec.get_double("obs_prob_post");
            c.unit_scale_post = sec.get_double("unit_scale_post", 1.0);
            c.gcs_analog = sec.get_bool("gcs_analog", false);
            cfg.concepts.push_back(std::move(c));
        } else {
            throw ConfigError(origin + ": unknown section [" + sec.name + "] in cohort config");
        }
    }
    if (!saw_cohort) throw ConfigError(origin + ": missing required [cohort] section");
    if (cfg.concepts.empty()) cfg.concepts = default_config().concepts;
    validate_config(cfg);
    return cfg;
}

inline SynthConfig load_synth_config(const std::string& path) {
    return parse_synth_config(parse_kv_file(path), path);
}

// Echo with every default materialized; parses back to the same config.
inline void write_synth_config(const SynthConfig& cfg, std::ostream& out) {
    out << "[cohort]\n";
    out << "year_start = " << cfg.year_start << "\n";
    out << "year_end = " << cfg.year_end << "\n";
    out << "changeover_year = " << cfg.changeover_year << "\n";
    out << "patients_per_year = " << cfg.patients_per_year << "\n";
    out << "master_seed = " << cfg.master_seed << "\n\n";
    out << "[labels]\n";
    out << "mortality_steepness = " << fmt_double(cfg.mortality_steepness) << "\n";
    out << "mortality_midpoint = " << fmt_double(cfg.mortality_midpoint) << "\n";
    out << "los_base_days = " << fmt_double(cfg.los_base_days) << "\n";
    out << "los_severity_scale = " << fmt_double(cfg.los_severity_scale) << "\n";
    for (const auto& c : cfg.concepts) {
        out << "\n[concept " << c.name << "]\n";
        auto ids = [&](const std::vector<std::int64_t>& v) {
            std::string s;
            for (std::size_t i = 0; i < v.size(); ++i)
                s += (i ? ", " : "") + std::to_string(v[i]);
            return s;
        };
        out << "pre_itemids = " << ids(c.pre_itemids) << "\n";
        out << "post_itemids = " << ids(c.post_itemids) << "\n";
        out << "baseline = " << fmt_double(c.baseline) << "\n";
        out << "severity_slope = " << fmt_double(c.severity_slope) << "\n";
        out << "noise_sd = " << fmt_double(c.noise_sd) << "\n";
        out << "obs_prob_pre = " << fmt_double(c.obs_prob_pre) << "\n";
        out << "obs_prob_post = " << fmt_double(c.obs_prob_post) << "\n";
        out << "unit_scale_post = " << fmt_double(c.unit_scale_post) << "\n";
        out << "gcs_analog = " << (c.gcs_analog ? "true" : "false") << "\n";
    }
}

inline std::string synth_config_to_string(const SynthConfig& cfg) {
    std::ostringstream ss;
    write_synth_config(cfg, ss);
    return ss.str();
}

}  // namespace driftbench
