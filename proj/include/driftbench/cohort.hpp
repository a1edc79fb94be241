#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "driftbench/csv.hpp"
#include "driftbench/errors.hpp"

namespace driftbench {

struct IcuStay {
    std::int64_t stay_id = 0;
    int admit_year = 0;
    int age = 0;
    double icu_hours = 0.0;
    int mortality = 0;
    double los_days = 0.0;
};

struct ChartEvent {
    std::int64_t stay_id = 0;
    std::int64_t itemid = 0;
    int hour = 0;  // [0, 24)
    double value = 0.0;
};

struct Cohort {
    std::vector<IcuStay> stays;
    std::vector<ChartEvent> events;        // sorted by (stay_id, hour, itemid)
    std::vector<double> latent_severity;   // oracle only, aligned with stays; empty when ingested
};

// Inclusion filter: age > 15 and at least 36 ICU hours, input order kept.
inline std::vector<IcuStay> filter_cohort(const std::vector<IcuStay>& stays) {
    std::vector<IcuStay> out;
    out.reserve(stays.size());
    for (const auto& s : stays)
        if (s.age > 15 && s.icu_hours >= 36.0) out.push_back(s);
    return out;
}

// Concept name -> member itemids, spanning recording eras.
struct AggregationMap {
    struct Entry {
        std::string concept_name;
        std::vector<std::int64_t> itemids;  // sorted
    };
    std::vector<Entry> entries;  // sorted by concept name

    const Entry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.concept_name == name) return &e;
        return nullptr;
    }

    void validate() const {
        std::set<std::string> names;
        std::set<std::int64_t> seen;
        for (const auto& e : entries) {
            if (e.itemids.empty())
                throw ConfigError("aggregation map: concept '" + e.concept_name + "' has no itemids");
            if (!names.insert(e.concept_name).second)
                throw ConfigError("aggregation map: duplicate concept '" + e.concept_name + "'");
            for (auto id : e.itemids)
                if (!seen.insert(id).second)
                    throw ConfigError("aggregation map: itemid " + std::to_string(id) +
                                      " appears in more than one concept");
        }
    }
};

inline AggregationMap read_aggregation_map(const std::string& path) {
    CsvReader reader(path);
    const int c_concept = reader.column("concept");
    const int c_itemid = reader.column("itemid");
    std::map<std::string, std::vector<std::int64_t>> acc;
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f[static_cast<std::size_t>(c_concept)].empty())
            throw IngestError(reader.where() + ": empty concept name");
        acc[f[static_cast<std::size_t>(c_concept)]].push_back(
            parse_i64(f[static_cast<std::size_t>(c_itemid)], reader.where()));
    }
    AggregationMap map;
    for (auto& [name, ids] : acc) {
        std::sort(ids.begin(), ids.end());
        map.entries.push_back({name, std::move(ids)});
    }
    map.validate();
    return map;
}

inline void write_aggregation_map(const AggregationMap& map, const std::string& path) {
    CsvWriter w(path);
    w.row({"concept", "itemid"});
    for (const auto& e : map.entries)
        for (auto id : e.itemids) w.row({e.concept_name, std::to_string(id)});
    w.close();
}

inline void write_stays_csv(const std::vector<IcuStay>& stays, const std::string& path) {
    CsvWriter w(path);
    w.row({"stay_id", "admit_year", "age", "icu_hours", "mortality", "los_days"});
    for (const auto& s : stays)
        w.row({std::to_string(s.stay_id), std::to_string(s.admit_year), std::to_string(s.age),
               fmt_double(s.icu_hours), std::to_string(s.mortality), fmt_double(s.los_days)});
    w.close();
}

inline void write_events_csv(const std::vector<ChartEvent>& events, const std::string& path) {
    CsvWriter w(path);
    w.row({"stay_id", "itemid", "hour", "value"});
    for (const auto& e : events)
        w.row({std::to_string(e.stay_id), std::to_string(e.itemid), std::to_string(e.hour),
               fmt_double(e.value)});
    w.close();
}

inline void write_oracle_csv(const Cohort& cohort, const std::string& path) {
    CsvWriter w(path);
    w.row({"stay_id", "latent_severity"});
    for (std::size_t i = 0; i < cohort.stays.size(); ++i)
        w.row({std::to_string(cohort.stays[i].stay_id), fmt_double(cohort.latent_severity[i])});
    w.close();
}

inline std::vector<IcuStay> read_stays_csv(const std::string& path) {
    CsvReader reader(path);
    const int c_id = reader.column("stay_id");
    const int c_year = reader.column("admit_year");
    const int c_age = reader.column("age");
    const int c_icu = reader.column("icu_hours");
    const int c_mort = reader.column("mortality");
    const int c_los = reader.column("los_days");
    std::vector<IcuStay> stays;
    std::vector<std::string> f;
    std::set<std::int64_t> ids;
    while (reader.next(f)) {
        IcuStay s;
        s.stay_id = parse_i64(f[static_cast<std::size_t>(c_id)], reader.where());
        s.admit_year = static_cast<int>(parse_i64(f[static_cast<std::size_t>(c_year)], reader.where()));
        s.age = static_cast<int>(parse_i64(f[static_cast<std::size_t>(c_age)], reader.where()));
        s.icu_hours = parse_double(f[static_cast<std::size_t>(c_icu)], reader.where());
        s.mortality = static_cast<int>(parse_i64(f[static_cast<std::size_t>(c_mort)], reader.where()));
        s.los_days = parse_double(f[static_cast<std::size_t>(c_los)], reader.where());
        if (!ids.insert(s.stay_id).second)
            throw IngestError(reader.where() + ": duplicate stay_id " + std::to_string(s.stay_id));
        if (s.mortality != 0 && s.mortality != 1)
            throw IngestError(reader.where() + ": mortality must be 0 or 1");
        stays.push_back(s);
    }
    return stays;
}

inline std::vector<ChartEvent> read_events_csv(const std::string& path) {
    CsvReader reader(path);
    const int c_id = reader.column("stay_id");
    const int c_item = reader.column("itemid");
    const int c_hour = reader.column("hour");
    const int c_value = reader.column("value");
    std::vector<ChartEvent> events;
    std::vector<std::string> f;
    while (reader.next(f)) {
        ChartEvent e;
        e.stay_id = parse_i64(f[static_cast<std::size_t>(c_id)], reader.where());
        e.itemid = parse_i64(f[static_cast<std::size_t>(c_item)], reader.where());
        e.hour = static_cast<int>(parse_i64(f[static_cast<std::size_t>(c_hour)], reader.where()));
        e.value = parse_double(f[static_cast<std::size_t>(c_value)], reader.where());
        if (e.hour < 0 || e.hour >= 24)
            throw IngestError(reader.where() + ": hour " + std::to_string(e.hour) +
                              " outside the first-24h window [0,24)");
        events.push_back(e);
    }
    return events;
}

// Contiguous event range per stay, built once per cohort. Events must be
// sorted by stay_id.
class EventIndex {
public:
    explicit EventIndex(const std::vector<ChartEvent>& events) : events_(&events) {
        std::size_t i = 0;
        while (i < events.size()) {
            std::size_t j = i;
            while (j < events.size() && events[j].stay_id == events[i].stay_id) ++j;
            ranges_.emplace(events[i].stay_id, std::make_pair(i, j));
            i = j;
        }
    }

    std::span<const ChartEvent> for_stay(std::int64_t stay_id) const {
        auto it = ranges_.find(stay_id);
        if (it == ranges_.end()) return {};
        return {events_->data() + it->second.first, it->second.second - it->second.first};
    }

private:
    const std::vector<ChartEvent>* events_;
    std::unordered_map<std::int64_t, std::pair<std::size_t, std::size_t>> ranges_;
};

}  // namespace driftbench
