#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "driftbench/cohort.hpp"
#include "driftbench/pipeline.hpp"
#include "driftbench/rng.hpp"

using namespace driftbench;

namespace {

IcuStay stay_with(std::int64_t id, int age, double icu_hours, double los_days = 5.0,
                  int mortality = 0, int year = 2001) {
    IcuStay s;
    s.stay_id = id;
    s.admit_year = year;
    s.age = age;
    s.icu_hours = icu_hours;
    s.mortality = mortality;
    s.los_days = los_days;
    return s;
}

ChartEvent event(std::int64_t stay, std::int64_t itemid, int hour, double value) {
    return ChartEvent{stay, itemid, hour, value};
}

AggregationMap wbc_map() {
    AggregationMap map;
    map.entries.push_back({"wbc", {861, 1127, 1542, 220546}});
    map.validate();
    return map;
}

}  // namespace

TEST_CASE("filter_cohort applies the inclusion boundaries") {
    std::vector<IcuStay> stays{
        stay_with(1, 15, 100.0),  // too young, "older than 15" is strict
        stay_with(2, 16, 36.0),   // boundary: included
        stay_with(3, 80, 35.99),  // too short
        stay_with(4, 40, 200.0),
    };
    const auto kept = filter_cohort(stays);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].stay_id == 2);
    CHECK(kept[1].stay_id == 4);
    CHECK(filter_cohort({}).empty());
}

TEST_CASE("bucket_hourly pools member itemids under aggregated keying") {
    const auto universe = aggregated_universe(wbc_map());
    const IcuStay s = stay_with(7, 50, 48.0);
    const std::vector<ChartEvent> events{event(7, 861, 3, 10.0), event(7, 220546, 3, 14.0)};
    const auto grid = bucket_hourly(events, s, universe);
    REQUIRE(grid.n_columns == 1);
    CHECK(grid.observed(3, 0));
    CHECK(grid.value_at(3, 0) == 12.0);
    for (int h = 0; h < 24; ++h)
        if (h != 3) CHECK_FALSE(grid.observed(h, 0));
}

TEST_CASE("bucket_hourly keeps itemids separate under item-id keying") {
    const std::vector<ChartEvent> events{event(7, 861, 3, 10.0), event(7, 220546, 3, 14.0)};
    const auto universe = itemid_universe(events);
    REQUIRE(universe.size() == 2);
    CHECK(universe.keys[0] == "861");
    CHECK(universe.keys[1] == "220546");
    const auto grid = bucket_hourly(events, stay_with(7, 50, 48.0), universe);
    CHECK(grid.value_at(3, 0) == 10.0);
    CHECK(grid.value_at(3, 1) == 14.0);
}

TEST_CASE("same-hour same-itemid events average") {
    const std::vector<ChartEvent> events{event(1, 211, 5, 4.0), event(1, 211, 5, 6.0)};
    const auto universe = itemid_universe(events);
    const auto grid = bucket_hourly(events, stay_with(1, 40, 48.0), universe);
    CHECK(grid.value_at(5, 0) == 5.0);
}

TEST_CASE("unknown itemids are dropped and counted") {
    const auto universe = aggregated_universe(wbc_map());
    const std::vector<ChartEvent> events{event(1, 861, 0, 8.0), event(1, 999, 1, 50.0)};
    const auto grid = bucket_hourly(events, stay_with(1, 40, 48.0), universe);
    CHECK(grid.dropped_events == 1);
    CHECK(grid.observed(0, 0));
}

TEST_CASE("event order never changes a grid") {
    Rng rng(17);
    const auto universe = aggregated_universe(wbc_map());
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<ChartEvent> events;
        const int n = 20 + static_cast<int>(rng.uniform_int(0, 30));
        const std::vector<std::int64_t> ids{861, 1127, 1542, 220546};
        for (int i = 0; i < n; ++i)
            events.push_back(event(1, ids[static_cast<std::size_t>(rng.uniform_int(0, 3))],
                                   static_cast<int>(rng.uniform_int(0, 23)), rng.uniform(1.0, 20.0)));
        const auto base = bucket_hourly(events, stay_with(1, 40, 48.0), universe);
        for (std::size_t k = events.size(); k > 1; --k)
            std::swap(events[k - 1], events[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(k) - 1))]);
        const auto shuffled = bucket_hourly(events, stay_with(1, 40, 48.0), universe);
        CHECK(base.values == shuffled.values);
        CHECK(base.mask == shuffled.mask);
    }
}

TEST_CASE("impute_column reproduces the documented forward-fill pattern") {
    // Observations [missing, 5, missing, 7] at hours 0-3, fill default 9.
    AggregationMap map;
    map.entries.push_back({"c", {1}});
    const auto universe = aggregated_universe(map);
    const std::vector<ChartEvent> events{event(1, 1, 1, 5.0), event(1, 1, 3, 7.0)};
    const auto grid = bucket_hourly(events, stay_with(1, 40, 48.0), universe);
    const auto ic = impute_column(grid, 0, 9.0);
    CHECK(ic.value[0] == 9.0);
    CHECK(ic.value[1] == 5.0);
    CHECK(ic.value[2] == 5.0);
    CHECK(ic.value[3] == 7.0);
    CHECK(ic.mask[0] == 0.0);
    CHECK(ic.mask[1] == 1.0);
    CHECK(ic.mask[2] == 0.0);
    CHECK(ic.mask[3] == 1.0);
    CHECK(ic.delta[0] == 1.0);
    CHECK(ic.delta[1] == 0.0);
    CHECK(ic.delta[2] == 1.0);
    CHECK(ic.delta[3] == 0.0);

    SECTION("fully observed column is the identity") {
        std::vector<ChartEvent> full;
        for (int h = 0; h < 24; ++h) full.push_back(event(1, 1, h, static_cast<double>(h)));
        const auto g = bucket_hourly(full, stay_with(1, 40, 48.0), universe);
        const auto c = impute_column(g, 0, 99.0);
        for (int h = 0; h < 24; ++h) {
            CHECK(c.value[h] == static_cast<double>(h));
            CHECK(c.mask[h] == 1.0);
            CHECK(c.delta[h] == 0.0);
        }
    }
    SECTION("never-observed column: fill everywhere, delta counts from admission") {
        const auto g = bucket_hourly({}, stay_with(1, 40, 48.0), universe);
        const auto c = impute_column(g, 0, 9.0);
        for (int h = 0; h < 24; ++h) {
            CHECK(c.value[h] == 9.0);
            CHECK(c.mask[h] == 0.0);
            CHECK(c.delta[h] == static_cast<double>(h + 1));
        }
    }
}

TEST_CASE("mask and delta are mutually consistent on random grids") {
    Rng rng(5);
    AggregationMap map;
    map.entries.push_back({"a", {1}});
    map.entries.push_back({"b", {2}});
    const auto universe = aggregated_universe(map);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<ChartEvent> events;
        for (std::int64_t id = 1; id <= 2; ++id)
            for (int h = 0; h < 24; ++h)
                if (rng.bernoulli(0.4)) events.push_back(event(1, id, h, rng.u01()));
        const auto grid = bucket_hourly(events, stay_with(1, 40, 48.0), universe);
        for (std::int64_t c = 0; c < 2; ++c) {
            const auto ic = impute_column(grid, c, 0.5);
            for (int h = 0; h < 24; ++h) {
                CHECK((ic.mask[h] == 1.0) == (ic.delta[h] == 0.0));
                if (h > 0 && ic.mask[h] == 0.0 && ic.mask[h - 1] == 0.0)
                    CHECK(ic.delta[h] == ic.delta[h - 1] + 1.0);
                CHECK(ic.delta[h] >= 0.0);
                CHECK(ic.delta[h] <= 24.0);
            }
        }
    }
}

TEST_CASE("compute_fill_stats uses training means and zero for unseen columns") {
    AggregationMap map;
    map.entries.push_back({"a", {1}});
    map.entries.push_back({"b", {2}});
    const auto universe = aggregated_universe(map);
    const std::vector<ChartEvent> events{event(1, 1, 0, 2.0), event(1, 1, 5, 4.0)};
    std::vector<HourlyGrid> grids{bucket_hourly(events, stay_with(1, 40, 48.0), universe)};
    const auto stats = compute_fill_stats(grids, universe);
    CHECK(stats.fill[0] == 3.0);
    CHECK(stats.fill[1] == 0.0);
    CHECK_THROWS_AS(compute_fill_stats(std::span<const HourlyGrid>{}, universe), PipelineError);
}

TEST_CASE("build_matrix lays out channels, demographics, and labels") {
    AggregationMap map;
    for (int c = 0; c < 15; ++c)
        map.entries.push_back({"c" + std::to_string(c < 10 ? c + 10 : c), {100 + c}});
    const auto universe = aggregated_universe(map);

    std::vector<IcuStay> stays{
        stay_with(1, 44, 60.0, /*los_days=*/3.0, /*mortality=*/1),
        stay_with(2, 59, 60.0, /*los_days=*/2.99, 0),
    };
    std::vector<ChartEvent> events{event(1, 100, 0, 7.0)};
    const EventIndex index(events);
    FillStats fill;
    fill.fill.assign(15, 1.0);
    const auto fm = build_matrix(stays, index, universe, fill);

    CHECK(fm.X.cols == 24 * 3 * 15 + 1);
    CHECK(fm.column_names.size() == static_cast<std::size_t>(fm.X.cols));
    CHECK(fm.column_names.back() == "age");
    CHECK(fm.X.at(0, fm.X.cols - 1) == 44.0);
    CHECK(fm.X.at(1, fm.X.cols - 1) == 59.0);

    // LOS binarized at 3 days: 3.0 -> 1, 2.99 -> 0.
    CHECK(fm.los[0] == 1);
    CHECK(fm.los[1] == 0);
    CHECK(fm.mortality[0] == 1);

    // Stay 2 has no events: fill everywhere, masks zero, deltas 1..24.
    const auto row = fm.X.row(1);
    for (int h = 0; h < 24; ++h) {
        CHECK(row[static_cast<std::size_t>(h * 3 + 0)] == 1.0);
        CHECK(row[static_cast<std::size_t>(h * 3 + 1)] == 0.0);
        CHECK(row[static_cast<std::size_t>(h * 3 + 2)] == static_cast<double>(h + 1));
    }
}

TEST_CASE("column alignment check rejects diverging universes") {
    AggregationMap map;
    map.entries.push_back({"a", {1}});
    const auto u1 = aggregated_universe(map);
    map.entries.push_back({"b", {2}});
    const auto u2 = aggregated_universe(map);

    std::vector<IcuStay> stays{stay_with(1, 40, 48.0)};
    std::vector<ChartEvent> no_events;
    const EventIndex index(no_events);
    FillStats f1, f2;
    f1.fill.assign(1, 0.0);
    f2.fill.assign(2, 0.0);
    const auto a = build_matrix(stays, index, u1, f1);
    const auto b = build_matrix(stays, index, u2, f2);
    CHECK_THROWS_AS(check_column_alignment(a, b), PipelineError);
    CHECK_NOTHROW(check_column_alignment(a, a));
}

TEST_CASE("matrix csv dump has a full header row") {
    AggregationMap map;
    map.entries.push_back({"a", {1}});
    const auto universe = aggregated_universe(map);
    std::vector<IcuStay> stays{stay_with(1, 40, 48.0)};
    std::vector<ChartEvent> events{event(1, 1, 0, 2.5)};
    const EventIndex index(events);
    FillStats fill;
    fill.fill.assign(1, 0.0);
    const auto fm = build_matrix(stays, index, universe, fill);
    const std::string path = "/tmp/driftbench_test_matrix.csv";
    write_matrix_csv(fm, path);
    CsvReader reader(path);
    CHECK(reader.header().size() == static_cast<std::size_t>(fm.X.cols) + 3);
    CHECK(reader.header()[0] == "stay_id");
    CHECK(reader.header()[1] == "a_h0_value");
    std::vector<std::string> fields;
    REQUIRE(reader.next(fields));
    CHECK(fields[1] == "2.5");
}
