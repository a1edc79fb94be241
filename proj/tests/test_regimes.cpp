#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "driftbench/regimes.hpp"
#include "driftbench/synth.hpp"

using namespace driftbench;

namespace {

struct Fixture {
    SynthConfig cfg;
    Cohort cohort;
    AggregationMap map;
    EventIndex index;
    ExperimentContext ctx;

    explicit Fixture(int years = 5, int per_year = 60, std::uint64_t seed = 7)
        : cfg(make_config(years, per_year, seed)),
          cohort(generate_cohort(cfg)),
          map(aggregation_map_from_config(cfg)),
          index(cohort.events) {
        ctx.stays = &cohort.stays;
        ctx.events = &index;
        ctx.map = &map;
        ctx.space.n_trees = {10};
        ctx.space.max_depth = {4};
        ctx.space.min_samples_leaf = {2};
        ctx.space.max_features_fraction = {0.05};
        ctx.space.n_iter = 2;
        ctx.jobs = 1;
    }

    static SynthConfig make_config(int years, int per_year, std::uint64_t seed) {
        SynthConfig c = default_config();
        c.year_start = 2001;
        c.year_end = 2000 + years;
        c.changeover_year = 2003;
        c.patients_per_year = per_year;
        c.master_seed = seed;
        return c;
    }

    RegimeSpec spec(RegimeKind kind, int repeats = 2) const {
        RegimeSpec s;
        s.kind = kind;
        s.task = Task::mortality;
        s.repr = Repr::aggregated;
        s.n_repeats = repeats;
        s.train_years = {2001, 2002};
        s.test_years = {2003, 2004, 2005};
        s.master_seed = 11;
        return s;
    }
};

std::string records_to_string(const std::vector<EvalRecord>& records) {
    std::ostringstream ss;
    for (const auto& r : records)
        ss << to_string(r.task) << "," << to_string(r.repr) << "," << to_string(r.kind) << ","
           << r.train_years << "," << r.test_year << "," << r.repeat << ","
           << fmt_double(r.train_fraction) << "," << r.feature << "," << fmt_double(r.auroc) << ","
           << fmt_double(r.auprc) << "," << r.n_train << "," << r.n_test << "," << r.seed << ","
           << r.status << "\n";
    return ss.str();
}

}  // namespace

TEST_CASE("one_time produces one record per (repeat, test_year) and is deterministic") {
    Fixture fx;
    const auto records = run_one_time(fx.ctx, fx.spec(RegimeKind::one_time, 2));
    CHECK(records.size() == 6);
    for (const auto& r : records) {
        CHECK(r.train_years == "2001-2002");
        CHECK(r.n_train == 120);
        CHECK(r.n_test == 60);
        CHECK(r.status == "ok");
        CHECK(r.auroc >= 0.0);
        CHECK(r.auroc <= 1.0);
    }
    const auto again = run_one_time(fx.ctx, fx.spec(RegimeKind::one_time, 2));
    CHECK(records_to_string(records) == records_to_string(again));
}

TEST_CASE("one_time rejects train years that do not precede the test years") {
    Fixture fx;
    auto spec = fx.spec(RegimeKind::one_time);
    spec.train_years = {2001, 2003};
    CHECK_THROWS_AS(run_one_time(fx.ctx, spec), RegimeError);
}

TEST_CASE("parallel execution is byte-identical to serial") {
    Fixture fx;
    auto serial_ctx = fx.ctx;
    serial_ctx.jobs = 1;
    auto parallel_ctx = fx.ctx;
    parallel_ctx.jobs = 4;
    const auto a = run_one_time(serial_ctx, fx.spec(RegimeKind::one_time, 4));
    const auto b = run_one_time(parallel_ctx, fx.spec(RegimeKind::one_time, 4));
    CHECK(records_to_string(a) == records_to_string(b));

    const auto c = run_short_term(serial_ctx, fx.spec(RegimeKind::short_term, 2));
    const auto d = run_short_term(parallel_ctx, fx.spec(RegimeKind::short_term, 2));
    CHECK(records_to_string(c) == records_to_string(d));
}

TEST_CASE("a restricted grid reproduces the matching rows of the full run") {
    Fixture fx;
    const auto full = run_one_time(fx.ctx, fx.spec(RegimeKind::one_time, 4));
    auto restricted_spec = fx.spec(RegimeKind::one_time, 2);
    restricted_spec.test_years = {2005};
    const auto restricted = run_one_time(fx.ctx, restricted_spec);
    REQUIRE(restricted.size() == 2);
    for (const auto& r : restricted) {
        bool matched = false;
        for (const auto& f : full) {
            if (f.test_year == r.test_year && f.repeat == r.repeat) {
                matched = true;
                CHECK(f.auroc == r.auroc);
                CHECK(f.auprc == r.auprc);
                CHECK(f.seed == r.seed);
                CHECK(f.n_train == r.n_train);
            }
        }
        CHECK(matched);
    }
}

TEST_CASE("continuous pools strictly contain short-term pools") {
    Fixture fx;
    const auto cont = run_continuous(fx.ctx, fx.spec(RegimeKind::continuous, 1));
    const auto st = run_short_term(fx.ctx, fx.spec(RegimeKind::short_term, 1));
    REQUIRE(cont.size() == 3);
    REQUIRE(st.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(cont[i].test_year == st[i].test_year);
        CHECK(cont[i].n_train >= st[i].n_train);
        CHECK(st[i].train_years == std::to_string(st[i].test_year - 1));
    }
    CHECK(cont[0].train_years == "2001-2002");
    CHECK(cont[2].train_years == "2001-2004");
}

TEST_CASE("year_agnostic splits 80/20 within one sample per class") {
    Fixture fx;
    auto spec = fx.spec(RegimeKind::year_agnostic, 3);
    const auto records = run_year_agnostic(fx.ctx, spec);
    REQUIRE(records.size() == 3);
    std::int64_t n_pos = 0, n_neg = 0;
    for (const auto& s : *fx.ctx.stays) (label_of(s, Task::mortality) ? n_pos : n_neg) += 1;
    for (const auto& r : records) {
        CHECK(r.test_year == 0);
        CHECK(r.train_years == "all");
        CHECK(r.n_train + r.n_test == static_cast<std::int64_t>(fx.ctx.stays->size()));
        const auto expect_train =
            static_cast<std::int64_t>(std::floor(0.8 * static_cast<double>(n_pos))) +
            static_cast<std::int64_t>(std::floor(0.8 * static_cast<double>(n_neg)));
        CHECK(r.n_train == expect_train);
    }
}

TEST_CASE("stratified subsample floors per class, matching the documented sizes") {
    std::vector<IcuStay> pool;
    for (int i = 0; i < 2203; ++i) {
        IcuStay s;
        s.stay_id = i + 1;
        s.admit_year = 2001;
        s.age = 40;
        s.icu_hours = 48;
        s.mortality = i < 470 ? 1 : 0;  // 470 positives, 1733 negatives
        s.los_days = 5.0;
        pool.push_back(s);
    }
    const auto at90 = detail::stratified_subsample(pool, Task::mortality, 0.9, 123);
    const auto at10 = detail::stratified_subsample(pool, Task::mortality, 0.1, 123);
    CHECK(at90.size() == 1982);
    CHECK(at10.size() == 220);
    std::int64_t pos90 = 0;
    for (const auto& s : at90) pos90 += s.mortality;
    CHECK(pos90 == 423);  // floor(0.9 * 470)
}

TEST_CASE("saturation sweep stamps the fraction into every record") {
    Fixture fx;
    auto spec = fx.spec(RegimeKind::one_time, 2);
    spec.test_years = {2005};
    const auto records = run_saturation(fx.ctx, spec, {0.5, 0.9});
    REQUIRE(records.size() == 4);
    int at_half = 0;
    for (const auto& r : records) {
        CHECK((r.train_fraction == 0.5 || r.train_fraction == 0.9));
        at_half += r.train_fraction == 0.5;
        CHECK(r.n_train < 120);
    }
    CHECK(at_half == 2);
    CHECK_THROWS_AS(run_saturation(fx.ctx, spec, {1.5}), RegimeError);
}

TEST_CASE("ablation restricts the item-id universe to one concept") {
    Fixture fx;
    auto spec = fx.spec(RegimeKind::one_time, 1);
    spec.repr = Repr::item_id;
    spec.test_years = {2004};
    const auto records = run_ablation(fx.ctx, spec, {"gcs_total", "platelet_count"});
    REQUIRE(records.size() == 2);
    CHECK(records[0].feature == "gcs_total");
    CHECK(records[1].feature == "platelet_count");
    for (const auto& r : records) CHECK(r.status == "ok");
    CHECK_THROWS_AS(run_ablation(fx.ctx, spec, {"no_such_concept"}), RegimeError);
}

TEST_CASE("representations are paired: identical partitions per (year, repeat)") {
    Fixture fx;
    auto item_spec = fx.spec(RegimeKind::one_time, 3);
    item_spec.repr = Repr::item_id;
    item_spec.train_fraction = 0.5;
    auto agg_spec = item_spec;
    agg_spec.repr = Repr::aggregated;
    const auto a = run_one_time(fx.ctx, item_spec);
    const auto b = run_one_time(fx.ctx, agg_spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].seed == b[i].seed);        // representation-free seed plan
        CHECK(a[i].n_train == b[i].n_train);  // same subsampled pool
    }
}

TEST_CASE("compare pairs records per test year") {
    Fixture fx;
    const auto spec = fx.spec(RegimeKind::one_time, 20);
    const auto base = run_one_time(fx.ctx, spec);

    SECTION("self-comparison has no nonzero pairs") {
        const auto rows = compare(base, base);
        REQUIRE(rows.size() == 3);
        for (const auto& row : rows) {
            CHECK_FALSE(row.valid);
            CHECK(row.note.find("no nonzero pairs") != std::string::npos);
            CHECK_FALSE(row.significant);
        }
    }
    SECTION("a uniform +0.1 shift is significant at n=20") {
        auto shifted = base;
        for (auto& r : shifted) r.auroc += 0.1;
        const auto rows = compare(shifted, base);
        REQUIRE(rows.size() == 3);
        for (const auto& row : rows) {
            CHECK(row.valid);
            CHECK(row.n_effective == 20);
            CHECK(row.p_value < 0.01);
            CHECK(row.significant);
        }
    }
    SECTION("mismatched repeats raise") {
        auto broken = base;
        broken.pop_back();
        CHECK_THROWS_AS(compare(broken, base), RegimeError);
    }
}

TEST_CASE("results csv round-trips records including nan metrics") {
    Fixture fx;
    auto records = run_one_time(fx.ctx, fx.spec(RegimeKind::one_time, 1));
    records[0].auroc = std::numeric_limits<double>::quiet_NaN();
    records[0].status = "error:eval:test";
    const std::string path = "/tmp/driftbench_results_roundtrip.csv";
    write_results_csv(records, path);
    const auto loaded = read_results_csv(path);
    REQUIRE(loaded.size() == records.size());
    bool saw_nan = false;
    for (const auto& r : loaded)
        if (std::isnan(r.auroc)) {
            saw_nan = true;
            CHECK(r.status == "error:eval:test");
        }
    CHECK(saw_nan);
}
