#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "driftbench/forest.hpp"
#include "driftbench/matrix.hpp"
#include "driftbench/rng.hpp"

using namespace driftbench;

namespace {

Matrix make_matrix(std::int64_t rows, std::int64_t cols, const std::vector<double>& data) {
    Matrix m(rows, cols);
    m.data = data;
    return m;
}

// Independent oracle: enumerate every (feature, midpoint threshold) split and
// return the best weighted-Gini split under the same tie rule (lower column,
// lower threshold).
struct OracleSplit {
    bool found = false;
    std::int64_t feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
};

OracleSplit exhaustive_best_split(const Matrix& X, const std::vector<std::int8_t>& y, int min_leaf) {
    const auto n = static_cast<std::size_t>(X.rows);
    auto gini = [](double pos, double total) {
        if (total == 0.0) return 0.0;
        const double p = pos / total;
        return 1.0 - p * p - (1.0 - p) * (1.0 - p);
    };
    double total_pos = 0.0;
    for (auto v : y) total_pos += v;
    const double parent = gini(total_pos, static_cast<double>(n));

    OracleSplit best;
    for (std::int64_t f = 0; f < X.cols; ++f) {
        std::vector<double> vals;
        for (std::size_t r = 0; r < n; ++r) vals.push_back(X.at(static_cast<std::int64_t>(r), f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            const double thr = 0.5 * (vals[i] + vals[i + 1]);
            double nl = 0, pl = 0;
            for (std::size_t r = 0; r < n; ++r) {
                if (X.at(static_cast<std::int64_t>(r), f) <= thr) {
                    nl += 1.0;
                    pl += y[r];
                }
            }
            const double nr = static_cast<double>(n) - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double gain = parent - (nl / static_cast<double>(n)) * gini(pl, nl) -
                                (nr / static_cast<double>(n)) * gini(total_pos - pl, nr);
            const bool better =
                !best.found || gain > best.gain + 1e-12 ||
                (std::fabs(gain - best.gain) <= 1e-12 &&
                 (f < best.feature || (f == best.feature && thr < best.threshold)));
            if (better) {
                best.found = true;
                best.feature = f;
                best.threshold = thr;
                best.gain = gain;
            }
        }
    }
    return best;
}

HyperParams stump_params() {
    HyperParams hp;
    hp.n_trees = 1;
    hp.max_depth = 1;
    hp.min_samples_leaf = 1;
    hp.max_features_fraction = 1.0;
    hp.bootstrap = false;
    return hp;
}

}  // namespace

TEST_CASE("separable pair yields the documented stump") {
    const Matrix X = make_matrix(2, 1, {0.0, 1.0});
    const std::vector<std::int8_t> y{0, 1};
    const auto model = fit_forest(X, y, stump_params(), 3);
    REQUIRE(model.trees.size() == 1);
    const auto& nodes = model.trees[0].nodes;
    REQUIRE(nodes.size() == 3);
    CHECK(nodes[0].feature == 0);
    CHECK(nodes[0].threshold == 0.5);
    CHECK(nodes[1].leaf_fraction == 0.0);
    CHECK(nodes[2].leaf_fraction == 1.0);

    const auto scores = predict_proba(model, X);
    CHECK(scores[0] == 0.0);
    CHECK(scores[1] == 1.0);
}

TEST_CASE("four-point split matches hand enumeration") {
    // Candidates 1.5, 2.5, 3.5; gains 1/6, 1/2, 1/6.
    const Matrix X = make_matrix(4, 1, {1, 2, 3, 4});
    const std::vector<std::int8_t> y{0, 0, 1, 1};
    const auto model = fit_forest(X, y, stump_params(), 11);
    CHECK(model.trees[0].nodes[0].threshold == 2.5);

    const auto oracle = exhaustive_best_split(X, y, 1);
    CHECK(oracle.threshold == 2.5);
    CHECK(oracle.gain == Catch::Approx(0.5));
}

TEST_CASE("stump split equals exhaustive Gini enumeration on random data") {
    Rng rng(909);
    for (int trial = 0; trial < 120; ++trial) {
        const std::int64_t n = 6 + rng.uniform_int(0, 30);
        const std::int64_t d = 1 + rng.uniform_int(0, 4);
        Matrix X(n, d);
        std::vector<std::int8_t> y(static_cast<std::size_t>(n));
        bool pos = false, neg = false;
        for (std::int64_t r = 0; r < n; ++r) {
            for (std::int64_t c = 0; c < d; ++c)
                X.at(r, c) = static_cast<double>(rng.uniform_int(0, 6));  // discrete -> tied gains
            y[static_cast<std::size_t>(r)] = rng.bernoulli(0.5) ? 1 : 0;
            pos |= y[static_cast<std::size_t>(r)] == 1;
            neg |= y[static_cast<std::size_t>(r)] == 0;
        }
        if (!pos) y[0] = 1;
        if (!neg) y[1] = 0;

        const auto model = fit_forest(X, y, stump_params(), 1000 + static_cast<std::uint64_t>(trial));
        const auto oracle = exhaustive_best_split(X, y, 1);
        const auto& root = model.trees[0].nodes[0];
        if (!oracle.found || oracle.gain <= 1e-12) {
            CHECK(root.is_leaf());
        } else {
            REQUIRE_FALSE(root.is_leaf());
            CHECK(root.feature == oracle.feature);
            CHECK(root.threshold == oracle.threshold);
        }
    }
}

TEST_CASE("forests are deterministic given the seed") {
    Rng rng(31);
    Matrix X(60, 5);
    std::vector<std::int8_t> y(60);
    for (std::int64_t r = 0; r < 60; ++r) {
        for (std::int64_t c = 0; c < 5; ++c) X.at(r, c) = rng.u01();
        y[static_cast<std::size_t>(r)] = rng.bernoulli(0.4) ? 1 : 0;
    }
    HyperParams hp;
    hp.n_trees = 20;
    hp.max_depth = 6;
    hp.min_samples_leaf = 2;
    hp.max_features_fraction = 0.5;
    const auto a = fit_forest(X, y, hp, 7);
    const auto b = fit_forest(X, y, hp, 7);
    CHECK(serialize_model(a) == serialize_model(b));

    const auto c = fit_forest(X, y, hp, 8);
    CHECK(serialize_model(a) != serialize_model(c));
}

TEST_CASE("degenerate single-class training yields a flagged constant model") {
    const Matrix X = make_matrix(4, 2, {1, 2, 3, 4, 5, 6, 7, 8});
    const std::vector<std::int8_t> y{1, 1, 1, 1};
    HyperParams hp;
    hp.n_trees = 5;
    const auto model = fit_forest(X, y, hp, 1);
    CHECK(model.degenerate);
    for (double s : predict_proba(model, X)) CHECK(s == 1.0);
}

TEST_CASE("prediction averages leaf fractions across trees") {
    ForestModel model;
    model.n_columns = 1;
    Tree t1, t2;
    t1.nodes.push_back(TreeNode{-1, 0, -1, -1, 0.2, 10});
    t2.nodes.push_back(TreeNode{-1, 0, -1, -1, 0.6, 10});
    model.trees = {t1, t2};
    const Matrix X = make_matrix(1, 1, {0.0});
    CHECK(predict_proba(model, X)[0] == Catch::Approx(0.4));
}

TEST_CASE("predict_proba rejects width mismatches") {
    const Matrix X = make_matrix(2, 1, {0.0, 1.0});
    const std::vector<std::int8_t> y{0, 1};
    const auto model = fit_forest(X, y, stump_params(), 3);
    const Matrix bad = make_matrix(1, 2, {0.0, 1.0});
    CHECK_THROWS_AS(predict_proba(model, bad), PredictError);
}

TEST_CASE("leaf fractions equal the positive share of routed rows") {
    Rng rng(88);
    Matrix X(80, 3);
    std::vector<std::int8_t> y(80);
    for (std::int64_t r = 0; r < 80; ++r) {
        for (std::int64_t c = 0; c < 3; ++c) X.at(r, c) = rng.u01();
        y[static_cast<std::size_t>(r)] = rng.bernoulli(0.3) ? 1 : 0;
    }
    if (std::none_of(y.begin(), y.end(), [](auto v) { return v == 1; })) y[0] = 1;
    if (std::none_of(y.begin(), y.end(), [](auto v) { return v == 0; })) y[1] = 0;
    HyperParams hp;
    hp.n_trees = 4;
    hp.max_depth = 4;
    hp.min_samples_leaf = 3;
    hp.max_features_fraction = 0.7;
    hp.bootstrap = false;  // routed rows == training rows, checkable directly
    const auto model = fit_forest(X, y, hp, 5);
    for (const auto& tree : model.trees) {
        std::vector<double> pos(tree.nodes.size(), 0.0), tot(tree.nodes.size(), 0.0);
        for (std::int64_t r = 0; r < X.rows; ++r) {
            std::int32_t id = 0;
            while (!tree.nodes[static_cast<std::size_t>(id)].is_leaf()) {
                const auto& nd = tree.nodes[static_cast<std::size_t>(id)];
                id = X.at(r, nd.feature) <= nd.threshold ? nd.left : nd.right;
            }
            pos[static_cast<std::size_t>(id)] += y[static_cast<std::size_t>(r)];
            tot[static_cast<std::size_t>(id)] += 1.0;
        }
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            if (!tree.nodes[i].is_leaf()) continue;
            REQUIRE(tot[i] == static_cast<double>(tree.nodes[i].count));
            REQUIRE(tot[i] >= hp.min_samples_leaf);
            CHECK(tree.nodes[i].leaf_fraction == Catch::Approx(pos[i] / tot[i]).margin(1e-15));
        }
    }
}

TEST_CASE("cross-validation contracts") {
    SECTION("stratified folds balance both classes") {
        Rng rng(14);
        std::vector<std::int8_t> y(103);
        int n_pos = 0;
        for (auto& v : y) {
            v = rng.bernoulli(0.3) ? 1 : 0;
            n_pos += v;
        }
        const auto fold = stratified_folds(y, 5, 77);
        for (int f = 0; f < 5; ++f) {
            int fold_pos = 0, fold_n = 0;
            for (std::size_t i = 0; i < y.size(); ++i)
                if (fold[i] == f) {
                    ++fold_n;
                    fold_pos += y[i];
                }
            const double expected = static_cast<double>(fold_n) * n_pos / static_cast<double>(y.size());
            CHECK(std::fabs(fold_pos - expected) < 1.0);
        }
    }
    SECTION("perfectly separable data scores 1.0") {
        Matrix X(40, 1);
        std::vector<std::int8_t> y(40);
        for (std::int64_t r = 0; r < 40; ++r) {
            X.at(r, 0) = static_cast<double>(r);
            y[static_cast<std::size_t>(r)] = r >= 20 ? 1 : 0;
        }
        HyperParams hp;
        hp.n_trees = 10;
        hp.max_depth = 3;
        CHECK(cross_val_auroc(X, y, hp, 5, 3) == 1.0);
    }
    SECTION("pure-noise labels stay near 0.5") {
        Rng rng(2024);
        Matrix X(500, 4);
        std::vector<std::int8_t> y(500);
        for (std::int64_t r = 0; r < 500; ++r) {
            for (std::int64_t c = 0; c < 4; ++c) X.at(r, c) = rng.u01();
            y[static_cast<std::size_t>(r)] = rng.bernoulli(0.5) ? 1 : 0;
        }
        HyperParams hp;
        hp.n_trees = 30;
        hp.max_depth = 6;
        hp.min_samples_leaf = 5;
        hp.max_features_fraction = 0.5;
        const double cv = cross_val_auroc(X, y, hp, 5, 9);
        CHECK(cv > 0.4);
        CHECK(cv < 0.6);
    }
    SECTION("class count below k raises") {
        Matrix X(10, 1);
        std::vector<std::int8_t> y(10, 0);
        for (std::int64_t r = 0; r < 10; ++r) X.at(r, 0) = static_cast<double>(r);
        y[0] = 1;
        y[1] = 1;  // only 2 positives < k=5
        HyperParams hp;
        CHECK_THROWS_AS(cross_val_auroc(X, y, hp, 5, 1), TrainError);
    }
}

TEST_CASE("random search contracts") {
    Rng rng(61);
    Matrix X(120, 3);
    std::vector<std::int8_t> y(120);
    for (std::int64_t r = 0; r < 120; ++r) {
        for (std::int64_t c = 0; c < 3; ++c) X.at(r, c) = rng.u01();
        y[static_cast<std::size_t>(r)] = (X.at(r, 0) + 0.3 * rng.u01() > 0.6) ? 1 : 0;
    }

    SECTION("single-candidate space returns that candidate") {
        SearchSpace space;
        space.n_trees = {7};
        space.max_depth = {3};
        space.min_samples_leaf = {2};
        space.max_features_fraction = {0.5};
        space.n_iter = 3;
        const auto res = random_search(X, y, space, 5, 21);
        CHECK(res.best.n_trees == 7);
        CHECK(res.best.max_depth == 3);
        CHECK(res.best.min_samples_leaf == 2);
        CHECK(res.best.max_features_fraction == 0.5);
    }
    SECTION("deterministic and equal to the max over evaluated candidates") {
        SearchSpace space;
        space.n_trees = {5, 10};
        space.max_depth = {2, 4};
        space.min_samples_leaf = {1, 5};
        space.max_features_fraction = {0.4, 1.0};
        space.n_iter = 6;
        const auto a = random_search(X, y, space, 5, 33);
        const auto b = random_search(X, y, space, 5, 33);
        CHECK(a.best.to_string() == b.best.to_string());
        CHECK(a.best_cv_auroc == b.best_cv_auroc);
        REQUIRE_FALSE(a.evaluated.empty());
        double max_score = a.evaluated[0].second;
        for (const auto& [hp, score] : a.evaluated) max_score = std::max(max_score, score);
        CHECK(a.best_cv_auroc == max_score);
    }
    SECTION("winner is invariant under increasing transforms of the CV scores") {
        SearchSpace space;
        space.n_trees = {5, 10};
        space.max_depth = {2, 4};
        space.min_samples_leaf = {1, 5};
        space.max_features_fraction = {0.4, 1.0};
        space.n_iter = 8;
        const auto res = random_search(X, y, space, 5, 99);
        // Replay argmax (earliest wins ties) over transformed scores.
        std::size_t best_idx = 0;
        double best_score = -1.0;
        for (std::size_t i = 0; i < res.evaluated.size(); ++i) {
            const double t = std::tanh(2.0 * res.evaluated[i].second) + 5.0;
            if (t > best_score) {
                best_score = t;
                best_idx = i;
            }
        }
        CHECK(res.evaluated[best_idx].first.to_string() == res.best.to_string());
    }
}

TEST_CASE("model serialization emits one node per line") {
    Rng rng(1);
    Matrix X(30, 2);
    std::vector<std::int8_t> y(30);
    for (std::int64_t r = 0; r < 30; ++r) {
        X.at(r, 0) = rng.u01();
        X.at(r, 1) = rng.u01();
        y[static_cast<std::size_t>(r)] = rng.bernoulli(0.5) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    HyperParams hp;
    hp.n_trees = 3;
    hp.max_depth = 3;
    const auto model = fit_forest(X, y, hp, 17);
    const std::string text = serialize_model(model);
    CHECK(text.find("forest trees=3") == 0);
    CHECK(text.find("leaf") != std::string::npos);
    CHECK(text.find("split") != std::string::npos);
}
