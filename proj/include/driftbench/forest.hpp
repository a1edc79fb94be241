#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "driftbench/csv.hpp"
#include "driftbench/errors.hpp"
#include "driftbench/matrix.hpp"
#include "driftbench/metrics.hpp"
#include "driftbench/rng.hpp"

namespace driftbench {

struct HyperParams {
    int n_trees = 100;
    int max_depth = 0;  // 0 = unbounded
    int min_samples_leaf = 1;
    double max_features_fraction = 1.0;
    bool bootstrap = true;

    std::string to_string() const {
        return "trees=" + std::to_string(n_trees) + ";depth=" + std::to_string(max_depth) +
               ";min_leaf=" + std::to_string(min_samples_leaf) +
               ";max_features=" + fmt_double(max_features_fraction) +
               ";bootstrap=" + (bootstrap ? "1" : "0");
    }
};

struct TreeNode {
    std::int32_t feature = -1;  // -1: leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double leaf_fraction = 0.0;
    std::int32_t count = 0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const {
        std::int32_t id = 0;
        while (!nodes[static_cast<std::size_t>(id)].is_leaf()) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(id)];
            id = (x[static_cast<std::size_t>(nd.feature)] <= nd.threshold) ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(id)].leaf_fraction;
    }
};

struct ForestModel {
    std::vector<Tree> trees;
    std::int64_t n_columns = 0;
    std::uint64_t seed = 0;
    bool degenerate = false;  // single-class training data
};

namespace detail {

struct SplitCandidate {
    bool found = false;
    std::int32_t feature = -1;
    double threshold = 0.0;
    // Exact fractional score (pos_l^2+neg_l^2)/n_l + (pos_r^2+neg_r^2)/n_r as
    // (num, den); comparisons cross-multiply in 128-bit so equal-gain ties are
    // broken exactly by (lower column, lower threshold), never by float noise.
    std::int64_t num = 0;
    std::int64_t den = 1;

    bool better_than(const SplitCandidate& o) const {
        if (!o.found) return found;
        if (!found) return false;
        const __int128 lhs = static_cast<__int128>(num) * o.den;
        const __int128 rhs = static_cast<__int128>(o.num) * den;
        if (lhs != rhs) return lhs > rhs;
        if (feature != o.feature) return feature < o.feature;
        return threshold < o.threshold;
    }
};

struct GatherEntry {
    double value;
    std::int32_t w;    // bootstrap multiplicity
    std::int32_t wy;   // multiplicity * label
};

struct TreeBuildScratch {
    std::vector<std::int32_t> row_index;     // rows with w > 0, partitioned per node
    std::vector<std::int32_t> feature_pool;  // Fisher-Yates pool for column sampling
    std::vector<GatherEntry> gathered;
};

struct NodeTask {
    std::int32_t begin;
    std::int32_t end;
    std::int32_t node_id;
    std::int32_t depth;
    std::int64_t n_weighted;
    std::int64_t pos_weighted;
};

// Best split for one candidate column on the node rows [begin, end).
// Thresholds sit at midpoints of consecutive distinct sorted values; children
// must keep at least min_samples_leaf weighted rows each. Columns arrive as
// contiguous arrays (the trainer transposes once per fit) so the gather stays
// cache-friendly.
inline void scan_column(std::span<const double> col_values, std::span<const std::int32_t> rows,
                        std::span<const std::int32_t> w, std::span<const std::int8_t> y,
                        std::int32_t col, std::int64_t n_weighted, std::int64_t pos_weighted,
                        int min_leaf, std::vector<GatherEntry>& gathered, SplitCandidate& best) {
    gathered.clear();
    for (std::int32_t r : rows) {
        const std::int32_t wr = w.empty() ? 1 : w[static_cast<std::size_t>(r)];
        gathered.push_back({col_values[static_cast<std::size_t>(r)], wr,
                            y[static_cast<std::size_t>(r)] ? wr : 0});
    }
    std::sort(gathered.begin(), gathered.end(),
              [](const GatherEntry& a, const GatherEntry& b) { return a.value < b.value; });

    std::int64_t n_l = 0, pos_l = 0;
    for (std::size_t i = 0; i + 1 < gathered.size(); ++i) {
        n_l += gathered[i].w;
        pos_l += gathered[i].wy;
        if (gathered[i].value == gathered[i + 1].value) continue;
        const std::int64_t n_r = n_weighted - n_l;
        if (n_l < min_leaf || n_r < min_leaf) continue;
        const std::int64_t pos_r = pos_weighted - pos_l;
        const std::int64_t neg_l = n_l - pos_l;
        const std::int64_t neg_r = n_r - pos_r;

        SplitCandidate cand;
        cand.found = true;
        cand.feature = col;
        cand.num = (pos_l * pos_l + neg_l * neg_l) * n_r + (pos_r * pos_r + neg_r * neg_r) * n_l;
        cand.den = n_l * n_r;
        double thr = 0.5 * (gathered[i].value + gathered[i + 1].value);
        if (thr >= gathered[i + 1].value) thr = gathered[i].value;  // adjacent doubles
        cand.threshold = thr;
        if (cand.better_than(best)) best = cand;
    }
}

// Xt is the training matrix transposed (one contiguous array per column).
inline Tree grow_tree(const Matrix& Xt, std::span<const std::int8_t> y, const HyperParams& hp,
                      std::uint64_t tree_seed, TreeBuildScratch& scratch) {
    const std::int64_t n = Xt.cols;
    const std::int64_t d = Xt.rows;
    Rng rng(tree_seed);

    std::vector<std::int32_t> weights;
    scratch.row_index.clear();
    if (hp.bootstrap) {
        weights.assign(static_cast<std::size_t>(n), 0);
        for (std::int64_t i = 0; i < n; ++i)
            ++weights[static_cast<std::size_t>(rng.uniform_int(0, n - 1))];
        for (std::int64_t i = 0; i < n; ++i)
            if (weights[static_cast<std::size_t>(i)] > 0)
                scratch.row_index.push_back(static_cast<std::int32_t>(i));
    } else {
        for (std::int64_t i = 0; i < n; ++i) scratch.row_index.push_back(static_cast<std::int32_t>(i));
    }

    if (scratch.feature_pool.size() != static_cast<std::size_t>(d)) {
        scratch.feature_pool.resize(static_cast<std::size_t>(d));
        std::iota(scratch.feature_pool.begin(), scratch.feature_pool.end(), 0);
    }
    const std::int64_t k = std::min<std::int64_t>(
        d, static_cast<std::int64_t>(std::ceil(hp.max_features_fraction * static_cast<double>(d))));

    std::int64_t root_n = 0, root_pos = 0;
    for (std::int32_t r : scratch.row_index) {
        const std::int32_t wr = hp.bootstrap ? weights[static_cast<std::size_t>(r)] : 1;
        root_n += wr;
        root_pos += y[static_cast<std::size_t>(r)] ? wr : 0;
    }

    Tree tree;
    std::vector<NodeTask> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, static_cast<std::int32_t>(scratch.row_index.size()), 0, 0, root_n, root_pos});

    std::span<const std::int32_t> wspan =
        hp.bootstrap ? std::span<const std::int32_t>(weights) : std::span<const std::int32_t>();

    while (!stack.empty()) {
        const NodeTask task = stack.back();
        stack.pop_back();
        TreeNode& node = tree.nodes[static_cast<std::size_t>(task.node_id)];
        node.count = static_cast<std::int32_t>(task.n_weighted);

        const bool pure = (task.pos_weighted == 0 || task.pos_weighted == task.n_weighted);
        const bool depth_capped = (hp.max_depth > 0 && task.depth >= hp.max_depth);
        const bool too_small = (task.n_weighted < 2 * static_cast<std::int64_t>(hp.min_samples_leaf));

        SplitCandidate best;
        if (!pure && !depth_capped && !too_small) {
            // Sample k candidate columns without replacement. The pool keeps
            // its permuted state across nodes; a partial Fisher-Yates pass is
            // a uniform draw regardless of the starting arrangement.
            for (std::int64_t i = 0; i < k; ++i) {
                const std::int64_t j = rng.uniform_int(i, d - 1);
                std::swap(scratch.feature_pool[static_cast<std::size_t>(i)],
                          scratch.feature_pool[static_cast<std::size_t>(j)]);
            }
            std::span<const std::int32_t> rows(scratch.row_index.data() + task.begin,
                                               static_cast<std::size_t>(task.end - task.begin));
            for (std::int64_t i = 0; i < k; ++i) {
                const std::int32_t col = scratch.feature_pool[static_cast<std::size_t>(i)];
                scan_column(Xt.row(col), rows, wspan, y, col, task.n_weighted, task.pos_weighted,
                            hp.min_samples_leaf, scratch.gathered, best);
            }
            if (best.found) {
                // Require a strict impurity decrease over the unsplit node.
                const std::int64_t parent_num =
                    task.pos_weighted * task.pos_weighted +
                    (task.n_weighted - task.pos_weighted) * (task.n_weighted - task.pos_weighted);
                const __int128 lhs = static_cast<__int128>(best.num) * task.n_weighted;
                const __int128 rhs = static_cast<__int128>(parent_num) * best.den;
                if (lhs <= rhs) best.found = false;
            }
        }

        if (!best.found) {
            node.feature = -1;
            node.leaf_fraction =
                static_cast<double>(task.pos_weighted) / static_cast<double>(task.n_weighted);
            continue;
        }

        auto* base = scratch.row_index.data();
        const auto best_col = Xt.row(best.feature);
        auto* mid = std::stable_partition(base + task.begin, base + task.end, [&](std::int32_t r) {
            return best_col[static_cast<std::size_t>(r)] <= best.threshold;
        });
        const std::int32_t split_at = static_cast<std::int32_t>(mid - base);

        std::int64_t left_n = 0, left_pos = 0;
        for (std::int32_t i = task.begin; i < split_at; ++i) {
            const std::int32_t r = base[i];
            const std::int32_t wr = hp.bootstrap ? weights[static_cast<std::size_t>(r)] : 1;
            left_n += wr;
            left_pos += y[static_cast<std::size_t>(r)] ? wr : 0;
        }

        const std::int32_t left_id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::int32_t right_id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        TreeNode& parent = tree.nodes[static_cast<std::size_t>(task.node_id)];
        parent.feature = best.feature;
        parent.threshold = best.threshold;
        parent.left = left_id;
        parent.right = right_id;

        stack.push_back({split_at, task.end, right_id, task.depth + 1, task.n_weighted - left_n,
                         task.pos_weighted - left_pos});
        stack.push_back({task.begin, split_at, left_id, task.depth + 1, left_n, left_pos});
    }
    return tree;
}

}  // namespace detail

// Random forest of Gini-split binary trees. Deterministic given the seed:
// tree t draws all of its randomness from mix_seed(seed, t), so trees can be
// grown in any order (or in parallel) with identical results.
inline ForestModel fit_forest(const Matrix& X, std::span<const std::int8_t> y,
                              const HyperParams& hp, std::uint64_t seed) {
    if (X.rows < 2 || static_cast<std::size_t>(X.rows) != y.size())
        throw TrainError("fit_forest: need at least 2 rows with matching labels");
    if (X.cols < 1) throw TrainError("fit_forest: need at least one feature column");
    if (hp.n_trees < 1 || hp.min_samples_leaf < 1 || hp.max_features_fraction <= 0.0 ||
        hp.max_features_fraction > 1.0)
        throw TrainError("fit_forest: invalid hyperparameters " + hp.to_string());

    ForestModel model;
    model.n_columns = X.cols;
    model.seed = seed;

    std::int64_t pos = 0;
    for (auto v : y) pos += (v != 0);
    if (pos == 0 || pos == static_cast<std::int64_t>(y.size())) {
        // Single-class training: constant model at class prevalence.
        model.degenerate = true;
        Tree t;
        t.nodes.push_back(TreeNode{-1, 0.0, -1, -1, pos == 0 ? 0.0 : 1.0,
                                   static_cast<std::int32_t>(y.size())});
        model.trees.assign(static_cast<std::size_t>(hp.n_trees), t);
        return model;
    }

    // One transposed copy per fit keeps candidate-column gathers contiguous.
    Matrix Xt(X.cols, X.rows);
    for (std::int64_t r = 0; r < X.rows; ++r)
        for (std::int64_t c = 0; c < X.cols; ++c) Xt.at(c, r) = X.at(r, c);

    model.trees.resize(static_cast<std::size_t>(hp.n_trees));
    detail::TreeBuildScratch scratch;
    for (int t = 0; t < hp.n_trees; ++t)
        model.trees[static_cast<std::size_t>(t)] =
            detail::grow_tree(Xt, y, hp, mix_seed(seed, static_cast<std::uint64_t>(t)), scratch);
    return model;
}

inline std::vector<double> predict_proba(const ForestModel& model, const Matrix& X) {
    if (X.cols != model.n_columns)
        throw PredictError("predict_proba: matrix has " + std::to_string(X.cols) +
                           " columns, model was trained on " + std::to_string(model.n_columns));
    std::vector<double> scores(static_cast<std::size_t>(X.rows), 0.0);
    for (std::int64_t r = 0; r < X.rows; ++r) {
        double sum = 0.0;
        for (const Tree& t : model.trees) sum += t.predict(X.row(r));
        scores[static_cast<std::size_t>(r)] = sum / static_cast<double>(model.trees.size());
    }
    return scores;
}

// Deterministic stratified k-fold assignment: shuffle each class, deal
// round-robin. Fold class counts stay within one sample of the global ratio.
inline std::vector<int> stratified_folds(std::span<const std::int8_t> y, int k, std::uint64_t seed) {
    std::vector<std::int64_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i)
        (y[i] ? pos : neg).push_back(static_cast<std::int64_t>(i));
    if (static_cast<int>(pos.size()) < k || static_cast<int>(neg.size()) < k)
        throw TrainError("stratified_folds: each class needs at least k=" + std::to_string(k) +
                         " members (have " + std::to_string(pos.size()) + " positive, " +
                         std::to_string(neg.size()) + " negative)");
    Rng rng(seed);
    auto shuffle = [&](std::vector<std::int64_t>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    };
    shuffle(pos);
    shuffle(neg);
    std::vector<int> fold(y.size(), 0);
    for (std::size_t i = 0; i < pos.size(); ++i) fold[static_cast<std::size_t>(pos[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < neg.size(); ++i) fold[static_cast<std::size_t>(neg[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
    return fold;
}

// Mean held-out AUROC over a deterministic stratified k-fold partition.
inline double cross_val_auroc(const Matrix& X, std::span<const std::int8_t> y, const HyperParams& hp,
                              int k, std::uint64_t seed) {
    const auto fold = stratified_folds(y, k, mix_seed(seed, 0xf01d5ULL));
    double sum = 0.0;
    for (int f = 0; f < k; ++f) {
        std::vector<std::int64_t> train_idx, val_idx;
        for (std::size_t i = 0; i < y.size(); ++i)
            (fold[i] == f ? val_idx : train_idx).push_back(static_cast<std::int64_t>(i));
        const Matrix Xtr = X.select_rows(train_idx);
        const Matrix Xval = X.select_rows(val_idx);
        std::vector<std::int8_t> ytr, yval;
        ytr.reserve(train_idx.size());
        yval.reserve(val_idx.size());
        for (auto i : train_idx) ytr.push_back(y[static_cast<std::size_t>(i)]);
        for (auto i : val_idx) yval.push_back(y[static_cast<std::size_t>(i)]);
        const ForestModel m = fit_forest(Xtr, ytr, hp, mix_seed(seed, 100 + static_cast<std::uint64_t>(f)));
        const auto scores = predict_proba(m, Xval);
        std::vector<int> yi(yval.begin(), yval.end());
        sum += auroc(scores, yi);
    }
    return sum / static_cast<double>(k);
}

struct SearchSpace {
    std::vector<int> n_trees{50, 100, 200};
    std::vector<int> max_depth{4, 8, 16, 0};
    std::vector<int> min_samples_leaf{1, 5, 20};
    std::vector<double> max_features_fraction{0.1, 0.33, 1.0};
    std::vector<int> bootstrap{1};
    int n_iter = 12;
};

struct SearchResult {
    HyperParams best;
    double best_cv_auroc = 0.0;
    std::vector<std::pair<HyperParams, double>> evaluated;
};

// Uniform random search over the candidate lists; every candidate is scored
// with cross_val_auroc on the same fold partition. Ties keep the earliest
// sampled candidate.
inline SearchResult random_search(const Matrix& X, std::span<const std::int8_t> y,
                                  const SearchSpace& space, int k, std::uint64_t seed) {
    if (space.n_iter < 1 || space.n_trees.empty() || space.max_depth.empty() ||
        space.min_samples_leaf.empty() || space.max_features_fraction.empty() ||
        space.bootstrap.empty())
        throw TrainError("random_search: search space must be non-empty");

    Rng rng(mix_seed(seed, 0x5ea1cULL));
    const std::uint64_t cv_seed = mix_seed(seed, 0xc01dULL);

    SearchResult result;
    bool have_best = false;
    std::string last_error = "no candidates evaluated";
    for (int it = 0; it < space.n_iter; ++it) {
        HyperParams hp;
        hp.n_trees = space.n_trees[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(space.n_trees.size()) - 1))];
        hp.max_depth = space.max_depth[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(space.max_depth.size()) - 1))];
        hp.min_samples_leaf = space.min_samples_leaf[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(space.min_samples_leaf.size()) - 1))];
        hp.max_features_fraction = space.max_features_fraction[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(space.max_features_fraction.size()) - 1))];
        hp.bootstrap = space.bootstrap[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(space.bootstrap.size()) - 1))] != 0;

        double score;
        try {
            score = cross_val_auroc(X, y, hp, k, cv_seed);
        } catch (const Error& e) {
            last_error = e.what();
            continue;
        }
        result.evaluated.emplace_back(hp, score);
        if (!have_best || score > result.best_cv_auroc) {
            have_best = true;
            result.best = hp;
            result.best_cv_auroc = score;
        }
    }
    if (!have_best) throw TrainError("random_search: every candidate failed; last error: " + last_error);
    return result;
}

// Debug-oriented flat text dump, one node per line. Not a stable
// interchange format.
inline void serialize_model(const ForestModel& model, std::ostream& out) {
    out << "forest trees=" << model.trees.size() << " columns=" << model.n_columns
        << " seed=" << model.seed << " degenerate=" << (model.degenerate ? 1 : 0) << "\n";
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        out << "tree " << t << " nodes=" << model.trees[t].nodes.size() << "\n";
        const auto& nodes = model.trees[t].nodes;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const TreeNode& nd = nodes[i];
            if (nd.is_leaf())
                out << i << " leaf " << fmt_double(nd.leaf_fraction) << " " << nd.count << "\n";
            else
                out << i << " split " << nd.feature << " " << fmt_double(nd.threshold) << " "
                    << nd.left << " " << nd.right << "\n";
        }
    }
}

inline std::string serialize_model(const ForestModel& model) {
    std::ostringstream ss;
    serialize_model(model, ss);
    return ss.str();
}

}  // namespace driftbench
