#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "driftbench/errors.hpp"

namespace driftbench {

// Tie-aware AUROC via the midrank formulation:
//   AUROC = (R+ - n1(n1+1)/2) / (n1 * n0)
// where R+ is the midrank sum of the positives. Equals the pairwise
// statistic that counts a win as 1 and a tie as 1/2.
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw MetricError("auroc: scores and labels must be non-empty and equal length");
    std::size_t n1 = 0;
    for (int y : labels) n1 += (y != 0);
    const std::size_t n0 = labels.size() - n1;
    if (n1 == 0 || n0 == 0) throw MetricError("auroc: undefined for single-class labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::size_t pos_in_group = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            pos_in_group += (labels[order[j]] != 0);
            ++j;
        }
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        rank_sum_pos += midrank * static_cast<double>(pos_in_group);
        i = j;
    }
    const double dn1 = static_cast<double>(n1);
    return (rank_sum_pos - dn1 * (dn1 + 1.0) / 2.0) / (dn1 * static_cast<double>(n0));
}

// Average precision with atomic tie groups: items of equal score are
// retrieved together, and every positive in a tied group receives the
// group-level precision.
inline double auprc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size() || scores.empty())
        throw MetricError("auprc: scores and labels must be non-empty and equal length");
    std::size_t total_pos = 0;
    for (int y : labels) total_pos += (y != 0);
    if (total_pos == 0) throw MetricError("auprc: undefined with zero positive labels");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    std::size_t depth = 0, tp = 0, i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        std::size_t pos_in_group = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            pos_in_group += (labels[order[j]] != 0);
            ++j;
        }
        depth += j - i;
        tp += pos_in_group;
        if (pos_in_group > 0)
            ap += static_cast<double>(pos_in_group) *
                  (static_cast<double>(tp) / static_cast<double>(depth));
        i = j;
    }
    return ap / static_cast<double>(total_pos);
}

// Sample standard deviation (n-1 denominator) over sqrt(n).
inline double standard_error(std::span<const double> values) {
    if (values.size() < 2) throw MetricError("standard_error: needs at least 2 values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
}

inline double mean_of(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) m += v;
    return values.empty() ? 0.0 : m / static_cast<double>(values.size());
}

struct WilcoxonResult {
    double statistic = 0.0;  // W = min(W+, W-)
    double p_value = 1.0;
    int n_effective = 0;
    enum class Method { exact, normal_approx } method = Method::exact;
};

inline std::string to_string(WilcoxonResult::Method m) {
    return m == WilcoxonResult::Method::exact ? "exact" : "normal-approximation";
}

namespace detail {

// Standard normal CDF.
inline double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Exact null distribution of W+ over all 2^n sign assignments, counted by a
// subset-sum table over doubled midranks (doubling makes half-integer
// midranks integral). Identical to brute-force enumeration, but O(n * T)
// instead of O(n * 2^n); counts stay below 2^n <= 2^25 so doubles hold them
// exactly.
inline std::vector<double> wplus_distribution(const std::vector<std::int64_t>& ranks2) {
    std::int64_t total = 0;
    for (auto r : ranks2) total += r;
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    std::int64_t reach = 0;
    for (auto r : ranks2) {
        reach += r;
        for (std::int64_t w = reach; w >= r; --w)
            ways[static_cast<std::size_t>(w)] += ways[static_cast<std::size_t>(w - r)];
    }
    return ways;
}

}  // namespace detail

// Wilcoxon signed-rank test on paired samples. Zero differences are
// discarded (classical policy), |d| is ranked with midranks, and
// W = min(W+, W-). Exact p-values (n_effective <= exact_cutoff) count the
// sign assignments with min(W+', W-') <= W; larger samples use the normal
// approximation with tie and continuity corrections. exact_cutoff exists so
// tests can force the approximation; callers should leave it alone.
inline WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                           bool two_sided = true, int exact_cutoff = 25) {
    if (a.size() != b.size() || a.empty())
        throw MetricError("wilcoxon_signed_rank: paired samples must be non-empty and equal length");

    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) throw MetricError("wilcoxon_signed_rank: no nonzero pairs");
    const int n = static_cast<int>(diffs.size());

    std::vector<std::size_t> order(diffs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::fabs(diffs[x]) < std::fabs(diffs[y]);
    });

    // Doubled midranks (integers even at .5 midranks) and the tie sizes.
    std::vector<std::int64_t> ranks2(diffs.size());
    std::vector<std::int64_t> tie_sizes;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && std::fabs(diffs[order[j]]) == std::fabs(diffs[order[i]])) ++j;
        const std::int64_t rank2 = static_cast<std::int64_t>(i + 1 + j);  // 2 * midrank
        for (std::size_t k = i; k < j; ++k) ranks2[order[k]] = rank2;
        tie_sizes.push_back(static_cast<std::int64_t>(j - i));
        i = j;
    }

    std::int64_t w2_plus = 0, total2 = 0;
    for (std::size_t k = 0; k < diffs.size(); ++k) {
        total2 += ranks2[k];
        if (diffs[k] > 0.0) w2_plus += ranks2[k];
    }
    const std::int64_t w2_minus = total2 - w2_plus;
    const std::int64_t w2 = std::min(w2_plus, w2_minus);

    WilcoxonResult res;
    res.n_effective = n;
    res.statistic = static_cast<double>(w2) / 2.0;

    if (n <= exact_cutoff) {
        res.method = WilcoxonResult::Method::exact;
        const auto ways = detail::wplus_distribution(ranks2);
        const double denom = std::ldexp(1.0, n);  // 2^n
        double count = 0.0;
        const std::int64_t cutoff = two_sided ? w2 : w2_minus;
        for (std::int64_t w = 0; w <= total2; ++w) {
            const std::int64_t stat = two_sided ? std::min(w, total2 - w) : total2 - w;
            if (stat <= cutoff) count += ways[static_cast<std::size_t>(w)];
        }
        res.p_value = count / denom;
    } else {
        res.method = WilcoxonResult::Method::normal_approx;
        const double dn = static_cast<double>(n);
        const double mu = dn * (dn + 1.0) / 4.0;
        double tie_term = 0.0;
        for (auto t : tie_sizes) {
            const double td = static_cast<double>(t);
            tie_term += td * td * td - td;
        }
        const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
        const double sd = std::sqrt(var);
        const double w = two_sided ? res.statistic : static_cast<double>(w2_minus) / 2.0;
        const double z = (w - mu + 0.5) / sd;
        res.p_value = std::min(1.0, (two_sided ? 2.0 : 1.0) * detail::phi(z));
    }
    return res;
}

}  // namespace driftbench
