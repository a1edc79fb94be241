#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace driftbench {

// Dense row-major matrix of doubles.
struct Matrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::int64_t r, std::int64_t c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {}

    double& at(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * cols + c)]; }
    double at(std::int64_t r, std::int64_t c) const { return data[static_cast<std::size_t>(r * cols + c)]; }

    std::span<double> row(std::int64_t r) {
        return {data.data() + r * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const double> row(std::int64_t r) const {
        return {data.data() + r * cols, static_cast<std::size_t>(cols)};
    }

    Matrix select_rows(std::span<const std::int64_t> idx) const {
        Matrix out(static_cast<std::int64_t>(idx.size()), cols);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const auto src = row(idx[i]);
            std::copy(src.begin(), src.end(), out.row(static_cast<std::int64_t>(i)).begin());
        }
        return out;
    }
};

template <typename T>
inline std::vector<T> select(const std::vector<T>& v, std::span<const std::int64_t> idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace driftbench
