#pragma once

#include "rails/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace rails {

using Index = Eigen::Index;
using Dense = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Triplet {
    Index row;
    Index col;
    double value;
};

/// Matrix-vector product bookkeeping. One count per column product, kept
/// separately for plain products with the drift operator (mvp) and for
/// sparse solves (imvp).
struct OpCounters {
    std::size_t mvp = 0;
    std::size_t imvp = 0;
};

/// Worker cap for column-parallel kernels; RAILS_THREADS overrides the
/// hardware default.
inline unsigned thread_count()
{
    static const unsigned count = [] {
        unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("RAILS_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end != env && v >= 1) return static_cast<unsigned>(std::min<long>(v, hw));
        }
        return hw;
    }();
    return count;
}

/// Runs fn(first_col, n_cols) over disjoint column ranges. Each range is
/// written by exactly one worker, so results do not depend on the split.
template <class Fn>
void for_column_blocks(Index n_cols, Index min_block, Fn&& fn)
{
    unsigned workers = thread_count();
    if (workers <= 1 || n_cols < 2 * min_block) {
        if (n_cols > 0) fn(Index{0}, n_cols);
        return;
    }
    Index blocks = std::min<Index>(workers, n_cols / min_block);
    Index width = (n_cols + blocks - 1) / blocks;
    std::vector<std::thread> pool;
    for (Index start = width; start < n_cols; start += width)
        pool.emplace_back([&fn, start, width, n_cols] { fn(start, std::min(width, n_cols - start)); });
    fn(Index{0}, std::min(width, n_cols));
    for (auto& t : pool) t.join();
}

/// Compressed row-major sparse matrix with finite entries and no duplicate
/// coordinates. Duplicate triplets are summed on construction.
class SparseMatrix {
public:
    using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    SparseMatrix() = default;

    SparseMatrix(Index n_rows, Index n_cols, std::span<const Triplet> entries)
    {
        require(n_rows >= 0 && n_cols >= 0, ErrorKind::invalid_argument, "negative sparse dimensions");
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(entries.size());
        for (const auto& t : entries) {
            require(t.row >= 0 && t.row < n_rows && t.col >= 0 && t.col < n_cols, ErrorKind::invalid_argument,
                    "sparse index (" + std::to_string(t.row) + ", " + std::to_string(t.col) + ") out of range");
            require(std::isfinite(t.value), ErrorKind::invalid_argument, "non-finite sparse entry");
            trips.emplace_back(t.row, t.col, t.value);
        }
        data_.resize(n_rows, n_cols);
        data_.setFromTriplets(trips.begin(), trips.end());
        data_.makeCompressed();
    }

    explicit SparseMatrix(Storage data) : data_(std::move(data))
    {
        data_.makeCompressed();
        const double* v = data_.valuePtr();
        for (Index k = 0; k < data_.nonZeros(); ++k)
            require(std::isfinite(v[k]), ErrorKind::invalid_argument, "non-finite sparse entry");
    }

    static SparseMatrix identity(Index n)
    {
        Storage s(n, n);
        s.setIdentity();
        return SparseMatrix(std::move(s));
    }

    /// Keeps entries with |value| > drop_tol.
    static SparseMatrix from_dense(const Dense& d, double drop_tol = 0.0)
    {
        std::vector<Triplet> t;
        for (Index i = 0; i < d.rows(); ++i)
            for (Index j = 0; j < d.cols(); ++j)
                if (std::abs(d(i, j)) > drop_tol) t.push_back({i, j, d(i, j)});
        return SparseMatrix(d.rows(), d.cols(), t);
    }

    Index rows() const noexcept { return data_.rows(); }
    Index cols() const noexcept { return data_.cols(); }
    Index nnz() const noexcept { return data_.nonZeros(); }
    const Storage& storage() const noexcept { return data_; }

    Dense to_dense() const { return Dense(data_); }

    SparseMatrix transposed() const { return SparseMatrix(Storage(data_.transpose())); }

    /// Entries in row-major order.
    std::vector<Triplet> triplets() const
    {
        std::vector<Triplet> out;
        out.reserve(static_cast<std::size_t>(nnz()));
        for (Index i = 0; i < data_.outerSize(); ++i)
            for (Storage::InnerIterator it(data_, i); it; ++it) out.push_back({it.row(), it.col(), it.value()});
        return out;
    }

    /// Largest absolute entry per row (0 for empty rows).
    Vector row_max_abs() const
    {
        Vector m = Vector::Zero(rows());
        for (Index i = 0; i < data_.outerSize(); ++i)
            for (Storage::InnerIterator it(data_, i); it; ++it) m(i) = std::max(m(i), std::abs(it.value()));
        return m;
    }

    double max_abs() const
    {
        double m = 0.0;
        const double* v = data_.valuePtr();
        for (Index k = 0; k < data_.nonZeros(); ++k) m = std::max(m, std::abs(v[k]));
        return m;
    }

    /// The submatrix selected by (sorted or unsorted) row and column index lists.
    SparseMatrix submatrix(std::span<const Index> row_idx, std::span<const Index> col_idx) const
    {
        std::vector<Index> col_map(static_cast<std::size_t>(cols()), -1);
        for (std::size_t j = 0; j < col_idx.size(); ++j) col_map[static_cast<std::size_t>(col_idx[j])] = static_cast<Index>(j);
        std::vector<Triplet> t;
        for (std::size_t i = 0; i < row_idx.size(); ++i)
            for (Storage::InnerIterator it(data_, row_idx[i]); it; ++it) {
                Index c = col_map[static_cast<std::size_t>(it.col())];
                if (c >= 0) t.push_back({static_cast<Index>(i), c, it.value()});
            }
        return SparseMatrix(static_cast<Index>(row_idx.size()), static_cast<Index>(col_idx.size()), t);
    }

private:
    Storage data_;
};

/// A·X or Aᵀ·X. Adds one mvp per column of X to `counters` when given.
inline Dense sparse_apply(const SparseMatrix& a, const Dense& x, bool transpose, OpCounters* counters = nullptr)
{
    Index inner = transpose ? a.rows() : a.cols();
    Index outer = transpose ? a.cols() : a.rows();
    require(x.rows() == inner, ErrorKind::dimension_mismatch,
            "sparse_apply: operand has " + std::to_string(x.rows()) + " rows, expected " + std::to_string(inner));
    Dense y(outer, x.cols());
    for_column_blocks(x.cols(), 8, [&](Index c0, Index w) {
        if (transpose)
            y.middleCols(c0, w).noalias() = a.storage().transpose() * x.middleCols(c0, w);
        else
            y.middleCols(c0, w).noalias() = a.storage() * x.middleCols(c0, w);
    });
    if (counters) counters->mvp += static_cast<std::size_t>(x.cols());
    return y;
}

inline bool all_finite(const Dense& m) { return m.allFinite(); }

} // namespace rails
