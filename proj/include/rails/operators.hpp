#pragma once

#include "rails/matrix_core.hpp"

#include <Eigen/SparseLU>

#include <memory>

namespace rails {

/// Sparse LU (COLAMD ordering) of a square matrix, computed once and shared.
class SparseLuFactor {
public:
    using Solver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

    explicit SparseLuFactor(const SparseMatrix& a) : n_(a.rows()), lu_(std::make_unique<Solver>())
    {
        require(a.rows() == a.cols(), ErrorKind::dimension_mismatch, "LU factorization needs a square matrix");
        if (n_ == 0) return;
        Eigen::SparseMatrix<double> col_major(a.storage());
        col_major.makeCompressed();
        lu_->analyzePattern(col_major);
        lu_->factorize(col_major);
        if (lu_->info() != Eigen::Success)
            throw Error(ErrorKind::singular, "sparse LU failed: " + lu_->lastErrorMessage());
        Dense probe = Dense::Ones(n_, 1);
        require(solve(probe).allFinite(), ErrorKind::singular, "sparse LU produced non-finite solution");
    }

    Index dimension() const noexcept { return n_; }

    Dense solve(const Dense& b) const
    {
        require(b.rows() == n_, ErrorKind::dimension_mismatch, "LU solve: right-hand side row count mismatch");
        if (n_ == 0) return Dense(0, b.cols());
        Dense x = lu_->solve(b);
        return x;
    }

    Dense solve_transpose(const Dense& b) const
    {
        require(b.rows() == n_, ErrorKind::dimension_mismatch, "LU solve: right-hand side row count mismatch");
        if (n_ == 0) return Dense(0, b.cols());
        Dense x = lu_->transpose().solve(b);
        return x;
    }

private:
    Index n_;
    std::unique_ptr<Solver> lu_;
};

/// Linear action on dense blocks of vectors. Products with the drift
/// operator are counted by passing a counter; mass products pass nullptr.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;

    virtual Index dimension() const = 0;
    virtual Dense apply(const Dense& x, bool transpose, OpCounters* counters) const = 0;

    virtual bool has_inverse() const { return false; }
    /// Builds whatever factorization solve() needs; no-op if already built.
    virtual void prepare_inverse() {}
    virtual Dense solve(const Dense& /*x*/, OpCounters* /*counters*/) const
    {
        throw Error(ErrorKind::invalid_argument, "operator does not support inverse application");
    }
};

class SparseOperator final : public LinearOperator {
public:
    explicit SparseOperator(SparseMatrix a) : a_(std::move(a))
    {
        require(a_.rows() == a_.cols(), ErrorKind::dimension_mismatch, "operator matrix must be square");
    }

    Index dimension() const override { return a_.rows(); }
    const SparseMatrix& matrix() const noexcept { return a_; }

    Dense apply(const Dense& x, bool transpose, OpCounters* counters) const override
    {
        return sparse_apply(a_, x, transpose, counters);
    }

    bool has_inverse() const override { return lu_ != nullptr; }

    void prepare_inverse() override
    {
        if (!lu_) lu_ = std::make_shared<const SparseLuFactor>(a_);
    }

    Dense solve(const Dense& x, OpCounters* counters) const override
    {
        require(lu_ != nullptr, ErrorKind::invalid_argument, "inverse requested before prepare_inverse()");
        if (counters) counters->imvp += static_cast<std::size_t>(x.cols());
        return lu_->solve(x);
    }

private:
    SparseMatrix a_;
    std::shared_ptr<const SparseLuFactor> lu_;
};

} // namespace rails
