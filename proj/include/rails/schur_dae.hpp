#pragma once

// Block reduction of a differential-algebraic triple (A, M, B) where M has
// zero rows on the algebraic variables:
//
//   [0  0  ] d[x1]   [A11 A12] [x1]      [0 ]
//   [0  M22] d[x2] = [A21 A22] [x2] dt + [B2] dW
//
// The algebraic part gives x1 = -A11⁻¹ A12 x2, and x2 follows the
// Ornstein-Uhlenbeck process driven by S = A22 - A21 A11⁻¹ A12.

#include "rails/low_rank.hpp"
#include "rails/operators.hpp"

#include <Eigen/QR>

#include <memory>
#include <vector>

namespace rails {

struct PartitionOptions {
    /// Rows of M with max |entry| <= zero_tol are algebraic.
    double zero_tol = 0.0;
    /// Interpret zero_tol relative to max |M| (and max |B| for the forcing check).
    bool relative = false;
};

struct DaeSystem {
    Index n = 0;
    std::vector<Index> algebraic_rows;
    std::vector<Index> differential_rows;
    SparseMatrix a11, a12, a21, a22;
    SparseMatrix m22;
    Dense b2;
    std::shared_ptr<const SparseLuFactor> a11_lu;
    std::shared_ptr<const SparseLuFactor> m22_lu;

    Index n_algebraic() const noexcept { return static_cast<Index>(algebraic_rows.size()); }
    Index n_differential() const noexcept { return static_cast<Index>(differential_rows.size()); }
    bool pass_through() const noexcept { return algebraic_rows.empty(); }

    /// [A11 A12; A21 A22] in partitioned ordering.
    SparseMatrix partitioned_a() const
    {
        const Index na = n_algebraic();
        std::vector<Triplet> t;
        auto put = [&t](const SparseMatrix& blk, Index r0, Index c0) {
            for (const auto& e : blk.triplets()) t.push_back({e.row + r0, e.col + c0, e.value});
        };
        put(a11, 0, 0);
        put(a12, 0, na);
        put(a21, na, 0);
        put(a22, na, na);
        return SparseMatrix(n, n, t);
    }
};

inline DaeSystem partition(const SparseMatrix& a, const SparseMatrix& m, const Dense& b, const PartitionOptions& opts = {})
{
    const Index n = a.rows();
    require(a.cols() == n && m.rows() == n && m.cols() == n, ErrorKind::dimension_mismatch,
            "partition: A and M must be square of equal size");
    require(b.rows() == n, ErrorKind::dimension_mismatch, "partition: B row count must match A");
    require(opts.zero_tol >= 0.0, ErrorKind::invalid_argument, "partition: zero_tol must be nonnegative");

    const double m_tol = opts.relative ? opts.zero_tol * m.max_abs() : opts.zero_tol;
    const double b_tol = opts.relative ? opts.zero_tol * b.cwiseAbs().maxCoeff() : opts.zero_tol;

    DaeSystem sys;
    sys.n = n;
    const Vector row_max = m.row_max_abs();
    for (Index i = 0; i < n; ++i) (row_max(i) <= m_tol ? sys.algebraic_rows : sys.differential_rows).push_back(i);

    for (Index i : sys.algebraic_rows)
        for (Index j = 0; j < b.cols(); ++j)
            if (std::abs(b(i, j)) > b_tol)
                throw Error(ErrorKind::forcing_on_constraint,
                            "B has entry " + std::to_string(b(i, j)) + " on algebraic row " + std::to_string(i) +
                                " (column " + std::to_string(j) + ")");

    const auto& alg = sys.algebraic_rows;
    const auto& dif = sys.differential_rows;
    if (!alg.empty()) {
        SparseMatrix m21 = m.submatrix(dif, alg);
        for (const auto& e : m21.triplets())
            if (std::abs(e.value) > m_tol)
                throw Error(ErrorKind::reduction_impossible, "M couples differential row " + std::to_string(dif[e.row]) +
                                                                 " to algebraic column " + std::to_string(alg[e.col]));
    }

    sys.a11 = a.submatrix(alg, alg);
    sys.a12 = a.submatrix(alg, dif);
    sys.a21 = a.submatrix(dif, alg);
    sys.a22 = a.submatrix(dif, dif);
    sys.m22 = m.submatrix(dif, dif);
    sys.b2.resize(static_cast<Index>(dif.size()), b.cols());
    for (std::size_t i = 0; i < dif.size(); ++i) sys.b2.row(static_cast<Index>(i)) = b.row(dif[i]);

    try {
        sys.a11_lu = std::make_shared<const SparseLuFactor>(sys.a11);
    } catch (const Error& e) {
        throw Error(ErrorKind::reduction_impossible, std::string("A11 is singular: ") + e.what());
    }
    try {
        sys.m22_lu = std::make_shared<const SparseLuFactor>(sys.m22);
    } catch (const Error& e) {
        throw Error(ErrorKind::reduction_impossible, std::string("M22 is singular: ") + e.what());
    }
    return sys;
}

/// S·X or Sᵀ·X without forming S: one A12 product, one A11 solve, one A21
/// product and one A22 product. Counts one mvp per column, plus one imvp per
/// column when there is an algebraic block to solve with.
inline Dense schur_apply(const DaeSystem& sys, const Dense& x, bool transpose, OpCounters* counters = nullptr)
{
    require(x.rows() == sys.n_differential(), ErrorKind::dimension_mismatch,
            "schur_apply: operand must have differential-row dimension");
    Dense y = sparse_apply(sys.a22, x, transpose);
    if (!sys.pass_through()) {
        if (!transpose) {
            Dense z = sys.a11_lu->solve(sparse_apply(sys.a12, x, false));
            y -= sparse_apply(sys.a21, z, false);
        } else {
            Dense z = sys.a11_lu->solve_transpose(sparse_apply(sys.a21, x, true));
            y -= sparse_apply(sys.a12, z, true);
        }
        if (counters) counters->imvp += static_cast<std::size_t>(x.cols());
    }
    if (counters) counters->mvp += static_cast<std::size_t>(x.cols());
    return y;
}

/// The Schur complement as a drift operator. Its inverse S⁻¹x is the x2 part
/// of the full solve [A11 A12; A21 A22][y1; y2] = [0; x].
class SchurOperator final : public LinearOperator {
public:
    explicit SchurOperator(std::shared_ptr<const DaeSystem> sys) : sys_(std::move(sys)) {}

    Index dimension() const override { return sys_->n_differential(); }
    const DaeSystem& system() const noexcept { return *sys_; }

    Dense apply(const Dense& x, bool transpose, OpCounters* counters) const override
    {
        return schur_apply(*sys_, x, transpose, counters);
    }

    bool has_inverse() const override { return full_lu_ != nullptr; }

    void prepare_inverse() override
    {
        if (!full_lu_) full_lu_ = std::make_shared<const SparseLuFactor>(sys_->partitioned_a());
    }

    Dense solve(const Dense& x, OpCounters* counters) const override
    {
        require(full_lu_ != nullptr, ErrorKind::invalid_argument, "inverse requested before prepare_inverse()");
        require(x.rows() == dimension(), ErrorKind::dimension_mismatch, "Schur solve: operand dimension mismatch");
        const Index na = sys_->n_algebraic();
        Dense rhs = Dense::Zero(sys_->n, x.cols());
        rhs.bottomRows(x.rows()) = x;
        if (counters) counters->imvp += static_cast<std::size_t>(x.cols());
        return full_lu_->solve(rhs).bottomRows(sys_->n - na);
    }

private:
    std::shared_ptr<const DaeSystem> sys_;
    std::shared_ptr<const SparseLuFactor> full_lu_;
};

/// Lifts C22 = V T Vᵀ to the full covariance W T Wᵀ with
/// W = [-A11⁻¹A12 V ; V] in the original row order. W is re-orthonormalized
/// as W = Q R and the core becomes R T Rᵀ.
inline LowRankSolution recover_full_covariance(const DaeSystem& sys, const LowRankSolution& c22)
{
    check_consistent(c22);
    require(c22.dimension() == sys.n_differential(), ErrorKind::dimension_mismatch,
            "recover_full_covariance: solution must live on the differential rows");
    if (sys.pass_through()) return c22;

    const Index d = c22.rank();
    if (d == 0) return LowRankSolution::empty(sys.n);

    const Dense y = -sys.a11_lu->solve(sparse_apply(sys.a12, c22.v, false));
    Dense w(sys.n, d);
    for (std::size_t i = 0; i < sys.algebraic_rows.size(); ++i) w.row(sys.algebraic_rows[i]) = y.row(static_cast<Index>(i));
    for (std::size_t i = 0; i < sys.differential_rows.size(); ++i)
        w.row(sys.differential_rows[i]) = c22.v.row(static_cast<Index>(i));

    Eigen::HouseholderQR<Dense> qr(w);
    Dense q = qr.householderQ() * Dense::Identity(sys.n, d);
    Dense r = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    Dense t = r * c22.t * r.transpose();
    return {std::move(q), 0.5 * (t + t.transpose())};
}

} // namespace rails
