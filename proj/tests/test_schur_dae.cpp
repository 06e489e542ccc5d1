#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace rails;

namespace {

SparseMatrix sp(const Dense& d) { return SparseMatrix::from_dense(d); }

Dense diag(std::initializer_list<double> v)
{
    Vector d(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) d(i++) = x;
    return d.asDiagonal();
}

} // namespace

TEST(Partition, TwoByTwoSplit)
{
    Dense b(2, 1);
    b << 0, 1;
    auto sys = partition(sp(-Dense::Identity(2, 2)), sp(diag({0, 1})), b);
    ASSERT_EQ(sys.algebraic_rows, std::vector<Index>{0});
    EXPECT_DOUBLE_EQ(sys.a11.to_dense()(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(sys.m22.to_dense()(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(sys.b2(0, 0), 1.0);
}

TEST(Partition, IdentityMassIsPassThrough)
{
    auto sys = partition(sp(oracle::random_stable(4, 1)), SparseMatrix::identity(4), Dense::Ones(4, 1));
    EXPECT_TRUE(sys.pass_through());
    const Dense x = oracle::random_matrix(4, 2, 2);
    EXPECT_LT((schur_apply(sys, x, false) - sys.a22.to_dense() * x).norm(), 1e-14);
}

TEST(Partition, ForcingOnConstraint)
{
    try {
        partition(sp(-Dense::Identity(2, 2)), sp(diag({0, 1})), Dense::Ones(2, 1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::forcing_on_constraint);
    }
}

TEST(Partition, SingularA11)
{
    Dense a(2, 2);
    a << 0, 1, 1, -1;
    Dense b(2, 1);
    b << 0, 1;
    try {
        partition(sp(a), sp(diag({0, 1})), b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::reduction_impossible);
    }
}

TEST(Partition, ZeroTolerance)
{
    Dense b(2, 1);
    b << 0, 1;
    auto strict = partition(sp(-Dense::Identity(2, 2)), sp(diag({1e-14, 1})), b);
    EXPECT_TRUE(strict.pass_through());
    PartitionOptions opts;
    opts.zero_tol = 1e-12;
    auto loose = partition(sp(-Dense::Identity(2, 2)), sp(diag({1e-14, 1})), b, opts);
    EXPECT_EQ(loose.n_algebraic(), 1);
}

TEST(SchurApply, DecoupledBlocks)
{
    Dense b(2, 1);
    b << 0, 1;
    auto sys = partition(sp(-Dense::Identity(2, 2)), sp(diag({0, 1})), b);
    EXPECT_DOUBLE_EQ(schur_apply(sys, Dense::Ones(1, 1), false)(0, 0), -1.0);
}

TEST(SchurApply, CoupledTwoByTwo)
{
    Dense a(2, 2);
    a << 2, 1, 1, -3;
    Dense b(2, 1);
    b << 0, 1;
    auto sys = partition(sp(a), sp(diag({0, 1})), b);
    OpCounters c;
    EXPECT_NEAR(schur_apply(sys, Dense::Ones(1, 1), false, &c)(0, 0), -3.5, 1e-15);
    EXPECT_EQ(c.mvp, 1u);
    EXPECT_EQ(c.imvp, 1u);
}

TEST(SchurApply, MatchesExplicitComplementBothDirections)
{
    const Index na = 6, nd = 14, n = na + nd;
    Dense a = oracle::random_matrix(n, n, 3);
    a.topLeftCorner(na, na) += 5.0 * Dense::Identity(na, na);
    Dense m = Dense::Zero(n, n);
    m.bottomRightCorner(nd, nd) = oracle::random_spd(nd, 4);
    Dense b = Dense::Zero(n, 2);
    b.bottomRows(nd) = oracle::random_matrix(nd, 2, 5);
    auto sys = partition(sp(a), sp(m), b);
    const Dense s = oracle::explicit_schur(a, na);
    const Dense x = oracle::random_matrix(nd, 3, 6);
    EXPECT_LT((schur_apply(sys, x, false) - s * x).norm(), 1e-10 * s.norm());
    EXPECT_LT((schur_apply(sys, x, true) - s.transpose() * x).norm(), 1e-10 * s.norm());
}

TEST(SchurApply, ZeroCouplingGivesA22)
{
    auto p = testproblems::gen_dae(5, 3, 0.0, 1.0, 7);
    Dense b = Dense::Zero(8, 1);
    b(5, 0) = 1.0;
    auto sys = partition(p.a, p.m, b);
    const Dense x = oracle::random_matrix(5, 2, 8);
    EXPECT_LT((schur_apply(sys, x, false) - sys.a22.to_dense() * x).norm(), 1e-15);
}

TEST(SchurOperator, InverseMatchesExplicit)
{
    auto p = testproblems::gen_dae(12, 4, 0.7, 1.0, 9);
    Dense b = Dense::Zero(16, 1);
    b(p.sites[0], 0) = 1.0;
    auto sys = std::make_shared<const DaeSystem>(partition(p.a, p.m, b));
    SchurOperator op(sys);
    op.prepare_inverse();
    const Dense s = oracle::explicit_schur(p.a.to_dense(), 4);
    const Dense x = oracle::random_matrix(12, 2, 10);
    OpCounters c;
    EXPECT_LT((op.solve(x, &c) - s.partialPivLu().solve(x)).norm(), 1e-10);
    EXPECT_EQ(c.imvp, 2u);
}

TEST(Recover, DecoupledConstraintGivesZeroBlocks)
{
    auto p = testproblems::gen_dae(4, 2, 0.0, 1.0, 11);
    Dense b = Dense::Zero(6, 1);
    b(2, 0) = 1.0;
    auto sys = partition(p.a, p.m, b);
    LowRankSolution c22{orthonormalize(oracle::random_matrix(4, 2, 12)).q, Dense::Identity(2, 2)};
    const Dense full = recover_full_covariance(sys, c22).dense();
    EXPECT_LT(full.topRows(2).norm(), 1e-15);
    EXPECT_LT((full.bottomRightCorner(4, 4) - c22.dense()).norm(), 1e-14);
}

TEST(Recover, ZeroCoreGivesZero)
{
    auto p = testproblems::gen_dae(4, 2, 0.5, 1.0, 13);
    Dense b = Dense::Zero(6, 1);
    b(2, 0) = 1.0;
    auto sys = partition(p.a, p.m, b);
    LowRankSolution c22{orthonormalize(oracle::random_matrix(4, 2, 14)).q, Dense::Zero(2, 2)};
    EXPECT_EQ(recover_full_covariance(sys, c22).dense().norm(), 0.0);
}

TEST(Recover, IdentitiesInOriginalOrdering)
{
    // Interleave algebraic rows among differential ones.
    const Index n = 9;
    Dense a = oracle::random_stable(n, 15);
    const std::vector<Index> alg{1, 4, 7};
    Dense m = Dense::Identity(n, n);
    for (Index r : alg) {
        m(r, r) = 0.0;
        a(r, r) -= 4.0;
    }
    Dense b = Dense::Zero(n, 1);
    b(0, 0) = 1.0;
    auto sys = partition(sp(a), sp(m), b);
    ASSERT_EQ(sys.algebraic_rows, alg);
    LowRankSolution c22{orthonormalize(oracle::random_matrix(6, 3, 16)).q, oracle::random_spd(3, 17)};
    const LowRankSolution full = recover_full_covariance(sys, c22);
    EXPECT_LT(full.orthonormality_error(), 1e-13);
    const Dense c = full.dense();
    // Algebraic rows of A applied to C vanish: [A11 A12] rows of the full covariance.
    for (Index r : alg) EXPECT_LT((a.row(r) * c).norm(), 1e-12 * c.norm());
}
