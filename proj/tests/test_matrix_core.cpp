#include "oracles.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace rails;

namespace {

SparseMatrix sp(Index r, Index c, std::vector<Triplet> t) { return SparseMatrix(r, c, t); }

} // namespace

TEST(SparseMatrix, IdentityApplyIsNoOp)
{
    const Dense x = oracle::random_matrix(5, 3, 1);
    EXPECT_EQ(sparse_apply(SparseMatrix::identity(5), x, false), x);
    EXPECT_EQ(sparse_apply(SparseMatrix::identity(5), x, true), x);
}

TEST(SparseMatrix, ShiftMatrix)
{
    const auto a = sp(2, 2, {{0, 1, 1.0}});
    Dense e2 = Dense::Zero(2, 1);
    e2(1) = 1.0;
    Dense y = sparse_apply(a, e2, false);
    EXPECT_DOUBLE_EQ(y(0), 1.0);
    EXPECT_DOUBLE_EQ(y(1), 0.0);
    Dense e1 = Dense::Zero(2, 1);
    e1(0) = 1.0;
    EXPECT_EQ(sparse_apply(a, e1, true), e2);
}

TEST(SparseMatrix, DuplicatesSummedAndCountersAdvance)
{
    const auto a = sp(3, 3, {{0, 0, 1.0}, {0, 0, 2.0}, {2, 1, -1.5}});
    EXPECT_EQ(a.nnz(), 2);
    EXPECT_DOUBLE_EQ(a.to_dense()(0, 0), 3.0);
    OpCounters c;
    sparse_apply(a, Dense::Ones(3, 4), false, &c);
    EXPECT_EQ(c.mvp, 4u);
}

TEST(SparseMatrix, MatchesDenseProductLarge)
{
    const Dense d = oracle::random_matrix(300, 300, 2);
    const auto a = SparseMatrix::from_dense(d, 1.0);
    const Dense x = oracle::random_matrix(300, 37, 3);
    EXPECT_LT((sparse_apply(a, x, false) - a.to_dense() * x).norm(), 1e-10);
    EXPECT_LT((sparse_apply(a, x, true) - a.to_dense().transpose() * x).norm(), 1e-10);
}

TEST(SparseMatrix, RejectsBadEntries)
{
    EXPECT_THROW(sp(2, 2, {{2, 0, 1.0}}), Error);
    EXPECT_THROW(sp(2, 2, {{0, 0, std::nan("")}}), Error);
    EXPECT_THROW(sparse_apply(SparseMatrix::identity(3), Dense::Ones(2, 1), false), Error);
}

TEST(SparseMatrix, Submatrix)
{
    const auto a = SparseMatrix::from_dense((Dense(3, 3) << 1, 2, 3, 4, 5, 6, 7, 8, 9).finished());
    std::vector<Index> rows{2, 0}, cols{1};
    Dense s = a.submatrix(rows, cols).to_dense();
    ASSERT_EQ(s.rows(), 2);
    EXPECT_DOUBLE_EQ(s(0, 0), 8.0);
    EXPECT_DOUBLE_EQ(s(1, 0), 2.0);
}

TEST(MatrixMarket, CoordinateRoundTrip)
{
    const auto a = sp(3, 4, {{0, 0, 1.0 / 3.0}, {2, 3, -1e-300}, {1, 2, 12345.678}});
    std::stringstream s;
    mm::write_sparse(s, a);
    const auto b = mm::parse_sparse(s);
    EXPECT_EQ(b.rows(), 3);
    EXPECT_EQ(b.cols(), 4);
    EXPECT_EQ(b.to_dense(), a.to_dense());
}

TEST(MatrixMarket, ArrayRoundTripIsExact)
{
    const Dense d = oracle::random_matrix(7, 3, 4);
    std::stringstream s;
    mm::write_dense(s, d);
    EXPECT_EQ(mm::parse_dense(s), d);
}

TEST(MatrixMarket, SymmetricCommentsAndCase)
{
    std::stringstream s("%%MatrixMarket MATRIX Coordinate Real Symmetric\n% comment\n\n2 2 2\n1 1 4\n2 1 -1\n");
    const Dense d = mm::parse_sparse(s).to_dense();
    EXPECT_DOUBLE_EQ(d(0, 1), -1.0);
    EXPECT_DOUBLE_EQ(d(1, 0), -1.0);
    EXPECT_DOUBLE_EQ(d(0, 0), 4.0);
}

TEST(MatrixMarket, IntegerArrayField)
{
    std::stringstream s("%%MatrixMarket matrix array integer general\n2 1\n3\n-4\n");
    const Dense d = mm::parse_dense(s);
    EXPECT_DOUBLE_EQ(d(1, 0), -4.0);
}

TEST(MatrixMarket, MalformedInputsAreParseErrors)
{
    for (const char* text : {"", "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1\n",
                             "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n",
                             "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n",
                             "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n", "hello\n"}) {
        std::stringstream s(text);
        try {
            mm::parse_sparse(s);
            ADD_FAILURE() << "accepted: " << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::parse) << text;
        }
    }
}

TEST(MatrixMarket, MissingFileIsIoError)
{
    try {
        mm::read_sparse("/nonexistent/dir/A.mtx");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }
}

TEST(Orthonormalize, IdentityUnchanged)
{
    auto o = orthonormalize(Dense::Identity(3, 3));
    EXPECT_EQ(o.kept, 3);
    EXPECT_LT((o.q - Dense::Identity(3, 3)).norm(), 1e-15);
}

TEST(Orthonormalize, DuplicateColumnDeflated)
{
    Dense w = Dense::Zero(3, 2);
    w(0, 0) = w(0, 1) = 1.0;
    auto o = orthonormalize(w, 1e-8);
    EXPECT_EQ(o.kept, 1);
    EXPECT_NEAR(std::abs(o.q(0, 0)), 1.0, 1e-15);
}

TEST(Orthonormalize, RandomMatchesQrSpan)
{
    const Dense w = oracle::random_matrix(50, 8, 5);
    auto o = orthonormalize(w);
    ASSERT_EQ(o.kept, 8);
    EXPECT_LT((o.q.transpose() * o.q - Dense::Identity(8, 8)).norm(), 1e-12);
    EXPECT_LT(oracle::max_principal_sine(o.q, oracle::range_basis(w)), 1e-10);
}

TEST(Orthonormalize, AgainstExistingBasis)
{
    const Dense v = orthonormalize(oracle::random_matrix(30, 4, 6)).q;
    Dense w(30, 3);
    w << oracle::random_matrix(30, 2, 7), v.col(1);
    auto o = orthonormalize(w, v);
    EXPECT_EQ(o.kept, 2);
    EXPECT_LT((v.transpose() * o.q).norm(), 1e-13);
}

TEST(Lanczos, DiagonalOperator)
{
    const Vector d = (Vector(3) << 3, 1, 0).finished();
    SymmetricOperator op{3, [&d](const Vector& x) -> Vector { return x.cwiseProduct(d); }};
    auto r = lanczos_topk(op, 1, {});
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.pairs[0].value, 3.0, 1e-12);
    EXPECT_NEAR(std::abs(r.pairs[0].vector(0)), 1.0, 1e-10);
}

TEST(Lanczos, IdentityOperator)
{
    SymmetricOperator op{5, [](const Vector& x) { return x; }};
    auto r = lanczos_topk(op, 1, {});
    EXPECT_NEAR(r.pairs[0].value, 1.0, 1e-14);
    EXPECT_NEAR(r.pairs[0].vector.norm(), 1.0, 1e-14);
}

TEST(Lanczos, RandomSymmetricMatchesDense)
{
    const Dense g = oracle::random_matrix(40, 40, 8);
    const Dense s = g + g.transpose();
    SymmetricOperator op{40, [&s](const Vector& x) -> Vector { return s * x; }};
    LanczosOptions opts;
    opts.max_steps = 40;
    auto r = lanczos_topk(op, 3, opts);
    Eigen::SelfAdjointEigenSolver<Dense> eig(s);
    std::vector<double> ref(eig.eigenvalues().data(), eig.eigenvalues().data() + 40);
    std::sort(ref.begin(), ref.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    ASSERT_EQ(r.pairs.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.pairs[static_cast<std::size_t>(i)].value, ref[static_cast<std::size_t>(i)], 1e-8 * std::abs(ref[0]));
}

TEST(Lanczos, DeterministicGivenSeed)
{
    const Dense g = oracle::random_matrix(25, 25, 9);
    const Dense s = g * g.transpose();
    SymmetricOperator op{25, [&s](const Vector& x) -> Vector { return s * x; }};
    LanczosOptions opts;
    opts.seed = 42;
    auto a = lanczos_topk(op, 2, opts), b = lanczos_topk(op, 2, opts);
    EXPECT_EQ(a.pairs[0].vector, b.pairs[0].vector);
    EXPECT_EQ(a.pairs[1].value, b.pairs[1].value);
}

TEST(Lanczos, LowRankOperatorBreakdown)
{
    const Dense b = oracle::random_matrix(30, 2, 10);
    SymmetricOperator op{30, [&b](const Vector& x) -> Vector { return b * (b.transpose() * x); }};
    auto r = lanczos_topk(op, 3, {});
    Eigen::SelfAdjointEigenSolver<Dense> eig(b.transpose() * b);
    EXPECT_NEAR(r.pairs[0].value, eig.eigenvalues()(1), 1e-10 * eig.eigenvalues()(1));
    EXPECT_NEAR(r.pairs[2].value, 0.0, 1e-10 * eig.eigenvalues()(1));
}

TEST(Lanczos, InvalidArguments)
{
    SymmetricOperator op{2, [](const Vector& x) { return x; }};
    EXPECT_THROW(lanczos_topk(op, 3, {}), Error);
    EXPECT_THROW(lanczos_topk(op, 0, {}), Error);
}
