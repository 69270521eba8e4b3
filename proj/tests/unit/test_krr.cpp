#include <doctest.h>

#include <specbias/krr.hpp>
#include <specbias/sphere_spectrum.hpp>

#include <cmath>
#include <numeric>

using namespace specbias;

namespace {

KernelSpec spec_of(KernelFamily f, Index d) { return {f, d, SymmetryTag::rotation_invariant}; }

} // namespace

TEST_SUITE("krr")
{
    TEST_CASE("single point")
    {
        Matrix X(1, 3);
        X << 1, 0, 0;
        ColMatrix y(1, 1);
        y << 1;
        const auto fp = fit(spec_of(KernelFamily::arccos_nngp, 3), X, y, 1.0);
        CHECK(fp.alpha()[0] == doctest::Approx(0.5));
        Matrix q(1, 3);
        q << 0, 1, 0;
        CHECK(predict(fp, q)(0, 0) == doctest::Approx((1.0 / M_PI) * 1.0 / 2.0));
    }

    TEST_CASE("identity gram")
    {
        Matrix X(2, 2);
        X << 1, 0, 0, 1;
        ColMatrix y(2, 1);
        y << 1, 0;
        const auto fp = fit(spec_of(KernelFamily::linear_scaled, 2), X, y, 0.5);
        CHECK(fp.alpha()[0] == doctest::Approx(1.0));
        CHECK(fp.alpha()[1] == doctest::Approx(0.0));

        ColMatrix I = ColMatrix::Identity(4, 4);
        ColMatrix Y = ColMatrix::Random(4, 2);
        const auto fi = fit_with_gram(spec_of(KernelFamily::linear_scaled, 2), Matrix::Zero(4, 2), I, Y, 0.25);
        CHECK((fi.dual_coeffs - Y / 1.25).cwiseAbs().maxCoeff() <= 1e-14);
    }

    TEST_CASE("algebraic identities on random instances")
    {
        const auto s = spec_of(KernelFamily::arccos_ntk, 6);
        const Matrix X = sample_uniform_sphere(6, 60, 3);
        const ColMatrix Y = ColMatrix::Random(60, 3);
        const ColMatrix K = gram_matrix(s, X);
        double prev_norm = INFINITY;
        for (double ridge : {1e-3, 1e-2, 0.1, 1.0, 10.0}) {
            const auto fp = fit(s, X, Y, ridge);
            const ColMatrix resid = (K + ridge * ColMatrix::Identity(60, 60)) * fp.dual_coeffs - Y;
            CHECK(resid.norm() <= 1e-8 * Y.norm());
            CHECK(fp.dual_coeffs.col(0).norm() <= Y.col(0).norm() / ridge);
            const ColMatrix f = predict(fp, X);
            CHECK((f - (Y - ridge * fp.dual_coeffs)).norm() <= 1e-8 * Y.norm());
            CHECK(fp.dual_coeffs.norm() < prev_norm);
            prev_norm = fp.dual_coeffs.norm();
            // Multi-output: each column equals its own single-output solve.
            const auto single = fit(s, X, Y.col(1), ridge);
            CHECK((single.dual_coeffs.col(0) - fp.dual_coeffs.col(1)).norm() <= 1e-10 * fp.dual_coeffs.col(1).norm());
        }
    }

    TEST_CASE("permutation equivariance")
    {
        const auto s = spec_of(KernelFamily::arccos_nngp, 4);
        const Matrix X = sample_uniform_sphere(4, 30, 8);
        const ColMatrix y = ColMatrix::Random(30, 1);
        Eigen::PermutationMatrix<Eigen::Dynamic> perm(30);
        perm.setIdentity();
        std::reverse(perm.indices().data(), perm.indices().data() + 30);
        const Matrix Xp = perm * X;
        const ColMatrix yp = perm * y;
        const auto a = fit(s, X, y, 0.1);
        const auto b = fit(s, Xp, yp, 0.1);
        CHECK((perm * a.dual_coeffs - b.dual_coeffs).norm() <= 1e-10);
        const Matrix Q = sample_uniform_sphere(4, 10, 9);
        CHECK((predict(a, Q) - predict(b, Q)).norm() <= 1e-10);
    }

    TEST_CASE("large ridge limit")
    {
        const auto s = spec_of(KernelFamily::arccos_nngp, 4);
        const Matrix X = sample_uniform_sphere(4, 20, 10);
        const ColMatrix y = ColMatrix::Random(20, 1);
        const double ridge = 1e8;
        const auto fp = fit(s, X, y, ridge);
        const ColMatrix approx = gram_matrix(s, X) * y / ridge;
        CHECK((predict(fp, X) - approx).norm() <= 1e-6 * approx.norm());
    }

    TEST_CASE("jitter escalation on a singular gram")
    {
        ColMatrix K = ColMatrix::Identity(3, 3);
        K(2, 2) = -1e-7;   // the ridge exactly cancels this pivot
        const RidgeSolver solver(K, 1e-7);
        CHECK(solver.jitter_steps() >= 1);
        CHECK(solver.jitter() > 0.0);
        ColMatrix bad = ColMatrix::Ones(2, 2);
        bad(0, 1) = bad(1, 0) = 5.0;
        CHECK_THROWS_AS(RidgeSolver(bad, 1e-6), InvariantViolation);
    }

    TEST_CASE("errors")
    {
        const auto s = spec_of(KernelFamily::arccos_nngp, 3);
        const Matrix X = sample_uniform_sphere(3, 4, 1);
        ColMatrix y = ColMatrix::Ones(4, 1);
        CHECK_THROWS(fit(s, X, y, 0.0));
        CHECK_THROWS(fit(s, X, y, -1.0));
        CHECK_THROWS(fit(s, X, ColMatrix::Ones(3, 1), 1.0));
        y(2, 0) = std::nan("");
        CHECK_THROWS(fit(s, X, y, 1.0));
        const auto fp = fit(s, X, ColMatrix::Ones(4, 1), 1.0);
        CHECK_THROWS(predict(fp, Matrix::Ones(2, 4)));
    }
}
