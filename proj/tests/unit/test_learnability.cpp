#include <doctest.h>

#include <specbias/datasets.hpp>
#include <specbias/krr.hpp>
#include <specbias/learnability.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace specbias;

namespace {

KernelSpec spec_of(KernelFamily f, Index d) { return {f, d, SymmetryTag::rotation_invariant}; }

} // namespace

TEST_SUITE("learnability")
{
    TEST_CASE("empirical learnability")
    {
        const Vector y = Vector::LinSpaced(10, -1.0, 2.0);
        CHECK(learnability(y, y) == doctest::Approx(1.0));
        CHECK(learnability(y, Vector::Zero(10)) == 0.0);
        CHECK(learnability(y, 0.3 * y) == doctest::Approx(0.3));
        CHECK_THROWS(learnability(Vector::Zero(3), Vector::Ones(3)));
        CHECK_THROWS(learnability(y, Vector::Ones(3)));
    }

    TEST_CASE("paired ratio")
    {
        std::mt19937_64 rng(4);
        std::normal_distribution<double> g;
        Vector a(4000), b(4000);
        for (Index i = 0; i < 4000; ++i) {
            b[i] = 1.0 + g(rng);
            a[i] = 0.5 * b[i] + 0.1 * g(rng);
        }
        const auto r = paired_ratio(a, b);
        CHECK(r.defined);
        CHECK(std::abs(r.value - 0.5) <= 3.0 * r.stderr_ + 1e-3);
        // Pairing removes the shared fluctuation: the ratio error is far below the denominator's.
        CHECK(r.stderr_ < 0.5 * r.denominator_stderr);
        const auto same = paired_ratio(b, b);
        CHECK(same.value == 1.0);
        CHECK(same.stderr_ == 0.0);
        Vector centered = b.array() - b.mean();
        CHECK_FALSE(paired_ratio(a, centered).defined);
    }

    TEST_CASE("cross-dataset learnability limits")
    {
        const Index d = 5;
        const auto s = spec_of(KernelFamily::arccos_nngp, d);
        const auto phi = random_harmonic(1, d, 0, 3);
        const Matrix X = sample_uniform_sphere(d, 40, 1);
        const ColMatrix y = harmonic_eval(phi, X);
        auto target = [&](const Matrix& Z) { return Vector(harmonic_eval(phi, Z)); };

        auto zero = fit(s, X, y, 1.0);
        zero.dual_coeffs.setZero();
        const auto r0 = cross_dataset_learnability(phi, zero, target, 1000, 2);
        CHECK(r0.value == 0.0);

        // Target taken to be the predictor itself: learnability one.
        const auto fp = fit(s, X, y, 1e-3);
        auto self = [&](const Matrix& Z) { return Vector(predict(fp, Z).col(0)); };
        const auto r1 = cross_dataset_learnability(phi, fp, self, 1000, 2);
        CHECK(r1.value == doctest::Approx(1.0).epsilon(1e-12));

        const auto r = cross_dataset_learnability(phi, fp, target, 50000, 9);
        const double lambda = funk_hecke_eigenvalue(s, 1, d).eigenvalue;
        const double spectral = cross_dataset_learnability_spectral(lambda, y.col(0), fp.dual_coeffs.col(0), 1.0);
        CHECK(std::abs(r.value - spectral) <= 3.0 * r.stderr_);
        CHECK_THROWS(cross_dataset_learnability_spectral(lambda, y.col(0), fp.dual_coeffs.col(0), 0.0));
    }

    TEST_CASE("bound formulas")
    {
        // Manifold setting: lambda = 1/d, E_D norms d, overlap 1.
        const double d = 8, sigma2 = 0.3;
        CHECK(thm_bound(1 / d, 5.0, sigma2, d, d, 1.0) == doctest::Approx(5.0 / sigma2));
        CHECK(thm_bound(0.2, 10.0, 0.5, 1.1, 0.9, 0.8) == doctest::Approx(2 * thm_bound(0.2, 5.0, 0.5, 1.1, 0.9, 0.8)));
        CHECK(sample_complexity_lower(1 / d, sigma2, 0.5, 1.0, d, d) == doctest::Approx(sigma2 / 2));
        CHECK(sample_complexity_lower(0.3, 1.0, 0.999999, 1.0, 1.0, 1.0) < 1e-5);
        for (double eps : {0.0, 0.3, 0.7}) {
            const double P = sample_complexity_lower(0.01, 0.2, eps, 0.7, 1.3, 0.8);
            CHECK(thm_bound(0.01, P, 0.2, 1.3, 0.8, 0.7) == doctest::Approx(1 - eps).epsilon(1e-12));
        }
        CHECK(sample_complexity_lower(0.01, 0.2, 0.0, 0.7, 1.3, 0.8) > sample_complexity_lower(0.01, 0.2, 0.7, 0.7, 1.3, 0.8));
        CHECK_THROWS(sample_complexity_lower(0.01, 0.2, 1.0, 0.7, 1.3, 0.8));
        CHECK_THROWS(sample_complexity_lower(0.01, 0.2, -0.1, 0.7, 1.3, 0.8));
        CHECK_THROWS(thm_bound(0.1, 1, 1, 1, 1, 0.0));
    }

    TEST_CASE("eigenlearning forms")
    {
        CHECK(ek_learnability(0.01, 10, 0.1) == doctest::Approx(0.5));
        CHECK(ek_learnability(0.0, 10, 0.1) == 0.0);
        CHECK(ek_learnability(1.0, 1e12, 1.0) == doctest::Approx(1.0));
        for (double P = 2; P < 200; P += 7) {
            const double h = 1.0;
            CHECK(ek_learnability(0.05, P + h, 1.0) - 2 * ek_learnability(0.05, P, 1.0) + ek_learnability(0.05, P - h, 1.0) < 0);
        }
        CHECK(ek_sample_complexity(0.2, 0.4, 0.5) == doctest::Approx(2.0));
        CHECK(ek_sample_complexity(1.0, 0.1, 0.5) == doctest::Approx(0.1));
        for (double eps : {0.1, 0.5, 0.9}) {
            CHECK(ek_learnability(0.3, ek_sample_complexity(0.3, 0.7, eps), 0.7) == doctest::Approx(1 - eps).epsilon(1e-14));
            CHECK(ek_sample_complexity(0.3, 0.7, eps / 2) > 2 * ek_sample_complexity(0.3, 0.7, eps));
        }
        CHECK_THROWS(ek_sample_complexity(0.3, 0.7, 0.0));
        CHECK_THROWS(ek_sample_complexity(0.3, 0.7, 1.0));
        CHECK(linear_bound(2, 3, 6) == doctest::Approx(1.0));
        CHECK(linear_bound(1, 1, 1) == 1.0);
        CHECK(ek_learnability(1, 1, 1) == 0.5);
        for (double P : {1e-6, 0.1, 1.0, 10.0, 1e3}) CHECK(linear_bound(0.4, P, 2.0) >= ek_learnability(0.4, P, 2.0));
        CHECK(linear_bound(0.4, 1e-9, 2.0) / ek_learnability(0.4, 1e-9, 2.0) == doctest::Approx(1.0));
    }

    TEST_CASE("manifold regression: cross-dataset learnability equals the learnability")
    {
        const Index d = 6, P = 400;
        const double sigma2 = 300;
        const auto s = spec_of(KernelFamily::linear_scaled, d);
        const SampleSet D = synth_manifold(P, d, 11);
        const auto fp = fit(s, D.inputs, D.targets, sigma2);
        // On q = N(0, I) the normalized feature is x_1 and the predictor is c x_1.
        std::mt19937_64 rng(5);
        std::normal_distribution<double> g;
        Matrix Z(20000, d);
        for (Index i = 0; i < Z.rows(); ++i)
            for (Index j = 0; j < d; ++j) Z(i, j) = g(rng);
        const Vector phi = Z.col(0);
        const Vector f = predict(fp, Z).col(0);
        const auto r = paired_ratio(phi.cwiseProduct(f), phi.cwiseProduct(phi));
        const double S = D.inputs.col(0).squaredNorm() / d;
        CHECK(r.value == doctest::Approx(S / (S + sigma2)).epsilon(1e-10));
        CHECK(r.value == doctest::Approx(ek_learnability(1.0, P, sigma2)).epsilon(0.15));
        const SampleSet T = synth_manifold(5000, d, 12);
        CHECK(learnability(T.targets.col(0), predict(fp, T.inputs).col(0)) == doctest::Approx(r.value).epsilon(1e-10));
    }

    TEST_CASE("theorem on small sphere instances")
    {
        for (int rep = 0; rep < 6; ++rep) {
            const Index d = 3 + rep % 3;
            const auto s = spec_of(rep % 2 ? KernelFamily::arccos_ntk : KernelFamily::arccos_nngp, d);
            const int n = 1 + rep % 3;
            const auto phi = random_harmonic(n, d, 0, 300 + rep);
            const double lambda = funk_hecke_eigenvalue(s, n, d).eigenvalue;
            const Matrix X = sample_uniform_sphere(d, 30, 400 + rep);
            const ColMatrix y = harmonic_eval(phi, X);
            const double sigma2 = 0.05;
            const auto fp = fit(s, X, y, sigma2);
            auto target = [&](const Matrix& Z) { return Vector(harmonic_eval(phi, Z)); };
            const auto r = cross_dataset_learnability(phi, fp, target, 20000, 500 + rep);
            const double e2 = y.squaredNorm() / 30;
            const double b = thm_bound(lambda, 30, sigma2, e2, e2, 1.0);
            CHECK(r.value <= b + 3 * r.stderr_);
            CHECK(cross_dataset_learnability_spectral(lambda, y.col(0), fp.alpha(), 1.0) <= b * (1 + 1e-12));
        }
    }

    TEST_CASE("report csv")
    {
        LearnabilityReport r;
        r.dataset = "sphere-uniform";
        r.kernel = "arccos-nngp";
        r.feature_degree = 2;
        r.feature_seed = 7;
        r.P = 8;
        r.sigma2 = 0.001;
        r.L_emp = 0.25;
        r.L_xq = 0.5;
        r.L_xq_stderr = 0.01;
        r.bound = 0.75;
        r.Pstar_lo = {{0.0, 3.0}, {0.7, 0.9}};
        r.E_D_phi2 = 1.5;
        r.E_D_y2 = 1.5;
        r.overlap = 1;
        CHECK(r.respects_bound());
        r.L_xq = 0.79;
        CHECK_FALSE(r.respects_bound());
        std::ostringstream os;
        write_learnability_csv(os, {r});
        CHECK(os.str()
              == "dataset,kernel,feature_degree,feature_seed,P,sigma2,L_emp,L_xq,bound,Pstar_eps0,Pstar_eps0p7,E_D_phi2,"
                 "E_D_y2,overlap,stderr_Lxq\nsphere-uniform,arccos-nngp,2,7,8,0.001,0.25,0.79,0.75,3,0.9,1.5,1.5,1,0.01\n");
    }
}
