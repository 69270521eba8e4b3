#include <doctest.h>

#include <specbias/kernels.hpp>
#include <specbias/sphere_spectrum.hpp>

#include <Eigen/QR>

#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <vector>

using namespace specbias;

namespace {

KernelSpec spec_of(KernelFamily f, Index d) { return {f, d, SymmetryTag::rotation_invariant}; }

// Dimension of the kernel of the Laplacian on degree-n monomials in d variables.
int harmonic_dimension(int n, int d)
{
    std::vector<std::vector<int>> deg_n, deg_m;
    std::vector<int> e(static_cast<std::size_t>(d), 0);
    auto enumerate = [&](auto&& self, int pos, int left, std::vector<std::vector<int>>& out) -> void {
        if (pos == d - 1) {
            e[static_cast<std::size_t>(pos)] = left;
            out.push_back(e);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            e[static_cast<std::size_t>(pos)] = k;
            self(self, pos + 1, left - k, out);
        }
    };
    enumerate(enumerate, 0, n, deg_n);
    if (n < 2) return static_cast<int>(deg_n.size());
    enumerate(enumerate, 0, n - 2, deg_m);
    std::map<std::vector<int>, Index> row;
    for (std::size_t i = 0; i < deg_m.size(); ++i) row[deg_m[i]] = static_cast<Index>(i);
    ColMatrix lap = ColMatrix::Zero(static_cast<Index>(deg_m.size()), static_cast<Index>(deg_n.size()));
    for (std::size_t j = 0; j < deg_n.size(); ++j) {
        for (int v = 0; v < d; ++v) {
            auto m = deg_n[j];
            const int p = m[static_cast<std::size_t>(v)];
            if (p < 2) continue;
            m[static_cast<std::size_t>(v)] -= 2;
            lap(row[m], static_cast<Index>(j)) += p * (p - 1);
        }
    }
    Eigen::ColPivHouseholderQR<ColMatrix> qr(lap);
    return static_cast<int>(deg_n.size()) - static_cast<int>(qr.rank());
}

} // namespace

TEST_SUITE("sphere_spectrum")
{
    TEST_CASE("uniform sphere samples")
    {
        const Matrix X = sample_uniform_sphere(3, 1000, 5);
        CHECK(((X.rowwise().norm().array() - 1.0).abs() <= 1e-12).all());
        for (Index j = 0; j < 3; ++j) CHECK(std::abs(X.col(j).mean()) <= 4.0 / std::sqrt(1000.0));

        const Matrix Y = sample_uniform_sphere(8, 10000, 6);
        for (Index j = 0; j < 8; ++j) {
            const Vector sq = Y.col(j).array().square();
            const double m = sq.mean();
            const double se = std::sqrt((sq.array() - m).square().sum() / (sq.size() - 1) / sq.size());
            CHECK(std::abs(m - 0.125) <= 3.0 * se);
        }
        CHECK(sample_uniform_sphere(8, 50, 9) == sample_uniform_sphere(8, 50, 9));
        CHECK(sample_uniform_sphere(8, 50, 9) != sample_uniform_sphere(8, 50, 10));
        CHECK_THROWS(sample_uniform_sphere(1, 10, 0));
    }

    TEST_CASE("gegenbauer")
    {
        CHECK(gegenbauer(0, 2.5, 0.3) == 1.0);
        CHECK(gegenbauer(1, 3.0, 0.5) == doctest::Approx(3.0));
        CHECK(gegenbauer(2, 1.0, 1.0) == doctest::Approx(3.0));
        for (double a : {0.5, 1.0, 2.5})
            for (double t : {-0.9, -0.2, 0.4, 1.0})
                CHECK(gegenbauer(2, a, t) == doctest::Approx(2 * a * (a + 1) * t * t - a).epsilon(1e-13));
        // Legendre case alpha = 1/2: P_3(t) = (5t^3 - 3t)/2.
        CHECK(gegenbauer(3, 0.5, 0.7) == doctest::Approx((5 * 0.343 - 3 * 0.7) / 2));
        CHECK_THROWS(gegenbauer(2, 1.0, 1.1));
        CHECK(zonal(5, 7, 1.0) == doctest::Approx(1.0));
    }

    TEST_CASE("degeneracy")
    {
        CHECK(degeneracy(0, 5) == 1);
        for (Index d = 2; d < 12; ++d) CHECK(degeneracy(1, d) == static_cast<std::uint64_t>(d));
        CHECK(degeneracy(2, 3) == 5);
        CHECK(degeneracy(2, 2) == 2);
        CHECK(degeneracy(7, 2) == 2);
        CHECK(degeneracy(20, 8) == 407330);
        for (int n = 0; n <= 4; ++n)
            for (int d = 2; d <= 5; ++d) CHECK(degeneracy(n, d) == static_cast<std::uint64_t>(harmonic_dimension(n, d)));
        CHECK(std::exp(log_degeneracy(20, 8)) == doctest::Approx(407330.0).epsilon(1e-10));
        CHECK_THROWS_AS(degeneracy(200, 200), std::overflow_error);
        CHECK(std::isfinite(log_degeneracy(200, 200)));
    }

    TEST_CASE("linear kernel spectrum")
    {
        for (Index d : {3, 8}) {
            const auto s = spec_of(KernelFamily::linear_scaled, d);
            CHECK(funk_hecke_eigenvalue(s, 1, d).eigenvalue == doctest::Approx(1.0 / (d * d)).epsilon(1e-8));
            // Trace rule: d * lambda_1 = E_q[k(x,x)] = 1/d.
            CHECK(d * funk_hecke_eigenvalue(s, 1, d).eigenvalue == doctest::Approx(1.0 / d).epsilon(1e-12));
            for (int n : {0, 2, 3, 4}) CHECK(funk_hecke_eigenvalue(s, n, d).eigenvalue == doctest::Approx(0.0).epsilon(1e-15));
        }
    }

    TEST_CASE("arc-cosine eigenvalues against frozen high-precision quadrature")
    {
        // Reference values from an arbitrary-precision integral in t = cos(theta).
        struct Ref
        {
            KernelFamily f;
            int n;
            Index d;
            double value;
        };
        const Ref refs[] = {
            {KernelFamily::arccos_nngp, 0, 8, 0.33878495363184939742},
            {KernelFamily::arccos_nngp, 2, 8, 0.0041825302917512271286},
            {KernelFamily::arccos_nngp, 4, 8, 0.000034566366047530802716},
            {KernelFamily::arccos_nngp, 10, 8, 3.4678895524846119716e-8},
            {KernelFamily::arccos_ntk, 2, 8, 0.013070407161722584777},
            {KernelFamily::arccos_ntk, 4, 8, 0.00021171899204112616663},
            {KernelFamily::arccos_nngp, 2, 3, 0.0234375},
            {KernelFamily::arccos_nngp, 4, 3, 0.00065104166666666666667},
            {KernelFamily::arccos_ntk, 6, 5, 0.000164794921875},
        };
        for (const auto& r : refs) {
            CHECK(funk_hecke_eigenvalue(spec_of(r.f, r.d), r.n, r.d).eigenvalue == doctest::Approx(r.value).epsilon(1e-10));
        }
        // Degree-one term of the arc-cosine expansion: t/2 for NNGP, t for NTK.
        CHECK(funk_hecke_eigenvalue(spec_of(KernelFamily::arccos_nngp, 8), 1, 8).eigenvalue == doctest::Approx(1.0 / 16));
        CHECK(funk_hecke_eigenvalue(spec_of(KernelFamily::arccos_ntk, 8), 1, 8).eigenvalue == doctest::Approx(1.0 / 8));
        // Odd degrees above one vanish.
        for (int n : {3, 5, 7})
            CHECK(funk_hecke_eigenvalue(spec_of(KernelFamily::arccos_nngp, 8), n, 8).eigenvalue == doctest::Approx(0.0).epsilon(1e-15));
    }

    TEST_CASE("quadrature converged under order doubling")
    {
        for (auto f : {KernelFamily::arccos_nngp, KernelFamily::arccos_ntk}) {
            for (Index d : {3, 5, 8}) {
                for (int n : {0, 1, 2, 4, 8, 12}) {
                    const auto s = spec_of(f, d);
                    const double a = funk_hecke_eigenvalue(s, n, d).eigenvalue;
                    const double b = funk_hecke_eigenvalue(s, n, d, 2 * default_quad_order(n)).eigenvalue;
                    CHECK(std::abs(a - b) <= 1e-10 * std::abs(b) + 1e-300);
                }
            }
        }
        CHECK_THROWS(funk_hecke_eigenvalue(spec_of(KernelFamily::arccos_nngp, 8), 20, 8, 25));
        CHECK_THROWS(funk_hecke_eigenvalue({KernelFamily::arccos_nngp, 8, SymmetryTag::none}, 2, 8));
    }

    TEST_CASE("trace sum rule")
    {
        const auto s = spec_of(KernelFamily::arccos_nngp, 8);
        const auto lines = sphere_spectrum(s, 20);
        double sum = 0.0, prev = 0.0;
        for (const auto& l : lines) {
            CHECK(l.eigenvalue >= 0.0);
            sum += l.eigenvalue * static_cast<double>(l.degeneracy);
            CHECK(sum >= prev);
            prev = sum;
        }
        CHECK(sum >= 0.99);
        CHECK(sum <= 1.0 * (1 + 1e-6));
        CHECK(lines.front().measure_id == "sphere-uniform-S7");
    }

    TEST_CASE("Mercer reconstruction")
    {
        for (Index d : {2, 8}) {
            const auto s = spec_of(KernelFamily::arccos_nngp, d);
            const auto lines = sphere_spectrum(s, 20);
            const Matrix X = sample_uniform_sphere(d, 200, 17);
            double worst = 0.0;
            for (Index i = 0; i < 200; i += 2) {
                const double t = std::clamp(X.row(i).dot(X.row(i + 1)), -1.0, 1.0);
                double series = 0.0;
                for (const auto& l : lines) series += l.eigenvalue * static_cast<double>(l.degeneracy) * zonal(l.degree, d, t);
                worst = std::max(worst, std::abs(series - eval_kernel(s, X.row(i), X.row(i + 1))));
            }
            CHECK(worst <= 0.02);
        }
    }

    TEST_CASE("harmonic features")
    {
        Matrix w = Matrix::Zero(1, 5);
        w(0, 0) = 1.0;
        const auto lin = make_harmonic(1, w, Vector::Ones(1));
        const Matrix X = sample_uniform_sphere(5, 100000, 21);
        const Vector v = harmonic_eval(lin, X);
        CHECK((v - std::sqrt(5.0) * X.col(0)).cwiseAbs().maxCoeff() <= 1e-12);
        Matrix e1 = w;
        CHECK(harmonic_eval(lin, e1)[0] == doctest::Approx(std::sqrt(5.0)));

        auto moments = [](const Vector& a) {
            const double m = a.mean();
            return std::pair{m, std::sqrt((a.array() - m).square().sum() / (a.size() - 1) / a.size())};
        };
        for (int n : {1, 2, 3, 4}) {
            const auto f = random_harmonic(n, 5, 0, 100 + n);
            const Vector phi = harmonic_eval(f, X);
            const auto [m2, se2] = moments(phi.array().square());
            CHECK(std::abs(m2 - 1.0) <= 3.0 * se2);
            const auto [m1, se1] = moments(phi);
            CHECK(std::abs(m1) <= 3.0 * se1);
            const Matrix negX = -X.topRows(50);
            const Vector flipped = harmonic_eval(f, negX);
            CHECK((flipped - (n % 2 ? -1.0 : 1.0) * phi.head(50)).cwiseAbs().maxCoeff() <= 1e-10);
        }
        const Vector p1 = harmonic_eval(random_harmonic(1, 5, 0, 1), X);
        const Vector p2 = harmonic_eval(random_harmonic(2, 5, 0, 2), X);
        const auto [m12, se12] = moments(p1.cwiseProduct(p2));
        CHECK(std::abs(m12) <= 3.0 * se12);

        CHECK_THROWS(make_harmonic(2, sample_uniform_sphere(5, 3, 1), Vector::Zero(3)));
        Matrix off = X.topRows(2) * 1.01;
        CHECK_THROWS(harmonic_eval(lin, off));
        CHECK(random_harmonic(4, 8, 0, 3).centers.rows() == 256);
        CHECK(random_harmonic(2, 3, 0, 3).centers.rows() == 10);
    }

    TEST_CASE("harmonic features are kernel eigenfunctions")
    {
        const Index d = 5;
        const auto s = spec_of(KernelFamily::arccos_nngp, d);
        for (int n : {1, 2}) {
            const auto f = random_harmonic(n, d, 0, 40 + n);
            const double lambda = funk_hecke_eigenvalue(s, n, d).eigenvalue;
            const Matrix X = sample_uniform_sphere(d, 500, 50);
            const Matrix Z = sample_uniform_sphere(d, 100000, 51 + n);
            const Vector phi_z = harmonic_eval(f, Z);
            const ColMatrix K = cross_gram(s, X, Z);
            const ColMatrix terms = K * phi_z.asDiagonal();
            const Vector mean = terms.rowwise().mean();
            const Vector var = ((terms.colwise() - mean).array().square().rowwise().sum()) / (Z.rows() - 1);
            const Vector se = (var / static_cast<double>(Z.rows())).cwiseSqrt();
            const Vector expect = lambda * harmonic_eval(f, X);
            int outside = 0;
            for (Index i = 0; i < X.rows(); ++i) outside += std::abs(mean[i] - expect[i]) > 3.0 * se[i];
            // About 0.27% of components fall outside 3 s.e. by chance.
            CHECK(outside <= 5);
            CHECK(((mean - expect).cwiseAbs().array() <= 4.5 * se.array()).all());
        }
    }

    TEST_CASE("spectrum csv")
    {
        std::ostringstream os;
        write_spectrum_csv(os, sphere_spectrum(spec_of(KernelFamily::linear_scaled, 3), 1));
        std::istringstream in(os.str());
        std::string header, row0, row1, extra;
        std::getline(in, header);
        std::getline(in, row0);
        std::getline(in, row1);
        CHECK(header == "measure_id,d,n,lambda,degeneracy");
        CHECK(row0 == "sphere-uniform-S2,3,0,0,1");
        CHECK(row1.starts_with("sphere-uniform-S2,3,1,"));
        CHECK(row1.ends_with(",3"));
        CHECK(std::stod(row1.substr(22, row1.size() - 24)) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
        CHECK_FALSE(std::getline(in, extra));
    }
}
