#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <specbias/kernels.hpp>
#include <specbias/types.hpp>

namespace specbias {

/// n points drawn uniformly on S^{d-1} (Gaussian draw, then normalized).
Matrix sample_uniform_sphere(Index d, Index n, std::uint64_t seed);

/// Gegenbauer polynomial C_n^alpha(t) by the three-term recurrence.
template <class Scalar>
Scalar gegenbauer(int n, Scalar alpha, Scalar t)
{
    if (n < 0) {
        throw std::invalid_argument("gegenbauer degree must be >= 0");
    }
    if (std::abs(t) > Scalar(1) + Scalar(1e-12)) {
        throw std::domain_error("gegenbauer argument outside [-1, 1]");
    }
    Scalar prev = Scalar(1);
    if (n == 0) return prev;
    Scalar cur = Scalar(2) * alpha * t;
    for (int k = 2; k <= n; ++k) {
        const Scalar next = (Scalar(2) * t * (k + alpha - Scalar(1)) * cur - (k + Scalar(2) * alpha - Scalar(2)) * prev) / k;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Zonal polynomial normalized to 1 at t = 1: C_n^{(d-2)/2}(t) / C_n^{(d-2)/2}(1),
/// or the Chebyshev polynomial T_n(t) on the circle (d = 2).
double zonal(int n, Index d, double t);

/// Number of linearly independent degree-n harmonics on S^{d-1}. Exact; throws
/// std::overflow_error rather than wrapping.
std::uint64_t degeneracy(int n, Index d);

/// log N(n, d) via log-gamma; usable where degeneracy() would overflow.
double log_degeneracy(int n, Index d);

struct SpectralLine
{
    int degree = 0;
    double eigenvalue = 0.0;
    std::uint64_t degeneracy = 1;
    Index dim = 0;
    std::string measure_id;
};

inline int default_quad_order(int n) { return 2 * (n + 32); }

/// Eigenvalue of a dot-product kernel on the uniform sphere for harmonic degree n.
/// quad_order <= 0 selects the default.
SpectralLine funk_hecke_eigenvalue(const KernelSpec& spec, int n, Index d, int quad_order = 0);

/// Lines for degrees 0..n_max.
std::vector<SpectralLine> sphere_spectrum(const KernelSpec& spec, int n_max, int quad_order = 0);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct Quadrature
{
    Vector nodes;
    Vector weights;
};
Quadrature gauss_legendre(int order);

/// Columns (measure_id, d, n, lambda, degeneracy).
void write_spectrum_csv(std::ostream& os, const std::vector<SpectralLine>& lines);

/// phi(x) = (1/norm_const) * sum_j c_j * zonal(n, d, w_j . x), normalized so that E_q[phi^2] = 1
/// on the uniform sphere. The zonal factor is C_n^alpha scaled by 1/C_n^alpha(1).
struct HarmonicFeature
{
    int degree = 1;
    Matrix centers;
    Vector coefficients;
    double norm_const = 1.0;
    Index dim = 0;
    std::uint64_t seed = 0;
};

inline Index default_center_count(int n, Index d)
{
    std::uint64_t want = 256;
    try {
        want = std::min<std::uint64_t>(2 * degeneracy(n, d), 256);
    } catch (const std::overflow_error&) {
    }
    return static_cast<Index>(want);
}

/// Builds a feature from explicit unit-norm centers and coefficients, computing the
/// normalization from the addition theorem.
HarmonicFeature make_harmonic(int n, Matrix centers, Vector coefficients, std::uint64_t seed = 0);

/// Random degree-n harmonic: centers uniform on the sphere, standard normal coefficients.
/// m_centers <= 0 selects default_center_count().
HarmonicFeature random_harmonic(int n, Index d, Index m_centers, std::uint64_t seed);

/// Evaluates the feature on unit-norm rows (tolerance 1e-9).
Vector harmonic_eval(const HarmonicFeature& feature, const Eigen::Ref<const Matrix>& X);

} // namespace specbias
