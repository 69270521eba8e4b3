#include <specbias/rng.hpp>
#include <specbias/sphere_spectrum.hpp>

#include <limits>
#include <numeric>
#include <ostream>
#include <random>

namespace specbias {

Matrix sample_uniform_sphere(Index d, Index n, std::uint64_t seed)
{
    if (d < 2) {
        throw std::invalid_argument("sample_uniform_sphere needs d >= 2");
    }
    if (n < 1) {
        throw std::invalid_argument("sample_uniform_sphere needs n >= 1");
    }
    auto rng = make_engine(seed, 0x73706865ULL);
    std::normal_distribution<double> normal;
    Matrix X(n, d);
    for (Index i = 0; i < n; ++i) {
        double norm = 0.0;
        do {
            for (Index j = 0; j < d; ++j) X(i, j) = normal(rng);
            norm = X.row(i).norm();
        } while (norm == 0.0);
        X.row(i) /= norm;
    }
    return X;
}

double zonal(int n, Index d, double t)
{
    if (d < 2) {
        throw std::invalid_argument("zonal needs d >= 2");
    }
    if (std::abs(t) > 1.0 + 1e-12) {
        throw std::domain_error("zonal argument outside [-1, 1]");
    }
    t = std::clamp(t, -1.0, 1.0);
    if (d == 2) {
        // T_n by recurrence; avoids acos for the common small-n case.
        double prev = 1.0;
        if (n == 0) return prev;
        double cur = t;
        for (int k = 2; k <= n; ++k) {
            const double next = 2.0 * t * cur - prev;
            prev = cur;
            cur = next;
        }
        return cur;
    }
    const double alpha = 0.5 * static_cast<double>(d - 2);
    return gegenbauer(n, alpha, t) / gegenbauer(n, alpha, 1.0);
}

namespace {

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b)
{
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw std::overflow_error("degeneracy overflows 64-bit integer");
    }
    return out;
}

std::uint64_t binomial(std::uint64_t a, std::uint64_t k)
{
    if (k > a) return 0;
    k = std::min(k, a - k);
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // result * (a - k + i) / i is exactly binom(a - k + i, i).
        const std::uint64_t g = std::gcd(result, i);
        result = checked_mul(result / g, (a - k + i) / (i / g));
    }
    return result;
}

} // namespace

std::uint64_t degeneracy(int n, Index d)
{
    if (n < 0 || d < 2) {
        throw std::invalid_argument("degeneracy needs n >= 0 and d >= 2");
    }
    if (n == 0) return 1;
    const auto un = static_cast<std::uint64_t>(n);
    const auto ud = static_cast<std::uint64_t>(d);
    const std::uint64_t b = binomial(un + ud - 3, un - 1);
    const std::uint64_t g = std::gcd(b, un);
    return checked_mul(b / g, (2 * un + ud - 2) / (un / g));
}

double log_degeneracy(int n, Index d)
{
    if (n < 0 || d < 2) {
        throw std::invalid_argument("degeneracy needs n >= 0 and d >= 2");
    }
    if (n == 0) return 0.0;
    if (d == 2) return std::log(2.0);
    const double nn = n;
    const double dd = static_cast<double>(d);
    return std::log(2.0 * nn + dd - 2.0) - std::log(nn) + std::lgamma(nn + dd - 2.0) - std::lgamma(nn)
           - std::lgamma(dd - 1.0);
}

Quadrature gauss_legendre(int order)
{
    if (order < 1) {
        throw std::invalid_argument("quadrature order must be >= 1");
    }
    Quadrature q{Vector(order), Vector(order)};
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (order == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // Refresh the derivative at the converged node.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= order; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = order * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        q.nodes[i] = -x;
        q.nodes[order - 1 - i] = x;
        q.weights[i] = w;
        q.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) {
        q.nodes[half - 1] = 0.0;
    }
    return q;
}

SpectralLine funk_hecke_eigenvalue(const KernelSpec& spec, int n, Index d, int quad_order)
{
    if (!is_rotation_invariant(spec)) {
        throw std::invalid_argument("Funk-Hecke eigenvalues need a rotation-invariant kernel");
    }
    if (d < 2) {
        throw std::invalid_argument("sphere eigenvalues need d >= 2");
    }
    if (n < 0) {
        throw std::invalid_argument("harmonic degree must be >= 0");
    }
    if (quad_order <= 0) quad_order = default_quad_order(n);
    if (quad_order < n + 10) {
        throw std::invalid_argument("quad_order must be >= n + 10");
    }

    // Integrate in the angle: lambda_n = c_d * int_0^pi k(cos t) P_n(cos t) sin^{d-2} t dt.
    // Arc-cosine kernels are analytic in t, so Gauss-Legendre converges geometrically.
    const double dd = static_cast<double>(d);
    const double log_c = std::lgamma(0.5 * dd) - std::lgamma(0.5 * (dd - 1.0)) - 0.5 * std::log(std::numbers::pi);
    const Quadrature q = gauss_legendre(quad_order);
    double sum = 0.0;
    double abs_sum = 0.0;
    for (Index i = 0; i < q.nodes.size(); ++i) {
        const double theta = 0.5 * std::numbers::pi * (q.nodes[i] + 1.0);
        const double t = std::cos(theta);
        const double s = std::sin(theta);
        const double k = detail::kernel_from_products(spec.family, d, t, 1.0, 1.0);
        const double p = d == 2 ? std::cos(n * theta) : zonal(n, d, t);
        const double term = q.weights[i] * k * p * std::pow(s, dd - 2.0);
        sum += term;
        abs_sum += std::abs(term);
    }
    // Below the rounding floor of the sum the value is indistinguishable from zero.
    if (std::abs(sum) <= 64.0 * std::numeric_limits<double>::epsilon() * abs_sum) sum = 0.0;
    double lambda = std::exp(log_c) * 0.5 * std::numbers::pi * sum;
    if (lambda < -1e-12) {
        throw std::runtime_error("negative eigenvalue " + std::to_string(lambda) + " at degree " + std::to_string(n)
                                 + ": kernel is not positive semidefinite");
    }
    lambda = std::max(lambda, 0.0);
    return {n, lambda, degeneracy(n, d), d, uniform_sphere_measure(d).id};
}

std::vector<SpectralLine> sphere_spectrum(const KernelSpec& spec, int n_max, int quad_order)
{
    std::vector<SpectralLine> out;
    out.reserve(static_cast<std::size_t>(n_max + 1));
    for (int n = 0; n <= n_max; ++n) {
        out.push_back(funk_hecke_eigenvalue(spec, n, spec.input_dim, quad_order));
    }
    return out;
}

void write_spectrum_csv(std::ostream& os, const std::vector<SpectralLine>& lines)
{
    os << "measure_id,d,n,lambda,degeneracy\n";
    const auto old = os.precision(17);
    for (const auto& l : lines) {
        os << l.measure_id << ',' << l.dim << ',' << l.degree << ',' << l.eigenvalue << ',' << l.degeneracy << '\n';
    }
    os.precision(old);
}

namespace {

// Entrywise zonal(n, d, .) of a matrix of cosines.
ColMatrix zonal_matrix(int n, Index d, const ColMatrix& cosines)
{
    ColMatrix out(cosines.rows(), cosines.cols());
    if (d == 2) {
        for (Index j = 0; j < out.cols(); ++j)
            for (Index i = 0; i < out.rows(); ++i) out(i, j) = zonal(n, 2, std::clamp(cosines(i, j), -1.0, 1.0));
        return out;
    }
    const double alpha = 0.5 * static_cast<double>(d - 2);
    const double at_one = gegenbauer(n, alpha, 1.0);
    for (Index j = 0; j < out.cols(); ++j) {
        for (Index i = 0; i < out.rows(); ++i) {
            out(i, j) = gegenbauer(n, alpha, std::clamp(cosines(i, j), -1.0, 1.0)) / at_one;
        }
    }
    return out;
}

} // namespace

HarmonicFeature make_harmonic(int n, Matrix centers, Vector coefficients, std::uint64_t seed)
{
    if (n < 1) {
        throw std::invalid_argument("harmonic features need degree >= 1");
    }
    if (centers.rows() < 1 || centers.rows() != coefficients.size()) {
        throw std::invalid_argument("need one coefficient per center and at least one center");
    }
    const Index d = centers.cols();
    if (((centers.rowwise().norm().array() - 1.0).abs() > 1e-9).any()) {
        throw std::invalid_argument("harmonic centers must be unit vectors");
    }
    if (coefficients.isZero(0.0)) {
        throw std::invalid_argument("degenerate (all-zero) coefficient draw");
    }
    // Addition theorem: E_q[P_n(w.x) P_n(v.x)] = P_n(w.v) / N(n, d).
    const ColMatrix G = zonal_matrix(n, d, centers * centers.transpose());
    const double sq = coefficients.dot(G * coefficients) / std::exp(log_degeneracy(n, d));
    const double norm_const = std::sqrt(std::max(sq, 0.0));
    if (!(norm_const >= 1e-12)) {
        throw std::runtime_error("harmonic feature normalization below 1e-12");
    }
    return {n, std::move(centers), std::move(coefficients), norm_const, d, seed};
}

HarmonicFeature random_harmonic(int n, Index d, Index m_centers, std::uint64_t seed)
{
    if (n < 1) {
        throw std::invalid_argument("harmonic features need degree >= 1");
    }
    if (m_centers <= 0) m_centers = default_center_count(n, d);
    Matrix centers = sample_uniform_sphere(d, m_centers, mix64(seed ^ 0x63656e74ULL));
    auto rng = make_engine(seed, 0x636f6566ULL);
    std::normal_distribution<double> normal;
    Vector coefficients(m_centers);
    for (Index j = 0; j < m_centers; ++j) coefficients[j] = normal(rng);
    return make_harmonic(n, std::move(centers), std::move(coefficients), seed);
}

Vector harmonic_eval(const HarmonicFeature& feature, const Eigen::Ref<const Matrix>& X)
{
    if (X.cols() != feature.dim) {
        throw std::invalid_argument("harmonic_eval dimension mismatch");
    }
    if (((X.rowwise().norm().array() - 1.0).abs() > 1e-9).any()) {
        throw std::invalid_argument("harmonic features are defined on the unit sphere; rows must be unit norm");
    }
    const ColMatrix Z = zonal_matrix(feature.degree, feature.dim, X * feature.centers.transpose());
    return Z * feature.coefficients / feature.norm_const;
}

} // namespace specbias
