#include <specbias/kernels.hpp>
#include <specbias/rng.hpp>
#include <specbias/sphere_spectrum.hpp>

#include <random>

namespace specbias {

std::string_view to_string(KernelFamily family) noexcept
{
    switch (family) {
        case KernelFamily::linear_scaled: return "linear-scaled";
        case KernelFamily::arccos_nngp: return "arccos-nngp-1layer";
        case KernelFamily::arccos_ntk: return "arccos-ntk-1layer";
    }
    return "unknown";
}

std::string_view to_string(SymmetryTag tag) noexcept
{
    switch (tag) {
        case SymmetryTag::rotation_invariant: return "rotation-invariant";
        case SymmetryTag::permutation_invariant: return "permutation-invariant";
        case SymmetryTag::none: return "none";
    }
    return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name)
{
    if (name == "linear-scaled" || name == "linear") return KernelFamily::linear_scaled;
    if (name == "arccos-nngp-1layer" || name == "arccos-nngp" || name == "nngp") return KernelFamily::arccos_nngp;
    if (name == "arccos-ntk-1layer" || name == "arccos-ntk" || name == "ntk") return KernelFamily::arccos_ntk;
    throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

namespace detail {

void check_kernel_inputs(const KernelSpec& spec, Index xdim, Index ydim, double xx, double yy)
{
    if (xdim != spec.input_dim || ydim != spec.input_dim) {
        throw std::invalid_argument("kernel input dimension mismatch: expected " + std::to_string(spec.input_dim)
                                    + ", got " + std::to_string(xdim) + " and " + std::to_string(ydim));
    }
    if (!std::isfinite(xx) || !std::isfinite(yy)) {
        throw std::invalid_argument("kernel input is not finite");
    }
    if (spec.family != KernelFamily::linear_scaled && (xx == 0.0 || yy == 0.0)) {
        throw std::domain_error("arc-cosine kernel is undefined for zero-norm input");
    }
}

} // namespace detail

namespace {

void check_rows(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X, const Vector& sq)
{
    if (X.cols() != spec.input_dim) {
        throw std::invalid_argument("sample dimension " + std::to_string(X.cols()) + " does not match kernel dimension "
                                    + std::to_string(spec.input_dim));
    }
    if (!sq.allFinite()) {
        throw std::invalid_argument("non-finite entries in sample matrix");
    }
    if (spec.family != KernelFamily::linear_scaled && (sq.array() == 0.0).any()) {
        throw std::domain_error("arc-cosine kernel is undefined for zero-norm input");
    }
}

} // namespace

ColMatrix cross_gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B)
{
    const Vector a2 = A.rowwise().squaredNorm();
    const Vector b2 = B.rowwise().squaredNorm();
    check_rows(spec, A, a2);
    check_rows(spec, B, b2);

    ColMatrix K = A * B.transpose();
    for (Index j = 0; j < K.cols(); ++j) {
        for (Index i = 0; i < K.rows(); ++i) {
            K(i, j) = detail::kernel_from_products(spec.family, spec.input_dim, K(i, j), a2[i], b2[j]);
        }
    }
    return K;
}

ColMatrix gram_matrix(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X)
{
    if (X.rows() < 1) {
        throw std::invalid_argument("gram_matrix needs at least one row");
    }
    const Vector sq = X.rowwise().squaredNorm();
    check_rows(spec, X, sq);

    ColMatrix K(X.rows(), X.rows());
    K.triangularView<Eigen::Lower>() = X * X.transpose();
    for (Index j = 0; j < K.cols(); ++j) {
        K(j, j) = eval_kernel(spec, X.row(j).transpose(), X.row(j).transpose());
        for (Index i = j + 1; i < K.rows(); ++i) {
            K(i, j) = detail::kernel_from_products(spec.family, spec.input_dim, K(i, j), sq[i], sq[j]);
        }
    }
    K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
    return K;
}

Vector kernel_diagonal(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X)
{
    Vector out(X.rows());
    for (Index i = 0; i < X.rows(); ++i) {
        out[i] = eval_kernel(spec, X.row(i).transpose(), X.row(i).transpose());
    }
    return out;
}

MeasureSampler uniform_sphere_measure(Index d)
{
    return {"sphere-uniform-S" + std::to_string(d - 1), d,
            [d](Index n, std::uint64_t seed) { return sample_uniform_sphere(d, n, seed); }};
}

MeasureSampler standard_gaussian_measure(Index d)
{
    return {"gaussian-N(0,I" + std::to_string(d) + ")", d, [d](Index n, std::uint64_t seed) {
                auto rng = make_engine(seed, 0x6761757373ULL);
                std::normal_distribution<double> normal;
                Matrix X(n, d);
                for (Index i = 0; i < n; ++i) {
                    for (Index j = 0; j < d; ++j) X(i, j) = normal(rng);
                }
                return X;
            }};
}

McEstimate trace_estimate(const KernelSpec& spec, const MeasureSampler& sampler, Index n_mc, std::uint64_t seed)
{
    if (n_mc < 1) {
        throw std::invalid_argument("trace_estimate needs n_mc >= 1");
    }
    if (sampler.dim != spec.input_dim) {
        throw std::invalid_argument("sampler dimension does not match kernel dimension");
    }
    // Chunked so memory stays bounded for large n_mc.
    constexpr Index chunk = 1 << 16;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (Index start = 0, c = 0; start < n_mc; start += chunk, ++c) {
        const Index n = std::min(chunk, n_mc - start);
        const Matrix X = sampler.draw(n, mix64(seed + static_cast<std::uint64_t>(c)));
        const Vector diag = kernel_diagonal(spec, X);
        sum += diag.sum();
        sum_sq += diag.squaredNorm();
    }
    const double n = static_cast<double>(n_mc);
    const double mean = sum / n;
    const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;
    return {mean, std::sqrt(var / n)};
}

} // namespace specbias
