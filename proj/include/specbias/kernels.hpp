#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>

#include <specbias/types.hpp>

namespace specbias {

enum class KernelFamily
{
    linear_scaled,     // k(x,y) = x.y / d
    arccos_nngp,       // one hidden ReLU layer, Bayesian (first-order arc-cosine)
    arccos_ntk,        // one hidden ReLU layer, gradient flow
};

enum class SymmetryTag
{
    rotation_invariant,
    permutation_invariant,
    none,
};

struct KernelSpec
{
    KernelFamily family = KernelFamily::arccos_nngp;
    Index input_dim = 1;
    SymmetryTag symmetry = SymmetryTag::rotation_invariant;
};

std::string_view to_string(KernelFamily family) noexcept;
std::string_view to_string(SymmetryTag tag) noexcept;
KernelFamily parse_kernel_family(std::string_view name);

inline bool is_rotation_invariant(const KernelSpec& spec) noexcept
{
    return spec.symmetry == SymmetryTag::rotation_invariant;
}

namespace detail {

/// Angular part of the first-order arc-cosine kernel: sin t + (pi - t) cos t.
template <class Scalar>
Scalar arccos_j1(Scalar cos_angle)
{
    using std::acos;
    using std::sqrt;
    const Scalar c = std::clamp(cos_angle, Scalar(-1), Scalar(1));
    const Scalar theta = acos(c);
    return sqrt(Scalar(1) - c * c) + (std::numbers::pi_v<Scalar> - theta) * c;
}

/// Kernel value from the three inner products it depends on.
template <class Scalar>
Scalar kernel_from_products(KernelFamily family, Index dim, Scalar xy, Scalar xx, Scalar yy)
{
    constexpr Scalar pi = std::numbers::pi_v<Scalar>;
    switch (family) {
        case KernelFamily::linear_scaled:
            return xy / static_cast<Scalar>(dim);
        case KernelFamily::arccos_nngp:
        case KernelFamily::arccos_ntk: {
            const Scalar norms = std::sqrt(xx) * std::sqrt(yy);
            const Scalar c = std::clamp(xy / norms, Scalar(-1), Scalar(1));
            Scalar value = norms / pi * arccos_j1(c);
            if (family == KernelFamily::arccos_ntk) {
                value += xy / pi * (pi - std::acos(c));
            }
            return value;
        }
    }
    return Scalar(0);
}

void check_kernel_inputs(const KernelSpec& spec, Index xdim, Index ydim, double xx, double yy);

} // namespace detail

/// Evaluates k(x, y). Arc-cosine families reject zero-norm inputs.
template <class XDerived, class YDerived>
typename XDerived::Scalar eval_kernel(const KernelSpec& spec,
                                      const Eigen::MatrixBase<XDerived>& x,
                                      const Eigen::MatrixBase<YDerived>& y)
{
    using Scalar = typename XDerived::Scalar;
    const Scalar xx = x.squaredNorm();
    const Scalar yy = y.squaredNorm();
    detail::check_kernel_inputs(spec, x.size(), y.size(), static_cast<double>(xx), static_cast<double>(yy));
    return detail::kernel_from_products<Scalar>(spec.family, spec.input_dim, x.dot(y), xx, yy);
}

/// Symmetric Gram matrix [K]_{mu nu} = k(x_mu, x_nu) over the rows of X.
ColMatrix gram_matrix(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X);

/// Rectangular kernel matrix between the rows of A (rows) and B (columns).
ColMatrix cross_gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B);

/// k(x, x) for every row.
Vector kernel_diagonal(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X);

/// A probability measure we can draw from deterministically given a seed.
struct MeasureSampler
{
    std::string id;
    Index dim = 0;
    std::function<Matrix(Index n, std::uint64_t seed)> draw;
};

MeasureSampler uniform_sphere_measure(Index d);
MeasureSampler standard_gaussian_measure(Index d);

/// Monte Carlo estimate of E_q[k(x,x)], the kernel trace on q.
McEstimate trace_estimate(const KernelSpec& spec, const MeasureSampler& sampler, Index n_mc, std::uint64_t seed);

} // namespace specbias
