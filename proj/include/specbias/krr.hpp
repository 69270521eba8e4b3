#pragma once

#include <Eigen/Cholesky>

#include <specbias/kernels.hpp>
#include <specbias/types.hpp>

namespace specbias {

/// Exact kernel ridge regression: alpha = (K + ridge I)^{-1} y. Multi-output
/// targets carry one column of dual coefficients per output.
struct FittedPredictor
{
    KernelSpec kernel;
    Matrix train_inputs;
    ColMatrix dual_coeffs;
    double ridge = 1.0;
    double jitter = 0.0;     // extra diagonal added when the factorization needed escalation
    int jitter_steps = 0;

    auto alpha() const { return dual_coeffs.col(0); }
};

/// Single factorization of K + ridge I with jitter escalation (1e-12 * trace, x10, up to
/// three retries).
class RidgeSolver
{
public:
    RidgeSolver(const Eigen::Ref<const ColMatrix>& gram, double ridge);

    ColMatrix solve(const Eigen::Ref<const ColMatrix>& rhs) const { return llt_.solve(rhs); }

    double jitter() const noexcept { return jitter_; }
    int jitter_steps() const noexcept { return steps_; }

private:
    Eigen::LLT<ColMatrix> llt_;
    double jitter_ = 0.0;
    int steps_ = 0;
};

FittedPredictor fit(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const ColMatrix>& Y,
                    double ridge);

/// Fit against a precomputed Gram matrix of X.
FittedPredictor fit_with_gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X,
                              const Eigen::Ref<const ColMatrix>& gram, const Eigen::Ref<const ColMatrix>& Y,
                              double ridge);

/// f(x) = sum_nu k(x, x_nu) alpha_nu, one column per output.
ColMatrix predict(const FittedPredictor& fp, const Eigen::Ref<const Matrix>& Xq);

} // namespace specbias
