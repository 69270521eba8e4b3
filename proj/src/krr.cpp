#include <specbias/krr.hpp>

namespace specbias {

RidgeSolver::RidgeSolver(const Eigen::Ref<const ColMatrix>& gram, double ridge)
{
    if (!(ridge > 0.0)) {
        throw std::invalid_argument("ridge must be > 0 (ridgeless regression is not supported)");
    }
    if (gram.rows() != gram.cols()) {
        throw std::invalid_argument("Gram matrix must be square");
    }
    ColMatrix A = gram;
    A.diagonal().array() += ridge;
    llt_.compute(A);
    double step = 1e-12 * gram.trace();
    while (llt_.info() != Eigen::Success && steps_ < 3) {
        ++steps_;
        jitter_ = step;
        ColMatrix Aj = A;
        Aj.diagonal().array() += jitter_;
        llt_.compute(Aj);
        step *= 10.0;
    }
    if (llt_.info() != Eigen::Success) {
        throw InvariantViolation("Cholesky factorization failed after jitter escalation");
    }
}

FittedPredictor fit_with_gram(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X,
                              const Eigen::Ref<const ColMatrix>& gram, const Eigen::Ref<const ColMatrix>& Y,
                              double ridge)
{
    if (X.rows() < 1) {
        throw std::invalid_argument("fit needs at least one training point");
    }
    if (Y.rows() != X.rows()) {
        throw std::invalid_argument("target rows do not match training inputs");
    }
    if (!Y.allFinite() || !X.allFinite()) {
        throw std::invalid_argument("NaN or infinite values in training data");
    }
    const RidgeSolver solver(gram, ridge);
    return {spec, X, solver.solve(Y), ridge, solver.jitter(), solver.jitter_steps()};
}

FittedPredictor fit(const KernelSpec& spec, const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const ColMatrix>& Y,
                    double ridge)
{
    if (!(ridge > 0.0)) {
        throw std::invalid_argument("ridge must be > 0 (ridgeless regression is not supported)");
    }
    if (!X.allFinite()) {
        throw std::invalid_argument("NaN or infinite values in training data");
    }
    return fit_with_gram(spec, X, gram_matrix(spec, X), Y, ridge);
}

ColMatrix predict(const FittedPredictor& fp, const Eigen::Ref<const Matrix>& Xq)
{
    if (Xq.cols() != fp.train_inputs.cols()) {
        throw std::invalid_argument("query dimension does not match training inputs");
    }
    return cross_gram(fp.kernel, Xq, fp.train_inputs) * fp.dual_coeffs;
}

} // namespace specbias
