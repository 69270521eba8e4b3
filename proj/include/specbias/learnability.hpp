#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <specbias/krr.hpp>
#include <specbias/sphere_spectrum.hpp>
#include <specbias/types.hpp>

namespace specbias {

/// E[y f] / E[y y] over a sample (a held-out set stands in for the population).
double learnability(const Eigen::Ref<const Vector>& y_vals, const Eigen::Ref<const Vector>& f_vals);

/// Ratio of two paired Monte Carlo means with a delta-method standard error.
struct RatioEstimate
{
    double value = 0.0;
    double stderr_ = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    double denominator_stderr = 0.0;
    bool defined = true;   // false when the denominator is within 3 s.e. of zero
};

RatioEstimate paired_ratio(const Eigen::Ref<const Vector>& numer_terms, const Eigen::Ref<const Vector>& denom_terms);

using TargetFunction = std::function<Vector(const Matrix&)>;

/// E_q[phi f] / E_q[phi y] with q the uniform sphere, numerator and denominator taken on
/// the same n_mc draws. `output` selects the predictor column.
RatioEstimate cross_dataset_learnability(const HarmonicFeature& feature, const FittedPredictor& fp,
                                         const TargetFunction& target_on_q, Index n_mc, std::uint64_t seed,
                                         Index output = 0);

/// Same quantity through the Mercer expansion: E_q[phi f] = lambda * phi(X_train) . alpha.
double cross_dataset_learnability_spectral(double lambda, const Eigen::Ref<const Vector>& phi_train,
                                           const Eigen::Ref<const Vector>& alpha, double overlap_q);

/// Upper bound on cross-dataset learnability:
/// (lambda P / ridge) sqrt(E_D[phi^2] E_D[y^2]) / |E_q[phi y]|.
double thm_bound(double lambda, double P, double sigma2, double E_D_phi2, double E_D_y2, double overlap_q_abs);

/// Smallest P compatible with reaching learnability 1 - eps (inverse of thm_bound).
double sample_complexity_lower(double lambda, double sigma2, double eps, double overlap_q_abs, double E_D_phi2,
                               double E_D_y2);

/// eta / (eta + ridge / P).
double ek_learnability(double eta, double P, double sigma2);

/// eta^{-1} ridge (1 - eps) / eps.
double ek_sample_complexity(double eta, double sigma2, double eps);

/// eta P / ridge, the small-P tangent of ek_learnability.
double linear_bound(double eta, double P, double sigma2);

struct LearnabilityReport
{
    std::string dataset;
    std::string kernel;
    int feature_degree = 0;
    std::uint64_t feature_seed = 0;
    Index P = 0;
    double sigma2 = 0.0;
    double L_emp = 0.0;             // NaN when no held-out split exists
    double L_emp_stderr = 0.0;
    double L_xq = 0.0;
    double L_xq_stderr = 0.0;
    double L_xq_spectral = 0.0;
    double bound = 0.0;
    std::map<double, double> Pstar_lo;   // eps -> lower bound on P*
    double E_D_phi2 = 0.0;
    double E_D_y2 = 0.0;
    double overlap = 0.0;
    double overlap_stderr = 0.0;
    double jitter = 0.0;

    /// L_xq <= bound + 3 s.e.
    bool respects_bound() const noexcept { return L_xq <= bound + 3.0 * L_xq_stderr; }
};

/// Columns (dataset, kernel, feature_degree, feature_seed, P, sigma2, L_emp, L_xq, bound,
/// Pstar_eps0, Pstar_eps0p7, E_D_phi2, E_D_y2, overlap, stderr_Lxq).
void write_learnability_csv(std::ostream& os, const std::vector<LearnabilityReport>& rows);

} // namespace specbias
