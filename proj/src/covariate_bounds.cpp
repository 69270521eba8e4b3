#include <specbias/covariate_bounds.hpp>
#include <specbias/csv.hpp>

#include <cmath>
#include <ostream>

namespace specbias {

namespace {

McEstimate mean_and_stderr(const Vector& v)
{
    const double n = static_cast<double>(v.size());
    const double m = v.mean();
    const double var = v.size() > 1 ? (v.array() - m).square().sum() / (n - 1) : 0.0;
    return {m, std::sqrt(var / n)};
}

} // namespace

ImportanceRatios importance_ratios(const Density& p_density, const Density& q_density,
                                   const Eigen::Ref<const Matrix>& p_samples, const Eigen::Ref<const Matrix>& q_samples)
{
    if (p_samples.rows() < 1 || q_samples.rows() < 1) {
        throw std::invalid_argument("importance_ratios needs samples from both p and q");
    }
    Vector pq(p_samples.rows());
    for (Index i = 0; i < p_samples.rows(); ++i) {
        const Vector x = p_samples.row(i).transpose();
        const double q = q_density(x);
        if (!(q > 0.0)) {
            throw std::domain_error("support violation: q(x) = 0 at a p-sample");
        }
        pq[i] = p_density(x) / q;
    }
    Vector qp(q_samples.rows());
    for (Index i = 0; i < q_samples.rows(); ++i) {
        const Vector x = q_samples.row(i).transpose();
        const double p = p_density(x);
        if (!(p > 0.0)) {
            throw std::domain_error("support violation: p(x) = 0 at a q-sample");
        }
        qp[i] = q_density(x) / p;
    }
    return {mean_and_stderr(pq), mean_and_stderr(qp)};
}

ImportanceRatios importance_ratios(const Eigen::Ref<const Vector>& p_probs, const Eigen::Ref<const Vector>& q_probs)
{
    if (p_probs.size() != q_probs.size() || p_probs.size() < 1) {
        throw std::invalid_argument("discrete importance ratios need matching, non-empty tables");
    }
    double I = 0.0;
    double J = 0.0;
    for (Index i = 0; i < p_probs.size(); ++i) {
        const double p = p_probs[i];
        const double q = q_probs[i];
        if (p > 0.0) {
            if (!(q > 0.0)) throw std::domain_error("support violation: q = 0 where p > 0");
            I += p * p / q;
        }
        if (q > 0.0) {
            if (!(p > 0.0)) throw std::domain_error("support violation: p = 0 where q > 0");
            J += q * q / p;
        }
    }
    return {{I, 0.0}, {J, 0.0}};
}

double q_side_mse(const Eigen::Ref<const Vector>& learnabilities, const Eigen::Ref<const Vector>& coefficients)
{
    if (learnabilities.size() != coefficients.size()) {
        throw std::invalid_argument("q_side_mse: learnabilities and coefficients differ in length");
    }
    return ((1.0 - learnabilities.array()).square() * coefficients.array().square()).sum();
}

DensityRatioReport mse_sandwich(double I_bar, double J_bar, const Eigen::Ref<const Vector>& learnabilities,
                                const Eigen::Ref<const Vector>& coefficients, double coeff_mass_total)
{
    if (!(I_bar > 0.0) || !(J_bar > 0.0)) {
        throw std::invalid_argument("importance ratios must be positive");
    }
    DensityRatioReport r;
    r.I_bar = I_bar;
    r.J_bar = J_bar;
    r.q_mse = q_side_mse(learnabilities, coefficients);
    r.mse_lower = r.q_mse / J_bar;
    r.mse_upper = I_bar * r.q_mse;
    r.coeff_mass_included = coefficients.squaredNorm();
    r.coeff_mass_total = coeff_mass_total >= 0.0 ? coeff_mass_total : r.coeff_mass_included;
    return r;
}

void write_density_ratio_csv(std::ostream& os, const std::vector<DensityRatioReport>& rows)
{
    os << "I_bar,J_bar,q_mse,mse_lower,mse_upper,coeff_mass_included,coeff_mass_total\n";
    for (const auto& r : rows) {
        os << csv::format(r.I_bar) << ',' << csv::format(r.J_bar) << ',' << csv::format(r.q_mse) << ','
           << csv::format(r.mse_lower) << ',' << csv::format(r.mse_upper) << ',' << csv::format(r.coeff_mass_included)
           << ',' << csv::format(r.coeff_mass_total) << '\n';
    }
}

} // namespace specbias
