#include <specbias/csv.hpp>
#include <specbias/learnability.hpp>

#include <cmath>
#include <limits>
#include <ostream>

namespace specbias {

double learnability(const Eigen::Ref<const Vector>& y_vals, const Eigen::Ref<const Vector>& f_vals)
{
    if (y_vals.size() < 1 || y_vals.size() != f_vals.size()) {
        throw std::invalid_argument("learnability needs equal-length, non-empty samples");
    }
    const double yy = y_vals.squaredNorm();
    if (yy == 0.0) {
        throw std::domain_error("learnability undefined: E[y^2] = 0");
    }
    return y_vals.dot(f_vals) / yy;
}

RatioEstimate paired_ratio(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b)
{
    if (a.size() < 2 || a.size() != b.size()) {
        throw std::invalid_argument("paired_ratio needs two equal-length samples of size >= 2");
    }
    const double n = static_cast<double>(a.size());
    const double ma = a.mean();
    const double mb = b.mean();
    const Vector da = a.array() - ma;
    const Vector db = b.array() - mb;
    const double vaa = da.squaredNorm() / (n - 1);
    const double vbb = db.squaredNorm() / (n - 1);
    const double vab = da.dot(db) / (n - 1);

    RatioEstimate out;
    out.numerator = ma;
    out.denominator = mb;
    out.denominator_stderr = std::sqrt(vbb / n);
    if (std::abs(mb) <= 3.0 * out.denominator_stderr || mb == 0.0) {
        out.defined = false;
        out.value = std::numeric_limits<double>::quiet_NaN();
        out.stderr_ = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    const double r = ma / mb;
    const double var = std::max(0.0, vaa - 2.0 * r * vab + r * r * vbb) / (n * mb * mb);
    out.value = r;
    out.stderr_ = std::sqrt(var);
    return out;
}

RatioEstimate cross_dataset_learnability(const HarmonicFeature& feature, const FittedPredictor& fp,
                                         const TargetFunction& target_on_q, Index n_mc, std::uint64_t seed,
                                         Index output)
{
    if (n_mc < 2) {
        throw std::invalid_argument("cross_dataset_learnability needs n_mc >= 2");
    }
    const Matrix Xq = sample_uniform_sphere(feature.dim, n_mc, seed);
    const Vector phi = harmonic_eval(feature, Xq);
    const Vector f = predict(fp, Xq).col(output);
    const Vector y = target_on_q(Xq);
    if (y.size() != n_mc) {
        throw std::invalid_argument("target function returned the wrong number of values");
    }
    return paired_ratio(phi.cwiseProduct(f), phi.cwiseProduct(y));
}

double cross_dataset_learnability_spectral(double lambda, const Eigen::Ref<const Vector>& phi_train,
                                           const Eigen::Ref<const Vector>& alpha, double overlap_q)
{
    if (overlap_q == 0.0) {
        throw std::domain_error("undefined overlap: E_q[phi y] = 0");
    }
    return lambda * phi_train.dot(alpha) / overlap_q;
}

double thm_bound(double lambda, double P, double sigma2, double E_D_phi2, double E_D_y2, double overlap_q_abs)
{
    if (!(overlap_q_abs > 0.0)) {
        throw std::domain_error("thm_bound: overlap |E_q[phi y]| must be > 0");
    }
    if (lambda < 0.0 || !(P > 0.0) || !(sigma2 > 0.0) || E_D_phi2 < 0.0 || E_D_y2 < 0.0) {
        throw std::invalid_argument("thm_bound: arguments out of range");
    }
    return lambda * P / sigma2 * std::sqrt(E_D_phi2 * E_D_y2) / overlap_q_abs;
}

double sample_complexity_lower(double lambda, double sigma2, double eps, double overlap_q_abs, double E_D_phi2,
                               double E_D_y2)
{
    if (!(eps >= 0.0 && eps < 1.0)) {
        throw std::domain_error("eps must lie in [0, 1)");
    }
    if (!(lambda > 0.0) || !(sigma2 > 0.0) || !(overlap_q_abs > 0.0) || !(E_D_phi2 > 0.0) || !(E_D_y2 > 0.0)) {
        throw std::invalid_argument("sample_complexity_lower: arguments must be positive");
    }
    return sigma2 / lambda * (1.0 - eps) * overlap_q_abs / std::sqrt(E_D_phi2 * E_D_y2);
}

double ek_learnability(double eta, double P, double sigma2)
{
    if (eta < 0.0 || !(P > 0.0) || !(sigma2 > 0.0)) {
        throw std::invalid_argument("ek_learnability: need eta >= 0, P > 0, ridge > 0");
    }
    return eta / (eta + sigma2 / P);
}

double ek_sample_complexity(double eta, double sigma2, double eps)
{
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::domain_error("ek_sample_complexity: eps must lie in (0, 1)");
    }
    if (!(eta > 0.0) || !(sigma2 > 0.0)) {
        throw std::invalid_argument("ek_sample_complexity: need eta > 0, ridge > 0");
    }
    return sigma2 / eta * (1.0 - eps) / eps;
}

double linear_bound(double eta, double P, double sigma2)
{
    if (eta < 0.0 || !(P > 0.0) || !(sigma2 > 0.0)) {
        throw std::invalid_argument("linear_bound: need eta >= 0, P > 0, ridge > 0");
    }
    return eta * P / sigma2;
}

void write_learnability_csv(std::ostream& os, const std::vector<LearnabilityReport>& rows)
{
    os << "dataset,kernel,feature_degree,feature_seed,P,sigma2,L_emp,L_xq,bound,Pstar_eps0,Pstar_eps0p7,"
          "E_D_phi2,E_D_y2,overlap,stderr_Lxq\n";
    auto pstar = [](const LearnabilityReport& r, double eps) {
        const auto it = r.Pstar_lo.find(eps);
        return it == r.Pstar_lo.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    };
    for (const auto& r : rows) {
        os << r.dataset << ',' << r.kernel << ',' << r.feature_degree << ',' << r.feature_seed << ',' << r.P << ','
           << csv::format(r.sigma2) << ',' << csv::format(r.L_emp) << ',' << csv::format(r.L_xq) << ','
           << csv::format(r.bound) << ',' << csv::format(pstar(r, 0.0)) << ',' << csv::format(pstar(r, 0.7)) << ','
           << csv::format(r.E_D_phi2) << ',' << csv::format(r.E_D_y2) << ',' << csv::format(r.overlap) << ','
           << csv::format(r.L_xq_stderr) << '\n';
    }
}

} // namespace specbias
