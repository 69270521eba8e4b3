#include <specbias/learnability.hpp>
#include <specbias/rng.hpp>
#include <specbias/sphere_spectrum.hpp>
#include <specbias/vignettes.hpp>

#include <cmath>
#include <numbers>
#include <random>

namespace specbias {

ManifoldVignette manifold_vignette(Index d, double sigma2, double P)
{
    if (d < 1 || !(sigma2 > 0.0) || !(P >= 1.0)) {
        throw std::invalid_argument("manifold_vignette needs d >= 1, ridge > 0, P >= 1");
    }
    ManifoldVignette v;
    const double dd = static_cast<double>(d);
    v.eta = 1.0;
    v.lambda_q = 1.0 / dd;
    v.L_ek = ek_learnability(v.eta, P, sigma2);
    v.L_xq_ek = v.L_ek;
    v.Pstar_exact = ek_sample_complexity(v.eta, sigma2, 0.5);
    // E_D[phi^2] = E_D[y^2] = d in expectation, E_q[phi y] = 1.
    v.Pstar_bound = sample_complexity_lower(v.lambda_q, sigma2, 0.5, 1.0, dd, dd);
    return v;
}

double log_parity_normalization(Index d)
{
    if (d < 2 || d % 2 != 0) {
        throw std::invalid_argument("parity normalization needs even d >= 2");
    }
    const double dd = static_cast<double>(d);
    return -dd * std::log(2.0) + dd * std::log(dd) + std::lgamma(0.5 * dd) - std::lgamma(1.5 * dd);
}

double parity_normalization(Index d)
{
    return std::exp(log_parity_normalization(d));
}

ParityComplexity parity_sample_complexity(Index d, double sigma2, double eps, double trace)
{
    if (!(trace > 0.0)) {
        throw std::invalid_argument("kernel trace must be > 0");
    }
    if (!(eps >= 0.0 && eps < 1.0)) {
        throw std::domain_error("eps must lie in [0, 1)");
    }
    const double dd = static_cast<double>(d);
    ParityComplexity out;
    out.log_exact = std::log(sigma2 * (1.0 - eps) / trace) + log_parity_normalization(d)
                    + log_degeneracy(static_cast<int>(d), d);
    out.exact = std::exp(out.log_exact);
    const double growth = 4.0 * std::numbers::e / std::pow(3.0, 1.5);
    out.asymptotic = sigma2 * (1.0 - eps) / trace * std::sqrt(27.0 / (64.0 * std::numbers::pi * dd))
                     * std::pow(growth, dd);
    return out;
}

double CopyingHeadSpec::z() const
{
    const double l = static_cast<double>(L);
    const double v = static_cast<double>(V);
    return std::sqrt(l * (1.0 - 1.0 / l + 1.0 / (l * v)));
}

void validate(const CopyingHeadSpec& spec)
{
    if (spec.L < 2 || spec.V < 2) {
        throw std::invalid_argument("copying head needs L >= 2 and V >= 2");
    }
    if (!(spec.trace > 0.0)) {
        throw std::invalid_argument("copying head kernel trace must be > 0");
    }
}

ColMatrix copying_head_feature(const Eigen::Ref<const ColMatrix>& X, const CopyingHeadSpec& spec)
{
    validate(spec);
    const Index L = spec.L;
    if (X.rows() != L + 1 || X.cols() != spec.vocab()) {
        throw std::invalid_argument("copying_head_feature expects an (L+1) x vocab token matrix");
    }
    for (Index a = 0; a <= L; ++a) {
        const bool binary = ((X.row(a).array() == 0.0) || (X.row(a).array() == 1.0)).all();
        if (!binary || X.row(a).sum() != 1.0) {
            throw std::invalid_argument("row " + std::to_string(a) + " is not one-hot");
        }
    }
    const Eigen::RowVectorXd mean = X.topRows(L).colwise().mean();
    const double shift = 1.0 / static_cast<double>(spec.V);
    ColMatrix phi = X.topRows(L);   // x^{a-1} for a = 2..L+1
    phi.rowwise() -= mean;
    phi.array() -= shift;
    return phi / spec.z();
}

ColMatrix copying_head_feature_flat(const Eigen::Ref<const Vector>& row, const CopyingHeadSpec& spec)
{
    const Index vocab = spec.vocab();
    if (row.size() != (spec.L + 1) * vocab) {
        throw std::invalid_argument("flattened sequence has the wrong length");
    }
    const ColMatrix X = Eigen::Map<const rowmat_type<double>>(row.data(), spec.L + 1, vocab);
    return copying_head_feature(X, spec);
}

double copying_head_worst_feature_norm(const CopyingHeadSpec& spec)
{
    validate(spec);
    const double l = static_cast<double>(spec.L);
    const double v = static_cast<double>(spec.V);
    const double z = spec.z();
    // |mean_b x^b|^2 >= 1/L for one-hot rows; the constant shift contributes vocab / V^2.
    return l / (z * z) * (1.0 - 1.0 / l + static_cast<double>(spec.vocab()) / (v * v));
}

double irrep_eigenvalue_bound(double trace, Index dim_R)
{
    if (!(trace > 0.0) || dim_R < 1) {
        throw std::invalid_argument("irrep bound needs trace > 0 and dim_R >= 1");
    }
    return trace / static_cast<double>(dim_R);
}

CopyingHeadBound copying_head_bound(const CopyingHeadSpec& spec, double sigma2, double eps, double feature_norm_D,
                                    double target_norm_D)
{
    validate(spec);
    if (!(feature_norm_D > 0.0) || !(target_norm_D > 0.0)) {
        throw std::invalid_argument("dataset norms must be > 0");
    }
    const double z = spec.z();
    CopyingHeadBound b;
    b.lambda_max = irrep_eigenvalue_bound(spec.trace, spec.irrep_dim());
    b.exact = sample_complexity_lower(b.lambda_max, sigma2, eps, z, feature_norm_D, target_norm_D);
    b.worst_case = sample_complexity_lower(b.lambda_max, sigma2, eps, z, copying_head_worst_feature_norm(spec),
                                           static_cast<double>(spec.L));
    b.asymptotic = sigma2 * (1.0 - eps) * static_cast<double>(spec.L) * static_cast<double>(spec.V) / spec.trace;
    return b;
}

CopyingHeadMoments copying_head_moments(const CopyingHeadSpec& spec, Index n_samples, std::uint64_t seed)
{
    validate(spec);
    if (n_samples < 2) {
        throw std::invalid_argument("copying_head_moments needs at least two samples");
    }
    const Index L = spec.L;
    const Index vocab = spec.vocab();
    auto rng = make_engine(seed, 0x636f7079ULL);
    std::uniform_int_distribution<Index> token(0, vocab - 1);
    const double z = spec.z();
    const double shift = 1.0 / static_cast<double>(spec.V);

    // Work with token ids; phi^a = (e_{t_{a-1}} - counts/L - shift) / z.
    std::vector<Index> tokens(static_cast<std::size_t>(L + 1));
    std::vector<double> counts(static_cast<std::size_t>(vocab), 0.0);
    double s_ov = 0.0, ss_ov = 0.0, s_fn = 0.0, ss_fn = 0.0;
    Vector drift = Vector::Zero(L);
    const double Ld = static_cast<double>(L);
    for (Index s = 0; s < n_samples; ++s) {
        for (auto& t : tokens) t = token(rng);
        double c2 = 0.0;
        for (Index b = 0; b < L; ++b) {
            double& c = counts[static_cast<std::size_t>(tokens[static_cast<std::size_t>(b)])];
            c2 += 2.0 * c + 1.0;
            c += 1.0;
        }
        const double m2 = c2 / (Ld * Ld);
        double overlap = 0.0;
        double norm = 0.0;
        for (Index a = 0; a < L; ++a) {
            const double mt = counts[static_cast<std::size_t>(tokens[static_cast<std::size_t>(a)])] / Ld;
            // phi . y with y^a = e_t; the mean m sums to one.
            overlap += (1.0 - mt - shift) / z;
            // |e_t - m - shift 1|^2.
            norm += (1.0 + m2 + vocab * shift * shift - 2.0 * mt - 2.0 * shift + 2.0 * shift) / (z * z);
            drift[a] += (1.0 - 1.0 - vocab * shift) / z;
        }
        for (Index b = 0; b < L; ++b) counts[static_cast<std::size_t>(tokens[static_cast<std::size_t>(b)])] = 0.0;
        s_ov += overlap;
        ss_ov += overlap * overlap;
        s_fn += norm;
        ss_fn += norm * norm;
    }
    const double n = static_cast<double>(n_samples);
    auto finish = [n](double s, double ss) {
        const double mean = s / n;
        return McEstimate{mean, std::sqrt(std::max(0.0, (ss - n * mean * mean) / (n - 1)) / n)};
    };
    return {finish(s_ov, ss_ov), finish(s_fn, ss_fn), drift / n};
}

} // namespace specbias
