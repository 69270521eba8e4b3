#pragma once

#include <cstdint>

#include <specbias/types.hpp>

namespace specbias {

// ---- linear regression on a one-dimensional data manifold ---------------

/// Closed forms for the kernel x.y/d trained on x_1 ~ N(0, d) (other coordinates zero) with
/// target y = x_1, measured against q = N(0, I_d).
struct ManifoldVignette
{
    double eta = 1.0;           // the single nonzero eigenvalue on the data measure
    double lambda_q = 0.0;      // 1/d, eigenvalue of x_1 on q
    double L_ek = 0.0;          // eta / (eta + ridge / P)
    double L_xq_ek = 0.0;       // same value: the cross-dataset learnability coincides here
    double Pstar_exact = 0.0;   // eps = 1/2
    double Pstar_bound = 0.0;   // eps = 1/2, from the sample-complexity lower bound
};

ManifoldVignette manifold_vignette(Index d, double sigma2, double P);

// ---- parity on the hypercube ---------------------------------------------

/// E_q[prod_i x_i^2] for q uniform on the sphere of radius sqrt(d) (d even), in log-space.
double parity_normalization(Index d);
double log_parity_normalization(Index d);

struct ParityComplexity
{
    double exact = 0.0;        // ridge (1 - eps) n_hat N(d, d) / trace
    double asymptotic = 0.0;   // Stirling form
    double log_exact = 0.0;
};

ParityComplexity parity_sample_complexity(Index d, double sigma2, double eps, double trace);

// ---- copying heads --------------------------------------------------------

/// Context length L, vocabulary parameter V. Sequences have L + 1 positions and tokens are
/// one-hot over `vocab_size` components (V + 1 unless set otherwise).
struct CopyingHeadSpec
{
    Index L = 2;
    Index V = 2;
    Index vocab_size = 0;   // 0 selects V + 1
    double trace = 1.0;     // E_q[k(X, X)]

    Index vocab() const noexcept { return vocab_size > 0 ? vocab_size : V + 1; }
    /// sqrt(L (1 - 1/L + 1/(L V))); z^2 = L - 1 + 1/V.
    double z() const;
    Index irrep_dim() const noexcept { return (L - 1) * (V - 1); }
};

void validate(const CopyingHeadSpec& spec);

/// One sequence as an (L+1) x vocab one-hot matrix -> L x vocab feature rows for positions
/// a = 2..L+1: (x^{a-1} - (1/L) sum_{b=1..L} x^b - 1/V) / z, the 1/V subtracted from every
/// component.
ColMatrix copying_head_feature(const Eigen::Ref<const ColMatrix>& X, const CopyingHeadSpec& spec);

/// Same, for a flattened sequence (row of synth_onehot_sequences inputs).
ColMatrix copying_head_feature_flat(const Eigen::Ref<const Vector>& row, const CopyingHeadSpec& spec);

/// Largest E_D[Tr Phi Phi^T] any one-hot dataset can produce: z^{-2} L (1 - 1/L + vocab/V^2).
double copying_head_worst_feature_norm(const CopyingHeadSpec& spec);

struct CopyingHeadBound
{
    double lambda_max = 0.0;   // trace / ((L-1)(V-1))
    double exact = 0.0;        // with the supplied dataset norms
    double worst_case = 0.0;   // with the worst-case feature norm and E_D[Tr Y Y^T] = L
    double asymptotic = 0.0;   // ridge (1 - eps) L V / trace
};

CopyingHeadBound copying_head_bound(const CopyingHeadSpec& spec, double sigma2, double eps, double feature_norm_D,
                                    double target_norm_D);

/// E_q[k(x,x)] / dim_R.
double irrep_eigenvalue_bound(double trace, Index dim_R);

/// Monte Carlo moments of the copying-head feature under uniform i.i.d. tokens.
struct CopyingHeadMoments
{
    McEstimate overlap;        // E_q[sum_a phi^a . y^a]
    McEstimate feature_norm;   // E_q[Tr Phi Phi^T]
    Vector position_drift;     // E_q[sum_i phi^a_i] per position
};

CopyingHeadMoments copying_head_moments(const CopyingHeadSpec& spec, Index n_samples, std::uint64_t seed);

} // namespace specbias
