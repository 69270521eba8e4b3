#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include <specbias/types.hpp>

namespace specbias {

using Density = std::function<double(const Eigen::Ref<const Vector>&)>;

/// I_bar = E_p[p/q] and J_bar = E_q[q/p].
struct ImportanceRatios
{
    McEstimate I_bar;
    McEstimate J_bar;
};

/// Monte Carlo estimates from samples of p and of q (one sample per row).
ImportanceRatios importance_ratios(const Density& p_density, const Density& q_density,
                                   const Eigen::Ref<const Matrix>& p_samples, const Eigen::Ref<const Matrix>& q_samples);

/// Exact sums for two distributions over the same finite set of atoms.
ImportanceRatios importance_ratios(const Eigen::Ref<const Vector>& p_probs, const Eigen::Ref<const Vector>& q_probs);

/// sum_i (1 - L_i)^2 E_q[y phi_i]^2.
double q_side_mse(const Eigen::Ref<const Vector>& learnabilities, const Eigen::Ref<const Vector>& coefficients);

struct DensityRatioReport
{
    double I_bar = 1.0;
    double J_bar = 1.0;
    double q_mse = 0.0;
    double mse_lower = 0.0;
    double mse_upper = 0.0;
    double coeff_mass_included = 0.0;   // sum_i E_q[y phi_i]^2 over the supplied features
    double coeff_mass_total = 0.0;      // E_q[y^2] when known, else equal to the included mass
};

/// q_mse / J_bar <= MSE_p <= I_bar * q_mse.
DensityRatioReport mse_sandwich(double I_bar, double J_bar, const Eigen::Ref<const Vector>& learnabilities,
                                const Eigen::Ref<const Vector>& coefficients, double coeff_mass_total = -1.0);

/// Columns (I_bar, J_bar, q_mse, mse_lower, mse_upper, coeff_mass_included, coeff_mass_total).
void write_density_ratio_csv(std::ostream& os, const std::vector<DensityRatioReport>& rows);

} // namespace specbias
