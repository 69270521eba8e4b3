#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include <specbias/covariate_bounds.hpp>
#include <specbias/kernels.hpp>
#include <specbias/learnability.hpp>
#include <specbias/sphere_spectrum.hpp>

namespace specbias {

enum class ExperimentKind
{
    fig1_sphere,
    fig2_real,
    fig3_whitened,
    vignette_manifold,
    vignette_parity,
    vignette_copyhead,
    prop21_demo,
};

std::string_view to_string(ExperimentKind kind) noexcept;

struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::fig1_sphere;
    KernelFamily kernel = KernelFamily::arccos_nngp;
    Index d = 8;
    double sigma2 = 1e-3;
    std::vector<int> feature_degrees{1, 2, 4};
    std::vector<Index> P_grid;          // empty: 16 log-spaced values in [8, min(4096, pool)]
    Index pool_size = 10000;
    std::vector<double> eps{0.0, 0.7};  // P* columns are reported for 0 and 0.7
    Index n_mc = 20000;
    Index n_test = 5000;                // held-out size for fig1 (p = q)
    std::vector<std::uint64_t> seeds{0};
    int spectrum_nmax = 20;

    // real data
    std::string dataset = "mnist";      // mnist | fashion-mnist | cifar10
    std::string dataset_root;           // empty: $SPECBIAS_DATA_ROOT
    Index test_size = 1000;
    bool keep_channels = false;

    // vignettes
    Index manifold_reps = 200;
    std::vector<double> manifold_P_over_sigma2{0.25, 1.0, 4.0};
    std::vector<Index> parity_dims{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
    Index copyhead_L = 8192;
    Index copyhead_V = 65536;
    Index copyhead_mc = 20000;
    Index prop21_instances = 200;

    std::string output_dir = "specbias-out";
};

/// Parses and validates a JSON config. Unknown keys and out-of-range values raise
/// ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

/// 16 log-spaced integers in [lo, hi], deduplicated.
std::vector<Index> log_grid(Index lo, Index hi, int count);

struct ExperimentResult
{
    std::vector<LearnabilityReport> reports;
    std::vector<SpectralLine> spectrum;
    std::vector<std::string> violations;   // theorem violations beyond 3 s.e.
    std::string table_name;                // vignette table file name, when any
    std::string table_csv;                 // vignette table contents
    double variance_captured = -1.0;       // real-data PCA
    nlohmann::json manifest;
};

/// Runs the experiment in memory.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Runs and writes learnability.csv, spectrum.csv (and vignette tables) plus manifest.json
/// into config.output_dir. Throws InvariantViolation after writing a defect report when the
/// learnability bound is violated.
ExperimentResult run_and_write(const ExperimentConfig& config);

/// Learning-curve helper: first P on the grid (linearly interpolated in log P) at which
/// `values` reaches `level`; +inf when never reached.
double onset(const std::vector<Index>& P, const std::vector<double>& values, double level);

} // namespace specbias
