#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <specbias/types.hpp>

namespace specbias {

/// One preprocessing step with its parameters, recorded in application order.
struct Transform
{
    std::string name;
    std::map<std::string, std::string> params;
};

struct SampleSet
{
    Matrix inputs;
    ColMatrix targets;     // empty when the set carries no targets
    std::string source;    // mnist, fashion-mnist, cifar10, sphere-uniform, manifold, ...
    std::vector<Transform> preprocessing;
    std::uint64_t seed = 0;

    Index size() const noexcept { return inputs.rows(); }
    Index dim() const noexcept { return inputs.cols(); }
    void record(Transform t) { preprocessing.push_back(std::move(t)); }
};

// ---- raw ingestion -------------------------------------------------------

/// Contents of an IDX file. Images (magic 0x00000803) are flattened to one row per image with
/// pixels scaled to [0, 1]; labels (magic 0x00000801) land in `labels`.
struct IdxTensor
{
    std::vector<Index> shape;
    Matrix images;
    std::vector<std::uint8_t> labels;
    bool is_labels = false;
};

IdxTensor load_idx(const std::filesystem::path& path);

struct LabeledImages
{
    Matrix images;    // one image per row, values in [0, 1]
    std::vector<std::uint8_t> labels;
};

/// One CIFAR-10 binary batch (3073-byte records, label then R, G, B planes of 32x32).
/// Channels are averaged to grayscale (1024 columns) unless keep_channels is set (3072).
LabeledImages load_cifar10_batch(const std::filesystem::path& path, bool keep_channels = false);

struct Cifar10
{
    LabeledImages train;
    LabeledImages test;
};

/// Reads data_batch_1..5.bin and test_batch.bin from `dir`.
Cifar10 load_cifar10(const std::filesystem::path& dir, bool keep_channels = false);

// ---- preprocessing -------------------------------------------------------

/// Principal axes fit on a training split.
struct PcaModel
{
    Vector mean;
    ColMatrix basis;          // original_dim x d_out, orthonormal columns, decreasing variance
    Vector eigenvalues;       // variance along each kept axis
    double variance_captured = 0.0;
    bool rank_deficient = false;
};

PcaModel fit_pca(const Eigen::Ref<const Matrix>& train, Index d_out);

/// (X - mean) * basis.
Matrix pca_transform(const PcaModel& model, const Eigen::Ref<const Matrix>& X);

/// (X - mean) * basis * diag(1 / sqrt(eigenvalue)). Throws naming the first component whose
/// variance is below 1e-10.
Matrix whiten_transform(const PcaModel& model, const Eigen::Ref<const Matrix>& X);

struct PcaReduction
{
    Matrix reduced;
    PcaModel model;
};

/// Fits on `fit_split` and projects X.
PcaReduction pca_reduce(const Eigen::Ref<const Matrix>& X, Index d_out, const Eigen::Ref<const Matrix>& fit_split);

/// Whitening fit on `fit_split` (full rank of the input dimension) and applied to X.
Matrix whiten(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& fit_split);

/// Divides every row by its norm.
Matrix project_sphere(const Eigen::Ref<const Matrix>& X);

/// Train/test pair after the real-data pipeline: PCA to d_out on the train split, optional
/// whitening, then projection onto the unit sphere.
struct PreparedSplit
{
    SampleSet train;
    SampleSet test;
    double variance_captured = 0.0;
};

PreparedSplit prepare_real_data(const Eigen::Ref<const Matrix>& train_raw, const Eigen::Ref<const Matrix>& test_raw,
                                const std::string& source, Index d_out, bool whitening);

// ---- synthetic distributions ---------------------------------------------

/// x_1 ~ N(0, d), remaining coordinates zero; targets y = x_1.
SampleSet synth_manifold(Index P, Index d, std::uint64_t seed);

/// Mixture (1 - alpha) * {all coordinates equal to a random sign} + alpha * uniform{-1, 1}^d with
/// parity targets.
SampleSet synth_hypercube_correlated(Index P, Index d, double alpha, std::uint64_t seed);

/// Token sequences of length L + 1 drawn i.i.d. uniformly from `vocab_size` tokens, one-hot.
/// inputs: P x ((L+1) * vocab_size), position-major. targets: P x (L * vocab_size) holding
/// the copying-head target Y^a = X^{a-1} for a = 2..L+1.
SampleSet synth_onehot_sequences(Index P, Index L, Index vocab_size, std::uint64_t seed);

// ---- cache ---------------------------------------------------------------

/// Writes `<stem>.bin` (little-endian float64: inputs then targets, row-major) and a JSON
/// sidecar `<stem>.json` with shapes, source, seed and the preprocessing chain.
void save_sample_set(const SampleSet& set, const std::filesystem::path& stem);
SampleSet load_sample_set(const std::filesystem::path& stem);

} // namespace specbias
