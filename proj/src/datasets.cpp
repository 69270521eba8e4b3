#include <specbias/csv.hpp>
#include <specbias/datasets.hpp>
#include <specbias/rng.hpp>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <array>
#include <bit>
#include <fstream>
#include <random>

namespace specbias {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset)
{
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16)
           | (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

} // namespace

IdxTensor load_idx(const std::filesystem::path& path)
{
    const auto bytes = read_file(path);
    if (bytes.size() < 8) {
        throw DataError(path.string() + ": truncated IDX header");
    }
    const std::uint32_t magic = read_be32(bytes, 0);
    IdxTensor out;
    std::size_t ndim = 0;
    if (magic == 0x00000803) {
        ndim = 3;
    } else if (magic == 0x00000801) {
        ndim = 1;
        out.is_labels = true;
    } else {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "0x%08X", magic);
        throw DataError(path.string() + ": bad magic " + buf);
    }
    const std::size_t header = 4 + 4 * ndim;
    if (bytes.size() < header) {
        throw DataError(path.string() + ": truncated IDX header");
    }
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        const auto dim = read_be32(bytes, 4 + 4 * i);
        out.shape.push_back(static_cast<Index>(dim));
        count *= dim;
    }
    if (bytes.size() != header + count) {
        throw DataError(path.string() + ": payload has " + std::to_string(bytes.size() - header)
                        + " bytes but the header declares " + std::to_string(count));
    }
    if (out.is_labels) {
        out.labels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
        return out;
    }
    const Index n = out.shape[0];
    const Index cols = out.shape[1] * out.shape[2];
    out.images.resize(n, cols);
    const std::uint8_t* px = bytes.data() + header;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < cols; ++j) out.images(i, j) = px[i * cols + j] / 255.0;
    }
    return out;
}

LabeledImages load_cifar10_batch(const std::filesystem::path& path, bool keep_channels)
{
    constexpr std::size_t record = 3073;
    constexpr Index plane = 1024;
    const auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % record != 0) {
        throw DataError(path.string() + ": size " + std::to_string(bytes.size())
                        + " is not a whole number of 3073-byte records");
    }
    const Index n = static_cast<Index>(bytes.size() / record);
    LabeledImages out;
    out.images.resize(n, keep_channels ? 3 * plane : plane);
    out.labels.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + static_cast<std::size_t>(i) * record;
        if (rec[0] > 9) {
            throw DataError(path.string() + ": label byte out of range in record " + std::to_string(i));
        }
        out.labels[static_cast<std::size_t>(i)] = rec[0];
        const std::uint8_t* px = rec + 1;
        if (keep_channels) {
            for (Index j = 0; j < 3 * plane; ++j) out.images(i, j) = px[j] / 255.0;
        } else {
            for (Index j = 0; j < plane; ++j) {
                out.images(i, j) = (px[j] + px[plane + j] + px[2 * plane + j]) / (3.0 * 255.0);
            }
        }
    }
    return out;
}

Cifar10 load_cifar10(const std::filesystem::path& dir, bool keep_channels)
{
    Cifar10 out;
    std::vector<LabeledImages> batches;
    Index rows = 0;
    for (int b = 1; b <= 5; ++b) {
        batches.push_back(load_cifar10_batch(dir / ("data_batch_" + std::to_string(b) + ".bin"), keep_channels));
        rows += batches.back().images.rows();
    }
    out.train.images.resize(rows, batches.front().images.cols());
    Index at = 0;
    for (auto& b : batches) {
        out.train.images.middleRows(at, b.images.rows()) = b.images;
        out.train.labels.insert(out.train.labels.end(), b.labels.begin(), b.labels.end());
        at += b.images.rows();
    }
    out.test = load_cifar10_batch(dir / "test_batch.bin", keep_channels);
    return out;
}

PcaModel fit_pca(const Eigen::Ref<const Matrix>& train, Index d_out)
{
    if (d_out < 1 || d_out > train.cols() || d_out > train.rows()) {
        throw std::invalid_argument("PCA output dimension must be in [1, min(P, original dim)]");
    }
    PcaModel m;
    m.mean = train.colwise().mean().transpose();
    const Matrix centered = train.rowwise() - m.mean.transpose();
    const ColMatrix cov = (centered.transpose() * centered) / static_cast<double>(train.rows());
    Eigen::SelfAdjointEigenSolver<ColMatrix> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("covariance eigendecomposition failed");
    }
    // Eigen sorts ascending; take the top d_out in decreasing order.
    const Index D = cov.rows();
    m.basis = eig.eigenvectors().rightCols(d_out).rowwise().reverse();
    m.eigenvalues = eig.eigenvalues().tail(d_out).reverse();
    // Sign convention: largest-magnitude entry of each axis positive, so reruns agree.
    for (Index k = 0; k < d_out; ++k) {
        Index arg = 0;
        m.basis.col(k).cwiseAbs().maxCoeff(&arg);
        if (m.basis(arg, k) < 0) m.basis.col(k) *= -1.0;
    }
    const double total = eig.eigenvalues().cwiseMax(0.0).sum();
    m.variance_captured = total > 0 ? m.eigenvalues.cwiseMax(0.0).sum() / total : 0.0;
    const double scale = std::max(eig.eigenvalues()[D - 1], 0.0);
    m.rank_deficient = (m.eigenvalues.array() <= 1e-12 * std::max(scale, 1e-300)).any();
    return m;
}

Matrix pca_transform(const PcaModel& model, const Eigen::Ref<const Matrix>& X)
{
    if (X.cols() != model.mean.size()) {
        throw std::invalid_argument("pca_transform: dimension mismatch");
    }
    return (X.rowwise() - model.mean.transpose()) * model.basis;
}

Matrix whiten_transform(const PcaModel& model, const Eigen::Ref<const Matrix>& X)
{
    for (Index k = 0; k < model.eigenvalues.size(); ++k) {
        if (!(model.eigenvalues[k] > 1e-10)) {
            throw std::domain_error("cannot whiten: component " + std::to_string(k) + " has variance "
                                    + csv::format(model.eigenvalues[k]));
        }
    }
    const Vector inv_sd = model.eigenvalues.cwiseSqrt().cwiseInverse();
    return pca_transform(model, X) * inv_sd.asDiagonal();
}

PcaReduction pca_reduce(const Eigen::Ref<const Matrix>& X, Index d_out, const Eigen::Ref<const Matrix>& fit_split)
{
    PcaModel model = fit_pca(fit_split, d_out);
    Matrix reduced = pca_transform(model, X);
    return {std::move(reduced), std::move(model)};
}

Matrix whiten(const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& fit_split)
{
    return whiten_transform(fit_pca(fit_split, fit_split.cols()), X);
}

Matrix project_sphere(const Eigen::Ref<const Matrix>& X)
{
    Matrix out(X.rows(), X.cols());
    for (Index i = 0; i < X.rows(); ++i) {
        const double n = X.row(i).norm();
        if (!(n > 0.0)) {
            throw std::domain_error("project_sphere: row " + std::to_string(i) + " has zero norm");
        }
        out.row(i) = X.row(i) / n;
    }
    return out;
}

PreparedSplit prepare_real_data(const Eigen::Ref<const Matrix>& train_raw, const Eigen::Ref<const Matrix>& test_raw,
                                const std::string& source, Index d_out, bool whitening)
{
    const PcaModel model = fit_pca(train_raw, d_out);
    PreparedSplit out;
    out.variance_captured = model.variance_captured;
    auto build = [&](const Eigen::Ref<const Matrix>& raw, const char* split) {
        SampleSet s;
        s.source = source;
        s.record({"split", {{"name", split}}});
        s.record({"pca", {{"d_out", std::to_string(d_out)}, {"fit", "train"},
                          {"variance_captured", csv::format(model.variance_captured)}}});
        Matrix z = pca_transform(model, raw);
        if (whitening) {
            z = z * model.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
            s.record({"whiten", {{"fit", "train"}}});
        }
        s.inputs = project_sphere(z);
        s.record({"project_sphere", {}});
        return s;
    };
    if (whitening) {
        for (Index k = 0; k < model.eigenvalues.size(); ++k) {
            if (!(model.eigenvalues[k] > 1e-10)) {
                throw std::domain_error("cannot whiten: component " + std::to_string(k) + " has near-zero variance");
            }
        }
    }
    out.train = build(train_raw, "train");
    out.test = build(test_raw, "test");
    return out;
}

SampleSet synth_manifold(Index P, Index d, std::uint64_t seed)
{
    if (d < 1 || P < 1) {
        throw std::invalid_argument("synth_manifold needs P >= 1 and d >= 1");
    }
    auto rng = make_engine(seed, 0x6d616e69ULL);
    std::normal_distribution<double> normal(0.0, std::sqrt(static_cast<double>(d)));
    SampleSet s;
    s.source = "manifold";
    s.seed = seed;
    s.inputs = Matrix::Zero(P, d);
    for (Index i = 0; i < P; ++i) s.inputs(i, 0) = normal(rng);
    s.targets = s.inputs.col(0);
    s.record({"synth_manifold", {{"P", std::to_string(P)}, {"d", std::to_string(d)}}});
    return s;
}

SampleSet synth_hypercube_correlated(Index P, Index d, double alpha, std::uint64_t seed)
{
    if (d < 1 || P < 1 || !(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("synth_hypercube_correlated needs P, d >= 1 and alpha in [0, 1]");
    }
    auto rng = make_engine(seed, 0x63756265ULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    SampleSet s;
    s.source = "hypercube-correlated";
    s.seed = seed;
    s.inputs.resize(P, d);
    s.targets.resize(P, 1);
    for (Index i = 0; i < P; ++i) {
        if (unif(rng) < alpha) {
            for (Index j = 0; j < d; ++j) s.inputs(i, j) = coin(rng) ? 1.0 : -1.0;
        } else {
            s.inputs.row(i).setConstant(coin(rng) ? 1.0 : -1.0);
        }
        s.targets(i, 0) = s.inputs.row(i).prod();
    }
    s.record({"synth_hypercube_correlated", {{"P", std::to_string(P)}, {"d", std::to_string(d)},
                                             {"alpha", csv::format(alpha)}}});
    return s;
}

SampleSet synth_onehot_sequences(Index P, Index L, Index vocab_size, std::uint64_t seed)
{
    if (L < 2 || vocab_size < 2 || P < 1) {
        throw std::invalid_argument("synth_onehot_sequences needs P >= 1, L >= 2 and vocab_size >= 2");
    }
    auto rng = make_engine(seed, 0x746f6b6eULL);
    std::uniform_int_distribution<Index> token(0, vocab_size - 1);
    SampleSet s;
    s.source = "onehot-seq";
    s.seed = seed;
    s.inputs = Matrix::Zero(P, (L + 1) * vocab_size);
    s.targets = ColMatrix::Zero(P, L * vocab_size);
    for (Index i = 0; i < P; ++i) {
        for (Index a = 0; a <= L; ++a) s.inputs(i, a * vocab_size + token(rng)) = 1.0;
        // Y^a = X^{a-1} for positions a = 2..L+1 (zero-based 1..L).
        s.targets.row(i) = s.inputs.row(i).head(L * vocab_size);
    }
    s.record({"synth_onehot_sequences", {{"P", std::to_string(P)}, {"L", std::to_string(L)},
                                         {"vocab_size", std::to_string(vocab_size)}}});
    return s;
}

void save_sample_set(const SampleSet& set, const std::filesystem::path& stem)
{
    static_assert(std::endian::native == std::endian::little, "cache format is little-endian");
    std::filesystem::path bin = stem;
    bin += ".bin";
    std::filesystem::path side = stem;
    side += ".json";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw DataError("cannot write " + bin.string());
    const Matrix targets = set.targets;   // row-major copy
    out.write(reinterpret_cast<const char*>(set.inputs.data()),
              static_cast<std::streamsize>(set.inputs.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(targets.data()),
              static_cast<std::streamsize>(targets.size() * sizeof(double)));

    nlohmann::json j;
    j["format"] = "float64-le-row-major";
    j["source"] = set.source;
    j["seed"] = set.seed;
    j["inputs_shape"] = {set.inputs.rows(), set.inputs.cols()};
    j["targets_shape"] = {set.targets.rows(), set.targets.cols()};
    j["preprocessing"] = nlohmann::json::array();
    for (const auto& t : set.preprocessing) {
        j["preprocessing"].push_back({{"name", t.name}, {"params", t.params}});
    }
    std::ofstream js(side);
    if (!js) throw DataError("cannot write " + side.string());
    js << j.dump(2) << '\n';
}

SampleSet load_sample_set(const std::filesystem::path& stem)
{
    std::filesystem::path bin = stem;
    bin += ".bin";
    std::filesystem::path side = stem;
    side += ".json";
    std::ifstream js(side);
    if (!js) throw DataError("cannot open " + side.string());
    nlohmann::json j;
    try {
        js >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(side.string() + ": " + e.what());
    }
    SampleSet s;
    s.source = j.at("source").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const Index r = j.at("inputs_shape")[0].get<Index>();
    const Index c = j.at("inputs_shape")[1].get<Index>();
    const Index tr = j.at("targets_shape")[0].get<Index>();
    const Index tc = j.at("targets_shape")[1].get<Index>();
    for (const auto& t : j.at("preprocessing")) {
        s.record({t.at("name").get<std::string>(), t.at("params").get<std::map<std::string, std::string>>()});
    }
    const auto bytes = read_file(bin);
    if (bytes.size() != static_cast<std::size_t>(r * c + tr * tc) * sizeof(double)) {
        throw DataError(bin.string() + ": size does not match the sidecar shapes");
    }
    s.inputs.resize(r, c);
    std::memcpy(s.inputs.data(), bytes.data(), static_cast<std::size_t>(r * c) * sizeof(double));
    Matrix targets(tr, tc);
    std::memcpy(targets.data(), bytes.data() + r * c * sizeof(double), static_cast<std::size_t>(tr * tc) * sizeof(double));
    s.targets = targets;
    return s;
}

} // namespace specbias
