#include <specbias/csv.hpp>
#include <specbias/datasets.hpp>
#include <specbias/experiment.hpp>
#include <specbias/rng.hpp>
#include <specbias/vignettes.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace specbias {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct KindName
{
    ExperimentKind kind;
    const char* name;
};

constexpr KindName kKinds[] = {
    {ExperimentKind::fig1_sphere, "fig1-sphere"},
    {ExperimentKind::fig2_real, "fig2-real"},
    {ExperimentKind::fig3_whitened, "fig3-whitened"},
    {ExperimentKind::vignette_manifold, "vignette-manifold"},
    {ExperimentKind::vignette_parity, "vignette-parity"},
    {ExperimentKind::vignette_copyhead, "vignette-copyhead"},
    {ExperimentKind::prop21_demo, "prop21-demo"},
};

template <class T>
T field(const json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

void require(bool ok, const std::string& field_name, const std::string& message)
{
    if (!ok) throw ConfigError("field '" + field_name + "': " + message);
}

} // namespace

std::string_view to_string(ExperimentKind kind) noexcept
{
    for (const auto& k : kKinds)
        if (k.kind == kind) return k.name;
    return "unknown";
}

std::vector<Index> log_grid(Index lo, Index hi, int count)
{
    if (lo < 1 || hi < lo || count < 1) {
        throw std::invalid_argument("log_grid needs 1 <= lo <= hi and count >= 1");
    }
    std::vector<Index> out;
    const double a = std::log(static_cast<double>(lo));
    const double b = std::log(static_cast<double>(hi));
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(static_cast<Index>(std::llround(std::exp(a + t * (b - a)))));
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ExperimentConfig parse_config(const json& j)
{
    static const std::set<std::string> known{
        "experiment", "kernel", "d", "sigma2", "feature_degrees", "P_grid", "pool_size", "eps", "n_mc", "n_test",
        "seeds", "spectrum_nmax", "dataset", "dataset_root", "test_size", "keep_channels", "manifold_reps",
        "manifold_P_over_sigma2", "parity_dims", "copyhead_L", "copyhead_V", "copyhead_mc", "prop21_instances",
        "output_dir"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ConfigError("field '" + key + "': unknown key");
    }
    require(j.contains("experiment"), "experiment", "missing experiment kind");

    ExperimentConfig c;
    const auto kind = field<std::string>(j, "experiment", "");
    const auto it = std::find_if(std::begin(kKinds), std::end(kKinds), [&](const KindName& k) { return kind == k.name; });
    require(it != std::end(kKinds), "experiment", "unknown experiment kind '" + kind + "'");
    c.kind = it->kind;

    try {
        c.kernel = parse_kernel_family(field<std::string>(j, "kernel", std::string(to_string(c.kernel))));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("field 'kernel': ") + e.what());
    }
    const bool real = c.kind == ExperimentKind::fig2_real || c.kind == ExperimentKind::fig3_whitened;
    if (real) {
        c.d = 18;
        c.pool_size = 4000;
        c.n_mc = 20000;
    }
    c.d = field<Index>(j, "d", c.d);
    c.sigma2 = field<double>(j, "sigma2", c.sigma2);
    c.feature_degrees = field<std::vector<int>>(j, "feature_degrees", c.feature_degrees);
    c.P_grid = field<std::vector<Index>>(j, "P_grid", c.P_grid);
    c.pool_size = field<Index>(j, "pool_size", c.pool_size);
    c.eps = field<std::vector<double>>(j, "eps", c.eps);
    c.n_mc = field<Index>(j, "n_mc", c.n_mc);
    c.n_test = field<Index>(j, "n_test", c.n_test);
    c.seeds = field<std::vector<std::uint64_t>>(j, "seeds", c.seeds);
    c.spectrum_nmax = field<int>(j, "spectrum_nmax", c.spectrum_nmax);
    c.dataset = field<std::string>(j, "dataset", c.dataset);
    c.dataset_root = field<std::string>(j, "dataset_root", c.dataset_root);
    c.test_size = field<Index>(j, "test_size", c.test_size);
    c.keep_channels = field<bool>(j, "keep_channels", c.keep_channels);
    c.manifold_reps = field<Index>(j, "manifold_reps", c.manifold_reps);
    c.manifold_P_over_sigma2 = field<std::vector<double>>(j, "manifold_P_over_sigma2", c.manifold_P_over_sigma2);
    c.parity_dims = field<std::vector<Index>>(j, "parity_dims", c.parity_dims);
    c.copyhead_L = field<Index>(j, "copyhead_L", c.copyhead_L);
    c.copyhead_V = field<Index>(j, "copyhead_V", c.copyhead_V);
    c.copyhead_mc = field<Index>(j, "copyhead_mc", c.copyhead_mc);
    c.prop21_instances = field<Index>(j, "prop21_instances", c.prop21_instances);
    c.output_dir = field<std::string>(j, "output_dir", c.output_dir);

    require(c.d >= 2, "d", "must be >= 2");
    require(c.sigma2 > 0.0, "sigma2", "must be > 0");
    require(!c.feature_degrees.empty(), "feature_degrees", "must not be empty");
    for (int n : c.feature_degrees) require(n >= 1, "feature_degrees", "degrees must be >= 1");
    std::sort(c.feature_degrees.begin(), c.feature_degrees.end());
    c.feature_degrees.erase(std::unique(c.feature_degrees.begin(), c.feature_degrees.end()), c.feature_degrees.end());
    require(c.pool_size >= 1, "pool_size", "must be >= 1");
    require(!c.eps.empty(), "eps", "must not be empty");
    for (double e : c.eps) require(e >= 0.0 && e < 1.0, "eps", "values must lie in [0, 1), got " + csv::format(e));
    require(c.n_mc >= 2, "n_mc", "must be >= 2");
    require(c.n_test >= 2, "n_test", "must be >= 2");
    require(!c.seeds.empty(), "seeds", "must not be empty");
    require(c.spectrum_nmax >= 0, "spectrum_nmax", "must be >= 0");
    require(c.dataset == "mnist" || c.dataset == "fashion-mnist" || c.dataset == "cifar10", "dataset",
            "must be one of mnist, fashion-mnist, cifar10");
    require(c.test_size >= 2, "test_size", "must be >= 2");
    require(c.manifold_reps >= 1, "manifold_reps", "must be >= 1");
    for (double r : c.manifold_P_over_sigma2) require(r > 0.0, "manifold_P_over_sigma2", "ratios must be > 0");
    for (Index d : c.parity_dims) require(d >= 2 && d % 2 == 0, "parity_dims", "dimensions must be even and >= 2");
    require(c.copyhead_L >= 2, "copyhead_L", "must be >= 2");
    require(c.copyhead_V >= 2, "copyhead_V", "must be >= 2");
    require(c.copyhead_mc >= 2, "copyhead_mc", "must be >= 2");
    require(c.prop21_instances >= 1, "prop21_instances", "must be >= 1");
    for (Index P : c.P_grid) {
        require(P >= 1, "P_grid", "values must be >= 1");
        require(P <= c.pool_size, "P_grid", "value " + std::to_string(P) + " exceeds pool_size");
    }
    if (c.P_grid.empty()) {
        c.P_grid = log_grid(8, std::max<Index>(8, std::min<Index>(4096, c.pool_size)), 16);
    }
    std::sort(c.P_grid.begin(), c.P_grid.end());
    c.P_grid.erase(std::unique(c.P_grid.begin(), c.P_grid.end()), c.P_grid.end());
    return c;
}

ExperimentConfig load_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c)
{
    return {{"experiment", to_string(c.kind)},
            {"kernel", to_string(c.kernel)},
            {"d", c.d},
            {"sigma2", c.sigma2},
            {"feature_degrees", c.feature_degrees},
            {"P_grid", c.P_grid},
            {"pool_size", c.pool_size},
            {"eps", c.eps},
            {"n_mc", c.n_mc},
            {"n_test", c.n_test},
            {"seeds", c.seeds},
            {"spectrum_nmax", c.spectrum_nmax},
            {"dataset", c.dataset},
            {"dataset_root", c.dataset_root},
            {"test_size", c.test_size},
            {"keep_channels", c.keep_channels},
            {"manifold_reps", c.manifold_reps},
            {"manifold_P_over_sigma2", c.manifold_P_over_sigma2},
            {"parity_dims", c.parity_dims},
            {"copyhead_L", c.copyhead_L},
            {"copyhead_V", c.copyhead_V},
            {"copyhead_mc", c.copyhead_mc},
            {"prop21_instances", c.prop21_instances},
            {"output_dir", c.output_dir}};
}

double onset(const std::vector<Index>& P, const std::vector<double>& values, double level)
{
    if (P.size() != values.size()) throw std::invalid_argument("onset: size mismatch");
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (values[i] >= level) {
            if (i == 0) return static_cast<double>(P[0]);
            const double a = std::log(static_cast<double>(P[i - 1]));
            const double b = std::log(static_cast<double>(P[i]));
            const double t = (level - values[i - 1]) / (values[i] - values[i - 1]);
            return std::exp(a + t * (b - a));
        }
    }
    return std::numeric_limits<double>::infinity();
}

namespace {

Matrix feature_matrix(const std::vector<HarmonicFeature>& features, const Eigen::Ref<const Matrix>& X)
{
    Matrix out(X.rows(), static_cast<Index>(features.size()));
    for (std::size_t f = 0; f < features.size(); ++f) out.col(static_cast<Index>(f)) = harmonic_eval(features[f], X);
    return out;
}

struct CurveSetup
{
    KernelSpec spec;
    std::string dataset;
    Matrix pool;      // already in training order; prefixes are the nested training sets
    Matrix test;      // held-out sample from p; may be empty
    std::vector<HarmonicFeature> features;
    std::vector<double> lambdas;
    std::vector<Index> P_grid;
    std::vector<double> eps;
    double sigma2 = 1.0;
    Index n_mc = 0;
    std::uint64_t q_seed = 0;
};

// One factorization per P, shared by every feature (multi-output targets).
std::vector<LearnabilityReport> learning_curves(const CurveSetup& s)
{
    const Index Pmax = s.P_grid.back();
    if (Pmax > s.pool.rows()) throw ConfigError("field 'P_grid': exceeds the available pool");
    const Matrix X = s.pool.topRows(Pmax);
    // Support condition: q is the uniform sphere, so every training row must lie on it.
    if (((X.rowwise().norm().array() - 1.0).abs() > 1e-9).any()) {
        throw InvariantViolation("support condition violated: training rows are not on the unit sphere");
    }
    const Index F = static_cast<Index>(s.features.size());
    const Matrix Y = feature_matrix(s.features, X);
    const ColMatrix K = gram_matrix(s.spec, X);

    std::vector<ColMatrix> alphas;
    std::vector<double> jitters;
    for (Index P : s.P_grid) {
        const RidgeSolver solver(K.topLeftCorner(P, P), s.sigma2);
        alphas.push_back(solver.solve(Y.topRows(P)));
        jitters.push_back(solver.jitter());
    }

    const Matrix Xq = sample_uniform_sphere(s.spec.input_dim, s.n_mc, s.q_seed);
    const Matrix Phi_q = feature_matrix(s.features, Xq);

    // Predictions on q-samples and held-out rows, chunked to bound memory.
    auto predict_all = [&](const Matrix& Z) {
        std::vector<Matrix> out(s.P_grid.size(), Matrix(Z.rows(), F));
        constexpr Index chunk = 1024;
        for (Index start = 0; start < Z.rows(); start += chunk) {
            const Index n = std::min(chunk, Z.rows() - start);
            const ColMatrix Kc = cross_gram(s.spec, Z.middleRows(start, n), X);
            for (std::size_t g = 0; g < s.P_grid.size(); ++g) {
                out[g].middleRows(start, n) = Kc.leftCols(s.P_grid[g]) * alphas[g];
            }
        }
        return out;
    };
    const std::vector<Matrix> F_q = predict_all(Xq);
    std::vector<Matrix> F_test;
    Matrix Y_test;
    if (s.test.rows() > 0) {
        F_test = predict_all(s.test);
        Y_test = feature_matrix(s.features, s.test);
    }

    std::vector<LearnabilityReport> rows;
    for (Index f = 0; f < F; ++f) {
        const auto& feature = s.features[static_cast<std::size_t>(f)];
        const double lambda = s.lambdas[static_cast<std::size_t>(f)];
        const Vector phi_q = Phi_q.col(f);
        const Vector denom_terms = phi_q.cwiseProduct(phi_q);   // target is the feature itself
        for (std::size_t g = 0; g < s.P_grid.size(); ++g) {
            const Index P = s.P_grid[g];
            LearnabilityReport r;
            r.dataset = s.dataset;
            r.kernel = std::string(to_string(s.spec.family));
            r.feature_degree = feature.degree;
            r.feature_seed = feature.seed;
            r.P = P;
            r.sigma2 = s.sigma2;
            r.jitter = jitters[g];

            const Vector y_train = Y.col(f).head(P);
            r.E_D_phi2 = y_train.squaredNorm() / static_cast<double>(P);
            r.E_D_y2 = r.E_D_phi2;
            // q-normalized feature and y = phi: E_q[phi y] = 1 exactly.
            r.overlap = 1.0;

            const RatioEstimate xq = paired_ratio(phi_q.cwiseProduct(F_q[g].col(f)), denom_terms);
            r.L_xq = xq.value;
            r.L_xq_stderr = xq.stderr_;
            r.overlap_stderr = xq.denominator_stderr;
            r.L_xq_spectral = cross_dataset_learnability_spectral(lambda, y_train, alphas[g].col(f), r.overlap);
            r.bound = thm_bound(lambda, static_cast<double>(P), s.sigma2, r.E_D_phi2, r.E_D_y2, r.overlap);
            if (lambda > 0.0 && r.E_D_phi2 > 0.0) {
                for (double e : s.eps) {
                    r.Pstar_lo[e] = sample_complexity_lower(lambda, s.sigma2, e, r.overlap, r.E_D_phi2, r.E_D_y2);
                }
            }
            if (s.test.rows() > 0) {
                const Vector yt = Y_test.col(f);
                const RatioEstimate emp = paired_ratio(yt.cwiseProduct(F_test[g].col(f)), yt.cwiseProduct(yt));
                r.L_emp = emp.value;
                r.L_emp_stderr = emp.stderr_;
            } else {
                r.L_emp = std::numeric_limits<double>::quiet_NaN();
            }
            rows.push_back(std::move(r));
        }
    }
    return rows;
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag)
{
    return mix64(seed ^ mix64(tag));
}

std::vector<HarmonicFeature> make_features(const ExperimentConfig& c, Index d, std::uint64_t seed)
{
    std::vector<HarmonicFeature> out;
    for (int n : c.feature_degrees) {
        out.push_back(random_harmonic(n, d, 0, derive(seed, 0x66656174ULL + static_cast<std::uint64_t>(n))));
    }
    return out;
}

std::vector<double> feature_lambdas(const KernelSpec& spec, const ExperimentConfig& c)
{
    std::vector<double> out;
    for (int n : c.feature_degrees) out.push_back(funk_hecke_eigenvalue(spec, n, spec.input_dim).eigenvalue);
    return out;
}

fs::path data_root(const ExperimentConfig& c)
{
    if (!c.dataset_root.empty()) return c.dataset_root;
    if (const char* env = std::getenv("SPECBIAS_DATA_ROOT")) return env;
    throw DataError("no dataset root: set 'dataset_root' or SPECBIAS_DATA_ROOT");
}

struct RawSplit
{
    Matrix train;
    Matrix test;
};

RawSplit load_raw(const ExperimentConfig& c)
{
    const fs::path root = data_root(c) / c.dataset;
    RawSplit raw;
    if (c.dataset == "cifar10") {
        Cifar10 data = load_cifar10(root, c.keep_channels);
        raw.train = std::move(data.train.images);
        raw.test = std::move(data.test.images);
    } else {
        const auto train = load_idx(root / "train-images-idx3-ubyte");
        const auto test = load_idx(root / "t10k-images-idx3-ubyte");
        if (train.is_labels || test.is_labels) throw DataError("expected image IDX files under " + root.string());
        raw.train = train.images;
        raw.test = test.images;
    }
    if (raw.train.rows() < 1 || raw.test.rows() < 1) throw DataError("empty dataset under " + root.string());
    return raw;
}

Matrix take_rows(const Matrix& X, const std::vector<Index>& idx)
{
    Matrix out(static_cast<Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = X.row(idx[i]);
    return out;
}

std::vector<Index> shuffled(Index n, std::uint64_t seed)
{
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    auto rng = make_engine(seed, 0x73687566ULL);
    // Fisher-Yates with our own index draw so the order does not depend on the library's shuffle.
    for (std::size_t i = idx.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(idx[i - 1], idx[pick(rng)]);
    }
    return idx;
}

void check_theorem(ExperimentResult& result)
{
    for (const auto& r : result.reports) {
        if (!r.respects_bound()) {
            std::ostringstream os;
            os << "degree " << r.feature_degree << " seed " << r.feature_seed << " P " << r.P << ": L_xq "
               << csv::format(r.L_xq) << " > bound " << csv::format(r.bound) << " + 3 * " << csv::format(r.L_xq_stderr);
            result.violations.push_back(os.str());
        }
    }
}

ExperimentResult run_sphere(const ExperimentConfig& c)
{
    ExperimentResult result;
    const KernelSpec spec{c.kernel, c.d, SymmetryTag::rotation_invariant};
    const auto lambdas = feature_lambdas(spec, c);
    result.spectrum = sphere_spectrum(spec, c.spectrum_nmax);
    for (std::uint64_t seed : c.seeds) {
        CurveSetup s;
        s.spec = spec;
        s.dataset = "sphere-uniform";
        s.pool = sample_uniform_sphere(c.d, c.pool_size, derive(seed, 0x706f6f6cULL));
        s.test = sample_uniform_sphere(c.d, c.n_test, derive(seed, 0x74657374ULL));
        s.features = make_features(c, c.d, seed);
        s.lambdas = lambdas;
        s.P_grid = c.P_grid;
        s.eps = c.eps;
        s.sigma2 = c.sigma2;
        s.n_mc = c.n_mc;
        s.q_seed = derive(seed, 0x71ULL);
        auto rows = learning_curves(s);
        result.reports.insert(result.reports.end(), rows.begin(), rows.end());
    }
    check_theorem(result);
    return result;
}

ExperimentResult run_real(const ExperimentConfig& c, bool whitening)
{
    ExperimentResult result;
    RawSplit raw = load_raw(c);
    const Index pool_n = std::min<Index>(c.pool_size, raw.train.rows());
    const Index test_n = std::min<Index>(c.test_size, raw.test.rows());
    if (c.P_grid.back() > pool_n) {
        throw ConfigError("field 'P_grid': largest value exceeds the " + std::to_string(pool_n) + " available rows");
    }
    const Matrix train_raw = raw.train.topRows(pool_n);
    const Matrix test_raw = raw.test.topRows(test_n);
    const PreparedSplit prepared = prepare_real_data(train_raw, test_raw, c.dataset, c.d, whitening);
    result.variance_captured = prepared.variance_captured;

    const KernelSpec spec{c.kernel, c.d, SymmetryTag::rotation_invariant};
    const auto lambdas = feature_lambdas(spec, c);
    result.spectrum = sphere_spectrum(spec, c.spectrum_nmax);
    for (std::uint64_t seed : c.seeds) {
        CurveSetup s;
        s.spec = spec;
        s.dataset = c.dataset + (whitening ? "-pca" + std::to_string(c.d) + "-whitened" : "-pca" + std::to_string(c.d));
        s.pool = take_rows(prepared.train.inputs, shuffled(pool_n, derive(seed, 0x706f6f6cULL)));
        s.test = prepared.test.inputs;
        s.features = make_features(c, c.d, seed);
        s.lambdas = lambdas;
        s.P_grid = c.P_grid;
        s.eps = c.eps;
        s.sigma2 = c.sigma2;
        s.n_mc = c.n_mc;
        s.q_seed = derive(seed, 0x71ULL);
        auto rows = learning_curves(s);
        result.reports.insert(result.reports.end(), rows.begin(), rows.end());
    }
    check_theorem(result);
    return result;
}

ExperimentResult run_manifold(const ExperimentConfig& c)
{
    ExperimentResult result;
    std::ostringstream os;
    os << "d,sigma2,P_over_sigma2,P_sim,sigma2_sim,eta,L_ek,L_xq_ek,L_sim,L_sim_stderr,Pstar_exact,Pstar_bound\n";
    const KernelSpec spec{KernelFamily::linear_scaled, c.d, SymmetryTag::rotation_invariant};
    // EK learnability depends on P / sigma2 only; simulate each ratio at an integer P large
    // enough that the finite-P fluctuation of the empirical eigenvalue stays small.
    constexpr Index P_sim = 64;
    const ManifoldVignette base = manifold_vignette(c.d, c.sigma2, 1.0);
    for (double ratio : c.manifold_P_over_sigma2) {
        const double sigma2_sim = static_cast<double>(P_sim) / ratio;
        const ManifoldVignette v = manifold_vignette(c.d, sigma2_sim, static_cast<double>(P_sim));
        Vector sims(c.manifold_reps);
        for (Index rep = 0; rep < c.manifold_reps; ++rep) {
            const std::uint64_t seed = derive(c.seeds.front(), static_cast<std::uint64_t>(rep) * 7919 + P_sim);
            const SampleSet train = synth_manifold(P_sim, c.d, seed);
            const SampleSet test = synth_manifold(c.n_test, c.d, derive(seed, 0x74ULL));
            const FittedPredictor fp = fit(spec, train.inputs, train.targets, sigma2_sim);
            sims[rep] = learnability(test.targets.col(0), predict(fp, test.inputs).col(0));
        }
        const double mean = sims.mean();
        const double se = c.manifold_reps > 1
                              ? std::sqrt((sims.array() - mean).square().sum() / (c.manifold_reps - 1) / c.manifold_reps)
                              : 0.0;
        os << c.d << ',' << csv::format(c.sigma2) << ',' << csv::format(ratio) << ',' << P_sim << ','
           << csv::format(sigma2_sim) << ',' << csv::format(v.eta) << ',' << csv::format(v.L_ek) << ','
           << csv::format(v.L_xq_ek) << ',' << csv::format(mean) << ',' << csv::format(se) << ','
           << csv::format(base.Pstar_exact) << ',' << csv::format(base.Pstar_bound) << '\n';
    }
    result.table_name = "vignette_manifold.csv";
    result.table_csv = os.str();
    return result;
}

ExperimentResult run_parity(const ExperimentConfig& c)
{
    ExperimentResult result;
    std::ostringstream os;
    os << "d,n_hat,log_degeneracy,Pstar_exact,Pstar_asymptotic,ratio\n";
    const double eps = c.eps.front();
    for (Index d : c.parity_dims) {
        const ParityComplexity pc = parity_sample_complexity(d, c.sigma2, eps, 1.0);
        os << d << ',' << csv::format(parity_normalization(d)) << ','
           << csv::format(log_degeneracy(static_cast<int>(d), d)) << ',' << csv::format(pc.exact) << ','
           << csv::format(pc.asymptotic) << ',' << csv::format(pc.exact / pc.asymptotic) << '\n';
    }
    result.table_name = "vignette_parity.csv";
    result.table_csv = os.str();
    return result;
}

ExperimentResult run_copyhead(const ExperimentConfig& c)
{
    ExperimentResult result;
    CopyingHeadSpec spec{c.copyhead_L, c.copyhead_V, 0, 1.0};
    const double eps = c.eps.front();
    const CopyingHeadMoments m = copying_head_moments(spec, c.copyhead_mc, c.seeds.front());
    const CopyingHeadBound b = copying_head_bound(spec, c.sigma2, eps, m.feature_norm.value, static_cast<double>(spec.L));
    std::ostringstream os;
    os << "L,V,vocab_size,z,irrep_dim,lambda_max,worst_feature_norm,mc_feature_norm,mc_overlap,mc_overlap_stderr,"
          "Pstar_exact_q,Pstar_worst_case,Pstar_asymptotic\n";
    os << spec.L << ',' << spec.V << ',' << spec.vocab() << ',' << csv::format(spec.z()) << ',' << spec.irrep_dim()
       << ',' << csv::format(b.lambda_max) << ',' << csv::format(copying_head_worst_feature_norm(spec)) << ','
       << csv::format(m.feature_norm.value) << ',' << csv::format(m.overlap.value) << ','
       << csv::format(m.overlap.stderr_) << ',' << csv::format(b.exact) << ',' << csv::format(b.worst_case) << ','
       << csv::format(b.asymptotic) << '\n';
    result.table_name = "vignette_copyhead.csv";
    result.table_csv = os.str();
    return result;
}

ExperimentResult run_prop21(const ExperimentConfig& c)
{
    ExperimentResult result;
    std::vector<DensityRatioReport> reports;
    std::ostringstream os;
    os << "instance,atoms,I_bar,J_bar,q_mse,mse_p,mse_lower,mse_upper,lower_holds,upper_holds\n";
    auto rng = make_engine(c.seeds.front(), 0x70726f70ULL);
    std::gamma_distribution<double> gamma(1.0, 1.0);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<Index> atoms_dist(2, 16);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Index inst = 0; inst < c.prop21_instances; ++inst) {
        const Index n = atoms_dist(rng);
        Vector p(n), q(n);
        for (Index i = 0; i < n; ++i) {
            p[i] = gamma(rng);
            q[i] = gamma(rng);
        }
        p /= p.sum();
        q /= q.sum();
        // q-orthonormal basis: phi_k(x) = U(x, k) / sqrt(q(x)) with U orthogonal.
        ColMatrix A(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) A(i, j) = normal(rng);
        const ColMatrix U = Eigen::HouseholderQR<ColMatrix>(A).householderQ();
        const ColMatrix Phi = q.cwiseSqrt().cwiseInverse().asDiagonal() * U;
        Vector coeffs(n), learn(n);
        for (Index i = 0; i < n; ++i) {
            coeffs[i] = normal(rng);
            learn[i] = unif(rng);
        }
        const Vector y = Phi * coeffs;
        const Vector f = Phi * learn.cwiseProduct(coeffs);
        const double mse_p = p.dot((f - y).cwiseAbs2());
        const ImportanceRatios ir = importance_ratios(p, q);
        const DensityRatioReport r = mse_sandwich(ir.I_bar.value, ir.J_bar.value, learn, coeffs, q.dot(y.cwiseAbs2()));
        reports.push_back(r);
        os << inst << ',' << n << ',' << csv::format(r.I_bar) << ',' << csv::format(r.J_bar) << ','
           << csv::format(r.q_mse) << ',' << csv::format(mse_p) << ',' << csv::format(r.mse_lower) << ','
           << csv::format(r.mse_upper) << ',' << (r.mse_lower <= mse_p) << ',' << (mse_p <= r.mse_upper) << '\n';
    }
    std::ostringstream dr;
    write_density_ratio_csv(dr, reports);
    result.table_name = "prop21_check.csv";
    result.table_csv = os.str();
    result.manifest["density_ratios_csv"] = dr.str();
    return result;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& config)
{
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult result;
    switch (config.kind) {
        case ExperimentKind::fig1_sphere: result = run_sphere(config); break;
        case ExperimentKind::fig2_real: result = run_real(config, false); break;
        case ExperimentKind::fig3_whitened: result = run_real(config, true); break;
        case ExperimentKind::vignette_manifold: result = run_manifold(config); break;
        case ExperimentKind::vignette_parity: result = run_parity(config); break;
        case ExperimentKind::vignette_copyhead: result = run_copyhead(config); break;
        case ExperimentKind::prop21_demo: result = run_prop21(config); break;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json extra = result.manifest;
    result.manifest = {{"tool", "specbias"},
                       {"version", kVersion},
                       {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION)
                                             + "." + std::to_string(EIGEN_MINOR_VERSION)},
                       {"config", to_json(config)},
                       {"seeds", config.seeds},
                       {"wall_time_s", wall},
                       {"rows", result.reports.size()},
                       {"theorem_violations", result.violations}};
    if (result.variance_captured >= 0) result.manifest["variance_captured"] = result.variance_captured;
    if (extra.is_object()) {
        for (auto& [k, v] : extra.items()) result.manifest["aux"][k] = v;
    }
    return result;
}

ExperimentResult run_and_write(const ExperimentConfig& config)
{
    ExperimentResult result = run_experiment(config);
    const fs::path dir = config.output_dir;
    fs::create_directories(dir);
    std::vector<std::string> outputs;
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw DataError("cannot write " + (dir / name).string());
        out << text;
        outputs.push_back(name);
    };
    if (!result.reports.empty()) {
        std::ostringstream os;
        write_learnability_csv(os, result.reports);
        write("learnability.csv", os.str());
    }
    if (!result.spectrum.empty()) {
        std::ostringstream os;
        write_spectrum_csv(os, result.spectrum);
        write("spectrum.csv", os.str());
    }
    if (!result.table_name.empty()) write(result.table_name, result.table_csv);
    if (result.manifest.contains("aux") && result.manifest["aux"].contains("density_ratios_csv")) {
        write("density_ratios.csv", result.manifest["aux"]["density_ratios_csv"].get<std::string>());
        result.manifest["aux"].erase("density_ratios_csv");
        if (result.manifest["aux"].empty()) result.manifest.erase("aux");
    }
    result.manifest["outputs"] = outputs;
    if (!result.violations.empty()) {
        std::ostringstream os;
        os << "Learnability bound violated beyond 3 standard errors:\n";
        for (const auto& v : result.violations) os << "  " << v << '\n';
        write("defect_report.txt", os.str());
    }
    {
        std::ofstream out(dir / "manifest.json");
        out << result.manifest.dump(2) << '\n';
    }
    if (!result.violations.empty()) {
        throw InvariantViolation(std::to_string(result.violations.size())
                                 + " learnability bound violation(s); see defect_report.txt");
    }
    return result;
}

} // namespace specbias
