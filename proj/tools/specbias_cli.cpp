#include <CLI11.hpp>

#include <specbias/experiment.hpp>
#include <specbias/sphere_spectrum.hpp>

#include <fstream>
#include <iostream>

using namespace specbias;

namespace {

int exit_code(const std::exception& e)
{
    if (dynamic_cast<const ConfigError*>(&e)) return 1;
    if (dynamic_cast<const DataError*>(&e)) return 2;
    if (dynamic_cast<const InvariantViolation*>(&e)) return 3;
    if (dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::domain_error*>(&e)) return 1;
    return 2;
}

void emit(const std::string& out, const std::string& text)
{
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw DataError("cannot write " + out);
    f << text;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral learnability experiments: kernels, sphere spectra, KRR and learnability bounds"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment config and write CSVs plus manifest.json");
    run->add_option("config", config_path, "Config JSON")->required();
    std::string out_dir;
    run->add_option("--out", out_dir, "Override output_dir");

    auto* validate = app.add_subcommand("validate", "Validate a config JSON");
    validate->add_option("config", config_path, "Config JSON")->required();

    std::string kernel = "nngp";
    Index d = 8;
    int nmax = 20;
    int quad_order = 0;
    std::string out;
    auto* spectrum = app.add_subcommand("spectrum", "Print Funk-Hecke eigenvalues on the unit sphere");
    spectrum->add_option("--kernel", kernel, "linear | nngp | ntk")->capture_default_str();
    spectrum->add_option("--d", d, "Ambient dimension")->capture_default_str();
    spectrum->add_option("--nmax", nmax, "Largest degree")->capture_default_str();
    spectrum->add_option("--quad-order", quad_order, "Gauss-Legendre order (0: automatic)");
    spectrum->add_option("--out", out, "Output CSV (default stdout)");

    std::string name;
    double sigma2 = -1.0;
    double eps = -1.0;
    Index L = 8192, V = 65536, mc = 20000, reps = 200;
    std::vector<Index> dims;
    std::vector<double> ratios;
    std::uint64_t seed = 0;
    auto* vignette = app.add_subcommand("vignette", "Print a vignette table: manifold | parity | copyhead");
    vignette->add_option("name", name, "manifold | parity | copyhead")
        ->required()
        ->check(CLI::IsMember({"manifold", "parity", "copyhead"}));
    vignette->add_option("--sigma2", sigma2, "Ridge");
    vignette->add_option("--eps", eps, "Target error");
    vignette->add_option("--d", d, "Dimension (manifold)");
    vignette->add_option("--ratios", ratios, "P / sigma2 values (manifold)");
    vignette->add_option("--reps", reps, "Simulation repeats (manifold)");
    vignette->add_option("--dims", dims, "Even dimensions (parity)");
    vignette->add_option("--L", L, "Context length (copyhead)");
    vignette->add_option("--V", V, "Vocabulary parameter (copyhead)");
    vignette->add_option("--mc", mc, "Monte Carlo samples (copyhead)");
    vignette->add_option("--seed", seed, "Seed");
    vignette->add_option("--out", out, "Output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            ExperimentConfig config = load_config(config_path);
            if (!out_dir.empty()) config.output_dir = out_dir;
            const ExperimentResult result = run_and_write(config);
            std::cout << "wrote " << config.output_dir << " (" << result.reports.size() << " learnability rows)\n";
        } else if (*validate) {
            load_config(config_path);
            std::cout << "ok\n";
        } else if (*spectrum) {
            KernelFamily family;
            try {
                family = parse_kernel_family(kernel);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("--kernel: ") + e.what());
            }
            if (d < 2) throw ConfigError("--d: must be >= 2");
            if (nmax < 0) throw ConfigError("--nmax: must be >= 0");
            const KernelSpec spec{family, d, SymmetryTag::rotation_invariant};
            std::ostringstream os;
            write_spectrum_csv(os, sphere_spectrum(spec, nmax, quad_order));
            emit(out, os.str());
        } else if (*vignette) {
            nlohmann::json j{{"experiment", "vignette-" + name}, {"seeds", {seed}}};
            if (sigma2 > 0) j["sigma2"] = sigma2;
            if (eps >= 0) j["eps"] = {eps};
            if (name == "manifold") {
                j["d"] = d;
                j["manifold_reps"] = reps;
                if (!ratios.empty()) j["manifold_P_over_sigma2"] = ratios;
                if (sigma2 <= 0) j["sigma2"] = 0.1;
            } else if (name == "parity") {
                if (!dims.empty()) j["parity_dims"] = dims;
                if (sigma2 <= 0) j["sigma2"] = 1.0;
            } else {
                j["copyhead_L"] = L;
                j["copyhead_V"] = V;
                j["copyhead_mc"] = mc;
                if (sigma2 <= 0) j["sigma2"] = 1.0;
            }
            const ExperimentResult result = run_experiment(parse_config(j));
            emit(out, result.table_csv);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    }
    return 0;
}
