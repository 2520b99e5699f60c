// Experiment pipeline: synthesize data, estimate an ordering, run particle
// inference conditioned on it, and evaluate the inferred posterior.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "permdag/eval.hpp"
#include "permdag/io.hpp"
#include "permdag/ordering.hpp"

namespace fs = std::filesystem;
using namespace permdag;

namespace {

int log_level() {
    const char* env = std::getenv("PERMDAG_LOG");
    if (!env) return 1;
    std::string v(env);
    if (v == "quiet") return 0;
    if (v == "debug") return 2;
    return 1;
}

void log_info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[permdag] " << msg << "\n";
}

void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "[permdag:debug] " << msg << "\n";
}

struct Paths {
    fs::path out;
    std::string tag;  // per-seed suffix

    std::string data() const { return (out / ("data_" + tag + ".csv")).string(); }
    std::string test() const { return (out / ("test_" + tag + ".csv")).string(); }
    std::string truth() const { return (out / ("truth_graph_" + tag + ".txt")).string(); }
    std::string sem() const { return (out / ("sem_" + tag + ".json")).string(); }
    std::string ordering() const { return (out / ("ordering_" + tag + ".txt")).string(); }
    std::string trace() const { return (out / ("ordering_trace_" + tag + ".csv")).string(); }
    std::string checkpoint() const { return (out / ("checkpoint_" + tag + ".txt")).string(); }
    std::string particles() const { return (out / ("particles_" + tag + ".txt")).string(); }
    std::string metrics() const { return (out / "metrics.csv").string(); }
};

Paths paths_for(const ExperimentConfig& cfg, std::uint64_t seed) {
    return Paths{fs::path(cfg.out_dir), std::to_string(seed)};
}

Matrix standardized(Matrix X) {
    Eigen::RowVectorXd mean = X.colwise().mean();
    X.rowwise() -= mean;
    for (int c = 0; c < X.cols(); ++c) {
        double sd = std::sqrt(X.col(c).squaredNorm() / X.rows());
        if (sd > 0.0) X.col(c) /= sd;
    }
    return X;
}

void cmd_synth_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    Paths p = paths_for(cfg, seed);
    RngKey rng(seed);
    DirectedGraph G = sample_er_dag(cfg.d, cfg.er_degree, rng.child(1));
    write_graph(p.truth(), G);
    if (cfg.model == "linear") {
        LinearSem sem = sample_linear_sem(G, rng.child(2), cfg.mu_e, cfg.sigma_e, 0.5,
                                          cfg.sigma_obs);
        write_linear_sem(p.sem(), sem);
        write_csv(p.data(), simulate_linear(sem, cfg.n, rng.child(3)).X);
        if (cfg.n_test > 0)
            write_csv(p.test(), simulate_linear(sem, cfg.n_test, rng.child(4)).X);
    } else {
        NonlinearSem sem =
            sample_nonlinear_sem(G, rng.child(2), 1.0, cfg.sigma_obs, cfg.hidden);
        write_nonlinear_sem(p.sem(), sem);
        write_csv(p.data(), simulate_nonlinear(sem, cfg.n, rng.child(3)).X);
        if (cfg.n_test > 0)
            write_csv(p.test(), simulate_nonlinear(sem, cfg.n_test, rng.child(4)).X);
    }
    log_info("synth seed " + std::to_string(seed) + ": " + std::to_string(G.edge_count()) +
             " edges, n=" + std::to_string(cfg.n));
}

Matrix load_data(const ExperimentConfig& cfg, const Paths& p) {
    std::string path = cfg.data_csv.empty() ? p.data() : cfg.data_csv;
    Matrix X = read_csv(path);
    if (X.cols() != cfg.d)
        throw validation_error("dataset " + path + " has " + std::to_string(X.cols()) +
                               " columns, config says d=" + std::to_string(cfg.d));
    if (!cfg.data_csv.empty() && cfg.standardize) X = standardized(std::move(X));
    return X;
}

DirectedGraph load_truth(const ExperimentConfig& cfg, const Paths& p) {
    return read_graph(cfg.graph_file.empty() ? p.truth() : cfg.graph_file);
}

void cmd_order_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    Paths p = paths_for(cfg, seed);
    Matrix X = load_data(cfg, p);
    if (cfg.ordering == "eqvar") {
        OrderingEstimate est = eqvar_ordering(X);
        write_ordering(p.ordering(), est.pi);
        write_ordering_trace(p.trace(), est);
    } else if (cfg.ordering == "gt") {
        Ordering pi = topological_ordering(load_truth(cfg, p));
        write_ordering(p.ordering(), pi);
    } else {
        Ordering pi = read_ordering(cfg.ordering.substr(5));
        if (pi.size() != cfg.d) throw validation_error("ordering file size mismatch");
        write_ordering(p.ordering(), pi);
    }
    log_info("order seed " + std::to_string(seed) + " (" + cfg.ordering + ")");
}

void cmd_infer_seed(const ExperimentConfig& cfg, std::uint64_t seed, bool resume) {
    Paths p = paths_for(cfg, seed);
    Dataset data{load_data(cfg, p), std::nullopt};
    PermutationMatrix P = permutation_matrix(read_ordering(p.ordering()));
    SvgdConfig svgd_cfg = cfg.svgd(seed);

    CheckpointHook hook = nullptr;
    if (cfg.checkpoint_interval > 0)
        hook = [&](const ParticleSet& state, int step) {
            write_checkpoint(p.checkpoint(), state, seed);
            log_debug("checkpoint at step " + std::to_string(step));
        };

    InferenceResult result;
    if (resume && fs::exists(p.checkpoint())) {
        std::uint64_t ck_seed = 0;
        ParticleSet state = read_checkpoint(p.checkpoint(), &ck_seed);
        if (ck_seed != seed) throw validation_error("checkpoint seed mismatch");
        log_info("resuming seed " + std::to_string(seed) + " from step " +
                 std::to_string(state.anneal.t));
        result = resume_inference(std::move(state), data, P, svgd_cfg, hook);
    } else {
        result = run_inference(data, P, svgd_cfg, hook);
    }
    write_checkpoint(p.checkpoint(), result.state, seed);
    write_particle_graphs(p.particles(), result.particles);
    log_info("infer seed " + std::to_string(seed) + ": " + std::to_string(cfg.steps) +
             " steps, " + std::to_string(result.particles.size()) + " particles");
}

std::vector<MetricsRow> cmd_eval_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    Paths p = paths_for(cfg, seed);
    Matrix X = load_data(cfg, p);
    DirectedGraph Gstar = load_truth(cfg, p);
    PermutationMatrix P = permutation_matrix(read_ordering(p.ordering()));
    ParticleSet state = read_checkpoint(p.checkpoint());
    auto particles = extract_particles(state, P);
    for (const auto& [G, theta] : particles)
        if (!is_acyclic(G)) throw std::logic_error("inferred particle graph has a cycle");

    std::optional<Matrix> X_test;
    std::string test_path = cfg.test_csv.empty() ? p.test() : cfg.test_csv;
    if (fs::exists(test_path)) X_test = read_csv(test_path);

    double q = cfg.svgd(seed).q;
    std::vector<MetricsRow> rows;
    for (MixtureMode mode : {MixtureMode::kUniform, MixtureMode::kWeighted}) {
        ParticleMixture mix = make_mixture(particles, X, mode, cfg.model_config(), q);
        MetricsRow row;
        row.seed = std::to_string(seed);
        row.method = mode == MixtureMode::kUniform ? "uniform" : "weighted";
        row.d = cfg.d;
        row.n = static_cast<int>(X.rows());
        row.steps = cfg.steps;
        row.eshd = expected_shd(mix, Gstar);
        row.auroc = auroc_of_mixture(mix, Gstar);
        row.cyclicity = expected_cyclicity(mix);
        row.negll = X_test ? neg_log_likelihood(mix, *X_test, cfg.model_config())
                           : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
    }
    return rows;
}

void append_summary_rows(std::vector<MetricsRow>& rows, const ExperimentConfig& cfg) {
    if (cfg.seeds_count < 2) return;
    for (const std::string& method : {std::string("uniform"), std::string("weighted")}) {
        std::vector<const MetricsRow*> group;
        for (const MetricsRow& r : rows)
            if (r.method == method && r.seed != "mean" && r.seed != "std")
                group.push_back(&r);
        if (group.empty()) continue;
        auto stat = [&](auto getter) {
            double mean = 0.0;
            for (const MetricsRow* r : group) mean += getter(*r);
            mean /= group.size();
            double var = 0.0;
            for (const MetricsRow* r : group) {
                double dlt = getter(*r) - mean;
                var += dlt * dlt;
            }
            double sd = group.size() > 1 ? std::sqrt(var / (group.size() - 1)) : 0.0;
            return std::pair<double, double>(mean, sd);
        };
        auto [eshd_m, eshd_s] = stat([](const MetricsRow& r) { return r.eshd; });
        auto [auroc_m, auroc_s] = stat([](const MetricsRow& r) { return r.auroc; });
        auto [cyc_m, cyc_s] = stat([](const MetricsRow& r) { return r.cyclicity; });
        auto [negll_m, negll_s] = stat([](const MetricsRow& r) { return r.negll; });
        MetricsRow mean_row{"mean", method, cfg.d, 0, cfg.steps, eshd_m, auroc_m, cyc_m, negll_m};
        MetricsRow std_row{"std", method, cfg.d, 0, cfg.steps, eshd_s, auroc_s, cyc_s, negll_s};
        rows.push_back(mean_row);
        rows.push_back(std_row);
    }
}

ExperimentConfig load_config(const std::string& config_path, CLI::App* sub,
                             ExperimentConfig overrides) {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : read_config(config_path);
    // flags beat file values
    if (sub->count("--seed")) cfg.seed = overrides.seed;
    if (sub->count("--out")) cfg.out_dir = overrides.out_dir;
    if (sub->count("--model")) cfg.model = overrides.model;
    if (sub->count("--ordering")) cfg.ordering = overrides.ordering;
    if (sub->count("--steps")) cfg.steps = overrides.steps;
    if (sub->count("--particles")) cfg.particles = overrides.particles;
    if (sub->count("--d")) cfg.d = overrides.d;
    if (sub->count("--n")) cfg.n = overrides.n;
    if (sub->count("--seeds-count")) cfg.seeds_count = overrides.seeds_count;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acyclicity-guaranteed Bayesian structure learning over DAGs"};
    app.require_subcommand(1);

    std::string config_path;
    ExperimentConfig ov;
    bool resume = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (flat key = value)");
        sub->add_option("--seed", ov.seed, "base RNG seed");
        sub->add_option("--out", ov.out_dir, "output directory");
        sub->add_option("--model", ov.model, "linear|nonlinear");
        sub->add_option("--ordering", ov.ordering, "eqvar|gt|file:PATH");
        sub->add_option("--steps", ov.steps, "SVGD steps");
        sub->add_option("--particles", ov.particles, "particle count");
        sub->add_option("--d", ov.d, "variable count");
        sub->add_option("--n", ov.n, "observation count");
        sub->add_option("--seeds-count", ov.seeds_count, "number of consecutive seeds");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate dataset and ground truth");
    CLI::App* order = app.add_subcommand("order", "estimate or copy a topological ordering");
    CLI::App* infer = app.add_subcommand("infer", "run particle inference");
    CLI::App* eval = app.add_subcommand("eval", "compute posterior metrics");
    CLI::App* runall = app.add_subcommand("run-all", "synth + order + infer + eval");
    for (CLI::App* sub : {synth, order, infer, eval, runall}) add_common(sub);
    infer->add_flag("--resume", resume, "continue from an existing checkpoint");
    runall->add_flag("--resume", resume, "continue from existing checkpoints");

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* sub = app.get_subcommands().front();
        ExperimentConfig cfg = load_config(config_path, sub, ov);
        fs::create_directories(cfg.out_dir);
        write_config((fs::path(cfg.out_dir) / "config_used.txt").string(), cfg);

        std::vector<MetricsRow> rows;
        for (int s = 0; s < cfg.seeds_count; ++s) {
            std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
            bool external_data = !cfg.data_csv.empty();
            if (sub == synth || sub == runall) {
                if (external_data)
                    log_info("external data supplied; skipping synthesis");
                else
                    cmd_synth_seed(cfg, seed);
            }
            if (sub == order || sub == runall) cmd_order_seed(cfg, seed);
            if (sub == infer || sub == runall) cmd_infer_seed(cfg, seed, resume);
            if (sub == eval || sub == runall) {
                auto seed_rows = cmd_eval_seed(cfg, seed);
                rows.insert(rows.end(), seed_rows.begin(), seed_rows.end());
            }
        }
        if (!rows.empty()) {
            append_summary_rows(rows, cfg);
            Paths p = paths_for(cfg, cfg.seed);
            write_metrics_csv(p.metrics(), rows);
            log_info("metrics written to " + p.metrics());
        }
    } catch (const validation_error& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const degeneracy_error& e) {
        std::cerr << "numeric degeneracy: " << e.what() << "\n";
        return 3;
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
