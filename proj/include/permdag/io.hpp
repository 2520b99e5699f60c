#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "permdag/ordering.hpp"
#include "permdag/svgd.hpp"
#include "permdag/synth.hpp"

namespace permdag {

// %.17g: decimal text that round-trips doubles exactly.
std::string format_double(double x);

// ---- graph files: header "d=<n>", then one "i j" edge per line, 0-based ----
void write_graph(const std::string& path, const DirectedGraph& G);
DirectedGraph read_graph(const std::string& path);

// ---- datasets: CSV, no header, '.' decimal, newline-terminated rows ----
void write_csv(const std::string& path, const Matrix& X);
Matrix read_csv(const std::string& path);

// ---- orderings: whitespace-separated 0-based position list ----
void write_ordering(const std::string& path, const Ordering& pi);
Ordering read_ordering(const std::string& path);
void write_ordering_trace(const std::string& path, const OrderingEstimate& est);

// ---- ground-truth SEMs as JSON ----
void write_linear_sem(const std::string& path, const LinearSem& sem);
LinearSem read_linear_sem(const std::string& path);
void write_nonlinear_sem(const std::string& path, const NonlinearSem& sem);
NonlinearSem read_nonlinear_sem(const std::string& path);

// ---- inference checkpoints: structured text, exact round-trip ----
void write_checkpoint(const std::string& path, const ParticleSet& state,
                      std::uint64_t seed);
ParticleSet read_checkpoint(const std::string& path, std::uint64_t* seed_out = nullptr);

// ---- particle graphs (one adjacency per particle) ----
void write_particle_graphs(const std::string& path,
                           const std::vector<std::pair<DirectedGraph, Theta>>& particles);

// ---- metrics ----
struct MetricsRow {
    std::string seed;     // seed number, or "mean"/"std" for summary rows
    std::string method;   // mixture mode label
    int d = 0;
    int n = 0;
    int steps = 0;
    double eshd = 0.0;
    double auroc = 0.0;
    double cyclicity = 0.0;
    double negll = std::numeric_limits<double>::quiet_NaN();
};
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

// ---- experiment config: flat "key = value" text, unknown keys rejected ----
struct ExperimentConfig {
    std::string model = "linear";  // linear | nonlinear
    int d = 20;
    int n = 100;
    int n_test = 100;
    int er_degree = 1;
    std::string ordering = "eqvar";  // eqvar | gt | file:PATH
    int steps = 1000;
    int particles = 30;
    double alpha_rate = 0.05;
    double gamma_z = 5.0;
    double gamma_theta = 500.0;
    int n_graph_samples = 64;
    int n_gumbel_samples = 64;
    int n_prior_samples = 64;
    double q = 0.0;  // 0 = derived from er_degree and d
    double sigma_obs = 0.1;
    double sigma_e = 1.0;
    double mu_e = 0.0;
    double sigma_p = 1.0;
    std::vector<int> hidden = {5};
    int latent_dim = 0;  // 0 = d
    double eta = 0.005;
    std::uint64_t seed = 0;
    int seeds_count = 1;
    int checkpoint_interval = 0;
    bool standardize = false;  // center/scale columns of externally supplied data
    std::string out_dir = "out";
    std::string data_csv;    // external dataset instead of synthesis
    std::string test_csv;
    std::string graph_file;  // external ground truth

    void validate() const;
    SvgdConfig svgd(std::uint64_t run_seed) const;
    ModelConfig model_config() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig read_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);
void write_config(const std::string& path, const ExperimentConfig& cfg);

}  // namespace permdag
