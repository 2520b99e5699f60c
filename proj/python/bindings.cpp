#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "permdag/eval.hpp"
#include "permdag/io.hpp"
#include "permdag/ordering.hpp"
#include "permdag/svgd.hpp"

namespace py = pybind11;
using namespace permdag;

namespace {

DirectedGraph graph_from_numpy(const Eigen::MatrixXi& adj) { return DirectedGraph(adj); }

Ordering ordering_from_list(const std::vector<int>& positions) {
    return Ordering(positions);
}

SvgdConfig config_from_kwargs(int particles, int steps, double alpha_rate, double eta,
                              double q, double gamma_z, double gamma_theta,
                              int n_graph_samples, int n_gumbel_samples,
                              int n_prior_samples, double sigma_obs, bool linear,
                              const std::vector<int>& hidden, std::uint64_t seed) {
    SvgdConfig cfg;
    cfg.particles = particles;
    cfg.steps = steps;
    cfg.alpha_rate = alpha_rate;
    cfg.eta = eta;
    cfg.q = q;
    cfg.kernel = KernelConfig{gamma_z, gamma_theta};
    cfg.est = ScoreEstimatorConfig{n_graph_samples, n_gumbel_samples, n_prior_samples, 1.0};
    cfg.model.sigma_obs = sigma_obs;
    cfg.model.hidden = hidden;
    cfg.linear_model = linear;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Acyclicity-guaranteed Bayesian structure learning over DAGs";

    py::register_exception<validation_error>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<degeneracy_error>(m, "DegeneracyError", PyExc_RuntimeError);

    // ---- graph core ----
    m.def(
        "permutation_matrix",
        [](const std::vector<int>& positions) {
            return permutation_matrix(ordering_from_list(positions)).dense();
        },
        py::arg("positions"),
        "Permutation matrix P with P[i, positions[i]] = 1.");
    m.def(
        "compose_adjacency",
        [](const std::vector<int>& positions, const Eigen::MatrixXi& S) {
            return compose_adjacency(permutation_matrix(ordering_from_list(positions)), S)
                .adj();
        },
        py::arg("positions"), py::arg("S"),
        "P S P^T for a strictly upper triangular binary S; acyclic by construction.");
    m.def(
        "is_acyclic",
        [](const Eigen::MatrixXi& adj) { return is_acyclic(graph_from_numpy(adj)); },
        py::arg("adj"));
    m.def(
        "cyclicity_score",
        [](const Matrix& G) { return cyclicity_score(G); }, py::arg("G"),
        "tr[(I + G/d)^d] - d; exactly zero on acyclic binary graphs.");
    m.def(
        "shd",
        [](const Eigen::MatrixXi& a, const Eigen::MatrixXi& b) {
            return shd(graph_from_numpy(a), graph_from_numpy(b));
        },
        py::arg("G"), py::arg("Gstar"),
        "Structural Hamming distance; a reversed edge counts once.");
    m.def(
        "auroc",
        [](const Matrix& probs, const Eigen::MatrixXi& gstar) {
            return auroc(probs, graph_from_numpy(gstar));
        },
        py::arg("edge_probs"), py::arg("Gstar"));

    // ---- synthesis ----
    m.def(
        "sample_er_dag",
        [](int d, int degree, std::uint64_t seed) {
            return sample_er_dag(d, degree, RngKey(seed)).adj();
        },
        py::arg("d"), py::arg("expected_degree") = 1, py::arg("seed") = 0);
    m.def(
        "er_log_prior", [](const Matrix& G, double q) { return er_log_prior(G, q); },
        py::arg("G"), py::arg("q"));
    m.def(
        "simulate_linear",
        [](const Eigen::MatrixXi& adj, int n, std::uint64_t seed, double sigma_obs) {
            DirectedGraph G = graph_from_numpy(adj);
            LinearSem sem = sample_linear_sem(G, RngKey(seed), 0.0, 1.0, 0.5, sigma_obs);
            return std::make_pair(simulate_linear(sem, n, RngKey(seed).child(1)).X,
                                  sem.weights);
        },
        py::arg("adj"), py::arg("n"), py::arg("seed") = 0, py::arg("sigma_obs") = 0.1,
        "Draw SEM weights for the graph and simulate n rows; returns (X, weights).");
    m.def(
        "simulate_nonlinear",
        [](const Eigen::MatrixXi& adj, int n, std::uint64_t seed, double sigma_obs) {
            DirectedGraph G = graph_from_numpy(adj);
            NonlinearSem sem = sample_nonlinear_sem(G, RngKey(seed), 1.0, sigma_obs);
            return simulate_nonlinear(sem, n, RngKey(seed).child(1)).X;
        },
        py::arg("adj"), py::arg("n"), py::arg("seed") = 0, py::arg("sigma_obs") = 0.1);

    // ---- ordering ----
    m.def(
        "eqvar_ordering",
        [](const Matrix& X) { return eqvar_ordering(X).pi.positions(); }, py::arg("X"),
        "Greedy minimal-residual-variance ordering; returns per-variable positions.");
    m.def(
        "validate_ordering",
        [](const std::vector<int>& positions, const Eigen::MatrixXi& gstar) {
            return validate_ordering(ordering_from_list(positions),
                                     graph_from_numpy(gstar));
        },
        py::arg("positions"), py::arg("Gstar"));
    m.def(
        "topological_ordering",
        [](const Eigen::MatrixXi& adj) {
            return topological_ordering(graph_from_numpy(adj)).positions();
        },
        py::arg("adj"));

    // ---- inference + evaluation ----
    m.def(
        "run_inference",
        [](const Matrix& X, const std::vector<int>& positions, int particles, int steps,
           double alpha_rate, double eta, double q, double gamma_z, double gamma_theta,
           int n_graph_samples, int n_gumbel_samples, int n_prior_samples,
           double sigma_obs, bool linear, const std::vector<int>& hidden,
           std::uint64_t seed) {
            SvgdConfig cfg = config_from_kwargs(
                particles, steps, alpha_rate, eta, q, gamma_z, gamma_theta,
                n_graph_samples, n_gumbel_samples, n_prior_samples, sigma_obs, linear,
                hidden, seed);
            Dataset data{X, std::nullopt};
            PermutationMatrix P = permutation_matrix(ordering_from_list(positions));
            InferenceResult res = run_inference(data, P, cfg);
            std::vector<Eigen::MatrixXi> graphs;
            for (const auto& [G, theta] : res.particles) graphs.push_back(G.adj());
            return graphs;
        },
        py::arg("X"), py::arg("positions"), py::arg("particles") = 30,
        py::arg("steps") = 1000, py::arg("alpha_rate") = 0.05, py::arg("eta") = 0.005,
        py::arg("q") = 0.0, py::arg("gamma_z") = 5.0, py::arg("gamma_theta") = 500.0,
        py::arg("n_graph_samples") = 64, py::arg("n_gumbel_samples") = 64,
        py::arg("n_prior_samples") = 64, py::arg("sigma_obs") = 0.1,
        py::arg("linear") = true, py::arg("hidden") = std::vector<int>{5},
        py::arg("seed") = 0,
        "Particle inference conditioned on the ordering; returns hard adjacency "
        "matrices, one per particle.");

    m.def(
        "posterior_metrics",
        [](const Matrix& X, const std::vector<int>& positions,
           const Eigen::MatrixXi& gstar, int particles, int steps, double q,
           double gamma_theta, double sigma_obs, bool linear, std::uint64_t seed,
           bool weighted) {
            SvgdConfig cfg = config_from_kwargs(particles, steps, 0.05, 0.005, q, 5.0,
                                                gamma_theta, 64, 64, 64, sigma_obs,
                                                linear, {5}, seed);
            Dataset data{X, std::nullopt};
            PermutationMatrix P = permutation_matrix(ordering_from_list(positions));
            InferenceResult res = run_inference(data, P, cfg);
            ParticleMixture mix =
                make_mixture(res.particles, X,
                             weighted ? MixtureMode::kWeighted : MixtureMode::kUniform,
                             cfg.model, cfg.resolved_q(static_cast<int>(X.cols())));
            DirectedGraph Gstar = graph_from_numpy(gstar);
            py::dict out;
            out["eshd"] = expected_shd(mix, Gstar);
            out["auroc"] = auroc_of_mixture(mix, Gstar);
            out["cyclicity"] = expected_cyclicity(mix);
            out["edge_probs"] = posterior_edge_probs(mix);
            return out;
        },
        py::arg("X"), py::arg("positions"), py::arg("Gstar"), py::arg("particles") = 30,
        py::arg("steps") = 1000, py::arg("q") = 0.0, py::arg("gamma_theta") = 500.0,
        py::arg("sigma_obs") = 0.1, py::arg("linear") = true, py::arg("seed") = 0,
        py::arg("weighted") = false,
        "End-to-end inference plus posterior summary metrics against a ground truth.");
}
