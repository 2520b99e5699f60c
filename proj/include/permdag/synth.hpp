#pragma once

#include <optional>
#include <vector>

#include "permdag/graph.hpp"
#include "permdag/rng.hpp"

namespace permdag {

struct Dataset {
    Matrix X;                       // n x d observations
    std::optional<Matrix> X_test;   // held-out rows, same width

    int n() const { return static_cast<int>(X.rows()); }
    int d() const { return static_cast<int>(X.cols()); }
};

struct LinearSem {
    DirectedGraph G;
    Matrix weights;      // weights(i,j): coefficient of X_i in the equation for X_j
    double sigma_obs;
};

// Per-node MLP: one pass X_masked -> hidden layers -> scalar, ReLU between
// layers, inputs masked to the node's parents.
struct MlpNode {
    std::vector<Matrix> W;            // W[l]: (out x in)
    std::vector<Vector> b;
};

struct NonlinearSem {
    DirectedGraph G;
    std::vector<MlpNode> nodes;       // one per variable
    double sigma_obs;
};

// Edge probability for the Erdos-Renyi generator/prior at a target expected
// degree: q = degree * d / C(d,2), clipped to [0,1].
double er_edge_probability(int d, double expected_degree);

// Uniformly random ordering, then each compatible pair kept independently
// with probability q.
DirectedGraph sample_er_dag(int d, int expected_degree, RngKey rng);

// log p(G) up to the normalizing constant: |G| log q + (C(d,2) - |G|) log(1-q),
// with the soft edge count |G| = sum of entries.
double er_log_prior(const Matrix& G, double q);
double er_log_prior(const DirectedGraph& G, double q);
double er_log_prior_from_edge_sum(double edge_sum, int d, double q);

LinearSem sample_linear_sem(const DirectedGraph& G, RngKey rng, double mu_e = 0.0,
                            double sigma_e = 1.0, double min_abs = 0.5,
                            double sigma_obs = 0.1);
Dataset simulate_linear(const LinearSem& sem, int n, RngKey rng);

NonlinearSem sample_nonlinear_sem(const DirectedGraph& G, RngKey rng,
                                  double weight_sigma = 1.0, double sigma_obs = 0.1,
                                  const std::vector<int>& hidden = {5});
Dataset simulate_nonlinear(const NonlinearSem& sem, int n, RngKey rng);

// Forward pass of one node's MLP on a single masked input row.
double mlp_forward(const MlpNode& node, const Vector& masked_input);

}  // namespace permdag
