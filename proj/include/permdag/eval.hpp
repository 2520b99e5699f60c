#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "permdag/latent.hpp"
#include "permdag/likelihood.hpp"

namespace permdag {

enum class MixtureMode { kUniform, kWeighted };

struct ParticleMixture {
    std::vector<std::pair<DirectedGraph, Theta>> particles;
    std::vector<double> log_weights;  // normalized: logsumexp == 0

    int size() const { return static_cast<int>(particles.size()); }
    double weight(int m) const { return std::exp(log_weights[m]); }
};

// uniform: equal weights. weighted: log weight proportional to
// log p(G, Theta, D) = er_log_prior(G; q) + log p(Theta, D | G).
ParticleMixture make_mixture(std::vector<std::pair<DirectedGraph, Theta>> particles,
                             const Matrix& X, MixtureMode mode, const ModelConfig& cfg,
                             double q);

double expected_shd(const ParticleMixture& mix, const DirectedGraph& Gstar);
Matrix posterior_edge_probs(const ParticleMixture& mix);
double auroc_of_mixture(const ParticleMixture& mix, const DirectedGraph& Gstar);
double expected_cyclicity(const ParticleMixture& mix);

// Expected negative held-out log likelihood:
// -sum_m w_m log p(D_test | G_m, Theta_m).
double neg_log_likelihood(const ParticleMixture& mix, const Matrix& X_test,
                          const ModelConfig& cfg);

// ---- posterior expectation of f(G, Theta) ----

using GraphFunction = std::function<double(const DirectedGraph&, const Theta&)>;

// Inner self-normalized ratio E_{p(G|Z,P)}[f p(Theta,D|G)] / E[p(Theta,D|G)]
// from hard graph samples, log-space weighted. Throws degeneracy_error after
// one 4x retry if every weight underflows.
double expectation_inner(const GraphFunction& f, const LatentParticle& Z,
                         const Theta& theta, const JointContext& ctx,
                         const PermutationMatrix& P, double alpha, int n_graph_samples,
                         RngKey rng);

// Exact inner ratio by enumerating all binary canonical matrices (d <= 4).
double expectation_inner_oracle(const GraphFunction& f, const LatentParticle& Z,
                                const Theta& theta, const JointContext& ctx,
                                const PermutationMatrix& P, double alpha);

// Outer average over posterior samples of (Z, Theta).
double expectation_of(const GraphFunction& f,
                      const std::vector<std::pair<LatentParticle, Theta>>& samples,
                      const JointContext& ctx, const PermutationMatrix& P, double alpha,
                      int n_graph_samples, RngKey rng, bool oracle_mode = false);

// All strictly-upper binary matrices of size d (2^(d(d-1)/2) of them, d <= 4).
std::vector<IntMatrix> enumerate_canonicals(int d);

}  // namespace permdag
