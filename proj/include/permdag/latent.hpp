#pragma once

#include <vector>

#include "permdag/graph.hpp"
#include "permdag/rng.hpp"

namespace permdag {

// Bilinear embedding of the canonical adjacency: row i of U pairs with row
// j-1 of V to score the strictly-upper entry (i,j). Both blocks are
// (d-1) x k with k >= d-1 so the representable graphs are unconstrained in
// rank.
struct LatentParticle {
    Matrix U;  // (d-1) x k
    Matrix V;  // (d-1) x k

    LatentParticle(Matrix u, Matrix v);
    static LatentParticle zeros(int d, int k);

    int d() const { return static_cast<int>(U.rows()) + 1; }
    int k() const { return static_cast<int>(U.cols()); }

    Vector flatten() const;
    static LatentParticle unflatten(const Vector& flat, int d, int k);
};

struct AnnealState {
    int t = 0;
    double alpha_rate = 0.05;
    double tau = 1.0;

    double alpha() const { return alpha_rate * t; }
};

// Pre-activation scores u_i . v_{j-1} for the strict upper triangle; zero
// elsewhere. Shared by the soft/hard/gumbel forms.
Matrix bilinear_scores(const LatentParticle& Z);

// Entry (i,j) = sigmoid(alpha * u_i.v_{j-1}) for j > i, 0 otherwise.
Matrix soft_canonical(const LatentParticle& Z, double alpha);

// Entry (i,j) = 1[u_i.v_{j-1} > 0] for j > i (strict: a zero score means no
// edge), 0 otherwise.
IntMatrix hard_canonical(const LatentParticle& Z);

// Gumbel-softmax relaxation: entry (i,j) = sigmoid((L(i,j-1) + alpha *
// u_i.v_{j-1}) / tau) for j > i. L holds standard logistic noise.
Matrix gumbel_soft_canonical(const LatentParticle& Z, const Matrix& L, double alpha,
                             double tau);

Matrix draw_logistic_noise(int d, RngKey rng);

// p(G_ij = 1 | Z, P) = (P * soft_canonical * P^T)_ij.
Matrix edge_probabilities(const LatentParticle& Z, const PermutationMatrix& P, double alpha);

// Bernoulli draws of S entries at the soft probabilities, composed with P.
std::vector<DirectedGraph> sample_hard_graphs(const LatentParticle& Z,
                                              const PermutationMatrix& P, double alpha,
                                              int count, RngKey rng);
// Canonical-form variant used where the caller composes itself.
std::vector<IntMatrix> sample_hard_canonicals(const LatentParticle& Z, double alpha,
                                              int count, RngKey rng);

struct LatentPriorResult {
    double log_prior;          // Gaussian term + estimated expectation term
    Matrix grad_U;
    Matrix grad_V;
};

// log p(Z) = sum log N(U;0,sigma_z^2) + sum log N(V;0,sigma_z^2)
//            + E_{p(G|Z,P)}[log p_ER(G; q)]   (partition constant dropped).
// The expectation term and its Z-gradient are estimated from n_samples
// Gumbel-soft draws; rng fixes the noise so value and gradient share it.
LatentPriorResult log_latent_prior(const LatentParticle& Z, const PermutationMatrix& P,
                                   double alpha, double tau, double q, double sigma_z,
                                   int n_samples, RngKey rng);

}  // namespace permdag
