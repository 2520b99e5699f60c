#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "permdag/latent.hpp"
#include "permdag/likelihood.hpp"

namespace permdag {

struct KernelConfig {
    double gamma_z = 5.0;
    double gamma_theta = 500.0;
};

struct ScoreEstimatorConfig {
    int n_graph_samples = 64;   // hard-graph draws (theta score, expectation denominators)
    int n_gumbel_samples = 64;  // reparameterized draws (Z-score ratio)
    int n_prior_samples = 64;   // draws for the latent prior expectation term
    double tau = 1.0;
};

struct SvgdConfig {
    int particles = 30;
    int steps = 1000;
    int latent_dim = 0;          // k; 0 means k = d
    double alpha_rate = 0.05;    // alpha_t = alpha_rate * t
    double eta = 0.005;          // RMSProp step size
    double rms_decay = 0.9;
    double rms_eps = 1e-8;
    double q = 0.0;              // ER prior edge probability; 0 means degree-1 default
    double sigma_z = 0.0;        // 0 means 1/sqrt(k)
    KernelConfig kernel;
    ScoreEstimatorConfig est;
    ModelConfig model;
    bool linear_model = true;
    bool prior_only = false;     // drop likelihood terms from the scores
    std::uint64_t seed = 0;
    int checkpoint_interval = 0; // steps between checkpoint hooks; 0 = off

    int resolved_k(int d) const { return latent_dim > 0 ? latent_dim : d; }
    double resolved_sigma_z(int d) const {
        return sigma_z > 0.0 ? sigma_z : 1.0 / std::sqrt(static_cast<double>(resolved_k(d)));
    }
    double resolved_q(int d) const;
    void validate() const;
};

struct Particle {
    LatentParticle Z;
    Theta theta;
    Vector rms_z;      // RMSProp second-moment state, flattened Z layout
    Vector rms_theta;
};

struct ParticleSet {
    std::vector<Particle> particles;
    AnnealState anneal;
    ThetaShape shape;
    int k = 0;

    int size() const { return static_cast<int>(particles.size()); }
    int d() const { return shape.d; }
};

// ---- score estimation ----

// Self-normalized estimator of grad_Theta log p(Z,Theta|D,P): softmax-weighted
// average of joint-gradient draws over hard graphs sampled from p(G|Z,P).
// Retries once with 4x samples if every weight underflows, then throws
// degeneracy_error.
Vector score_theta(const Particle& particle, const JointContext& ctx,
                   const PermutationMatrix& P, double alpha, const SvgdConfig& cfg,
                   RngKey rng);

// grad_Z log p(Z,Theta|D,P): latent-prior gradient plus the Gumbel-softmax
// likelihood ratio, self-normalized over one pool of logistic draws (the
// numerator's p * grad(log p) and the denominator's p share every sample, so
// the ratio is a softmax-weighted average of pathwise gradients).
Vector score_z(const Particle& particle, const JointContext& ctx,
               const PermutationMatrix& P, double alpha, const SvgdConfig& cfg,
               RngKey rng);

// ---- kernel ----

struct KernelResult {
    double value;
    Vector grad_z;      // w.r.t. the first argument's Z
    Vector grad_theta;  // w.r.t. the first argument's Theta
};

// k((Z,T),(Z',T')) = exp(-||Z-Z'||^2 / gamma_z) + exp(-||T-T'||^2 / gamma_theta)
KernelResult kernel_eval(const Vector& z_a, const Vector& theta_a, const Vector& z_b,
                         const Vector& theta_b, const KernelConfig& cfg);

// ---- particle transport ----

struct StepScores {
    std::vector<Vector> z;
    std::vector<Vector> theta;
};

StepScores compute_scores(const ParticleSet& state, const JointContext& ctx,
                          const PermutationMatrix& P, const SvgdConfig& cfg,
                          RngKey step_key);

// phi_m = (1/M) sum_r [ k(r,m) * score(r) + grad_r k(r,m) ], from the step
// snapshot only.
void compute_phis(const ParticleSet& state, const StepScores& scores,
                  const KernelConfig& kernel, std::vector<Vector>* phi_z,
                  std::vector<Vector>* phi_theta);

// One full SVGD step at the state's current anneal index; advances anneal.t.
void svgd_step(ParticleSet& state, const JointContext& ctx, const PermutationMatrix& P,
               const SvgdConfig& cfg);

// ---- end to end ----

ParticleSet init_particles(const SvgdConfig& cfg, int d);

using CheckpointHook = std::function<void(const ParticleSet&, int completed_steps)>;

struct InferenceResult {
    std::vector<std::pair<DirectedGraph, Theta>> particles;
    ParticleSet state;
};

std::vector<std::pair<DirectedGraph, Theta>> extract_particles(const ParticleSet& state,
                                                               const PermutationMatrix& P);

InferenceResult run_inference(const Dataset& data, const PermutationMatrix& P,
                              const SvgdConfig& cfg, const CheckpointHook& hook = nullptr);

// Continue a (possibly checkpointed) state up to cfg.steps.
InferenceResult resume_inference(ParticleSet state, const Dataset& data,
                                 const PermutationMatrix& P, const SvgdConfig& cfg,
                                 const CheckpointHook& hook = nullptr);

}  // namespace permdag
