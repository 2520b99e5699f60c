#include "permdag/svgd.hpp"

#include <cmath>

#include "permdag/numeric.hpp"
#include "permdag/synth.hpp"

namespace permdag {

double SvgdConfig::resolved_q(int d) const {
    // degree-1 ER default; capped away from 1 so the prior stays proper at
    // small d where degree * d exceeds the pair count
    return q > 0.0 ? q : std::min(er_edge_probability(d, 1.0), 0.9);
}

void SvgdConfig::validate() const {
    if (particles < 1) throw validation_error("SvgdConfig: particles >= 1");
    if (steps < 0) throw validation_error("SvgdConfig: steps >= 0");
    if (alpha_rate < 0.0) throw validation_error("SvgdConfig: alpha_rate >= 0");
    if (eta <= 0.0) throw validation_error("SvgdConfig: eta > 0");
    if (!(rms_decay > 0.0 && rms_decay < 1.0))
        throw validation_error("SvgdConfig: rms_decay in (0,1)");
    if (kernel.gamma_z <= 0.0 || kernel.gamma_theta <= 0.0)
        throw validation_error("SvgdConfig: kernel bandwidths > 0");
    if (est.n_graph_samples < 1 || est.n_gumbel_samples < 1 || est.n_prior_samples < 1)
        throw validation_error("SvgdConfig: sample counts >= 1");
    if (est.tau <= 0.0) throw validation_error("SvgdConfig: tau > 0");
    if (q < 0.0 || q >= 1.0) throw validation_error("SvgdConfig: q in [0,1)");
    model.validate();
}

namespace {

// Flattened-Z gradient of the Gumbel-soft log joint at one noise draw:
// chains grad w.r.t. the composed soft graph back through P and the
// tempered sigmoid into U and V.
Vector soft_joint_grad_z(const LatentParticle& Z, const Matrix& L, double alpha,
                         double tau, const PermutationMatrix& P, const JointContext& ctx,
                         const Theta& theta, double* log_joint_out) {
    const int d = Z.d();
    Matrix S = gumbel_soft_canonical(Z, L, alpha, tau);
    Matrix G = compose_adjacency_soft(P, S);
    Matrix grad_g;
    *log_joint_out = ctx.log_joint(G, theta, nullptr, &grad_g);
    Matrix Pd = P.as_real();
    Matrix grad_s = Pd.transpose() * grad_g * Pd;
    Matrix gU = Matrix::Zero(d - 1, Z.k());
    Matrix gV = Matrix::Zero(d - 1, Z.k());
    for (int i = 0; i < d - 1; ++i)
        for (int j = i + 1; j < d; ++j) {
            double s = S(i, j);
            double coeff = grad_s(i, j) * s * (1.0 - s) / tau * alpha;
            gU.row(i) += coeff * Z.V.row(j - 1);
            gV.row(j - 1) += coeff * Z.U.row(i);
        }
    return LatentParticle(std::move(gU), std::move(gV)).flatten();
}

struct HardSampleEvals {
    std::vector<double> log_joints;
    std::vector<Vector> grads;  // filled only when with_grads
};

HardSampleEvals eval_hard_samples(const Particle& particle, const JointContext& ctx,
                                  const PermutationMatrix& P, double alpha, int count,
                                  RngKey rng, bool with_grads) {
    HardSampleEvals out;
    out.log_joints.reserve(count);
    auto canonicals = sample_hard_canonicals(particle.Z, alpha, count, rng);
    for (const IntMatrix& S : canonicals) {
        Matrix G = compose_adjacency(P, S).as_real();
        if (with_grads) {
            Vector g;
            out.log_joints.push_back(ctx.log_joint(G, particle.theta, &g, nullptr));
            out.grads.push_back(std::move(g));
        } else {
            out.log_joints.push_back(ctx.log_joint(G, particle.theta, nullptr, nullptr));
        }
    }
    return out;
}

}  // namespace

Vector score_theta(const Particle& particle, const JointContext& ctx,
                   const PermutationMatrix& P, double alpha, const SvgdConfig& cfg,
                   RngKey rng) {
    const int n_theta = static_cast<int>(theta_flatten(particle.theta).size());
    if (cfg.prior_only) return Vector::Zero(n_theta);

    int count = cfg.est.n_graph_samples;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto evals = eval_hard_samples(particle, ctx, P, alpha, count,
                                       rng.child(rng_tag::kScoreThetaGraphs).child(attempt),
                                       true);
        double lse = logsumexp(evals.log_joints);
        if (std::isfinite(lse)) {
            std::vector<double> w = softmax_from_logs(evals.log_joints);
            Vector grad = Vector::Zero(n_theta);
            for (int s = 0; s < count; ++s) grad += w[s] * evals.grads[s];
            return grad;
        }
        count *= 4;
    }
    throw degeneracy_error("score_theta", count,
                           -std::numeric_limits<double>::infinity());
}

Vector score_z(const Particle& particle, const JointContext& ctx,
               const PermutationMatrix& P, double alpha, const SvgdConfig& cfg,
               RngKey rng) {
    const int d = particle.Z.d();
    const double sigma_z = cfg.resolved_sigma_z(d);
    const double q = cfg.resolved_q(d);

    LatentPriorResult prior =
        log_latent_prior(particle.Z, P, alpha, cfg.est.tau, q, sigma_z,
                         cfg.est.n_prior_samples, rng.child(rng_tag::kPriorGumbel));
    Vector score =
        LatentParticle(std::move(prior.grad_U), std::move(prior.grad_V)).flatten();
    if (cfg.prior_only) return score;

    // Self-normalized over one pool of Gumbel draws: numerator p * grad(log p)
    // and denominator p share every sample, so the ratio collapses to a
    // softmax-weighted gradient average and stays bounded even when the
    // relaxed joints span hundreds of log units.
    int n_gumbel = cfg.est.n_gumbel_samples;
    for (int attempt = 0; attempt < 2; ++attempt) {
        RngKey gumbel_key = rng.child(rng_tag::kScoreZGumbel).child(attempt);
        std::vector<double> soft_logs(n_gumbel);
        std::vector<Vector> soft_grads(n_gumbel);
        for (int s = 0; s < n_gumbel; ++s) {
            Matrix L = draw_logistic_noise(d, gumbel_key.child(s));
            soft_grads[s] = soft_joint_grad_z(particle.Z, L, alpha, cfg.est.tau, P, ctx,
                                              particle.theta, &soft_logs[s]);
        }
        double lse_soft = logsumexp(soft_logs);
        if (std::isfinite(lse_soft)) {
            std::vector<double> w = softmax_from_logs(soft_logs);
            Vector num = Vector::Zero(score.size());
            for (int s = 0; s < n_gumbel; ++s) num += w[s] * soft_grads[s];
            score += num;
            return score;
        }
        n_gumbel *= 4;
    }
    throw degeneracy_error("score_z", n_gumbel,
                           -std::numeric_limits<double>::infinity());
}

KernelResult kernel_eval(const Vector& z_a, const Vector& theta_a, const Vector& z_b,
                         const Vector& theta_b, const KernelConfig& cfg) {
    Vector dz = z_a - z_b;
    Vector dt = theta_a - theta_b;
    double kz = std::exp(-dz.squaredNorm() / cfg.gamma_z);
    double kt = std::exp(-dt.squaredNorm() / cfg.gamma_theta);
    KernelResult res;
    res.value = kz + kt;
    res.grad_z = (-2.0 * kz / cfg.gamma_z) * dz;
    res.grad_theta = (-2.0 * kt / cfg.gamma_theta) * dt;
    return res;
}

StepScores compute_scores(const ParticleSet& state, const JointContext& ctx,
                          const PermutationMatrix& P, const SvgdConfig& cfg,
                          RngKey step_key) {
    StepScores scores;
    const double alpha = state.anneal.alpha();
    scores.z.resize(state.size());
    scores.theta.resize(state.size());
    for (int m = 0; m < state.size(); ++m) {
        RngKey pk = step_key.child(m);
        scores.z[m] = score_z(state.particles[m], ctx, P, alpha, cfg, pk);
        scores.theta[m] = score_theta(state.particles[m], ctx, P, alpha, cfg, pk);
    }
    return scores;
}

void compute_phis(const ParticleSet& state, const StepScores& scores,
                  const KernelConfig& kernel, std::vector<Vector>* phi_z,
                  std::vector<Vector>* phi_theta) {
    const int M = state.size();
    std::vector<Vector> zs(M), ts(M);
    for (int m = 0; m < M; ++m) {
        zs[m] = state.particles[m].Z.flatten();
        ts[m] = theta_flatten(state.particles[m].theta);
    }
    phi_z->assign(M, Vector());
    phi_theta->assign(M, Vector());
    for (int m = 0; m < M; ++m) {
        Vector pz = Vector::Zero(zs[m].size());
        Vector pt = Vector::Zero(ts[m].size());
        for (int r = 0; r < M; ++r) {
            KernelResult k = kernel_eval(zs[r], ts[r], zs[m], ts[m], kernel);
            pz += k.value * scores.z[r] + k.grad_z;
            pt += k.value * scores.theta[r] + k.grad_theta;
        }
        (*phi_z)[m] = pz / static_cast<double>(M);
        (*phi_theta)[m] = pt / static_cast<double>(M);
    }
}

namespace {

void rmsprop_apply(Vector& x, Vector& state, const Vector& phi, double eta, double decay,
                   double eps) {
    if (state.size() != phi.size()) state = Vector::Zero(phi.size());
    state = decay * state + (1.0 - decay) * phi.cwiseProduct(phi);
    x += eta * (phi.array() / (state.array().sqrt() + eps)).matrix();
}

}  // namespace

void svgd_step(ParticleSet& state, const JointContext& ctx, const PermutationMatrix& P,
               const SvgdConfig& cfg) {
    RngKey master(cfg.seed);
    RngKey step_key = master.child(0x57e9).child(static_cast<std::uint64_t>(state.anneal.t));
    StepScores scores = compute_scores(state, ctx, P, cfg, step_key);
    std::vector<Vector> phi_z, phi_theta;
    compute_phis(state, scores, cfg.kernel, &phi_z, &phi_theta);
    for (int m = 0; m < state.size(); ++m) {
        Particle& p = state.particles[m];
        Vector z = p.Z.flatten();
        rmsprop_apply(z, p.rms_z, phi_z[m], cfg.eta, cfg.rms_decay, cfg.rms_eps);
        p.Z = LatentParticle::unflatten(z, state.d(), state.k);
        Vector t = theta_flatten(p.theta);
        rmsprop_apply(t, p.rms_theta, phi_theta[m], cfg.eta, cfg.rms_decay, cfg.rms_eps);
        p.theta = theta_unflatten(t, state.shape);
    }
    state.anneal.t += 1;
}

ParticleSet init_particles(const SvgdConfig& cfg, int d) {
    cfg.validate();
    if (d < 2) throw validation_error("init_particles: d >= 2");
    const int k = cfg.resolved_k(d);
    const double sigma_z = cfg.resolved_sigma_z(d);
    ParticleSet state;
    state.k = k;
    state.shape = ThetaShape{cfg.linear_model, d, cfg.model.hidden};
    state.anneal = AnnealState{0, cfg.alpha_rate, cfg.est.tau};

    RngKey master(cfg.seed);
    for (int m = 0; m < cfg.particles; ++m) {
        RngKey pk = master.child(0x1a17).child(m);
        Matrix U(d - 1, k), V(d - 1, k);
        auto z_eng = pk.child(rng_tag::kInitLatent).engine();
        for (int i = 0; i < d - 1; ++i)
            for (int j = 0; j < k; ++j) U(i, j) = draw_normal(z_eng, 0.0, sigma_z);
        for (int i = 0; i < d - 1; ++i)
            for (int j = 0; j < k; ++j) V(i, j) = draw_normal(z_eng, 0.0, sigma_z);

        auto t_eng = pk.child(rng_tag::kInitTheta).engine();
        Vector flat(state.shape.param_count());
        double scale = cfg.linear_model ? 1.0 : cfg.model.sigma_p;
        for (int i = 0; i < flat.size(); ++i) flat(i) = draw_normal(t_eng, 0.0, scale);

        Particle p{LatentParticle(std::move(U), std::move(V)),
                   theta_unflatten(flat, state.shape), Vector::Zero((d - 1) * k * 2),
                   Vector::Zero(state.shape.param_count())};
        state.particles.push_back(std::move(p));
    }
    return state;
}

std::vector<std::pair<DirectedGraph, Theta>> extract_particles(const ParticleSet& state,
                                                               const PermutationMatrix& P) {
    std::vector<std::pair<DirectedGraph, Theta>> out;
    out.reserve(state.size());
    for (const Particle& p : state.particles)
        out.emplace_back(compose_adjacency(P, hard_canonical(p.Z)), p.theta);
    return out;
}

InferenceResult resume_inference(ParticleSet state, const Dataset& data,
                                 const PermutationMatrix& P, const SvgdConfig& cfg,
                                 const CheckpointHook& hook) {
    cfg.validate();
    JointContext ctx(data.X, cfg.model, cfg.linear_model);
    if (P.size() != ctx.d()) throw validation_error("run_inference: permutation size mismatch");
    while (state.anneal.t < cfg.steps) {
        svgd_step(state, ctx, P, cfg);
        if (hook && cfg.checkpoint_interval > 0 &&
            state.anneal.t % cfg.checkpoint_interval == 0)
            hook(state, state.anneal.t);
    }
    return InferenceResult{extract_particles(state, P), std::move(state)};
}

InferenceResult run_inference(const Dataset& data, const PermutationMatrix& P,
                              const SvgdConfig& cfg, const CheckpointHook& hook) {
    ParticleSet state = init_particles(cfg, static_cast<int>(data.X.cols()));
    return resume_inference(std::move(state), data, P, cfg, hook);
}

}  // namespace permdag
