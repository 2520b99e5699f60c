#include "permdag/eval.hpp"

#include <cmath>

#include "permdag/numeric.hpp"
#include "permdag/synth.hpp"

namespace permdag {

ParticleMixture make_mixture(std::vector<std::pair<DirectedGraph, Theta>> particles,
                             const Matrix& X, MixtureMode mode, const ModelConfig& cfg,
                             double q) {
    if (particles.empty()) throw validation_error("make_mixture: empty particle list");
    const int M = static_cast<int>(particles.size());
    std::vector<double> logw(M, 0.0);
    if (mode == MixtureMode::kWeighted) {
        for (int m = 0; m < M; ++m) {
            const auto& [G, theta] = particles[m];
            logw[m] = er_log_prior(G, q) + log_joint_theta_data(X, G.as_real(), theta, cfg);
        }
    }
    double lse = logsumexp(logw);
    if (!std::isfinite(lse))
        throw degeneracy_error("make_mixture", M, lse);
    for (double& w : logw) w -= lse;
    return ParticleMixture{std::move(particles), std::move(logw)};
}

double expected_shd(const ParticleMixture& mix, const DirectedGraph& Gstar) {
    double total = 0.0;
    for (int m = 0; m < mix.size(); ++m)
        total += mix.weight(m) * shd(mix.particles[m].first, Gstar);
    return total;
}

Matrix posterior_edge_probs(const ParticleMixture& mix) {
    const int d = mix.particles.front().first.node_count();
    Matrix probs = Matrix::Zero(d, d);
    for (int m = 0; m < mix.size(); ++m)
        probs += mix.weight(m) * mix.particles[m].first.as_real();
    return probs;
}

double auroc_of_mixture(const ParticleMixture& mix, const DirectedGraph& Gstar) {
    return auroc(posterior_edge_probs(mix), Gstar);
}

double expected_cyclicity(const ParticleMixture& mix) {
    double total = 0.0;
    for (int m = 0; m < mix.size(); ++m)
        total += mix.weight(m) * cyclicity_score(mix.particles[m].first);
    return total;
}

double neg_log_likelihood(const ParticleMixture& mix, const Matrix& X_test,
                          const ModelConfig& cfg) {
    if (X_test.rows() < 1) throw validation_error("neg_log_likelihood: empty test set");
    double total = 0.0;
    for (int m = 0; m < mix.size(); ++m) {
        const auto& [G, theta] = mix.particles[m];
        total += mix.weight(m) * data_log_likelihood(X_test, G.as_real(), theta, cfg);
    }
    return -total;
}

double expectation_inner(const GraphFunction& f, const LatentParticle& Z,
                         const Theta& theta, const JointContext& ctx,
                         const PermutationMatrix& P, double alpha, int n_graph_samples,
                         RngKey rng) {
    int count = n_graph_samples;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto canonicals =
            sample_hard_canonicals(Z, alpha, count, rng.child(rng_tag::kHardGraphs).child(attempt));
        std::vector<double> log_joints(count);
        std::vector<double> f_vals(count);
        for (int s = 0; s < count; ++s) {
            DirectedGraph G = compose_adjacency(P, canonicals[s]);
            log_joints[s] = ctx.log_joint(G.as_real(), theta);
            f_vals[s] = f(G, theta);
        }
        double lse = logsumexp(log_joints);
        if (std::isfinite(lse)) {
            std::vector<double> w = softmax_from_logs(log_joints);
            double est = 0.0;
            for (int s = 0; s < count; ++s) est += w[s] * f_vals[s];
            return est;
        }
        count *= 4;
    }
    throw degeneracy_error("expectation_inner", count,
                           -std::numeric_limits<double>::infinity());
}

std::vector<IntMatrix> enumerate_canonicals(int d) {
    const int pairs = d * (d - 1) / 2;
    if (pairs > 20) throw validation_error("enumerate_canonicals: d too large");
    std::vector<IntMatrix> out;
    out.reserve(1u << pairs);
    for (unsigned mask = 0; mask < (1u << pairs); ++mask) {
        IntMatrix S = IntMatrix::Zero(d, d);
        int bit = 0;
        for (int i = 0; i < d - 1; ++i)
            for (int j = i + 1; j < d; ++j, ++bit)
                if (mask & (1u << bit)) S(i, j) = 1;
        out.push_back(std::move(S));
    }
    return out;
}

double expectation_inner_oracle(const GraphFunction& f, const LatentParticle& Z,
                                const Theta& theta, const JointContext& ctx,
                                const PermutationMatrix& P, double alpha) {
    const int d = Z.d();
    Matrix probs = soft_canonical(Z, alpha);
    std::vector<double> log_terms;
    std::vector<double> f_vals;
    for (const IntMatrix& S : enumerate_canonicals(d)) {
        double log_ps = 0.0;
        for (int i = 0; i < d - 1; ++i)
            for (int j = i + 1; j < d; ++j)
                log_ps += S(i, j) ? std::log(probs(i, j)) : std::log1p(-probs(i, j));
        DirectedGraph G = compose_adjacency(P, S);
        log_terms.push_back(log_ps + ctx.log_joint(G.as_real(), theta));
        f_vals.push_back(f(G, theta));
    }
    std::vector<double> w = softmax_from_logs(log_terms);
    double est = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) est += w[s] * f_vals[s];
    return est;
}

double expectation_of(const GraphFunction& f,
                      const std::vector<std::pair<LatentParticle, Theta>>& samples,
                      const JointContext& ctx, const PermutationMatrix& P, double alpha,
                      int n_graph_samples, RngKey rng, bool oracle_mode) {
    if (samples.empty()) throw validation_error("expectation_of: no posterior samples");
    double total = 0.0;
    for (std::size_t m = 0; m < samples.size(); ++m) {
        const auto& [Z, theta] = samples[m];
        total += oracle_mode
                     ? expectation_inner_oracle(f, Z, theta, ctx, P, alpha)
                     : expectation_inner(f, Z, theta, ctx, P, alpha, n_graph_samples,
                                         rng.child(m));
    }
    return total / static_cast<double>(samples.size());
}

}  // namespace permdag
