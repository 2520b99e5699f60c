#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "permdag/eval.hpp"
#include "permdag/numeric.hpp"

using namespace permdag;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::mt19937_64 g_eng(2024);

Matrix randm(int r, int c, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = dist(g_eng);
    return M;
}

DirectedGraph chain(int d) {
    DirectedGraph G(d);
    for (int i = 0; i + 1 < d; ++i) G.set_edge(i, i + 1, true);
    return G;
}

std::pair<DirectedGraph, Theta> particle(const DirectedGraph& G, const Matrix& theta) {
    return {G, LinearParams{theta}};
}

}  // namespace

TEST_CASE("make_mixture weights") {
    const int d = 3;
    Matrix X = randm(10, d);
    ModelConfig cfg;
    DirectedGraph G = chain(d);
    Matrix theta = randm(d, d, 0.4);

    for (MixtureMode mode : {MixtureMode::kUniform, MixtureMode::kWeighted}) {
        ParticleMixture one = make_mixture({particle(G, theta)}, X, mode, cfg, 0.3);
        CHECK(one.weight(0) == doctest::Approx(1.0));
    }

    ParticleMixture dup =
        make_mixture({particle(G, theta), particle(G, theta)}, X, MixtureMode::kWeighted,
                     cfg, 0.3);
    CHECK(dup.weight(0) == doctest::Approx(0.5));
    CHECK(dup.weight(1) == doctest::Approx(0.5));

    // log-joint gap of log 3 gives softmax weights (0.75, 0.25)
    auto w = softmax_from_logs({std::log(3.0), 0.0});
    CHECK(w[0] == doctest::Approx(0.75));
    CHECK(w[1] == doctest::Approx(0.25));
    // additive shifts leave softmax weights unchanged
    auto w2 = softmax_from_logs({std::log(3.0) - 1234.5, 0.0 - 1234.5});
    CHECK(w2[0] == doctest::Approx(w[0]).epsilon(1e-12));

    CHECK_THROWS_AS(make_mixture({}, X, MixtureMode::kUniform, cfg, 0.3),
                    validation_error);
}

TEST_CASE("expected shd") {
    const int d = 4;
    DirectedGraph Gstar = chain(d);
    Matrix theta = Matrix::Zero(d, d);
    Matrix X = randm(5, d);
    ModelConfig cfg;

    ParticleMixture exact =
        make_mixture({particle(Gstar, theta), particle(Gstar, theta)}, X,
                     MixtureMode::kUniform, cfg, 0.3);
    CHECK(expected_shd(exact, Gstar) == 0.0);

    DirectedGraph off2 = Gstar;  // two pair flips
    off2.set_edge(0, 2, true);
    off2.set_edge(1, 3, true);
    ParticleMixture single = make_mixture({particle(off2, theta)}, X,
                                          MixtureMode::kUniform, cfg, 0.3);
    CHECK(expected_shd(single, Gstar) == doctest::Approx(shd(off2, Gstar)));

    // hand-weighted mixture: SHDs 2 and 6 at weights (0.75, 0.25) average 3
    DirectedGraph off6(d);
    off6.set_edge(1, 0, true);  // chain edge reversed: 1 error
    off6.set_edge(0, 2, true);
    off6.set_edge(0, 3, true);
    off6.set_edge(1, 3, true);
    off6.set_edge(3, 2, true);  // chain edge reversed
    CHECK(shd(off2, Gstar) == 2);
    CHECK(shd(off6, Gstar) == 6);
    ParticleMixture mix{{particle(off2, theta), particle(off6, theta)},
                        {std::log(0.75), std::log(0.25)}};
    CHECK(expected_shd(mix, Gstar) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("posterior edge probabilities and mixture auroc") {
    const int d = 3;
    Matrix theta = Matrix::Zero(d, d);
    Matrix X = randm(5, d);
    ModelConfig cfg;
    DirectedGraph Gstar = chain(d);

    ParticleMixture same = make_mixture({particle(Gstar, theta), particle(Gstar, theta)},
                                        X, MixtureMode::kUniform, cfg, 0.3);
    CHECK(posterior_edge_probs(same).isApprox(Gstar.as_real(), 1e-12));
    CHECK(auroc_of_mixture(same, Gstar) == doctest::Approx(1.0));

    DirectedGraph other = Gstar;
    other.set_edge(0, 2, true);
    ParticleMixture half = make_mixture({particle(Gstar, theta), particle(other, theta)},
                                        X, MixtureMode::kUniform, cfg, 0.3);
    CHECK(posterior_edge_probs(half)(0, 2) == doctest::Approx(0.5));

    ParticleMixture weighted{{particle(Gstar, theta), particle(other, theta)},
                             {std::log(0.25), std::log(0.75)}};
    CHECK(posterior_edge_probs(weighted)(0, 2) == doctest::Approx(0.75));

    Matrix probs = posterior_edge_probs(weighted);
    CHECK((probs.array() >= 0.0).all());
    CHECK((probs.array() <= 1.0).all());
    CHECK(probs.diagonal().isZero());
    CHECK(expected_cyclicity(weighted) == 0.0);
}

TEST_CASE("held-out negative log likelihood") {
    const int d = 2;
    ModelConfig cfg;
    cfg.sigma_obs = 0.1;
    DirectedGraph G = chain(d);
    Matrix theta = Matrix::Zero(d, d);
    theta(0, 1) = 1.5;

    // noiseless self-generated test rows: the root's zero noise pins it at
    // its zero model mean, so every residual vanishes
    Matrix X_test = simulate_linear(LinearSem{G, theta, 0.0}, 8, RngKey(66)).X;

    Matrix X = randm(6, d);
    ParticleMixture one = make_mixture({particle(G, theta)}, X, MixtureMode::kUniform,
                                       cfg, 0.3);
    double want = 8 * d * 0.5 * (kLog2Pi + std::log(0.01));
    CHECK(neg_log_likelihood(one, X_test, cfg) == doctest::Approx(want).epsilon(1e-12));

    ParticleMixture dup = make_mixture({particle(G, theta), particle(G, theta)}, X,
                                       MixtureMode::kUniform, cfg, 0.3);
    CHECK(neg_log_likelihood(dup, X_test, cfg) ==
          doctest::Approx(neg_log_likelihood(one, X_test, cfg)).epsilon(1e-12));
}

TEST_CASE("posterior expectation estimator against enumeration") {
    const int d = 3;
    Matrix X = randm(5, d, 0.7);
    ModelConfig mc;
    mc.sigma_obs = 1.0;
    JointContext ctx(X, mc, true);
    PermutationMatrix P = permutation_matrix(Ordering({1, 2, 0}));
    const double alpha = 0.9;

    std::mt19937_64 eng(31);
    std::normal_distribution<double> dist(0.0, 0.8);
    Matrix U(d - 1, d), V(d - 1, d);
    for (int i = 0; i < d - 1; ++i)
        for (int j = 0; j < d; ++j) {
            U(i, j) = dist(eng);
            V(i, j) = dist(eng);
        }
    std::vector<std::pair<LatentParticle, Theta>> samples;
    samples.emplace_back(LatentParticle(U, V), LinearParams{randm(d, d, 0.5)});

    GraphFunction ones = [](const DirectedGraph&, const Theta&) { return 1.0; };
    GraphFunction edges = [](const DirectedGraph& G, const Theta&) {
        return static_cast<double>(G.edge_count());
    };
    GraphFunction loglik = [&](const DirectedGraph& G, const Theta& theta) {
        return data_log_likelihood(X, G.as_real(), theta, mc);
    };

    // normalization is exact for constant functions
    CHECK(expectation_of(ones, samples, ctx, P, alpha, 200, RngKey(1)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(expectation_of(ones, samples, ctx, P, alpha, 0, RngKey(1), true) ==
          doctest::Approx(1.0).epsilon(1e-12));

    for (const GraphFunction* f : {&edges, &loglik}) {
        double oracle = expectation_of(*f, samples, ctx, P, alpha, 0, RngKey(0), true);
        const int reps = 12;
        std::vector<double> ests;
        for (int r = 0; r < reps; ++r)
            ests.push_back(
                expectation_of(*f, samples, ctx, P, alpha, 4000, RngKey(40 + r)));
        auto st = oracles::replicate_stats(ests);
        CHECK(std::abs(st.mean - oracle) <= 3.0 * st.se + 1e-10);
    }

    // estimates at different sample counts agree within combined error bars
    std::vector<double> small, large;
    for (int r = 0; r < 10; ++r) {
        small.push_back(expectation_of(edges, samples, ctx, P, alpha, 1000, RngKey(900 + r)));
        large.push_back(expectation_of(edges, samples, ctx, P, alpha, 10000, RngKey(990 + r)));
    }
    auto ss = oracles::replicate_stats(small);
    auto sl = oracles::replicate_stats(large);
    CHECK(std::abs(ss.mean - sl.mean) <= 3.0 * std::sqrt(ss.se * ss.se + sl.se * sl.se));
}
