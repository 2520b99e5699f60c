#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "permdag/latent.hpp"
#include "permdag/synth.hpp"

using namespace permdag;

namespace {

LatentParticle random_particle(int d, int k, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> dist(0.0, scale);
    Matrix U(d - 1, k), V(d - 1, k);
    for (int i = 0; i < d - 1; ++i)
        for (int j = 0; j < k; ++j) {
            U(i, j) = dist(eng);
            V(i, j) = dist(eng);
        }
    return LatentParticle(std::move(U), std::move(V));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("soft_canonical structure") {
    LatentParticle zero = LatentParticle::zeros(4, 4);
    Matrix S = soft_canonical(zero, 2.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (j > i)
                CHECK(S(i, j) == 0.5);
            else
                CHECK(S(i, j) == 0.0);
        }

    LatentParticle Z = random_particle(5, 5, 1);
    for (double alpha : {0.1, 1.0, 7.5}) {
        Matrix soft = soft_canonical(Z, alpha);
        CHECK(is_strictly_upper(soft));
        CHECK((soft.array() >= 0.0).all());
        CHECK((soft.array() <= 1.0).all());
    }

    // monotone in alpha toward {0,1} for nonzero scores
    Matrix scores = bilinear_scores(Z);
    Matrix s1 = soft_canonical(Z, 1.0), s2 = soft_canonical(Z, 3.0);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 5; ++j) {
            if (scores(i, j) > 0.0) CHECK(s2(i, j) > s1(i, j));
            if (scores(i, j) < 0.0) CHECK(s2(i, j) < s1(i, j));
        }
}

TEST_CASE("hard_canonical") {
    CHECK(hard_canonical(LatentParticle::zeros(3, 3)).sum() == 0);

    LatentParticle Z = random_particle(4, 4, 2);
    IntMatrix hard = hard_canonical(Z);
    Matrix soft = soft_canonical(Z, 5.0);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 4; ++j) {
            double dot = Z.U.row(i).dot(Z.V.row(j - 1));
            CHECK(hard(i, j) == (dot > 0.0 ? 1 : 0));
            if (dot != 0.0) CHECK(hard(i, j) == (soft(i, j) > 0.5 ? 1 : 0));
        }
    CHECK(is_strictly_upper(hard));
}

TEST_CASE("gumbel_soft_canonical") {
    LatentParticle Z = random_particle(4, 4, 3);
    const double alpha = 1.7;

    Matrix zeroL = Matrix::Zero(3, 3);
    CHECK(gumbel_soft_canonical(Z, zeroL, alpha, 1.0)
              .isApprox(soft_canonical(Z, alpha), 1e-12));

    // tau -> 0 gives the indicator of the pre-activation sign
    Matrix L = draw_logistic_noise(4, RngKey(4));
    Matrix cold = gumbel_soft_canonical(Z, L, alpha, 1e-8);
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 4; ++j) {
            double pre = L(i, j - 1) + alpha * Z.U.row(i).dot(Z.V.row(j - 1));
            CHECK(cold(i, j) == doctest::Approx(pre > 0.0 ? 1.0 : 0.0).epsilon(1e-6));
        }

    // logistic CDF identity: mean of hard-thresholded pre-activations equals
    // the soft probability
    const int draws = 100000;
    double a = 0.8;  // alpha * u.v for the single entry of a d=2 particle
    LatentParticle z2(Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, a));
    int hits = 0;
    for (int s = 0; s < draws; ++s) {
        Matrix noise = draw_logistic_noise(2, RngKey(5000 + s));
        if (noise(0, 0) + a > 0.0) ++hits;
    }
    double p = sigmoid(a);
    double se = std::sqrt(p * (1 - p) / draws);
    CHECK(std::abs(static_cast<double>(hits) / draws - p) < 3.0 * se);
    (void)z2;
}

TEST_CASE("edge_probabilities permutes the soft matrix") {
    LatentParticle Z = random_particle(3, 3, 6);
    const double alpha = 2.2;
    Matrix soft = soft_canonical(Z, alpha);

    CHECK(edge_probabilities(Z, PermutationMatrix::identity(3), alpha)
              .isApprox(soft, 1e-14));

    Ordering pi({1, 0, 2});
    Matrix probs = edge_probabilities(Z, permutation_matrix(pi), alpha);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(probs(i, j) ==
                  doctest::Approx(soft(pi.position_of(i), pi.position_of(j))).epsilon(1e-14));

    // relabeling preserves the multiset of entries
    std::vector<double> a, b;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            a.push_back(soft(i, j));
            b.push_back(probs(i, j));
        }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("sample_hard_graphs") {
    LatentParticle Z = random_particle(4, 4, 7);
    PermutationMatrix P = permutation_matrix(Ordering({2, 0, 3, 1}));

    // saturated probabilities: every draw equals the hard composition
    auto saturated = sample_hard_graphs(Z, P, 1e6, 20, RngKey(8));
    DirectedGraph want = compose_adjacency(P, hard_canonical(Z));
    for (const auto& G : saturated) CHECK(G == want);

    // acyclicity for every sample at a moderate temperature
    auto samples = sample_hard_graphs(Z, P, 1.0, 2000, RngKey(9));
    for (const auto& G : samples) {
        CHECK(is_acyclic(G));
        CHECK(cyclicity_score(G) == 0.0);
    }

    // empirical edge frequencies match edge_probabilities
    Matrix probs = edge_probabilities(Z, P, 1.0);
    Matrix freq = Matrix::Zero(4, 4);
    const int draws = 10000;
    auto many = sample_hard_graphs(Z, P, 1.0, draws, RngKey(10));
    for (const auto& G : many) freq += G.as_real();
    freq /= draws;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double se = std::sqrt(probs(i, j) * (1 - probs(i, j)) / draws);
            CHECK(std::abs(freq(i, j) - probs(i, j)) <= 3.0 * se + 1e-12);
        }
}

TEST_CASE("log_latent_prior value at zero latent") {
    // d=2: single Bernoulli at 1/2, so the expectation term is
    // 0.5 log q + 0.5 log(1-q); the Gaussian term sits at its maximum
    const double q = 0.3, sigma_z = 0.7;
    LatentParticle Z = LatentParticle::zeros(2, 2);
    auto res = log_latent_prior(Z, PermutationMatrix::identity(2), 1.0, 1.0, q, sigma_z,
                                200000, RngKey(11));
    double gauss = 4.0 * (-0.5 * std::log(2.0 * M_PI * sigma_z * sigma_z));
    double expect = 0.5 * std::log(q) + 0.5 * std::log1p(-q);
    // soft-sample noise on the expectation term: entries are sigmoid(L), i.e.
    // uniform on (0,1), so the draw std is |log odds|/sqrt(12 n)
    double se = std::abs(std::log(q) - std::log1p(-q)) / std::sqrt(12.0 * 200000.0);
    CHECK(std::abs(res.log_prior - (gauss + expect)) < 3.0 * se);
    // both gradient pieces vanish at Z = 0: the Gaussian score is -Z/sigma^2
    // and the chain-rule factors carry the opposite embedding block
    CHECK(res.grad_U.isZero());
    CHECK(res.grad_V.isZero());
}

TEST_CASE("log_latent_prior gradient components") {
    // Gaussian part: with q = 1/2 the expectation term is constant in Z, so
    // the gradient is exactly -Z / sigma_z^2
    LatentParticle Z = random_particle(3, 3, 12);
    const double sigma_z = 0.5;
    auto res = log_latent_prior(Z, PermutationMatrix::identity(3), 1.3, 1.0, 0.5, sigma_z,
                                64, RngKey(13));
    CHECK(res.grad_U.isApprox(-Z.U / (sigma_z * sigma_z), 1e-12));
    CHECK(res.grad_V.isApprox(-Z.V / (sigma_z * sigma_z), 1e-12));

    // full gradient vs central finite differences with common random numbers
    const double q = 0.2, alpha = 1.7;
    const int samples = 256;
    RngKey noise_key(14);
    auto value_at = [&](const Vector& flat) {
        LatentParticle z = LatentParticle::unflatten(flat, 3, 3);
        return log_latent_prior(z, PermutationMatrix::identity(3), alpha, 1.0, q, sigma_z,
                                samples, noise_key)
            .log_prior;
    };
    auto at = log_latent_prior(Z, PermutationMatrix::identity(3), alpha, 1.0, q, sigma_z,
                               samples, noise_key);
    Vector analytic = LatentParticle(at.grad_U, at.grad_V).flatten();
    Vector fd = oracles::fd_gradient(value_at, Z.flatten());
    CHECK(oracles::rel_error(analytic, fd) < 1e-3);
}
