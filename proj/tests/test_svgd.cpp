#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "permdag/eval.hpp"
#include "permdag/numeric.hpp"
#include "permdag/svgd.hpp"

using namespace permdag;

namespace {

std::mt19937_64 g_eng(7777);

Matrix randm(int r, int c, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Matrix M(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) M(i, j) = dist(g_eng);
    return M;
}

SvgdConfig tiny_config() {
    SvgdConfig cfg;
    cfg.particles = 2;
    cfg.steps = 3;
    cfg.est = ScoreEstimatorConfig{8, 8, 8, 1.0};
    cfg.seed = 5;
    return cfg;
}

// d=2 exact score pieces: one Bernoulli entry, two candidate graphs.
struct TwoNodeExact {
    double p;          // edge probability sigmoid(alpha * u.v)
    double log_b0;     // log joint with the empty graph
    double log_b1;     // log joint with the single-edge graph
    Vector grad_b0;    // flattened theta gradient per graph
    Vector grad_b1;
};

TwoNodeExact two_node_exact(const Particle& particle, const JointContext& ctx,
                            const PermutationMatrix& P, double alpha) {
    TwoNodeExact ex;
    double dot = particle.Z.U.row(0).dot(particle.Z.V.row(0));
    ex.p = 1.0 / (1.0 + std::exp(-alpha * dot));
    IntMatrix S0 = IntMatrix::Zero(2, 2);
    IntMatrix S1 = IntMatrix::Zero(2, 2);
    S1(0, 1) = 1;
    Matrix G0 = compose_adjacency(P, S0).as_real();
    Matrix G1 = compose_adjacency(P, S1).as_real();
    ex.log_b0 = ctx.log_joint(G0, particle.theta, &ex.grad_b0, nullptr);
    ex.log_b1 = ctx.log_joint(G1, particle.theta, &ex.grad_b1, nullptr);
    return ex;
}

}  // namespace

TEST_CASE("softmax weights sum to one") {
    std::vector<double> logs = {-1200.0, -1190.0, -1205.5, -1201.3};
    auto w = softmax_from_logs(logs);
    double sum = 0.0;
    for (double x : w) sum += x;
    CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("additive RBF kernel") {
    KernelConfig cfg{3.0, 11.0};
    Vector z = randm(4, 1).col(0), t = randm(6, 1).col(0);

    KernelResult self = kernel_eval(z, t, z, t, cfg);
    CHECK(self.value == doctest::Approx(2.0));
    CHECK(self.grad_z.isZero());
    CHECK(self.grad_theta.isZero());

    KernelConfig flat{1e18, 1e18};
    CHECK(kernel_eval(z, t, Vector(randm(4, 1).col(0)), Vector(randm(6, 1).col(0)), flat)
              .value == doctest::Approx(2.0));

    // ||dz||^2 = gamma_z and ||dt||^2 = gamma_theta: k = 2/e
    Vector z2 = z, t2 = t;
    z2(0) += std::sqrt(cfg.gamma_z);
    t2(0) += std::sqrt(cfg.gamma_theta);
    CHECK(kernel_eval(z, t, z2, t2, cfg).value ==
          doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));

    // gradients against finite differences
    Vector zb = randm(4, 1).col(0), tb = randm(6, 1).col(0);
    KernelResult k = kernel_eval(z, t, zb, tb, cfg);
    Vector fd_z = oracles::fd_gradient(
        [&](const Vector& v) { return kernel_eval(v, t, zb, tb, cfg).value; }, z);
    Vector fd_t = oracles::fd_gradient(
        [&](const Vector& v) { return kernel_eval(z, v, zb, tb, cfg).value; }, t);
    CHECK(oracles::rel_error(k.grad_z, fd_z) < 1e-6);
    CHECK(oracles::rel_error(k.grad_theta, fd_t) < 1e-6);
}

TEST_CASE("score_theta equals the analytic gradient when saturated") {
    const int d = 3;
    Matrix X = randm(12, d, 0.5);
    JointContext ctx(X, ModelConfig{}, true);
    SvgdConfig cfg = tiny_config();

    Particle p{LatentParticle(randm(d - 1, d, 1.0), randm(d - 1, d, 1.0)),
               LinearParams{randm(d, d, 0.5)}, Vector(), Vector()};
    PermutationMatrix P = permutation_matrix(Ordering({2, 0, 1}));

    const double alpha = 1e7;  // all edge probabilities are exactly 0 or 1
    Vector got = score_theta(p, ctx, P, alpha, cfg, RngKey(3));
    Matrix G = compose_adjacency(P, hard_canonical(p.Z)).as_real();
    Vector want;
    ctx.log_joint(G, p.theta, &want, nullptr);
    CHECK(oracles::rel_error(got, want) < 1e-12);
}

TEST_CASE("score_theta matches the two-graph enumeration oracle") {
    const int d = 2;
    Matrix X = randm(6, d, 0.6);
    ModelConfig mc;
    mc.sigma_obs = 1.0;
    JointContext ctx(X, mc, true);
    PermutationMatrix P = permutation_matrix(Ordering({1, 0}));
    Particle p{LatentParticle(Matrix::Constant(1, 2, 0.4), Matrix::Constant(1, 2, 0.3)),
               LinearParams{randm(d, d, 0.7)}, Vector(), Vector()};
    const double alpha = 1.2;

    TwoNodeExact ex = two_node_exact(p, ctx, P, alpha);
    std::vector<double> logw = {std::log1p(-ex.p) + ex.log_b0, std::log(ex.p) + ex.log_b1};
    auto w = softmax_from_logs(logw);
    Vector exact = w[0] * ex.grad_b0 + w[1] * ex.grad_b1;

    SvgdConfig cfg = tiny_config();
    cfg.est.n_graph_samples = 4000;
    const int reps = 12;
    std::vector<std::vector<double>> coords(exact.size());
    for (int r = 0; r < reps; ++r) {
        Vector est = score_theta(p, ctx, P, alpha, cfg, RngKey(100 + r));
        for (int i = 0; i < est.size(); ++i) coords[i].push_back(est(i));
    }
    for (int i = 0; i < exact.size(); ++i) {
        auto st = oracles::replicate_stats(coords[i]);
        CHECK(std::abs(st.mean - exact(i)) <= 3.0 * st.se + 1e-9);
    }
}

TEST_CASE("score_theta at the optimum reduces to the prior pull") {
    // noiseless self-generated data with theta at the true weights: the
    // likelihood gradient vanishes, leaving -(theta - mu_e)/sigma_e^2 on the
    // active edges
    const int d = 3;
    DirectedGraph G(d);
    G.set_edge(0, 1, true);
    G.set_edge(1, 2, true);
    Matrix weights = Matrix::Zero(d, d);
    weights(0, 1) = 1.2;
    weights(1, 2) = -0.8;
    Matrix X = simulate_linear(LinearSem{G, weights, 0.0}, 20, RngKey(61)).X;
    // root column is zero under zero noise; give node 0 nonzero support via a
    // direct draw so the regression is nondegenerate, then rebuild children
    X.col(0) = randm(20, 1).col(0);
    X.col(1) = 1.2 * X.col(0);
    X.col(2) = -0.8 * X.col(1);

    ModelConfig mc;
    mc.mu_e = 0.1;
    JointContext ctx(X, mc, true);
    SvgdConfig cfg = tiny_config();

    // saturate the latent state onto exactly the true canonical structure
    Matrix U(d - 1, d), V(d - 1, d);
    U.setZero();
    V.setZero();
    U(0, 0) = 1.0;  // row 0 pairs with V rows 0 (entry (0,1)) and 1 (entry (0,2))
    U(1, 1) = 1.0;  // row 1 pairs with V row 1 (entry (1,2))
    V(0, 0) = 1.0;   // S(0,1) on
    V(1, 1) = 1.0;   // S(1,2) on via U row 1
    V(1, 0) = -5.0;  // S(0,2) off
    Particle p{LatentParticle(U, V), LinearParams{weights}, Vector(), Vector()};
    REQUIRE(compose_adjacency(PermutationMatrix::identity(d), hard_canonical(p.Z)) == G);

    Vector got = score_theta(p, ctx, PermutationMatrix::identity(d), 1e7, cfg, RngKey(62));
    Matrix want = Matrix::Zero(d, d);
    want(0, 1) = -(weights(0, 1) - mc.mu_e) / (mc.sigma_e * mc.sigma_e);
    want(1, 2) = -(weights(1, 2) - mc.mu_e) / (mc.sigma_e * mc.sigma_e);
    Matrix got_m = Eigen::Map<Matrix>(got.data(), d, d).transpose();  // row-major flatten
    CHECK(got_m.isApprox(want, 1e-9));
}

TEST_CASE("score_z prior-only returns the latent prior gradient") {
    const int d = 3;
    Matrix X = randm(10, d);
    JointContext ctx(X, ModelConfig{}, true);
    SvgdConfig cfg = tiny_config();
    cfg.prior_only = true;
    cfg.q = 0.5;  // log odds 0: expectation term drops from the gradient
    Particle p{LatentParticle(randm(d - 1, d), randm(d - 1, d)),
               LinearParams{randm(d, d)}, Vector(), Vector()};

    Vector got = score_z(p, ctx, PermutationMatrix::identity(d), 1.5, cfg, RngKey(8));
    double sz = cfg.resolved_sigma_z(d);
    Vector want = LatentParticle(Matrix(-p.Z.U / (sz * sz)), Matrix(-p.Z.V / (sz * sz)))
                      .flatten();
    CHECK(oracles::rel_error(got, want) < 1e-12);
}

TEST_CASE("score_z matches the quadrature-plus-enumeration oracle at d=2") {
    const int d = 2;
    Matrix X = randm(5, d, 0.7);
    ModelConfig mc;
    mc.sigma_obs = 1.0;
    JointContext ctx(X, mc, true);
    PermutationMatrix P = permutation_matrix(Ordering({1, 0}));
    const double alpha = 1.4, tau = 1.0;
    Particle p{LatentParticle(Matrix::Constant(1, 2, 0.5), Matrix::Constant(1, 2, -0.2)),
               LinearParams{randm(d, d, 0.6)}, Vector(), Vector()};

    SvgdConfig cfg = tiny_config();
    cfg.q = 0.5;  // kills the prior expectation-term gradient exactly
    double sz = cfg.resolved_sigma_z(d);

    // exact ratio of the self-normalized relaxed estimator by quadrature over
    // the single logistic noise: E_L[p grad(log p)] / E_L[p], both pathwise
    const double dot = p.Z.U.row(0).dot(p.Z.V.row(0));
    auto relaxed_integral = [&](int coord) {
        // coord -1 integrates p alone (the denominator)
        return oracles::integrate_01(
            [&](double u) {
                double L = std::log(u) - std::log1p(-u);
                double s = 1.0 / (1.0 + std::exp(-(L + alpha * dot) / tau));
                Matrix S = Matrix::Zero(2, 2);
                S(0, 1) = s;
                Matrix G = compose_adjacency_soft(P, S);
                Matrix grad_g;
                double a = ctx.log_joint(G, p.theta, nullptr, &grad_g);
                if (coord < 0) return std::exp(a);
                Matrix Pd = P.as_real();
                double gs = (Pd.transpose() * grad_g * Pd)(0, 1);
                double dsdpre = s * (1.0 - s) / tau * alpha;
                // coord 0,1: dU entries; 2,3: dV entries
                double chain = coord < 2 ? p.Z.V(0, coord) : p.Z.U(0, coord - 2);
                return std::exp(a) * gs * dsdpre * chain;
            },
            256);
    };
    const double denom = relaxed_integral(-1);
    Vector prior = LatentParticle(Matrix(-p.Z.U / (sz * sz)), Matrix(-p.Z.V / (sz * sz)))
                       .flatten();
    Vector exact(4);
    for (int c = 0; c < 4; ++c) exact(c) = prior(c) + relaxed_integral(c) / denom;

    cfg.est.n_gumbel_samples = 3000;
    cfg.est.n_graph_samples = 3000;
    const int reps = 12;
    std::vector<std::vector<double>> coords(4);
    for (int r = 0; r < reps; ++r) {
        Vector est = score_z(p, ctx, P, alpha, cfg, RngKey(500 + r));
        for (int i = 0; i < 4; ++i) coords[i].push_back(est(i));
    }
    for (int i = 0; i < 4; ++i) {
        auto st = oracles::replicate_stats(coords[i]);
        CHECK(std::abs(st.mean - exact(i)) <= 3.0 * st.se + 1e-9);
    }
}

TEST_CASE("score_z is invariant to relabeling through P") {
    const int d = 3;
    Matrix X = randm(9, d, 0.8);
    ModelConfig mc;
    mc.sigma_obs = 0.5;
    Ordering pi({2, 0, 1});
    PermutationMatrix P = permutation_matrix(pi);
    Matrix Pd = P.as_real();

    Particle p{LatentParticle(randm(d - 1, d), randm(d - 1, d)),
               LinearParams{randm(d, d, 0.5)}, Vector(), Vector()};
    SvgdConfig cfg = tiny_config();
    cfg.est = ScoreEstimatorConfig{64, 64, 64, 1.0};

    JointContext ctx_a(X, mc, true);
    Vector score_a = score_z(p, ctx_a, P, 1.1, cfg, RngKey(77));

    // identity ordering on data and parameters relabeled into canonical order
    JointContext ctx_b(X * Pd, mc, true);
    Particle p_b = p;
    p_b.theta = LinearParams{Pd.transpose() * std::get<LinearParams>(p.theta).theta * Pd};
    Vector score_b =
        score_z(p_b, ctx_b, PermutationMatrix::identity(d), 1.1, cfg, RngKey(77));

    CHECK(oracles::rel_error(score_a, score_b) < 1e-9);
}

TEST_CASE("single-particle phi reduces to twice the score") {
    const int d = 3;
    Matrix X = randm(8, d, 0.5);
    JointContext ctx(X, ModelConfig{}, true);
    SvgdConfig cfg = tiny_config();
    cfg.particles = 1;

    ParticleSet state = init_particles(cfg, d);
    PermutationMatrix P = PermutationMatrix::identity(d);
    RngKey step_key = RngKey(cfg.seed).child(0x57e9).child(0);
    StepScores scores = compute_scores(state, ctx, P, cfg, step_key);
    std::vector<Vector> phi_z, phi_theta;
    compute_phis(state, scores, cfg.kernel, &phi_z, &phi_theta);
    CHECK(phi_z[0].isApprox(2.0 * scores.z[0], 1e-12));
    CHECK(phi_theta[0].isApprox(2.0 * scores.theta[0], 1e-12));
}

TEST_CASE("zero scores leave pure repulsion") {
    const int d = 3;
    SvgdConfig cfg = tiny_config();
    cfg.particles = 2;
    ParticleSet state = init_particles(cfg, d);

    StepScores zero;
    zero.z.assign(2, Vector::Zero(state.particles[0].Z.flatten().size()));
    zero.theta.assign(2, Vector::Zero(theta_flatten(state.particles[0].theta).size()));
    std::vector<Vector> phi_z, phi_theta;
    compute_phis(state, zero, cfg.kernel, &phi_z, &phi_theta);

    Vector z0 = state.particles[0].Z.flatten();
    Vector z1 = state.particles[1].Z.flatten();
    CHECK(phi_z[0].dot(z0 - z1) > 0.0);
    CHECK(phi_z[1].dot(z1 - z0) > 0.0);

    // RMSProp from fresh state moves each coordinate along sign(phi), so the
    // pairwise distance cannot shrink
    auto apply = [&](Vector x, const Vector& phi) {
        Vector v = 0.1 * phi.cwiseProduct(phi);
        return Vector(x + cfg.eta * (phi.array() / (v.array().sqrt() + cfg.rms_eps)).matrix());
    };
    Vector z0n = apply(z0, phi_z[0]), z1n = apply(z1, phi_z[1]);
    CHECK((z0n - z1n).squaredNorm() >= (z0 - z1).squaredNorm());
}

TEST_CASE("svgd_step is deterministic") {
    const int d = 3;
    Matrix X = randm(20, d, 0.4);
    Dataset data{X, std::nullopt};
    SvgdConfig cfg = tiny_config();
    cfg.steps = 3;
    PermutationMatrix P = PermutationMatrix::identity(d);

    InferenceResult a = run_inference(data, P, cfg);
    InferenceResult b = run_inference(data, P, cfg);
    REQUIRE(a.state.size() == b.state.size());
    for (int m = 0; m < a.state.size(); ++m) {
        CHECK(a.state.particles[m].Z.flatten() == b.state.particles[m].Z.flatten());
        CHECK(theta_flatten(a.state.particles[m].theta) ==
              theta_flatten(b.state.particles[m].theta));
    }
}

TEST_CASE("run_inference outputs acyclic particle graphs of the right shape") {
    const int d = 4;
    Dataset data{randm(15, d, 0.6), std::nullopt};
    SvgdConfig cfg = tiny_config();
    cfg.particles = 5;
    cfg.steps = 4;
    PermutationMatrix P = permutation_matrix(Ordering({3, 1, 0, 2}));

    InferenceResult res = run_inference(data, P, cfg);
    CHECK(static_cast<int>(res.particles.size()) == 5);
    for (const auto& [G, theta] : res.particles) {
        CHECK(G.node_count() == d);
        CHECK(is_acyclic(G));
        CHECK(cyclicity_score(G) == 0.0);
        CHECK(std::get<LinearParams>(theta).theta.rows() == d);
    }
    CHECK(res.state.anneal.t == 4);
}

TEST_CASE("prior-only particles drift toward the latent prior mean") {
    const int d = 3;
    Dataset data{randm(10, d), std::nullopt};
    SvgdConfig cfg = tiny_config();
    cfg.particles = 6;
    cfg.steps = 400;
    cfg.prior_only = true;
    cfg.q = 0.5;
    cfg.eta = 0.01;

    ParticleSet state = init_particles(cfg, d);
    for (Particle& p : state.particles) {
        p.Z.U.array() += 1.0;
        p.Z.V.array() += 1.0;
    }
    auto mean_entry = [&](const ParticleSet& s) {
        double total = 0.0;
        int count = 0;
        for (const Particle& p : s.particles) {
            total += p.Z.U.sum() + p.Z.V.sum();
            count += static_cast<int>(p.Z.U.size() + p.Z.V.size());
        }
        return total / count;
    };
    double before = mean_entry(state);
    InferenceResult res =
        resume_inference(std::move(state), data, PermutationMatrix::identity(d), cfg);
    double after = mean_entry(res.state);
    CHECK(std::abs(before - 1.0) < 0.2);  // offset init
    CHECK(std::abs(after) < 0.3);
}

TEST_CASE("degenerate weights raise after retry") {
    const int d = 2;
    Matrix X = Matrix::Constant(4, d, 1e200);  // residuals overflow to -inf
    ModelConfig mc;
    JointContext ctx(X, mc, true);
    SvgdConfig cfg = tiny_config();
    Particle p{LatentParticle(randm(d - 1, d), randm(d - 1, d)),
               LinearParams{randm(d, d)}, Vector(), Vector()};
    CHECK_THROWS_AS(
        score_theta(p, ctx, PermutationMatrix::identity(d), 1.0, cfg, RngKey(1)),
        degeneracy_error);
}
