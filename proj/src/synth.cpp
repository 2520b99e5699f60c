#include "permdag/synth.hpp"

#include <algorithm>
#include <cmath>

namespace permdag {

double er_edge_probability(int d, double expected_degree) {
    if (d < 2) throw validation_error("er_edge_probability: need d >= 2");
    double pairs = 0.5 * d * (d - 1);
    return std::clamp(expected_degree * d / pairs, 0.0, 1.0);
}

DirectedGraph sample_er_dag(int d, int expected_degree, RngKey rng) {
    if (expected_degree < 1) throw validation_error("sample_er_dag: expected_degree >= 1");
    const double q = er_edge_probability(d, expected_degree);

    auto order_eng = rng.child(rng_tag::kOrderingShuffle).engine();
    std::vector<int> vars(d);
    for (int i = 0; i < d; ++i) vars[i] = i;
    std::shuffle(vars.begin(), vars.end(), order_eng);

    auto edge_eng = rng.child(rng_tag::kSynthGraph).engine();
    DirectedGraph G(d);
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            if (draw_uniform(edge_eng) < q) G.set_edge(vars[a], vars[b], true);
    return G;
}

double er_log_prior_from_edge_sum(double edge_sum, int d, double q) {
    if (!(q > 0.0 && q < 1.0)) throw validation_error("er_log_prior: q must lie in (0,1)");
    double pairs = 0.5 * d * (d - 1);
    return edge_sum * std::log(q) + (pairs - edge_sum) * std::log1p(-q);
}

double er_log_prior(const Matrix& G, double q) {
    if (G.rows() != G.cols()) throw validation_error("er_log_prior: non-square input");
    return er_log_prior_from_edge_sum(G.sum(), static_cast<int>(G.rows()), q);
}

double er_log_prior(const DirectedGraph& G, double q) {
    return er_log_prior_from_edge_sum(G.edge_count(), G.node_count(), q);
}

LinearSem sample_linear_sem(const DirectedGraph& G, RngKey rng, double mu_e,
                            double sigma_e, double min_abs, double sigma_obs) {
    const int d = G.node_count();
    Matrix W = Matrix::Zero(d, d);
    auto eng = rng.child(rng_tag::kSynthParams).engine();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (G.has_edge(i, j)) {
                double theta = draw_normal(eng, mu_e, sigma_e);
                W(i, j) = theta + (theta >= 0.0 ? min_abs : -min_abs);
            }
    return LinearSem{G, std::move(W), sigma_obs};
}

namespace {

// Topological node order via Kahn; inputs are DAGs by construction.
std::vector<int> topo_order(const DirectedGraph& G) {
    const int d = G.node_count();
    std::vector<int> indeg(d, 0), order;
    order.reserve(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (G.has_edge(i, j)) ++indeg[j];
    std::vector<int> ready;
    for (int i = 0; i < d; ++i)
        if (indeg[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        int u = ready.back();
        ready.pop_back();
        order.push_back(u);
        for (int v = 0; v < d; ++v)
            if (G.has_edge(u, v) && --indeg[v] == 0) ready.push_back(v);
    }
    if (static_cast<int>(order.size()) != d)
        throw validation_error("simulate: graph contains a cycle");
    return order;
}

// Noise is drawn for all nodes up front in plain column order so the draw
// sequence does not depend on the topological sort.
Matrix draw_noise(int n, int d, double sigma, RngKey rng) {
    if (sigma <= 0.0) return Matrix::Zero(n, d);
    Matrix E(n, d);
    auto eng = rng.child(rng_tag::kSynthNoise).engine();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) E(i, j) = draw_normal(eng, 0.0, sigma);
    return E;
}

}  // namespace

Dataset simulate_linear(const LinearSem& sem, int n, RngKey rng) {
    if (n < 1) throw validation_error("simulate_linear: n >= 1");
    const int d = sem.G.node_count();
    Matrix X = draw_noise(n, d, sem.sigma_obs, rng);
    for (int j : topo_order(sem.G)) {
        for (int i = 0; i < d; ++i)
            if (sem.weights(i, j) != 0.0) X.col(j) += sem.weights(i, j) * X.col(i);
    }
    return Dataset{std::move(X), std::nullopt};
}

NonlinearSem sample_nonlinear_sem(const DirectedGraph& G, RngKey rng,
                                  double weight_sigma, double sigma_obs,
                                  const std::vector<int>& hidden) {
    const int d = G.node_count();
    std::vector<int> widths;
    widths.push_back(d);
    for (int h : hidden) widths.push_back(h);
    widths.push_back(1);

    NonlinearSem sem{G, {}, sigma_obs};
    sem.nodes.resize(d);
    auto eng = rng.child(rng_tag::kSynthParams).engine();
    for (int i = 0; i < d; ++i) {
        MlpNode& node = sem.nodes[i];
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            Matrix W(widths[l + 1], widths[l]);
            Vector b(widths[l + 1]);
            for (int r = 0; r < W.rows(); ++r)
                for (int c = 0; c < W.cols(); ++c) W(r, c) = draw_normal(eng, 0.0, weight_sigma);
            for (int r = 0; r < b.size(); ++r) b(r) = draw_normal(eng, 0.0, weight_sigma);
            node.W.push_back(std::move(W));
            node.b.push_back(std::move(b));
        }
    }
    return sem;
}

double mlp_forward(const MlpNode& node, const Vector& masked_input) {
    Vector h = masked_input;
    for (std::size_t l = 0; l < node.W.size(); ++l) {
        h = node.W[l] * h + node.b[l];
        if (l + 1 < node.W.size()) h = h.cwiseMax(0.0);
    }
    return h(0);
}

Dataset simulate_nonlinear(const NonlinearSem& sem, int n, RngKey rng) {
    if (n < 1) throw validation_error("simulate_nonlinear: n >= 1");
    const int d = sem.G.node_count();
    Matrix X = draw_noise(n, d, sem.sigma_obs, rng);
    for (int j : topo_order(sem.G)) {
        Vector mask = Vector::Zero(d);
        for (int i = 0; i < d; ++i)
            if (sem.G.has_edge(i, j)) mask(i) = 1.0;
        for (int r = 0; r < n; ++r) {
            Vector masked = X.row(r).transpose().cwiseProduct(mask);
            X(r, j) += mlp_forward(sem.nodes[j], masked);
        }
    }
    return Dataset{std::move(X), std::nullopt};
}

}  // namespace permdag
