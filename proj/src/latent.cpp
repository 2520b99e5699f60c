#include "permdag/latent.hpp"

#include <cmath>

namespace permdag {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

LatentParticle::LatentParticle(Matrix u, Matrix v) : U(std::move(u)), V(std::move(v)) {
    if (U.rows() != V.rows() || U.cols() != V.cols())
        throw validation_error("LatentParticle: U and V must share shape");
    if (U.rows() < 1) throw validation_error("LatentParticle: need d >= 2");
    if (U.cols() < U.rows())
        throw validation_error("LatentParticle: k must be >= d-1");
    if (!U.allFinite() || !V.allFinite())
        throw validation_error("LatentParticle: non-finite entries");
}

LatentParticle LatentParticle::zeros(int d, int k) {
    return LatentParticle(Matrix::Zero(d - 1, k), Matrix::Zero(d - 1, k));
}

Vector LatentParticle::flatten() const {
    const int m = static_cast<int>(U.size());
    Vector flat(2 * m);
    int idx = 0;
    for (int i = 0; i < U.rows(); ++i)
        for (int j = 0; j < U.cols(); ++j) flat(idx++) = U(i, j);
    for (int i = 0; i < V.rows(); ++i)
        for (int j = 0; j < V.cols(); ++j) flat(idx++) = V(i, j);
    return flat;
}

LatentParticle LatentParticle::unflatten(const Vector& flat, int d, int k) {
    const int m = (d - 1) * k;
    if (flat.size() != 2 * m) throw validation_error("LatentParticle::unflatten: size mismatch");
    Matrix U(d - 1, k), V(d - 1, k);
    int idx = 0;
    for (int i = 0; i < d - 1; ++i)
        for (int j = 0; j < k; ++j) U(i, j) = flat(idx++);
    for (int i = 0; i < d - 1; ++i)
        for (int j = 0; j < k; ++j) V(i, j) = flat(idx++);
    return LatentParticle(std::move(U), std::move(V));
}

Matrix bilinear_scores(const LatentParticle& Z) {
    const int d = Z.d();
    Matrix scores = Matrix::Zero(d, d);
    for (int i = 0; i < d - 1; ++i)
        for (int j = i + 1; j < d; ++j) scores(i, j) = Z.U.row(i).dot(Z.V.row(j - 1));
    return scores;
}

Matrix soft_canonical(const LatentParticle& Z, double alpha) {
    if (alpha < 0.0) throw validation_error("soft_canonical: alpha must be >= 0");
    const int d = Z.d();
    Matrix S = Matrix::Zero(d, d);
    for (int i = 0; i < d - 1; ++i)
        for (int j = i + 1; j < d; ++j)
            S(i, j) = sigmoid(alpha * Z.U.row(i).dot(Z.V.row(j - 1)));
    return S;
}

IntMatrix hard_canonical(const LatentParticle& Z) {
    const int d = Z.d();
    IntMatrix S = IntMatrix::Zero(d, d);
    for (int i = 0; i < d - 1; ++i)
        for (int j = i + 1; j < d; ++j)
            S(i, j) = Z.U.row(i).dot(Z.V.row(j - 1)) > 0.0 ? 1 : 0;
    return S;
}

Matrix gumbel_soft_canonical(const LatentParticle& Z, const Matrix& L, double alpha,
                             double tau) {
    if (tau <= 0.0) throw validation_error("gumbel_soft_canonical: tau must be > 0");
    const int d = Z.d();
    if (L.rows() != d - 1 || L.cols() != d - 1)
        throw validation_error("gumbel_soft_canonical: noise must be (d-1)x(d-1)");
    Matrix S = Matrix::Zero(d, d);
    for (int i = 0; i < d - 1; ++i)
        for (int j = i + 1; j < d; ++j)
            S(i, j) = sigmoid((L(i, j - 1) + alpha * Z.U.row(i).dot(Z.V.row(j - 1))) / tau);
    return S;
}

Matrix draw_logistic_noise(int d, RngKey rng) {
    Matrix L(d - 1, d - 1);
    auto eng = rng.engine();
    for (int i = 0; i < d - 1; ++i)
        for (int j = 0; j < d - 1; ++j) L(i, j) = draw_logistic(eng);
    return L;
}

Matrix edge_probabilities(const LatentParticle& Z, const PermutationMatrix& P, double alpha) {
    if (P.size() != Z.d()) throw validation_error("edge_probabilities: dimension mismatch");
    return compose_adjacency_soft(P, soft_canonical(Z, alpha));
}

std::vector<IntMatrix> sample_hard_canonicals(const LatentParticle& Z, double alpha,
                                              int count, RngKey rng) {
    if (count < 1) throw validation_error("sample_hard_canonicals: count >= 1");
    const int d = Z.d();
    Matrix probs = soft_canonical(Z, alpha);
    std::vector<IntMatrix> out;
    out.reserve(count);
    auto eng = rng.engine();
    for (int s = 0; s < count; ++s) {
        IntMatrix S = IntMatrix::Zero(d, d);
        for (int i = 0; i < d - 1; ++i)
            for (int j = i + 1; j < d; ++j)
                S(i, j) = draw_uniform(eng) < probs(i, j) ? 1 : 0;
        out.push_back(std::move(S));
    }
    return out;
}

std::vector<DirectedGraph> sample_hard_graphs(const LatentParticle& Z,
                                              const PermutationMatrix& P, double alpha,
                                              int count, RngKey rng) {
    std::vector<DirectedGraph> graphs;
    graphs.reserve(count);
    for (const IntMatrix& S : sample_hard_canonicals(Z, alpha, count, rng))
        graphs.push_back(compose_adjacency(P, S));
    return graphs;
}

LatentPriorResult log_latent_prior(const LatentParticle& Z, const PermutationMatrix& P,
                                   double alpha, double tau, double q, double sigma_z,
                                   int n_samples, RngKey rng) {
    if (sigma_z <= 0.0) throw validation_error("log_latent_prior: sigma_z must be > 0");
    if (!(q > 0.0 && q < 1.0)) throw validation_error("log_latent_prior: q must lie in (0,1)");
    if (n_samples < 1) throw validation_error("log_latent_prior: n_samples >= 1");
    if (P.size() != Z.d()) throw validation_error("log_latent_prior: dimension mismatch");

    const int d = Z.d();
    const double var = sigma_z * sigma_z;
    const double log_norm = -0.5 * std::log(2.0 * M_PI * var);
    double gauss = 2.0 * Z.U.size() * log_norm -
                   (Z.U.squaredNorm() + Z.V.squaredNorm()) / (2.0 * var);

    LatentPriorResult res;
    res.grad_U = -Z.U / var;
    res.grad_V = -Z.V / var;

    // E_{p(G|Z,P)}[log p_ER(G)] over Gumbel-soft draws. The prior is linear in
    // the edge count, so each draw contributes er_log_prior of the soft entry
    // sum; conjugation by P leaves that sum unchanged.
    const double pairs = 0.5 * d * (d - 1);
    const double log_odds = std::log(q) - std::log1p(-q);
    double expect = 0.0;
    for (int s = 0; s < n_samples; ++s) {
        Matrix L = draw_logistic_noise(d, rng.child(s));
        double edge_sum = 0.0;
        for (int i = 0; i < d - 1; ++i)
            for (int j = i + 1; j < d; ++j) {
                double pre = (L(i, j - 1) + alpha * Z.U.row(i).dot(Z.V.row(j - 1))) / tau;
                double sij = 1.0 / (1.0 + std::exp(-pre));
                edge_sum += sij;
                // d er_log_prior / d s_ij = log_odds; chain through sigmoid
                double dsij = sij * (1.0 - sij) / tau * alpha;
                double coeff = log_odds * dsij / n_samples;
                res.grad_U.row(i) += coeff * Z.V.row(j - 1);
                res.grad_V.row(j - 1) += coeff * Z.U.row(i);
            }
        expect += edge_sum * std::log(q) + (pairs - edge_sum) * std::log1p(-q);
    }
    res.log_prior = gauss + expect / n_samples;
    return res;
}

}  // namespace permdag
