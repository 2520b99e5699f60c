#include "permdag/ordering.hpp"

#include <cmath>
#include <limits>

namespace permdag {

namespace {

// Residual variance of variable j given the selected set, from the (1/n)
// covariance matrix. Solves the normal equations with LDLT; if the selected
// block is near-singular the solve is redone with ridge damping.
double conditional_variance(const Matrix& C, int j, const std::vector<int>& selected,
                            double ridge_lambda, bool* damped) {
    *damped = false;
    if (selected.empty()) return C(j, j);
    const int m = static_cast<int>(selected.size());
    Matrix Caa(m, m);
    Vector caj(m);
    for (int a = 0; a < m; ++a) {
        caj(a) = C(selected[a], j);
        for (int b = 0; b < m; ++b) Caa(a, b) = C(selected[a], selected[b]);
    }
    Eigen::LDLT<Matrix> ldlt(Caa);
    Vector d_diag = ldlt.vectorD();
    double dmax = d_diag.cwiseAbs().maxCoeff();
    double dmin = d_diag.cwiseAbs().minCoeff();
    bool near_singular = ldlt.info() != Eigen::Success || !(dmax > 0.0) ||
                         dmin <= 1e-12 * dmax || !d_diag.allFinite();
    Vector beta;
    if (near_singular) {
        *damped = true;
        beta = Eigen::LDLT<Matrix>(Caa + ridge_lambda * Matrix::Identity(m, m)).solve(caj);
    } else {
        beta = ldlt.solve(caj);
    }
    double resid = C(j, j) - caj.dot(beta);
    return std::max(resid, 0.0);
}

}  // namespace

OrderingEstimate eqvar_ordering(const Matrix& X) {
    const int n = static_cast<int>(X.rows());
    const int d = static_cast<int>(X.cols());
    if (n < 2) throw validation_error("eqvar_ordering: need at least 2 observations");

    Matrix Xc = X.rowwise() - X.colwise().mean();
    Matrix C = (Xc.transpose() * Xc) / static_cast<double>(n);
    for (int j = 0; j < d; ++j)
        if (C(j, j) <= 0.0)
            throw validation_error("eqvar_ordering: constant column " + std::to_string(j));

    const double ridge_lambda = 1e-6 * (Xc.transpose() * Xc).trace() / static_cast<double>(d);

    std::vector<int> positions(d, -1);
    std::vector<int> selected;
    std::vector<bool> done(d, false);
    OrderingEstimate est{Ordering::identity(d), {}};
    est.trace.clear();

    for (int step = 0; step < d; ++step) {
        int best = -1;
        double best_var = std::numeric_limits<double>::infinity();
        for (int j = 0; j < d; ++j) {
            if (done[j]) continue;
            bool damped = false;
            double v = conditional_variance(C, j, selected, ridge_lambda, &damped);
            est.trace.push_back({step, j, v, damped});
            if (v < best_var) {
                best_var = v;
                best = j;
            }
        }
        positions[best] = step;
        done[best] = true;
        selected.push_back(best);
    }
    est.pi = Ordering(std::move(positions));
    return est;
}

bool validate_ordering(const Ordering& pi, const DirectedGraph& Gstar) {
    if (pi.size() != Gstar.node_count())
        throw validation_error("validate_ordering: dimension mismatch");
    const int d = pi.size();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (Gstar.has_edge(i, j) && pi.position_of(i) >= pi.position_of(j)) return false;
    return true;
}

Ordering topological_ordering(const DirectedGraph& G) {
    const int d = G.node_count();
    std::vector<int> indeg(d, 0), positions(d, -1);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (G.has_edge(i, j)) ++indeg[j];
    std::vector<bool> placed(d, false);
    for (int pos = 0; pos < d; ++pos) {
        int pick = -1;
        for (int i = 0; i < d; ++i)
            if (!placed[i] && indeg[i] == 0) {
                pick = i;
                break;
            }
        if (pick < 0) throw validation_error("topological_ordering: graph has a cycle");
        placed[pick] = true;
        positions[pick] = pos;
        for (int v = 0; v < d; ++v)
            if (G.has_edge(pick, v)) --indeg[v];
    }
    return Ordering(std::move(positions));
}

}  // namespace permdag
