#include "permdag/graph.hpp"

#include <algorithm>
#include <queue>

namespace permdag {

DirectedGraph::DirectedGraph(int d) {
    if (d < 1) throw validation_error("DirectedGraph: node count must be >= 1");
    adj_ = IntMatrix::Zero(d, d);
}

DirectedGraph::DirectedGraph(IntMatrix adj) : adj_(std::move(adj)) {
    if (adj_.rows() != adj_.cols())
        throw validation_error("DirectedGraph: adjacency must be square");
    for (int i = 0; i < adj_.rows(); ++i) {
        if (adj_(i, i) != 0)
            throw validation_error("DirectedGraph: nonzero diagonal entry");
        for (int j = 0; j < adj_.cols(); ++j)
            if (adj_(i, j) != 0 && adj_(i, j) != 1)
                throw validation_error("DirectedGraph: entries must be 0 or 1");
    }
}

void DirectedGraph::set_edge(int i, int j, bool present) {
    if (i == j) throw validation_error("DirectedGraph: no self loops");
    adj_(i, j) = present ? 1 : 0;
}

Ordering::Ordering(std::vector<int> positions) : positions_(std::move(positions)) {
    const int d = static_cast<int>(positions_.size());
    if (d < 1) throw validation_error("Ordering: empty");
    std::vector<bool> seen(d, false);
    for (int p : positions_) {
        if (p < 0 || p >= d)
            throw validation_error("Ordering: position out of range");
        if (seen[p]) throw validation_error("Ordering: duplicate position");
        seen[p] = true;
    }
}

Ordering Ordering::identity(int d) {
    std::vector<int> pos(d);
    for (int i = 0; i < d; ++i) pos[i] = i;
    return Ordering(std::move(pos));
}

std::vector<int> Ordering::sorted_variables() const {
    std::vector<int> vars(positions_.size());
    for (int i = 0; i < static_cast<int>(positions_.size()); ++i)
        vars[positions_[i]] = i;
    return vars;
}

PermutationMatrix::PermutationMatrix(std::vector<int> col_of_row)
    : col_of_row_(std::move(col_of_row)) {
    const int d = static_cast<int>(col_of_row_.size());
    dense_ = IntMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i) dense_(i, col_of_row_[i]) = 1;
}

PermutationMatrix PermutationMatrix::from_ordering(const Ordering& pi) {
    return PermutationMatrix(pi.positions());
}

PermutationMatrix PermutationMatrix::identity(int d) {
    return from_ordering(Ordering::identity(d));
}

PermutationMatrix permutation_matrix(const Ordering& pi) {
    return PermutationMatrix::from_ordering(pi);
}

DirectedGraph compose_adjacency(const PermutationMatrix& P, const IntMatrix& S) {
    if (S.rows() != S.cols() || S.rows() != P.size())
        throw validation_error("compose_adjacency: dimension mismatch");
    if (!is_strictly_upper(S))
        throw validation_error("compose_adjacency: S must be strictly upper triangular");
    IntMatrix G = P.dense() * S * P.dense().transpose();
    return DirectedGraph(std::move(G));
}

Matrix compose_adjacency_soft(const PermutationMatrix& P, const Matrix& S) {
    if (S.rows() != S.cols() || S.rows() != P.size())
        throw validation_error("compose_adjacency_soft: dimension mismatch");
    Matrix Pd = P.as_real();
    return Pd * S * Pd.transpose();
}

bool is_acyclic(const DirectedGraph& G) {
    // Kahn's algorithm
    const int d = G.node_count();
    std::vector<int> indeg(d, 0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (G.has_edge(i, j)) ++indeg[j];
    std::queue<int> ready;
    for (int i = 0; i < d; ++i)
        if (indeg[i] == 0) ready.push(i);
    int removed = 0;
    while (!ready.empty()) {
        int u = ready.front();
        ready.pop();
        ++removed;
        for (int v = 0; v < d; ++v)
            if (G.has_edge(u, v) && --indeg[v] == 0) ready.push(v);
    }
    return removed == d;
}

double cyclicity_score(const Matrix& G) {
    if (G.rows() != G.cols()) throw validation_error("cyclicity_score: non-square input");
    const int d = static_cast<int>(G.rows());
    if ((G.array() < 0.0).any())
        throw validation_error("cyclicity_score: entries must be nonnegative");
    Matrix base = Matrix::Identity(d, d) + G / static_cast<double>(d);
    Matrix power = Matrix::Identity(d, d);
    for (int k = 0; k < d; ++k) power = power * base;
    return power.trace() - static_cast<double>(d);
}

double cyclicity_score(const DirectedGraph& G) { return cyclicity_score(G.as_real()); }

int shd(const DirectedGraph& G, const DirectedGraph& Gstar) {
    if (G.node_count() != Gstar.node_count())
        throw validation_error("shd: dimension mismatch");
    const int d = G.node_count();
    int errors = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            bool same = G.has_edge(i, j) == Gstar.has_edge(i, j) &&
                        G.has_edge(j, i) == Gstar.has_edge(j, i);
            if (!same) ++errors;
        }
    return errors;
}

double auroc(const Matrix& edge_probs, const DirectedGraph& Gstar) {
    const int d = Gstar.node_count();
    if (edge_probs.rows() != d || edge_probs.cols() != d)
        throw validation_error("auroc: dimension mismatch");
    struct Scored {
        double score;
        bool positive;
    };
    std::vector<Scored> items;
    items.reserve(d * (d - 1));
    int n_pos = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            double p = edge_probs(i, j);
            if (p < -1e-12 || p > 1.0 + 1e-12)
                throw validation_error("auroc: probability outside [0,1]");
            bool pos = Gstar.has_edge(i, j);
            n_pos += pos ? 1 : 0;
            items.push_back({p, pos});
        }
    const int n_neg = static_cast<int>(items.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw validation_error("auroc: undefined, ground truth has no positives or no negatives");

    // Mann-Whitney with midranks
    std::sort(items.begin(), items.end(),
              [](const Scored& a, const Scored& b) { return a.score < b.score; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        while (j < items.size() && items[j].score == items[i].score) ++j;
        double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t t = i; t < j; ++t)
            if (items[t].positive) rank_sum_pos += midrank;
        i = j;
    }
    double u = rank_sum_pos - 0.5 * n_pos * (n_pos + 1.0);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

bool is_strictly_upper(const Matrix& S, double tol) {
    for (int i = 0; i < S.rows(); ++i)
        for (int j = 0; j <= i && j < S.cols(); ++j)
            if (std::abs(S(i, j)) > tol) return false;
    return true;
}

bool is_strictly_upper(const IntMatrix& S) {
    for (int i = 0; i < S.rows(); ++i)
        for (int j = 0; j <= i && j < S.cols(); ++j)
            if (S(i, j) != 0) return false;
    return true;
}

}  // namespace permdag
