#pragma once

#include <Eigen/Dense>
#include <vector>

#include "permdag/errors.hpp"

namespace permdag {

using Matrix = Eigen::MatrixXd;
using IntMatrix = Eigen::MatrixXi;
using Vector = Eigen::VectorXd;

// Binary adjacency over d nodes, adj(i,j) = 1 meaning edge i -> j.
// Diagonal is zero and entries are exactly 0/1, enforced at construction.
class DirectedGraph {
public:
    explicit DirectedGraph(int d);
    explicit DirectedGraph(IntMatrix adj);

    int node_count() const { return static_cast<int>(adj_.rows()); }
    const IntMatrix& adj() const { return adj_; }
    bool has_edge(int i, int j) const { return adj_(i, j) != 0; }
    void set_edge(int i, int j, bool present);
    int edge_count() const { return adj_.sum(); }
    Matrix as_real() const { return adj_.cast<double>(); }

    bool operator==(const DirectedGraph& other) const { return adj_ == other.adj_; }

private:
    IntMatrix adj_;
};

// positions[i] is the position of variable i, 0-based. positions[i] <
// positions[j] means variable i precedes (is a non-descendant of) j.
class Ordering {
public:
    explicit Ordering(std::vector<int> positions);
    static Ordering identity(int d);

    int size() const { return static_cast<int>(positions_.size()); }
    int position_of(int variable) const { return positions_[variable]; }
    const std::vector<int>& positions() const { return positions_; }
    // variables listed from first position to last
    std::vector<int> sorted_variables() const;

private:
    std::vector<int> positions_;
};

class PermutationMatrix {
public:
    static PermutationMatrix from_ordering(const Ordering& pi);
    static PermutationMatrix identity(int d);

    int size() const { return static_cast<int>(col_of_row_.size()); }
    const IntMatrix& dense() const { return dense_; }
    Matrix as_real() const { return dense_.cast<double>(); }

private:
    explicit PermutationMatrix(std::vector<int> col_of_row);
    std::vector<int> col_of_row_;  // row i has its single 1 at this column
    IntMatrix dense_;
};

// P(i,j) = 1 iff variable i sits at position j, so that P*S*P^T relabels the
// strictly-upper-triangular canonical matrix into node indices: the composed
// graph always has pi as a topological ordering.
PermutationMatrix permutation_matrix(const Ordering& pi);

// G = P * S * P^T for a binary strictly upper triangular S. Acyclic by
// construction.
DirectedGraph compose_adjacency(const PermutationMatrix& P, const IntMatrix& S);
// Soft variant: S entries in [0,1].
Matrix compose_adjacency_soft(const PermutationMatrix& P, const Matrix& S);

bool is_acyclic(const DirectedGraph& G);

// h(G) = tr[(I + G/d)^d] - d, zero exactly on acyclic binary graphs.
// Entries must be nonnegative; accepts soft matrices too.
double cyclicity_score(const Matrix& G);
double cyclicity_score(const DirectedGraph& G);

// Structural Hamming distance; a pair with an edge in both graphs but
// opposite direction counts as 1.
int shd(const DirectedGraph& G, const DirectedGraph& Gstar);

// Area under the ROC curve of the off-diagonal entries of edge_probs against
// Gstar, midrank tie handling. Throws validation_error when Gstar has no
// positives or no negatives.
double auroc(const Matrix& edge_probs, const DirectedGraph& Gstar);

// true iff S is strictly upper triangular (entries at (i,j), j <= i, are 0)
bool is_strictly_upper(const Matrix& S, double tol = 0.0);
bool is_strictly_upper(const IntMatrix& S);

}  // namespace permdag
