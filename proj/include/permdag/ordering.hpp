#pragma once

#include <vector>

#include "permdag/graph.hpp"
#include "permdag/synth.hpp"

namespace permdag {

struct OrderingEstimate {
    Ordering pi;
    struct TraceEntry {
        int step;          // greedy step, 0-based
        int candidate;     // variable considered
        double cond_var;   // residual variance given the selected set
        bool damped;       // ridge damping was applied to the solve
    };
    std::vector<TraceEntry> trace;
};

// Greedy forward selection under the equal-error-variance assumption: at each
// step pick the unselected variable with the smallest residual variance after
// OLS on the selected set (marginal variance when the set is empty). Ties go
// to the lowest variable index. Columns are centered first; variances use the
// 1/n convention. Near-singular Gram systems are re-solved with ridge damping
// lambda = 1e-6 * tr(X^T X) / d instead of failing.
OrderingEstimate eqvar_ordering(const Matrix& X);
inline OrderingEstimate eqvar_ordering(const Dataset& data) { return eqvar_ordering(data.X); }

// true iff every edge i -> j of Gstar has pi[i] < pi[j].
bool validate_ordering(const Ordering& pi, const DirectedGraph& Gstar);

// A topological ordering of a DAG (positions form), lowest-index-first among
// simultaneously ready nodes.
Ordering topological_ordering(const DirectedGraph& G);

}  // namespace permdag
