#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace permdag {

inline double logsumexp(const std::vector<double>& xs) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - mx);
    return mx + std::log(s);
}

// exp(xs - logsumexp(xs)); all zeros stay zero when every input is -inf.
inline std::vector<double> softmax_from_logs(const std::vector<double>& xs) {
    std::vector<double> w(xs.size(), 0.0);
    double lse = logsumexp(xs);
    if (!std::isfinite(lse)) return w;
    for (std::size_t i = 0; i < xs.size(); ++i) w[i] = std::exp(xs[i] - lse);
    return w;
}

}  // namespace permdag
