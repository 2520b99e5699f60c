#pragma once

#include <variant>
#include <vector>

#include "permdag/graph.hpp"
#include "permdag/rng.hpp"
#include "permdag/synth.hpp"

namespace permdag {

struct ModelConfig {
    double mu_e = 0.0;      // linear edge-weight prior mean
    double sigma_e = 1.0;   // linear edge-weight prior std
    double sigma_p = 1.0;   // nonlinear parameter prior std
    double sigma_obs = 0.1; // observation noise std, fixed (not inferred)
    std::vector<int> hidden = {5};

    void validate() const;
};

// theta(j,i) is the coefficient of X_j in the equation for X_i. Non-edge
// entries are stored; prior and likelihood mask them through G.
struct LinearParams {
    Matrix theta;
};

struct NonlinearParams {
    std::vector<MlpNode> nodes;  // one MLP per variable, d inputs, scalar out
};

using Theta = std::variant<LinearParams, NonlinearParams>;

struct ThetaShape {
    bool linear = true;
    int d = 0;
    std::vector<int> hidden = {5};

    std::vector<int> layer_widths() const;  // d, hidden..., 1
    int param_count() const;
};

Theta theta_zeros(const ThetaShape& shape);
Vector theta_flatten(const Theta& theta);
Theta theta_unflatten(const Vector& flat, const ThetaShape& shape);
ThetaShape theta_shape_of(const Theta& theta, const std::vector<int>& hidden_hint = {});

// ---- linear Gaussian model ----

// sum_ij G_ij log N(theta_ij; mu_e, sigma_e^2); gradients optional.
double linear_log_param_prior(const Matrix& theta, const Matrix& G, const ModelConfig& cfg,
                              Matrix* grad_theta = nullptr, Matrix* grad_g = nullptr);

// sum over observations and nodes of log N(x_i; (G o Theta) mean, sigma_obs^2).
double linear_log_likelihood(const Matrix& X, const Matrix& G, const Matrix& theta,
                             const ModelConfig& cfg, Matrix* grad_theta = nullptr,
                             Matrix* grad_g = nullptr);

// Same value/gradients from the Gram matrix C = X^T X; O(d^3) per call
// independently of n.
struct GramCache {
    Matrix C;
    int n = 0;
    static GramCache from(const Matrix& X);
};
double linear_log_likelihood_gram(const GramCache& gram, const Matrix& G,
                                  const Matrix& theta, const ModelConfig& cfg,
                                  Matrix* grad_theta = nullptr, Matrix* grad_g = nullptr);

// ---- nonlinear Gaussian model ----

// Masked forward pass: (mask o x) through the layer stack.
double ffn_forward(const MlpNode& node, const Vector& x, const Vector& mask);

double nonlinear_log_param_prior(const NonlinearParams& params, const Matrix& G,
                                 const ModelConfig& cfg,
                                 NonlinearParams* grad_params = nullptr,
                                 Matrix* grad_g = nullptr);

double nonlinear_log_likelihood(const Matrix& X, const Matrix& G,
                                const NonlinearParams& params, const ModelConfig& cfg,
                                NonlinearParams* grad_params = nullptr,
                                Matrix* grad_g = nullptr);

// ---- joint ----

// log p(Theta, D | G) = log p(Theta|G) + log p(D|G,Theta), soft or hard G.
// Flattened-theta gradient and soft-G gradient are accumulated when requested.
double log_joint_theta_data(const Matrix& X, const Matrix& G, const Theta& theta,
                            const ModelConfig& cfg, Vector* grad_theta = nullptr,
                            Matrix* grad_g = nullptr);

// Data term only, used by held-out evaluation.
double data_log_likelihood(const Matrix& X, const Matrix& G, const Theta& theta,
                           const ModelConfig& cfg);

// Binds data + model choice for the inference loop; caches the Gram matrix so
// linear-model joint evaluations cost O(d^3) regardless of n.
class JointContext {
public:
    JointContext(Matrix X, ModelConfig cfg, bool linear_model);

    double log_joint(const Matrix& G, const Theta& theta, Vector* grad_theta = nullptr,
                     Matrix* grad_g = nullptr) const;

    int d() const { return static_cast<int>(X_.cols()); }
    int n() const { return static_cast<int>(X_.rows()); }
    bool linear() const { return linear_; }
    const ModelConfig& config() const { return cfg_; }
    const Matrix& data() const { return X_; }
    ThetaShape theta_shape() const { return ThetaShape{linear_, d(), cfg_.hidden}; }

private:
    Matrix X_;
    GramCache gram_;
    ModelConfig cfg_;
    bool linear_;
};

NonlinearParams nonlinear_params_zeros(int d, const std::vector<int>& hidden);

}  // namespace permdag
