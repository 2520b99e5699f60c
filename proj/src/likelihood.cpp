#include "permdag/likelihood.hpp"

#include <cmath>

namespace permdag {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double gauss_log_density(double x, double mean, double var) {
    double r = x - mean;
    return -0.5 * (kLog2Pi + std::log(var)) - r * r / (2.0 * var);
}

void check_shapes(const Matrix& G, int d, const char* where) {
    if (G.rows() != d || G.cols() != d)
        throw validation_error(std::string(where) + ": graph shape mismatch");
}

}  // namespace

void ModelConfig::validate() const {
    if (sigma_e <= 0.0 || sigma_p <= 0.0 || sigma_obs <= 0.0)
        throw validation_error("ModelConfig: scales must be > 0");
    for (int h : hidden)
        if (h < 1) throw validation_error("ModelConfig: hidden sizes must be >= 1");
}

std::vector<int> ThetaShape::layer_widths() const {
    std::vector<int> w;
    w.push_back(d);
    if (!linear)
        for (int h : hidden) w.push_back(h);
    w.push_back(linear ? d : 1);
    return w;
}

int ThetaShape::param_count() const {
    if (linear) return d * d;
    int per_node = 0, in = d;
    for (int h : hidden) {
        per_node += h * in + h;
        in = h;
    }
    per_node += in + 1;  // output layer
    return d * per_node;
}

NonlinearParams nonlinear_params_zeros(int d, const std::vector<int>& hidden) {
    NonlinearParams p;
    p.nodes.resize(d);
    std::vector<int> widths;
    widths.push_back(d);
    for (int h : hidden) widths.push_back(h);
    widths.push_back(1);
    for (int i = 0; i < d; ++i)
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            p.nodes[i].W.push_back(Matrix::Zero(widths[l + 1], widths[l]));
            p.nodes[i].b.push_back(Vector::Zero(widths[l + 1]));
        }
    return p;
}

Theta theta_zeros(const ThetaShape& shape) {
    if (shape.linear) return LinearParams{Matrix::Zero(shape.d, shape.d)};
    return nonlinear_params_zeros(shape.d, shape.hidden);
}

Vector theta_flatten(const Theta& theta) {
    if (const auto* lin = std::get_if<LinearParams>(&theta)) {
        Vector flat(lin->theta.size());
        int idx = 0;
        for (int i = 0; i < lin->theta.rows(); ++i)
            for (int j = 0; j < lin->theta.cols(); ++j) flat(idx++) = lin->theta(i, j);
        return flat;
    }
    const auto& nl = std::get<NonlinearParams>(theta);
    int total = 0;
    for (const auto& node : nl.nodes)
        for (std::size_t l = 0; l < node.W.size(); ++l)
            total += static_cast<int>(node.W[l].size() + node.b[l].size());
    Vector flat(total);
    int idx = 0;
    for (const auto& node : nl.nodes)
        for (std::size_t l = 0; l < node.W.size(); ++l) {
            for (int r = 0; r < node.W[l].rows(); ++r)
                for (int c = 0; c < node.W[l].cols(); ++c) flat(idx++) = node.W[l](r, c);
            for (int r = 0; r < node.b[l].size(); ++r) flat(idx++) = node.b[l](r);
        }
    return flat;
}

Theta theta_unflatten(const Vector& flat, const ThetaShape& shape) {
    if (flat.size() != shape.param_count())
        throw validation_error("theta_unflatten: size mismatch");
    if (shape.linear) {
        Matrix theta(shape.d, shape.d);
        int idx = 0;
        for (int i = 0; i < shape.d; ++i)
            for (int j = 0; j < shape.d; ++j) theta(i, j) = flat(idx++);
        return LinearParams{std::move(theta)};
    }
    NonlinearParams p = nonlinear_params_zeros(shape.d, shape.hidden);
    int idx = 0;
    for (auto& node : p.nodes)
        for (std::size_t l = 0; l < node.W.size(); ++l) {
            for (int r = 0; r < node.W[l].rows(); ++r)
                for (int c = 0; c < node.W[l].cols(); ++c) node.W[l](r, c) = flat(idx++);
            for (int r = 0; r < node.b[l].size(); ++r) node.b[l](r) = flat(idx++);
        }
    return p;
}

ThetaShape theta_shape_of(const Theta& theta, const std::vector<int>& hidden_hint) {
    if (const auto* lin = std::get_if<LinearParams>(&theta))
        return ThetaShape{true, static_cast<int>(lin->theta.rows()), {}};
    const auto& nl = std::get<NonlinearParams>(theta);
    ThetaShape s;
    s.linear = false;
    s.d = static_cast<int>(nl.nodes.size());
    s.hidden.clear();
    if (!nl.nodes.empty())
        for (std::size_t l = 0; l + 1 < nl.nodes[0].W.size(); ++l)
            s.hidden.push_back(static_cast<int>(nl.nodes[0].W[l].rows()));
    if (s.hidden.empty() && !hidden_hint.empty()) s.hidden = hidden_hint;
    return s;
}

double linear_log_param_prior(const Matrix& theta, const Matrix& G, const ModelConfig& cfg,
                              Matrix* grad_theta, Matrix* grad_g) {
    const int d = static_cast<int>(theta.rows());
    check_shapes(G, d, "linear_log_param_prior");
    const double var = cfg.sigma_e * cfg.sigma_e;
    double total = 0.0;
    if (grad_theta) *grad_theta = Matrix::Zero(d, d);
    if (grad_g) *grad_g = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            double lp = gauss_log_density(theta(i, j), cfg.mu_e, var);
            total += G(i, j) * lp;
            if (grad_theta) (*grad_theta)(i, j) = -G(i, j) * (theta(i, j) - cfg.mu_e) / var;
            if (grad_g) (*grad_g)(i, j) = lp;
        }
    return total;
}

namespace {

double linear_ll_from_gram(const Matrix& C, int n, const Matrix& G, const Matrix& theta,
                           const ModelConfig& cfg, Matrix* grad_theta, Matrix* grad_g) {
    const int d = static_cast<int>(theta.rows());
    const double var = cfg.sigma_obs * cfg.sigma_obs;
    Matrix W = G.cwiseProduct(theta);
    Matrix ImW = Matrix::Identity(d, d) - W;
    // ||X - X W||_F^2 = tr[(I-W)^T C (I-W)]
    Matrix CImW = C * ImW;
    double rss = (ImW.transpose() * CImW).trace();
    double ll = -0.5 * n * d * (kLog2Pi + std::log(var)) - rss / (2.0 * var);
    if (grad_theta || grad_g) {
        Matrix grad_w = CImW / var;  // d/dW of ll
        if (grad_theta) *grad_theta = G.cwiseProduct(grad_w);
        if (grad_g) *grad_g = theta.cwiseProduct(grad_w);
    }
    return ll;
}

}  // namespace

GramCache GramCache::from(const Matrix& X) {
    return GramCache{X.transpose() * X, static_cast<int>(X.rows())};
}

double linear_log_likelihood(const Matrix& X, const Matrix& G, const Matrix& theta,
                             const ModelConfig& cfg, Matrix* grad_theta, Matrix* grad_g) {
    const int d = static_cast<int>(X.cols());
    if (theta.rows() != d || theta.cols() != d)
        throw validation_error("linear_log_likelihood: theta shape mismatch");
    check_shapes(G, d, "linear_log_likelihood");
    const double var = cfg.sigma_obs * cfg.sigma_obs;
    const int n = static_cast<int>(X.rows());
    Matrix W = G.cwiseProduct(theta);
    Matrix R = X - X * W;  // residuals
    double ll = -0.5 * n * d * (kLog2Pi + std::log(var)) - R.squaredNorm() / (2.0 * var);
    if (grad_theta || grad_g) {
        Matrix grad_w = X.transpose() * R / var;
        if (grad_theta) *grad_theta = G.cwiseProduct(grad_w);
        if (grad_g) *grad_g = theta.cwiseProduct(grad_w);
    }
    return ll;
}

double linear_log_likelihood_gram(const GramCache& gram, const Matrix& G,
                                  const Matrix& theta, const ModelConfig& cfg,
                                  Matrix* grad_theta, Matrix* grad_g) {
    return linear_ll_from_gram(gram.C, gram.n, G, theta, cfg, grad_theta, grad_g);
}

double ffn_forward(const MlpNode& node, const Vector& x, const Vector& mask) {
    if (x.size() != mask.size() || x.size() != node.W.front().cols())
        throw validation_error("ffn_forward: shape mismatch");
    return mlp_forward(node, x.cwiseProduct(mask));
}

double nonlinear_log_param_prior(const NonlinearParams& params, const Matrix& G,
                                 const ModelConfig& cfg, NonlinearParams* grad_params,
                                 Matrix* grad_g) {
    const int d = static_cast<int>(params.nodes.size());
    check_shapes(G, d, "nonlinear_log_param_prior");
    const double var = cfg.sigma_p * cfg.sigma_p;
    const double log_norm = -0.5 * (kLog2Pi + std::log(var));
    double total = 0.0;
    if (grad_params) {
        grad_params->nodes.assign(d, MlpNode{});
        for (int i = 0; i < d; ++i)
            for (std::size_t l = 0; l < params.nodes[i].W.size(); ++l) {
                grad_params->nodes[i].W.push_back(
                    Matrix::Zero(params.nodes[i].W[l].rows(), params.nodes[i].W[l].cols()));
                grad_params->nodes[i].b.push_back(Vector::Zero(params.nodes[i].b[l].size()));
            }
    }
    if (grad_g) *grad_g = Matrix::Zero(d, d);

    for (int i = 0; i < d; ++i) {
        const MlpNode& node = params.nodes[i];
        for (std::size_t l = 0; l < node.W.size(); ++l) {
            const Matrix& W = node.W[l];
            const Vector& b = node.b[l];
            if (l == 0) {
                // first-layer input weights masked by the parent indicators of i
                for (int a = 0; a < W.rows(); ++a)
                    for (int bcol = 0; bcol < W.cols(); ++bcol) {
                        double mask = bcol == i ? 0.0 : G(bcol, i);
                        double lp = log_norm - W(a, bcol) * W(a, bcol) / (2.0 * var);
                        total += mask * lp;
                        if (grad_params)
                            grad_params->nodes[i].W[l](a, bcol) = -mask * W(a, bcol) / var;
                        if (grad_g && bcol != i) (*grad_g)(bcol, i) += lp;
                    }
            } else {
                total += W.size() * log_norm - W.squaredNorm() / (2.0 * var);
                if (grad_params) grad_params->nodes[i].W[l] = -W / var;
            }
            total += b.size() * log_norm - b.squaredNorm() / (2.0 * var);
            if (grad_params) grad_params->nodes[i].b[l] = -b / var;
        }
    }
    return total;
}

double nonlinear_log_likelihood(const Matrix& X, const Matrix& G,
                                const NonlinearParams& params, const ModelConfig& cfg,
                                NonlinearParams* grad_params, Matrix* grad_g) {
    const int d = static_cast<int>(X.cols());
    const int n = static_cast<int>(X.rows());
    check_shapes(G, d, "nonlinear_log_likelihood");
    if (static_cast<int>(params.nodes.size()) != d)
        throw validation_error("nonlinear_log_likelihood: parameter count mismatch");
    const double var = cfg.sigma_obs * cfg.sigma_obs;

    if (grad_params) {
        grad_params->nodes.assign(d, MlpNode{});
        for (int i = 0; i < d; ++i)
            for (std::size_t l = 0; l < params.nodes[i].W.size(); ++l) {
                grad_params->nodes[i].W.push_back(
                    Matrix::Zero(params.nodes[i].W[l].rows(), params.nodes[i].W[l].cols()));
                grad_params->nodes[i].b.push_back(Vector::Zero(params.nodes[i].b[l].size()));
            }
    }
    if (grad_g) *grad_g = Matrix::Zero(d, d);

    double total = 0.0;
    for (int i = 0; i < d; ++i) {
        const MlpNode& node = params.nodes[i];
        const std::size_t layers = node.W.size();
        Vector mask = G.col(i);
        mask(i) = 0.0;

        // forward, keeping activations for the reverse pass
        std::vector<Matrix> acts;   // acts[0] = masked input, acts[l] = post-layer l
        std::vector<Matrix> pres;   // pre-activation per layer
        acts.reserve(layers + 1);
        pres.reserve(layers);
        acts.push_back(X * mask.asDiagonal());
        for (std::size_t l = 0; l < layers; ++l) {
            Matrix pre = acts.back() * node.W[l].transpose();
            pre.rowwise() += node.b[l].transpose();
            pres.push_back(pre);
            acts.push_back(l + 1 < layers ? pre.cwiseMax(0.0) : pre);
        }
        Vector resid = X.col(i) - acts.back().col(0);
        total += -0.5 * n * (kLog2Pi + std::log(var)) - resid.squaredNorm() / (2.0 * var);
        if (!grad_params && !grad_g) continue;

        // reverse accumulation; d(ll)/d(output) = resid / var
        Matrix delta = resid / var;  // n x 1
        for (std::size_t l = layers; l-- > 0;) {
            if (grad_params) {
                grad_params->nodes[i].W[l] += delta.transpose() * acts[l];
                grad_params->nodes[i].b[l] += delta.colwise().sum().transpose();
            }
            Matrix dprev = delta * node.W[l];  // n x width(l)
            if (l > 0) {
                delta = dprev.cwiseProduct(
                    (pres[l - 1].array() > 0.0).cast<double>().matrix());
            } else if (grad_g) {
                // d(masked input)/d G(j,i) = x_j, so gradient is sum over rows
                Vector col_grad = dprev.cwiseProduct(X).colwise().sum().transpose();
                col_grad(i) = 0.0;
                grad_g->col(i) += col_grad;
            }
        }
    }
    return total;
}

double log_joint_theta_data(const Matrix& X, const Matrix& G, const Theta& theta,
                            const ModelConfig& cfg, Vector* grad_theta, Matrix* grad_g) {
    if (const auto* lin = std::get_if<LinearParams>(&theta)) {
        Matrix gp_t, gl_t, gp_g, gl_g;
        Matrix* pt = grad_theta ? &gp_t : nullptr;
        Matrix* lt = grad_theta ? &gl_t : nullptr;
        Matrix* pg = grad_g ? &gp_g : nullptr;
        Matrix* lg = grad_g ? &gl_g : nullptr;
        double v = linear_log_param_prior(lin->theta, G, cfg, pt, pg) +
                   linear_log_likelihood(X, G, lin->theta, cfg, lt, lg);
        if (grad_theta) *grad_theta = theta_flatten(LinearParams{gp_t + gl_t});
        if (grad_g) *grad_g = gp_g + gl_g;
        return v;
    }
    const auto& nl = std::get<NonlinearParams>(theta);
    NonlinearParams gp_t, gl_t;
    Matrix gp_g, gl_g;
    double v = nonlinear_log_param_prior(nl, G, cfg, grad_theta ? &gp_t : nullptr,
                                         grad_g ? &gp_g : nullptr) +
               nonlinear_log_likelihood(X, G, nl, cfg, grad_theta ? &gl_t : nullptr,
                                        grad_g ? &gl_g : nullptr);
    if (grad_theta) {
        Vector a = theta_flatten(Theta{gp_t});
        Vector b = theta_flatten(Theta{gl_t});
        *grad_theta = a + b;
    }
    if (grad_g) *grad_g = gp_g + gl_g;
    return v;
}

double data_log_likelihood(const Matrix& X, const Matrix& G, const Theta& theta,
                           const ModelConfig& cfg) {
    if (const auto* lin = std::get_if<LinearParams>(&theta))
        return linear_log_likelihood(X, G, lin->theta, cfg);
    return nonlinear_log_likelihood(X, G, std::get<NonlinearParams>(theta), cfg);
}

JointContext::JointContext(Matrix X, ModelConfig cfg, bool linear_model)
    : X_(std::move(X)), cfg_(std::move(cfg)), linear_(linear_model) {
    cfg_.validate();
    if (X_.rows() < 1 || X_.cols() < 2)
        throw validation_error("JointContext: need n >= 1 and d >= 2");
    if (linear_) gram_ = GramCache::from(X_);
}

double JointContext::log_joint(const Matrix& G, const Theta& theta, Vector* grad_theta,
                               Matrix* grad_g) const {
    if (linear_) {
        const auto& lin = std::get<LinearParams>(theta);
        Matrix gp_t, gl_t, gp_g, gl_g;
        double v = linear_log_param_prior(lin.theta, G, cfg_, grad_theta ? &gp_t : nullptr,
                                          grad_g ? &gp_g : nullptr) +
                   linear_log_likelihood_gram(gram_, G, lin.theta, cfg_,
                                              grad_theta ? &gl_t : nullptr,
                                              grad_g ? &gl_g : nullptr);
        if (grad_theta) *grad_theta = theta_flatten(LinearParams{gp_t + gl_t});
        if (grad_g) *grad_g = gp_g + gl_g;
        return v;
    }
    return log_joint_theta_data(X_, G, theta, cfg_, grad_theta, grad_g);
}

}  // namespace permdag
