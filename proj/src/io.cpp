#include "permdag/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace permdag {

using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path);
    return in;
}

}  // namespace

void write_graph(const std::string& path, const DirectedGraph& G) {
    auto out = open_out(path);
    out << "d=" << G.node_count() << "\n";
    for (int i = 0; i < G.node_count(); ++i)
        for (int j = 0; j < G.node_count(); ++j)
            if (G.has_edge(i, j)) out << i << " " << j << "\n";
}

DirectedGraph read_graph(const std::string& path) {
    auto in = open_in(path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("d=", 0) != 0)
        throw io_error("graph file missing d= header: " + path);
    int d = 0;
    try {
        d = std::stoi(header.substr(2));
    } catch (const std::exception&) {
        throw io_error("bad d= header in " + path);
    }
    DirectedGraph G(d);
    int i, j;
    while (in >> i >> j) {
        if (i < 0 || i >= d || j < 0 || j >= d)
            throw io_error("edge index out of range in " + path);
        G.set_edge(i, j, true);
    }
    return G;
}

void write_csv(const std::string& path, const Matrix& X) {
    auto out = open_out(path);
    for (int r = 0; r < X.rows(); ++r) {
        for (int c = 0; c < X.cols(); ++c) {
            if (c) out << ",";
            out << format_double(X(r, c));
        }
        out << "\n";
    }
}

Matrix read_csv(const std::string& path) {
    auto in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw io_error("bad CSV cell '" + cell + "' in " + path);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw io_error("ragged CSV rows in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw io_error("empty CSV: " + path);
    Matrix X(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) X(r, c) = rows[r][c];
    return X;
}

void write_ordering(const std::string& path, const Ordering& pi) {
    auto out = open_out(path);
    for (int i = 0; i < pi.size(); ++i) {
        if (i) out << " ";
        out << pi.position_of(i);
    }
    out << "\n";
}

Ordering read_ordering(const std::string& path) {
    auto in = open_in(path);
    std::vector<int> positions;
    int p;
    while (in >> p) positions.push_back(p);
    if (positions.empty()) throw io_error("empty ordering file: " + path);
    return Ordering(std::move(positions));
}

void write_ordering_trace(const std::string& path, const OrderingEstimate& est) {
    auto out = open_out(path);
    out << "step,candidate,cond_var,damped\n";
    for (const auto& e : est.trace)
        out << e.step << "," << e.candidate << "," << format_double(e.cond_var) << ","
            << (e.damped ? 1 : 0) << "\n";
}

namespace {

json edges_json(const DirectedGraph& G) {
    json edges = json::array();
    for (int i = 0; i < G.node_count(); ++i)
        for (int j = 0; j < G.node_count(); ++j)
            if (G.has_edge(i, j)) edges.push_back({i, j});
    return edges;
}

DirectedGraph graph_from_json(int d, const json& edges) {
    DirectedGraph G(d);
    for (const auto& e : edges) G.set_edge(e.at(0).get<int>(), e.at(1).get<int>(), true);
    return G;
}

}  // namespace

void write_linear_sem(const std::string& path, const LinearSem& sem) {
    const int d = sem.G.node_count();
    json j;
    j["model"] = "linear";
    j["d"] = d;
    j["sigma_obs"] = sem.sigma_obs;
    j["edges"] = edges_json(sem.G);
    json weights = json::array();
    for (int i = 0; i < d; ++i) {
        json row = json::array();
        for (int c = 0; c < d; ++c) row.push_back(sem.weights(i, c));
        weights.push_back(row);
    }
    j["weights"] = weights;
    open_out(path) << j.dump(2) << "\n";
}

LinearSem read_linear_sem(const std::string& path) {
    json j = json::parse(open_in(path));
    if (j.at("model") != "linear") throw io_error("not a linear SEM file: " + path);
    int d = j.at("d").get<int>();
    DirectedGraph G = graph_from_json(d, j.at("edges"));
    Matrix W(d, d);
    for (int i = 0; i < d; ++i)
        for (int c = 0; c < d; ++c) W(i, c) = j.at("weights").at(i).at(c).get<double>();
    return LinearSem{std::move(G), std::move(W), j.at("sigma_obs").get<double>()};
}

void write_nonlinear_sem(const std::string& path, const NonlinearSem& sem) {
    const int d = sem.G.node_count();
    json j;
    j["model"] = "nonlinear";
    j["d"] = d;
    j["sigma_obs"] = sem.sigma_obs;
    j["edges"] = edges_json(sem.G);
    json nodes = json::array();
    for (const MlpNode& node : sem.nodes) {
        json layers = json::array();
        for (std::size_t l = 0; l < node.W.size(); ++l) {
            json layer;
            layer["rows"] = node.W[l].rows();
            layer["cols"] = node.W[l].cols();
            json w = json::array(), b = json::array();
            for (int r = 0; r < node.W[l].rows(); ++r)
                for (int c = 0; c < node.W[l].cols(); ++c) w.push_back(node.W[l](r, c));
            for (int r = 0; r < node.b[l].size(); ++r) b.push_back(node.b[l](r));
            layer["W"] = w;
            layer["b"] = b;
            layers.push_back(layer);
        }
        nodes.push_back(layers);
    }
    j["nodes"] = nodes;
    open_out(path) << j.dump(2) << "\n";
}

NonlinearSem read_nonlinear_sem(const std::string& path) {
    json j = json::parse(open_in(path));
    if (j.at("model") != "nonlinear") throw io_error("not a nonlinear SEM file: " + path);
    int d = j.at("d").get<int>();
    NonlinearSem sem{graph_from_json(d, j.at("edges")), {}, j.at("sigma_obs").get<double>()};
    for (const auto& layers : j.at("nodes")) {
        MlpNode node;
        for (const auto& layer : layers) {
            int rows = layer.at("rows").get<int>();
            int cols = layer.at("cols").get<int>();
            Matrix W(rows, cols);
            Vector b(rows);
            const auto& wj = layer.at("W");
            int idx = 0;
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) W(r, c) = wj.at(idx++).get<double>();
            for (int r = 0; r < rows; ++r) b(r) = layer.at("b").at(r).get<double>();
            node.W.push_back(std::move(W));
            node.b.push_back(std::move(b));
        }
        sem.nodes.push_back(std::move(node));
    }
    return sem;
}

namespace {

void write_vector(std::ostream& out, const char* label, const Vector& v) {
    out << label;
    for (int i = 0; i < v.size(); ++i) out << " " << format_double(v(i));
    out << "\n";
}

Vector read_vector(std::istream& in, const std::string& expect, int size) {
    std::string label;
    in >> label;
    if (label != expect) throw io_error("checkpoint: expected '" + expect + "', got '" + label + "'");
    Vector v(size);
    for (int i = 0; i < size; ++i)
        if (!(in >> v(i))) throw io_error("checkpoint: truncated " + expect);
    return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const ParticleSet& state,
                      std::uint64_t seed) {
    auto out = open_out(path);
    out << "permdag-checkpoint 1\n";
    out << "model " << (state.shape.linear ? "linear" : "nonlinear") << "\n";
    out << "d " << state.d() << "\n";
    out << "k " << state.k << "\n";
    out << "hidden";
    for (int h : state.shape.hidden) out << " " << h;
    out << "\n";
    out << "particles " << state.size() << "\n";
    out << "step " << state.anneal.t << "\n";
    out << "alpha_rate " << format_double(state.anneal.alpha_rate) << "\n";
    out << "tau " << format_double(state.anneal.tau) << "\n";
    out << "seed " << seed << "\n";
    for (const Particle& p : state.particles) {
        write_vector(out, "Z", p.Z.flatten());
        write_vector(out, "theta", theta_flatten(p.theta));
        write_vector(out, "rms_z", p.rms_z);
        write_vector(out, "rms_theta", p.rms_theta);
    }
}

ParticleSet read_checkpoint(const std::string& path, std::uint64_t* seed_out) {
    auto in = open_in(path);
    std::string magic;
    int version;
    in >> magic >> version;
    if (magic != "permdag-checkpoint" || version != 1)
        throw io_error("not a permdag checkpoint: " + path);

    std::string key, model;
    int d = 0, k = 0, particles = 0, step = 0;
    double alpha_rate = 0.0, tau = 1.0;
    std::uint64_t seed = 0;
    std::vector<int> hidden;
    in >> key >> model;
    if (key != "model") throw io_error("checkpoint: missing model");
    in >> key >> d;
    in >> key >> k;
    in >> key;
    if (key != "hidden") throw io_error("checkpoint: missing hidden");
    {
        std::string rest;
        std::getline(in, rest);
        std::stringstream ss(rest);
        int h;
        while (ss >> h) hidden.push_back(h);
    }
    in >> key >> particles;
    in >> key >> step;
    in >> key >> alpha_rate;
    in >> key >> tau;
    in >> key >> seed;
    if (seed_out) *seed_out = seed;

    ParticleSet state;
    state.k = k;
    state.shape = ThetaShape{model == "linear", d, hidden};
    state.anneal = AnnealState{step, alpha_rate, tau};
    const int z_size = 2 * (d - 1) * k;
    const int t_size = state.shape.param_count();
    for (int m = 0; m < particles; ++m) {
        Vector z = read_vector(in, "Z", z_size);
        Vector t = read_vector(in, "theta", t_size);
        Vector rz = read_vector(in, "rms_z", z_size);
        Vector rt = read_vector(in, "rms_theta", t_size);
        state.particles.push_back(Particle{LatentParticle::unflatten(z, d, k),
                                           theta_unflatten(t, state.shape), std::move(rz),
                                           std::move(rt)});
    }
    return state;
}

void write_particle_graphs(const std::string& path,
                           const std::vector<std::pair<DirectedGraph, Theta>>& particles) {
    auto out = open_out(path);
    out << "particles " << particles.size() << "\n";
    for (const auto& [G, theta] : particles) {
        out << "d=" << G.node_count() << "\n";
        for (int i = 0; i < G.node_count(); ++i)
            for (int j = 0; j < G.node_count(); ++j)
                if (G.has_edge(i, j)) out << i << " " << j << "\n";
        out << "end\n";
    }
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
    auto out = open_out(path);
    out << "seed,method,d,n,steps,eshd,auroc,cyclicity,negll\n";
    for (const MetricsRow& r : rows)
        out << r.seed << "," << r.method << "," << r.d << "," << r.n << "," << r.steps
            << "," << format_double(r.eshd) << "," << format_double(r.auroc) << ","
            << format_double(r.cyclicity) << "," << format_double(r.negll) << "\n";
}

// ---- config ----

void ExperimentConfig::validate() const {
    if (model != "linear" && model != "nonlinear")
        throw validation_error("config: model must be linear or nonlinear");
    if (d < 2) throw validation_error("config: d >= 2");
    if (n < 1 || n_test < 0) throw validation_error("config: n >= 1, n_test >= 0");
    if (er_degree < 1) throw validation_error("config: er_degree >= 1");
    if (ordering != "eqvar" && ordering != "gt" && ordering.rfind("file:", 0) != 0)
        throw validation_error("config: ordering must be eqvar, gt, or file:PATH");
    if (steps < 0 || particles < 1) throw validation_error("config: steps >= 0, particles >= 1");
    if (q < 0.0 || q >= 1.0) throw validation_error("config: q in [0,1)");
    if (seeds_count < 1) throw validation_error("config: seeds_count >= 1");
    if (sigma_obs <= 0.0 || sigma_e <= 0.0 || sigma_p <= 0.0)
        throw validation_error("config: scales must be > 0");
    for (int h : hidden)
        if (h < 1) throw validation_error("config: hidden sizes >= 1");
}

ModelConfig ExperimentConfig::model_config() const {
    ModelConfig m;
    m.mu_e = mu_e;
    m.sigma_e = sigma_e;
    m.sigma_p = sigma_p;
    m.sigma_obs = sigma_obs;
    m.hidden = hidden;
    return m;
}

SvgdConfig ExperimentConfig::svgd(std::uint64_t run_seed) const {
    SvgdConfig s;
    s.particles = particles;
    s.steps = steps;
    s.latent_dim = latent_dim;
    s.alpha_rate = alpha_rate;
    s.eta = eta;
    s.q = q > 0.0 ? q : std::min(er_edge_probability(d, er_degree), 0.9);
    s.kernel = KernelConfig{gamma_z, gamma_theta};
    s.est = ScoreEstimatorConfig{n_graph_samples, n_gumbel_samples, n_prior_samples, 1.0};
    s.model = model_config();
    s.linear_model = model == "linear";
    s.seed = run_seed;
    s.checkpoint_interval = checkpoint_interval;
    return s;
}

namespace {

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

std::string join_ints(const std::vector<int>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(xs[i]);
    }
    return s;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw validation_error("config line " + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "model") cfg.model = val;
            else if (key == "d") cfg.d = std::stoi(val);
            else if (key == "n") cfg.n = std::stoi(val);
            else if (key == "n_test") cfg.n_test = std::stoi(val);
            else if (key == "er_degree") cfg.er_degree = std::stoi(val);
            else if (key == "ordering") cfg.ordering = val;
            else if (key == "steps") cfg.steps = std::stoi(val);
            else if (key == "particles") cfg.particles = std::stoi(val);
            else if (key == "alpha_rate") cfg.alpha_rate = std::stod(val);
            else if (key == "gamma_z") cfg.gamma_z = std::stod(val);
            else if (key == "gamma_theta") cfg.gamma_theta = std::stod(val);
            else if (key == "n_graph_samples") cfg.n_graph_samples = std::stoi(val);
            else if (key == "n_gumbel_samples") cfg.n_gumbel_samples = std::stoi(val);
            else if (key == "n_prior_samples") cfg.n_prior_samples = std::stoi(val);
            else if (key == "q") cfg.q = std::stod(val);
            else if (key == "sigma_obs") cfg.sigma_obs = std::stod(val);
            else if (key == "sigma_e") cfg.sigma_e = std::stod(val);
            else if (key == "mu_e") cfg.mu_e = std::stod(val);
            else if (key == "sigma_p") cfg.sigma_p = std::stod(val);
            else if (key == "hidden") cfg.hidden = parse_int_list(val);
            else if (key == "latent_dim") cfg.latent_dim = std::stoi(val);
            else if (key == "eta") cfg.eta = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "seeds_count") cfg.seeds_count = std::stoi(val);
            else if (key == "checkpoint_interval") cfg.checkpoint_interval = std::stoi(val);
            else if (key == "standardize") cfg.standardize = val == "true" || val == "1";
            else if (key == "out_dir") cfg.out_dir = val;
            else if (key == "data_csv") cfg.data_csv = val;
            else if (key == "test_csv") cfg.test_csv = val;
            else if (key == "graph_file") cfg.graph_file = val;
            else throw validation_error("config: unknown key '" + key + "'");
        } catch (const validation_error&) {
            throw;
        } catch (const std::exception&) {
            throw validation_error("config: bad value for '" + key + "': " + val);
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig read_config(const std::string& path) {
    auto in = open_in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "model = " << cfg.model << "\n";
    out << "d = " << cfg.d << "\n";
    out << "n = " << cfg.n << "\n";
    out << "n_test = " << cfg.n_test << "\n";
    out << "er_degree = " << cfg.er_degree << "\n";
    out << "ordering = " << cfg.ordering << "\n";
    out << "steps = " << cfg.steps << "\n";
    out << "particles = " << cfg.particles << "\n";
    out << "alpha_rate = " << format_double(cfg.alpha_rate) << "\n";
    out << "gamma_z = " << format_double(cfg.gamma_z) << "\n";
    out << "gamma_theta = " << format_double(cfg.gamma_theta) << "\n";
    out << "n_graph_samples = " << cfg.n_graph_samples << "\n";
    out << "n_gumbel_samples = " << cfg.n_gumbel_samples << "\n";
    out << "n_prior_samples = " << cfg.n_prior_samples << "\n";
    out << "q = " << format_double(cfg.q) << "\n";
    out << "sigma_obs = " << format_double(cfg.sigma_obs) << "\n";
    out << "sigma_e = " << format_double(cfg.sigma_e) << "\n";
    out << "mu_e = " << format_double(cfg.mu_e) << "\n";
    out << "sigma_p = " << format_double(cfg.sigma_p) << "\n";
    out << "hidden = " << join_ints(cfg.hidden) << "\n";
    out << "latent_dim = " << cfg.latent_dim << "\n";
    out << "eta = " << format_double(cfg.eta) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "seeds_count = " << cfg.seeds_count << "\n";
    out << "checkpoint_interval = " << cfg.checkpoint_interval << "\n";
    out << "standardize = " << (cfg.standardize ? "true" : "false") << "\n";
    out << "out_dir = " << cfg.out_dir << "\n";
    if (!cfg.data_csv.empty()) out << "data_csv = " << cfg.data_csv << "\n";
    if (!cfg.test_csv.empty()) out << "test_csv = " << cfg.test_csv << "\n";
    if (!cfg.graph_file.empty()) out << "graph_file = " << cfg.graph_file << "\n";
    return out.str();
}

void write_config(const std::string& path, const ExperimentConfig& cfg) {
    open_out(path) << serialize_config(cfg);
}

}  // namespace permdag
