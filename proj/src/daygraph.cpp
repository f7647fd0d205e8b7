#include "sentinel/daygraph.hpp"

#include <cmath>
#include <fstream>

#include "sentinel/binio.hpp"
#include "sentinel/errors.hpp"
#include "sentinel/rng.hpp"

namespace sentinel::graph {

namespace {

constexpr char params_magic[9] = "SNTLPRMS";
constexpr char embeds_magic[9] = "SNTLGEMB";
constexpr std::uint32_t file_version = 1;

double softplus(double x) {
    // log(1 + e^x) = max(x, 0) + log1p(e^{-|x|})
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
    if (x >= 0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

// y = W x, W row-major out x in.
void matvec(const std::vector<double>& w, const double* x, double* out, std::size_t out_dim,
            std::size_t in_dim) {
    for (std::size_t r = 0; r < out_dim; ++r) {
        double acc = 0.0;
        const double* row = w.data() + r * in_dim;
        for (std::size_t c = 0; c < in_dim; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

// out += W^T g.
void matvec_t_add(const std::vector<double>& w, const double* g, double* out,
                  std::size_t out_dim, std::size_t in_dim, double scale) {
    for (std::size_t r = 0; r < out_dim; ++r) {
        const double* row = w.data() + r * in_dim;
        double gr = g[r] * scale;
        for (std::size_t c = 0; c < in_dim; ++c) out[c] += row[c] * gr;
    }
}

// grad += g x^T (outer product accumulate).
void outer_add(std::vector<double>& grad, const double* g, const double* x, std::size_t out_dim,
               std::size_t in_dim) {
    for (std::size_t r = 0; r < out_dim; ++r) {
        double gr = g[r];
        double* row = grad.data() + r * in_dim;
        for (std::size_t c = 0; c < in_dim; ++c) row[c] += gr * x[c];
    }
}

// One message-passing layer over the whole graph.
void layer_forward(const DayGraph& g, const SageLayer& layer, const std::vector<double>& h_prev,
                   std::size_t prev_dim, std::vector<double>& a, std::vector<double>& z,
                   std::vector<double>& h) {
    const std::size_t n = g.n;
    const std::size_t out_dim = layer.out_dim;
    a.assign(n * prev_dim, 0.0);
    z.assign(n * out_dim, 0.0);
    h.assign(n * out_dim, 0.0);
    std::vector<double> tmp(out_dim);
    for (std::size_t v = 0; v < n; ++v) {
        std::size_t nb[2];
        std::size_t k = g.in_neighbors(v, nb);
        double* av = a.data() + v * prev_dim;
        if (k > 0) {
            for (std::size_t i = 0; i < k; ++i) {
                const double* hu = h_prev.data() + nb[i] * prev_dim;
                for (std::size_t c = 0; c < prev_dim; ++c) av[c] += hu[c];
            }
            double inv = 1.0 / static_cast<double>(k);
            for (std::size_t c = 0; c < prev_dim; ++c) av[c] *= inv;
        }
        double* zv = z.data() + v * out_dim;
        matvec(layer.w_self, h_prev.data() + v * prev_dim, zv, out_dim, prev_dim);
        matvec(layer.w_neigh, av, tmp.data(), out_dim, prev_dim);
        for (std::size_t r = 0; r < out_dim; ++r) zv[r] += tmp[r] + layer.bias[r];
        double* hv = h.data() + v * out_dim;
        for (std::size_t r = 0; r < out_dim; ++r) hv[r] = zv[r] > 0.0 ? zv[r] : 0.0;
    }
}

SageParams zeros_like(const SageParams& p) {
    SageParams z;
    z.l1 = SageLayer{p.l1.in_dim, p.l1.out_dim, std::vector<double>(p.l1.w_self.size(), 0.0),
                     std::vector<double>(p.l1.w_neigh.size(), 0.0),
                     std::vector<double>(p.l1.bias.size(), 0.0)};
    z.l2 = SageLayer{p.l2.in_dim, p.l2.out_dim, std::vector<double>(p.l2.w_self.size(), 0.0),
                     std::vector<double>(p.l2.w_neigh.size(), 0.0),
                     std::vector<double>(p.l2.bias.size(), 0.0)};
    z.head_w.assign(p.head_w.size(), 0.0);
    z.head_bias = 0.0;
    return z;
}

// Applies fn to each parameter tensor of a..c in lockstep; the fixed
// traversal order is part of the determinism contract.
template <typename F>
void for_each_tensor(SageParams& a, SageParams& b, SageParams& c, F&& fn) {
    fn(a.l1.w_self, b.l1.w_self, c.l1.w_self);
    fn(a.l1.w_neigh, b.l1.w_neigh, c.l1.w_neigh);
    fn(a.l1.bias, b.l1.bias, c.l1.bias);
    fn(a.l2.w_self, b.l2.w_self, c.l2.w_self);
    fn(a.l2.w_neigh, b.l2.w_neigh, c.l2.w_neigh);
    fn(a.l2.bias, b.l2.bias, c.l2.bias);
    fn(a.head_w, b.head_w, c.head_w);
    std::vector<double> ha{a.head_bias}, hb{b.head_bias}, hc{c.head_bias};
    fn(ha, hb, hc);
    a.head_bias = ha[0];
    b.head_bias = hb[0];
    c.head_bias = hc[0];
}

template <typename F>
void for_each_value(SageParams& p, F&& fn) {
    for (double& v : p.l1.w_self) fn(v);
    for (double& v : p.l1.w_neigh) fn(v);
    for (double& v : p.l1.bias) fn(v);
    for (double& v : p.l2.w_self) fn(v);
    for (double& v : p.l2.w_neigh) fn(v);
    for (double& v : p.l2.bias) fn(v);
    for (double& v : p.head_w) fn(v);
    fn(p.head_bias);
}

void check_dims(const DayGraph& g, const SageParams& p) {
    if (p.l1.in_dim != g.in_dim)
        throw DataError("sage_forward: feature dim " + std::to_string(g.in_dim) +
                        " != layer-1 input dim " + std::to_string(p.l1.in_dim));
    if (p.l2.in_dim != p.l1.out_dim)
        throw DataError("sage_forward: layer-2 input dim != layer-1 output dim");
    if (p.head_w.size() != p.l2.out_dim)
        throw DataError("sage_forward: head width != layer-2 output dim");
}

} // namespace

DayGraph make_day_graph(std::size_t n, std::size_t in_dim, std::vector<double> features) {
    if (features.size() != n * in_dim)
        throw DataError("make_day_graph: features size != n * in_dim");
    DayGraph g;
    g.n = n;
    g.in_dim = in_dim;
    g.features = std::move(features);
    for (std::size_t t = 0; t + 1 < n; ++t)
        g.edges.emplace_back(static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t + 1));
    for (std::size_t t = 0; t + 7 < n; ++t)
        g.edges.emplace_back(static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t + 7));
    return g;
}

DayGraph build_day_graph(const fuse::FeatureMatrix& X) {
    std::vector<double> features(X.rows.begin(), X.rows.end());
    return make_day_graph(X.n_days(), X.row_width(), std::move(features));
}

SageParams init_params(std::size_t in_dim, const TrainConfig& cfg) {
    Rng rng(cfg.seed);
    auto xavier = [&rng](std::vector<double>& w, std::size_t fan_in, std::size_t fan_out) {
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& v : w) v = rng.next_in(-limit, limit);
    };
    SageParams p;
    p.l1 = SageLayer{in_dim, cfg.hidden_dim, std::vector<double>(cfg.hidden_dim * in_dim),
                     std::vector<double>(cfg.hidden_dim * in_dim),
                     std::vector<double>(cfg.hidden_dim, 0.0)};
    p.l2 = SageLayer{cfg.hidden_dim, cfg.embed_dim,
                     std::vector<double>(cfg.embed_dim * cfg.hidden_dim),
                     std::vector<double>(cfg.embed_dim * cfg.hidden_dim),
                     std::vector<double>(cfg.embed_dim, 0.0)};
    p.head_w.resize(cfg.embed_dim);
    xavier(p.l1.w_self, in_dim, cfg.hidden_dim);
    xavier(p.l1.w_neigh, in_dim, cfg.hidden_dim);
    xavier(p.l2.w_self, cfg.hidden_dim, cfg.embed_dim);
    xavier(p.l2.w_neigh, cfg.hidden_dim, cfg.embed_dim);
    xavier(p.head_w, cfg.embed_dim, 1);
    p.head_bias = 0.0;
    return p;
}

SageActivations sage_forward(const DayGraph& g, const SageParams& p) {
    check_dims(g, p);
    SageActivations acts;
    layer_forward(g, p.l1, g.features, g.in_dim, acts.a1, acts.z1, acts.h1);
    layer_forward(g, p.l2, acts.h1, p.l1.out_dim, acts.a2, acts.z2, acts.h2);
    acts.logits.resize(g.n);
    const std::size_t ed = p.l2.out_dim;
    for (std::size_t v = 0; v < g.n; ++v) {
        double acc = p.head_bias;
        const double* hv = acts.h2.data() + v * ed;
        for (std::size_t c = 0; c < ed; ++c) acc += p.head_w[c] * hv[c];
        acts.logits[v] = acc;
    }
    return acts;
}

std::vector<double> node_embeddings(const DayGraph& g, const SageParams& p) {
    return sage_forward(g, p).h2;
}

double weighted_bce(const std::vector<double>& logits, const std::vector<std::uint8_t>& y,
                    const std::vector<std::uint8_t>& train_mask, double pos_weight) {
    if (logits.size() != y.size() || logits.size() != train_mask.size())
        throw DataError("weighted_bce: length mismatch");
    double sum = 0.0;
    std::size_t m = 0;
    for (std::size_t t = 0; t < logits.size(); ++t) {
        if (!train_mask[t]) continue;
        ++m;
        double z = logits[t];
        sum += y[t] ? pos_weight * softplus(-z) : softplus(z);
    }
    if (m == 0) throw DataError("weighted_bce: empty training mask");
    return sum / static_cast<double>(m);
}

SageParams sage_gradients(const DayGraph& g, const SageParams& p,
                          const std::vector<std::uint8_t>& y,
                          const std::vector<std::uint8_t>& train_mask, double pos_weight) {
    SageActivations acts = sage_forward(g, p);
    SageParams grads = zeros_like(p);

    const std::size_t n = g.n;
    const std::size_t hd = p.l1.out_dim;
    const std::size_t ed = p.l2.out_dim;

    std::size_t m = 0;
    for (std::size_t t = 0; t < n; ++t) m += train_mask[t] ? 1 : 0;
    if (m == 0) throw DataError("sage_gradients: empty training mask");
    const double inv_m = 1.0 / static_cast<double>(m);

    // d loss / d logit. softplus'(x) = sigmoid(x).
    std::vector<double> dlogit(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        if (!train_mask[t]) continue;
        double z = acts.logits[t];
        dlogit[t] = inv_m * (y[t] ? -pos_weight * sigmoid(-z) : sigmoid(z));
    }

    // Head and dL/dh2.
    std::vector<double> dh2(n * ed, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        double dv = dlogit[v];
        if (dv == 0.0) continue;
        const double* h2v = acts.h2.data() + v * ed;
        for (std::size_t c = 0; c < ed; ++c) {
            grads.head_w[c] += dv * h2v[c];
            dh2[v * ed + c] = dv * p.head_w[c];
        }
        grads.head_bias += dv;
    }

    // Layer 2 backward; scatters into dh1 through both the self path and the
    // mean-aggregated neighbor path.
    std::vector<double> dh1(n * hd, 0.0);
    std::vector<double> g2(ed);
    for (std::size_t v = 0; v < n; ++v) {
        const double* z2v = acts.z2.data() + v * ed;
        bool live = false;
        for (std::size_t r = 0; r < ed; ++r) {
            g2[r] = z2v[r] > 0.0 ? dh2[v * ed + r] : 0.0;
            live = live || g2[r] != 0.0;
        }
        if (!live) continue;
        outer_add(grads.l2.w_self, g2.data(), acts.h1.data() + v * hd, ed, hd);
        outer_add(grads.l2.w_neigh, g2.data(), acts.a2.data() + v * hd, ed, hd);
        for (std::size_t r = 0; r < ed; ++r) grads.l2.bias[r] += g2[r];
        matvec_t_add(p.l2.w_self, g2.data(), dh1.data() + v * hd, ed, hd, 1.0);
        std::size_t nb[2];
        std::size_t k = g.in_neighbors(v, nb);
        if (k > 0) {
            double inv_k = 1.0 / static_cast<double>(k);
            for (std::size_t i = 0; i < k; ++i)
                matvec_t_add(p.l2.w_neigh, g2.data(), dh1.data() + nb[i] * hd, ed, hd, inv_k);
        }
    }

    // Layer 1 backward; features are inputs, nothing propagates further.
    std::vector<double> g1(hd);
    for (std::size_t v = 0; v < n; ++v) {
        const double* z1v = acts.z1.data() + v * hd;
        bool live = false;
        for (std::size_t r = 0; r < hd; ++r) {
            g1[r] = z1v[r] > 0.0 ? dh1[v * hd + r] : 0.0;
            live = live || g1[r] != 0.0;
        }
        if (!live) continue;
        outer_add(grads.l1.w_self, g1.data(), g.feature_row(v), hd, g.in_dim);
        outer_add(grads.l1.w_neigh, g1.data(), acts.a1.data() + v * g.in_dim, hd, g.in_dim);
        for (std::size_t r = 0; r < hd; ++r) grads.l1.bias[r] += g1[r];
    }

    return grads;
}

SageParams numeric_gradients(const DayGraph& g, const SageParams& p,
                             const std::vector<std::uint8_t>& y,
                             const std::vector<std::uint8_t>& train_mask, double pos_weight,
                             double eps) {
    SageParams work = p;
    SageParams grads = zeros_like(p);
    auto loss_at = [&]() {
        return weighted_bce(sage_forward(g, work).logits, y, train_mask, pos_weight);
    };
    // Walk matching values of `work` and `grads` in the same fixed order.
    std::vector<double*> work_vals, grad_vals;
    for_each_value(work, [&](double& v) { work_vals.push_back(&v); });
    for_each_value(grads, [&](double& v) { grad_vals.push_back(&v); });
    for (std::size_t i = 0; i < work_vals.size(); ++i) {
        double saved = *work_vals[i];
        *work_vals[i] = saved + eps;
        double up = loss_at();
        *work_vals[i] = saved - eps;
        double down = loss_at();
        *work_vals[i] = saved;
        *grad_vals[i] = (up - down) / (2.0 * eps);
    }
    return grads;
}

double max_gradient_error(const SageParams& analytic, const SageParams& numeric) {
    SageParams a = analytic, n = numeric;
    double worst = 0.0;
    std::vector<double> av, nv;
    for_each_value(a, [&](double& v) { av.push_back(v); });
    for_each_value(n, [&](double& v) { nv.push_back(v); });
    if (av.size() != nv.size()) throw DataError("max_gradient_error: shape mismatch");
    for (std::size_t i = 0; i < av.size(); ++i) {
        double err = std::abs(av[i] - nv[i]) / std::max(1.0, std::abs(av[i]) + std::abs(nv[i]));
        worst = std::max(worst, err);
    }
    return worst;
}

double grad_check(const DayGraph& g, const SageParams& p, const std::vector<std::uint8_t>& y,
                  const std::vector<std::uint8_t>& train_mask, double pos_weight, double eps) {
    SageParams analytic = sage_gradients(g, p, y, train_mask, pos_weight);
    SageParams numeric = numeric_gradients(g, p, y, train_mask, pos_weight, eps);
    return max_gradient_error(analytic, numeric);
}

TrainResult train_sage(const DayGraph& g, const std::vector<std::uint8_t>& y,
                       const std::vector<std::uint8_t>& train_mask, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("train_sage: epochs must be >= 1");
    std::size_t pos = 0, neg = 0;
    for (std::size_t t = 0; t < train_mask.size(); ++t) {
        if (!train_mask[t]) continue;
        (y[t] ? pos : neg) += 1;
    }
    if (pos == 0 || neg == 0)
        throw DataError("train_sage: training mask needs at least one positive and one negative");
    const double pw = cfg.pos_weight.value_or(static_cast<double>(neg) / static_cast<double>(pos));

    SageParams params = init_params(g.in_dim, cfg);
    SageParams m = zeros_like(params);
    SageParams v = zeros_like(params);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    TrainResult result;
    result.epoch_losses.reserve(cfg.epochs + 1);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        SageActivations acts = sage_forward(g, params);
        double loss = weighted_bce(acts.logits, y, train_mask, pw);
        if (!std::isfinite(loss))
            throw DivergenceError("train_sage: non-finite loss at epoch " + std::to_string(epoch));
        result.epoch_losses.push_back(loss);

        SageParams grads = sage_gradients(g, params, y, train_mask, pw);
        bool finite = true;
        for_each_value(grads, [&](double& x) { finite = finite && std::isfinite(x); });
        if (!finite)
            throw DivergenceError("train_sage: non-finite gradient at epoch " +
                                  std::to_string(epoch));

        const double t = static_cast<double>(epoch + 1);
        const double bc1 = 1.0 - std::pow(beta1, t);
        const double bc2 = 1.0 - std::pow(beta2, t);
        for_each_tensor(params, m, grads, [&](std::vector<double>& pv, std::vector<double>& mv,
                                              std::vector<double>& gv) {
            for (std::size_t i = 0; i < pv.size(); ++i)
                mv[i] = beta1 * mv[i] + (1.0 - beta1) * gv[i];
        });
        for_each_tensor(params, v, grads, [&](std::vector<double>& pv, std::vector<double>& vv,
                                              std::vector<double>& gv) {
            for (std::size_t i = 0; i < pv.size(); ++i)
                vv[i] = beta2 * vv[i] + (1.0 - beta2) * gv[i] * gv[i];
        });
        for_each_tensor(params, m, v, [&](std::vector<double>& pv, std::vector<double>& mv,
                                          std::vector<double>& vv) {
            for (std::size_t i = 0; i < pv.size(); ++i) {
                double mhat = mv[i] / bc1;
                double vhat = vv[i] / bc2;
                pv[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
            }
        });
    }
    double final_loss = weighted_bce(sage_forward(g, params).logits, y, train_mask, pw);
    result.epoch_losses.push_back(final_loss);
    result.params = std::move(params);
    return result;
}

void params_write(const std::string& path, const SageParams& p, std::uint64_t seed,
                  std::uint32_t epochs) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("params_write: cannot open " + path);
    os.write(params_magic, 8);
    binio::write_u32(os, file_version);
    binio::write_u32(os, static_cast<std::uint32_t>(p.in_dim()));
    binio::write_u32(os, static_cast<std::uint32_t>(p.hidden_dim()));
    binio::write_u32(os, static_cast<std::uint32_t>(p.embed_dim()));
    binio::write_u64(os, seed);
    binio::write_u32(os, epochs);
    auto dump = [&os](const std::vector<double>& xs) {
        for (double x : xs) binio::write_f64(os, x);
    };
    dump(p.l1.w_self);
    dump(p.l1.w_neigh);
    dump(p.l1.bias);
    dump(p.l2.w_self);
    dump(p.l2.w_neigh);
    dump(p.l2.bias);
    dump(p.head_w);
    binio::write_f64(os, p.head_bias);
    if (!os) throw DataError("params_write: write failed for " + path);
}

SageParams params_read(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("params_read: cannot open " + path);
    binio::expect_magic(is, params_magic, "sage params");
    std::uint32_t version = binio::read_u32(is, "params version");
    if (version != file_version)
        throw DataError("params_read: unsupported version " + std::to_string(version));
    std::size_t in_dim = binio::read_u32(is, "in dim");
    std::size_t hidden = binio::read_u32(is, "hidden dim");
    std::size_t embed = binio::read_u32(is, "embed dim");
    binio::read_u64(is, "seed");
    binio::read_u32(is, "epochs");
    SageParams p;
    p.l1 = SageLayer{in_dim, hidden, std::vector<double>(hidden * in_dim),
                     std::vector<double>(hidden * in_dim), std::vector<double>(hidden)};
    p.l2 = SageLayer{hidden, embed, std::vector<double>(embed * hidden),
                     std::vector<double>(embed * hidden), std::vector<double>(embed)};
    p.head_w.resize(embed);
    auto load = [&is](std::vector<double>& xs, const char* what) {
        for (double& x : xs) x = binio::read_f64(is, what);
    };
    load(p.l1.w_self, "l1.w_self");
    load(p.l1.w_neigh, "l1.w_neigh");
    load(p.l1.bias, "l1.bias");
    load(p.l2.w_self, "l2.w_self");
    load(p.l2.w_neigh, "l2.w_neigh");
    load(p.l2.bias, "l2.bias");
    load(p.head_w, "head_w");
    p.head_bias = binio::read_f64(is, "head_bias");
    return p;
}

void embeddings_write(const std::string& path, const std::vector<double>& h, std::size_t n,
                      std::size_t dim) {
    if (h.size() != n * dim) throw DataError("embeddings_write: size mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("embeddings_write: cannot open " + path);
    os.write(embeds_magic, 8);
    binio::write_u32(os, file_version);
    binio::write_u32(os, static_cast<std::uint32_t>(n));
    binio::write_u32(os, static_cast<std::uint32_t>(dim));
    for (double x : h) binio::write_f64(os, x);
    if (!os) throw DataError("embeddings_write: write failed for " + path);
}

std::vector<double> embeddings_read(const std::string& path, std::size_t& n, std::size_t& dim) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("embeddings_read: cannot open " + path);
    binio::expect_magic(is, embeds_magic, "graph embeddings");
    std::uint32_t version = binio::read_u32(is, "embeds version");
    if (version != file_version)
        throw DataError("embeddings_read: unsupported version " + std::to_string(version));
    n = binio::read_u32(is, "n");
    dim = binio::read_u32(is, "dim");
    std::vector<double> h(n * dim);
    for (double& x : h) x = binio::read_f64(is, "embedding");
    return h;
}

} // namespace sentinel::graph
