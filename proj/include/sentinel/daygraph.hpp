#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sentinel/fuse.hpp"

namespace sentinel::graph {

// Temporal day graph: one node per day (index t = matrix row t), directed
// edges t -> t+1 and t -> t+7. Message passing aggregates from in-neighbors
// (past days), so information only flows forward in time.
struct DayGraph {
    std::size_t n = 0;
    std::size_t in_dim = 0;
    std::vector<double> features; // n x in_dim row-major
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;

    const double* feature_row(std::size_t v) const { return features.data() + v * in_dim; }

    // {v-1, v-7} clipped to the graph; at most two entries.
    inline std::size_t in_neighbors(std::size_t v, std::size_t out[2]) const {
        std::size_t k = 0;
        if (v >= 1) out[k++] = v - 1;
        if (v >= 7) out[k++] = v - 7;
        return k;
    }
};

DayGraph build_day_graph(const fuse::FeatureMatrix& X);
DayGraph make_day_graph(std::size_t n, std::size_t in_dim, std::vector<double> features);

struct SageLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> w_self;  // out x in, row-major
    std::vector<double> w_neigh; // out x in, row-major
    std::vector<double> bias;    // out
};

struct SageParams {
    SageLayer l1;
    SageLayer l2;
    std::vector<double> head_w; // l2.out_dim
    double head_bias = 0.0;

    std::size_t in_dim() const { return l1.in_dim; }
    std::size_t hidden_dim() const { return l1.out_dim; }
    std::size_t embed_dim() const { return l2.out_dim; }
};

struct TrainConfig {
    std::size_t hidden_dim = 64;
    std::size_t embed_dim = 32;
    double learning_rate = 1e-2;
    std::size_t epochs = 300;
    std::optional<double> pos_weight; // default: #neg / #pos over the mask
    std::uint64_t seed = 0;
};

// Xavier-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases, drawn in
// a fixed order from the seed.
SageParams init_params(std::size_t in_dim, const TrainConfig& cfg);

// Every intermediate the backward pass needs.
struct SageActivations {
    std::vector<double> a1, z1, h1; // n x hidden
    std::vector<double> a2, z2, h2; // n x embed; h2 is the node embedding H
    std::vector<double> logits;     // n
};

SageActivations sage_forward(const DayGraph& g, const SageParams& p);

// H from sage_forward: the penultimate, pre-head representation.
std::vector<double> node_embeddings(const DayGraph& g, const SageParams& p);

// mean over masked t of pos_weight*y*softplus(-z) + (1-y)*softplus(z),
// in the log-sum form that stays finite for large |z|.
double weighted_bce(const std::vector<double>& logits, const std::vector<std::uint8_t>& y,
                    const std::vector<std::uint8_t>& train_mask, double pos_weight);

// Exact reverse-mode gradients of weighted_bce(sage_forward(...)).
SageParams sage_gradients(const DayGraph& g, const SageParams& p,
                          const std::vector<std::uint8_t>& y,
                          const std::vector<std::uint8_t>& train_mask, double pos_weight);

// Central finite differences over every parameter.
SageParams numeric_gradients(const DayGraph& g, const SageParams& p,
                             const std::vector<std::uint8_t>& y,
                             const std::vector<std::uint8_t>& train_mask, double pos_weight,
                             double eps);

// Max over parameters of |a - n| / max(1, |a| + |n|); 0 when both sides
// vanish. Small enough instances only (every parameter is perturbed twice).
double max_gradient_error(const SageParams& analytic, const SageParams& numeric);

double grad_check(const DayGraph& g, const SageParams& p, const std::vector<std::uint8_t>& y,
                  const std::vector<std::uint8_t>& train_mask, double pos_weight, double eps);

struct TrainResult {
    SageParams params;
    std::vector<double> epoch_losses; // per-epoch pre-step loss + final loss
};

// Full-batch Adam (beta1 0.9, beta2 0.999, eps 1e-8) on the masked loss.
// Deterministic given cfg.seed. Throws DivergenceError naming the epoch on
// non-finite loss or gradients.
TrainResult train_sage(const DayGraph& g, const std::vector<std::uint8_t>& y,
                       const std::vector<std::uint8_t>& train_mask, const TrainConfig& cfg);

// ---- files ----------------------------------------------------------------

void params_write(const std::string& path, const SageParams& p, std::uint64_t seed,
                  std::uint32_t epochs);
SageParams params_read(const std::string& path);

void embeddings_write(const std::string& path, const std::vector<double>& h, std::size_t n,
                      std::size_t dim);
std::vector<double> embeddings_read(const std::string& path, std::size_t& n, std::size_t& dim);

} // namespace sentinel::graph
