#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "masguard/linalg.hpp"
#include "masguard/topology.hpp"
#include "masguard/ugraph.hpp"

namespace masguard {

struct DetectorHyper {
    std::size_t dim = 64;
    std::size_t hidden = 64;
    int layers = 2;
    double threshold = 0.5;
    int epochs = 60;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double validation_fraction = 0.2;
    double positive_weight_cap = 10.0;  // per-graph positive class weight, capped

    nlohmann::json to_json() const;
    static DetectorHyper from_json(const nlohmann::json& j);
};

struct LayerParams {
    Matrix w_self;  // H x D at layer 1, H x H above
    Matrix w_nbr;   // same shape as w_self
    Matrix w_edge;  // H x D at every layer (edge features stay D-wide)
    Vec bias;       // H
};

// Every learnable tensor of the detector, including the edge-fusion affine
// map shared with the graph builder and the scoring head.
struct DetectorParams {
    std::size_t dim = 0;
    std::size_t hidden = 0;
    std::vector<LayerParams> layers;
    FusionParams fusion;
    Vec cls_weight;  // H
    double cls_bias = 0.0;

    int layer_count() const { return static_cast<int>(layers.size()); }

    struct TensorRef {
        std::string name;
        double* data;
        std::size_t size;
    };
    std::vector<TensorRef> named_tensors();

    // Zero-valued parameters with the given shape; also the gradient layout.
    static DetectorParams zeros(std::size_t dim, std::size_t hidden, int layers);
    // Glorot-uniform weights, zero biases, deterministic under seed.
    static DetectorParams glorot(std::size_t dim, std::size_t hidden, int layers,
                                 std::uint64_t seed);

    void save(const std::filesystem::path& path) const;
    static DetectorParams load(const std::filesystem::path& path);
};

struct Prediction {
    Vec prob;    // strictly inside (0,1)
    Vec logits;
};

Prediction forward(const UtteranceGraph& graph, const DetectorParams& params);

// Mean binary cross-entropy with probabilities clamped to [eps, 1-eps].
// pos_weight scales the positive-label terms; 1 recovers the plain objective.
double loss(const Prediction& pred, const std::vector<std::uint8_t>& labels,
            double pos_weight = 1.0);

// Exact reverse-mode gradients of loss() w.r.t. every parameter, including
// the fusion affine (gradients flow through fused edge features).
DetectorParams gradient(const UtteranceGraph& graph, const DetectorParams& params,
                        const std::vector<std::uint8_t>& labels, double pos_weight = 1.0);

std::vector<AgentId> predict_attackers(const UtteranceGraph& graph, const DetectorParams& params,
                                       double threshold = 0.5);

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_loss;
    std::vector<std::optional<double>> val_auc;
    std::vector<std::optional<double>> val_f1;
    int best_epoch = -1;
    std::optional<double> best_val_auc;
    std::vector<std::string> val_runs;
    nlohmann::json hyper;

    nlohmann::json to_json() const;
};

// Adam over one-graph minibatches with best-validation-AUC checkpointing.
// The corpus is split train/validation by run id (never by node).
std::pair<DetectorParams, TrainReport> train(const std::vector<UtteranceGraph>& corpus,
                                             const DetectorHyper& hyper, std::uint64_t seed);

}  // namespace masguard
