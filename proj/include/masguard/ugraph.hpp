#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "masguard/embedder.hpp"
#include "masguard/engine.hpp"
#include "masguard/linalg.hpp"

namespace masguard {

// Learnable permutation-invariant fusion of an edge's interaction history:
// affine map applied to the history mean. Trained jointly with the detector.
struct FusionParams {
    Matrix weight;  // D x D
    Vec bias;       // D

    static FusionParams identity(std::size_t dim);
};

// fuse_edge sums the history in a canonical (sorted) order so the output is
// bit-identical under any permutation of the input.
Vec fuse_edge(const std::vector<Vec>& history, const FusionParams& fusion);

struct EdgeFeature {
    AgentId src = 0;
    AgentId dst = 0;
    Vec hist_mean;       // mean of delivered-message embeddings; empty if none delivered yet
    int hist_count = 0;  // messages delivered over this edge up to the round
    Vec fused;           // affine(hist_mean); zero vector while hist_count == 0
};

enum class NodeFeatureMode { concat, pooled };

NodeFeatureMode node_feature_mode_from_string(std::string_view s);
std::string to_string(NodeFeatureMode m);

struct UGraphOptions {
    NodeFeatureMode mode = NodeFeatureMode::concat;
    std::size_t char_budget = 4000;  // newest-first truncation of the concatenated history
};

// Per-round utterance graph: node features embed each agent's utterance
// history, edge features embed the messages delivered along each live edge.
struct UtteranceGraph {
    int round = 0;
    int n = 0;
    std::size_t dim = 0;
    Matrix node_features;  // n x dim
    std::vector<EdgeFeature> edges;
    std::vector<std::uint8_t> labels;  // empty when unlabeled

    // Corpus bookkeeping.
    std::string run_id;
    TopologyKind topology = TopologyKind::chain;
    AttackKind attack = AttackKind::none;

    // Line-delimited records: a header line, then one line per node row and
    // one per edge. Corpus files concatenate these blocks.
    std::string to_jsonl() const;
    static UtteranceGraph from_jsonl(std::string_view text);
};

// Parses a stream of graph blocks (e.g. a whole corpus file).
std::vector<UtteranceGraph> parse_graph_records(std::istream& in);

Matrix build_node_features(const Transcript& transcript, int round, const Embedder& embedder,
                           const UGraphOptions& options = {});

UtteranceGraph build_graph(const Transcript& transcript, int round, const Embedder& embedder,
                           const FusionParams& fusion, bool with_labels,
                           const UGraphOptions& options = {});

}  // namespace masguard
