#pragma once

#include <utility>
#include <vector>

#include "masguard/engine.hpp"
#include "masguard/topology.hpp"

namespace masguard {

struct DetectorParams;
class Embedder;

// Drops every edge whose source is detected; incoming edges of detected
// agents survive. Idempotent.
std::vector<Edge> prune_outgoing(const std::vector<Edge>& live_edges,
                                 const std::vector<AgentId>& detected);

// One round of the defense loop: build the utterance graph for round t,
// score it, and prune the live set for round t+1. `already_detected` carries
// the accumulated set; detections are cumulative across rounds.
std::pair<std::vector<AgentId>, std::vector<Edge>> defense_step(
    const Transcript& transcript, int round, const Embedder& embedder,
    const DetectorParams& params, double threshold, const std::vector<Edge>& live_edges,
    const std::vector<AgentId>& already_detected);

// Engine hook backed by the trained detector.
DefenseHook make_detector_hook(const DetectorParams& params, const Embedder& embedder,
                               double threshold = 0.5);

// Engine hook that reads the ground-truth labels instead of the GNN; used to
// exercise the containment property of the contagion model.
DefenseHook make_oracle_hook();

// Content-filtering / user-alert remediation is out of scope; this hook
// exists so a deployment can observe flagged agents without pruning.
using ContentFilterHook = std::function<void(const Transcript&, int round,
                                             const std::vector<AgentId>& detected)>;
ContentFilterHook noop_content_filter();

}  // namespace masguard
