#include "masguard/remediate.hpp"

#include <algorithm>

#include "masguard/detector.hpp"
#include "masguard/embedder.hpp"
#include "masguard/ugraph.hpp"

namespace masguard {

std::vector<Edge> prune_outgoing(const std::vector<Edge>& live_edges,
                                 const std::vector<AgentId>& detected) {
    std::vector<AgentId> sorted = detected;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Edge> kept;
    kept.reserve(live_edges.size());
    for (const Edge& e : live_edges)
        if (!std::binary_search(sorted.begin(), sorted.end(), e.src)) kept.push_back(e);
    return kept;
}

std::pair<std::vector<AgentId>, std::vector<Edge>> defense_step(
    const Transcript& transcript, int round, const Embedder& embedder,
    const DetectorParams& params, double threshold, const std::vector<Edge>& live_edges,
    const std::vector<AgentId>& already_detected) {
    UtteranceGraph graph = build_graph(transcript, round, embedder, params.fusion, false);
    std::vector<AgentId> detected = predict_attackers(graph, params, threshold);
    std::vector<AgentId> cumulative = already_detected;
    cumulative.insert(cumulative.end(), detected.begin(), detected.end());
    std::sort(cumulative.begin(), cumulative.end());
    cumulative.erase(std::unique(cumulative.begin(), cumulative.end()), cumulative.end());
    return {std::move(detected), prune_outgoing(live_edges, cumulative)};
}

DefenseHook make_detector_hook(const DetectorParams& params, const Embedder& embedder,
                               double threshold) {
    // params is copied; the embedder must outlive the hook.
    return [params, &embedder, threshold](const Transcript& transcript,
                                          int round) -> DefenseDecision {
        UtteranceGraph graph = build_graph(transcript, round, embedder, params.fusion, false);
        Prediction pred = forward(graph, params);
        DefenseDecision decision;
        decision.probabilities = pred.prob;
        for (std::size_t i = 0; i < pred.prob.size(); ++i)
            if (pred.prob[i] > threshold) decision.detected.push_back(static_cast<AgentId>(i));
        return decision;
    };
}

DefenseHook make_oracle_hook() {
    return [](const Transcript& transcript, int round) -> DefenseDecision {
        DefenseDecision decision;
        const LabelVector& lv = transcript.labels.at(static_cast<std::size_t>(round));
        for (std::size_t i = 0; i < lv.labels.size(); ++i)
            if (lv.labels[i]) decision.detected.push_back(static_cast<AgentId>(i));
        return decision;
    };
}

ContentFilterHook noop_content_filter() {
    return [](const Transcript&, int, const std::vector<AgentId>&) {};
}

}  // namespace masguard
