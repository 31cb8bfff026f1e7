#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace masguard {

// Agent indices are dense 0..n-1 within a system.
using AgentId = int;

struct Edge {
    AgentId src = 0;
    AgentId dst = 0;
    auto operator<=>(const Edge&) const = default;
};

enum class TopologyKind { chain, tree, star, random_graph, complete };

TopologyKind topology_kind_from_string(std::string_view s);
std::string to_string(TopologyKind k);

// Edge orientation for the preset shapes. `preset` picks the per-kind
// default: chain/tree point downstream, star is bidirectional. Random and
// complete graphs ignore this.
enum class Orientation { preset, downstream, upstream, bidirectional };

Orientation orientation_from_string(std::string_view s);
std::string to_string(Orientation o);

// Directed communication topology. Edge list is kept sorted and unique so
// that identical configurations serialize byte-identically.
struct CommunicationGraph {
    int n = 0;
    TopologyKind kind = TopologyKind::chain;
    double density = 1.0;
    std::uint64_t seed = 0;
    std::vector<Edge> edges;

    bool has_edge(AgentId src, AgentId dst) const;

    nlohmann::json to_json() const;
    static CommunicationGraph from_json(const nlohmann::json& j);
};

// Activation order for one round. Edges whose source lands after its
// destination cannot be satisfied within the round; their messages are
// consumed from the previous round instead.
struct ExecutionOrder {
    std::vector<AgentId> order;
    std::vector<Edge> deferred_edges;  // sorted
};

CommunicationGraph generate_topology(TopologyKind kind, int n, double density, std::uint64_t seed,
                                     Orientation orientation = Orientation::preset);

// Kahn's algorithm with smallest-index tie breaking; nodes stuck in or behind
// cycles are appended in ascending index order.
ExecutionOrder execution_order(int n, const std::vector<Edge>& live_edges);
ExecutionOrder execution_order(const CommunicationGraph& g);

std::vector<AgentId> in_neighbors(const CommunicationGraph& g, AgentId i);
std::vector<AgentId> in_neighbors(int n, const std::vector<Edge>& edges, AgentId i);

}  // namespace masguard
