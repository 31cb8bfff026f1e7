#include "masguard/topology.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

#include "masguard/rng.hpp"

namespace masguard {

TopologyKind topology_kind_from_string(std::string_view s) {
    if (s == "chain") return TopologyKind::chain;
    if (s == "tree") return TopologyKind::tree;
    if (s == "star") return TopologyKind::star;
    if (s == "random") return TopologyKind::random_graph;
    if (s == "complete") return TopologyKind::complete;
    throw std::invalid_argument("unknown topology kind: " + std::string(s));
}

std::string to_string(TopologyKind k) {
    switch (k) {
        case TopologyKind::chain: return "chain";
        case TopologyKind::tree: return "tree";
        case TopologyKind::star: return "star";
        case TopologyKind::random_graph: return "random";
        case TopologyKind::complete: return "complete";
    }
    return "?";
}

Orientation orientation_from_string(std::string_view s) {
    if (s == "preset") return Orientation::preset;
    if (s == "downstream") return Orientation::downstream;
    if (s == "upstream") return Orientation::upstream;
    if (s == "bidirectional") return Orientation::bidirectional;
    throw std::invalid_argument("unknown orientation: " + std::string(s));
}

std::string to_string(Orientation o) {
    switch (o) {
        case Orientation::preset: return "preset";
        case Orientation::downstream: return "downstream";
        case Orientation::upstream: return "upstream";
        case Orientation::bidirectional: return "bidirectional";
    }
    return "?";
}

bool CommunicationGraph::has_edge(AgentId src, AgentId dst) const {
    return std::binary_search(edges.begin(), edges.end(), Edge{src, dst});
}

nlohmann::json CommunicationGraph::to_json() const {
    nlohmann::json e = nlohmann::json::array();
    for (const Edge& ed : edges) e.push_back({ed.src, ed.dst});
    return nlohmann::json{{"kind", to_string(kind)},
                          {"n", n},
                          {"density", density},
                          {"seed", seed},
                          {"edges", std::move(e)}};
}

CommunicationGraph CommunicationGraph::from_json(const nlohmann::json& j) {
    CommunicationGraph g;
    g.kind = topology_kind_from_string(j.at("kind").get<std::string>());
    g.n = j.at("n").get<int>();
    g.density = j.at("density").get<double>();
    g.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("edges")) {
        Edge edge{e.at(0).get<int>(), e.at(1).get<int>()};
        if (edge.src == edge.dst) throw std::invalid_argument("graph record has a self-loop");
        if (edge.src < 0 || edge.src >= g.n || edge.dst < 0 || edge.dst >= g.n)
            throw std::invalid_argument("graph record has an out-of-range endpoint");
        g.edges.push_back(edge);
    }
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

namespace {

void add_oriented(std::vector<Edge>& edges, AgentId up, AgentId down, Orientation o,
                  Orientation preset_default) {
    Orientation eff = (o == Orientation::preset) ? preset_default : o;
    if (eff == Orientation::downstream || eff == Orientation::bidirectional)
        edges.push_back({up, down});
    if (eff == Orientation::upstream || eff == Orientation::bidirectional)
        edges.push_back({down, up});
}

}  // namespace

CommunicationGraph generate_topology(TopologyKind kind, int n, double density, std::uint64_t seed,
                                     Orientation orientation) {
    if (n < 2) throw std::invalid_argument("topology needs at least 2 agents");
    if (!(density > 0.0 && density <= 1.0))
        throw std::invalid_argument("density must be in (0, 1]");

    CommunicationGraph g;
    g.n = n;
    g.kind = kind;
    g.density = density;
    g.seed = seed;

    switch (kind) {
        case TopologyKind::chain:
            for (AgentId i = 0; i + 1 < n; ++i)
                add_oriented(g.edges, i, i + 1, orientation, Orientation::downstream);
            break;
        case TopologyKind::tree:
            // Balanced binary tree in breadth-first layout: parent i feeds 2i+1, 2i+2.
            for (AgentId i = 0; i < n; ++i) {
                for (AgentId c : {2 * i + 1, 2 * i + 2}) {
                    if (c < n) add_oriented(g.edges, i, c, orientation, Orientation::downstream);
                }
            }
            break;
        case TopologyKind::star:
            for (AgentId leaf = 1; leaf < n; ++leaf)
                add_oriented(g.edges, 0, leaf, orientation, Orientation::bidirectional);
            break;
        case TopologyKind::random_graph: {
            SplitMix64 rng(derive_seed(seed, 0x746f706fULL));
            for (AgentId i = 0; i < n; ++i) {
                for (AgentId j = 0; j < n; ++j) {
                    if (i == j) continue;
                    if (rng.bernoulli(density)) g.edges.push_back({i, j});
                }
            }
            break;
        }
        case TopologyKind::complete:
            for (AgentId i = 0; i < n; ++i)
                for (AgentId j = 0; j < n; ++j)
                    if (i != j) g.edges.push_back({i, j});
            break;
    }

    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

ExecutionOrder execution_order(int n, const std::vector<Edge>& live_edges) {
    std::vector<int> indegree(n, 0);
    std::vector<std::vector<AgentId>> out(n);
    for (const Edge& e : live_edges) {
        indegree[e.dst]++;
        out[e.src].push_back(e.dst);
    }

    ExecutionOrder result;
    result.order.reserve(n);
    std::priority_queue<AgentId, std::vector<AgentId>, std::greater<>> ready;
    for (AgentId i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);

    std::vector<bool> placed(n, false);
    while (!ready.empty()) {
        AgentId u = ready.top();
        ready.pop();
        result.order.push_back(u);
        placed[u] = true;
        for (AgentId v : out[u])
            if (--indegree[v] == 0) ready.push(v);
    }

    // Remaining nodes sit in or behind a cycle; append them by index.
    for (AgentId i = 0; i < n; ++i)
        if (!placed[i]) result.order.push_back(i);

    std::vector<int> pos(n, 0);
    for (std::size_t k = 0; k < result.order.size(); ++k) pos[result.order[k]] = static_cast<int>(k);
    for (const Edge& e : live_edges)
        if (pos[e.src] > pos[e.dst]) result.deferred_edges.push_back(e);
    std::sort(result.deferred_edges.begin(), result.deferred_edges.end());
    return result;
}

ExecutionOrder execution_order(const CommunicationGraph& g) {
    return execution_order(g.n, g.edges);
}

std::vector<AgentId> in_neighbors(int n, const std::vector<Edge>& edges, AgentId i) {
    if (i < 0 || i >= n) throw std::invalid_argument("agent id out of range");
    std::vector<AgentId> result;
    for (const Edge& e : edges)
        if (e.dst == i) result.push_back(e.src);
    std::sort(result.begin(), result.end());
    return result;
}

std::vector<AgentId> in_neighbors(const CommunicationGraph& g, AgentId i) {
    return in_neighbors(g.n, g.edges, i);
}

}  // namespace masguard
