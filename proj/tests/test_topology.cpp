#include <doctest.h>

#include <algorithm>
#include <set>

#include "masguard/rng.hpp"
#include "masguard/topology.hpp"

using namespace masguard;

namespace {

// Straight-line re-execution of the documented sampling procedure, kept
// independent of generate_topology.
std::vector<Edge> random_edges_oracle(int n, double density, std::uint64_t seed) {
    SplitMix64 rng(derive_seed(seed, 0x746f706fULL));
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && rng.bernoulli(density)) edges.push_back({i, j});
    std::sort(edges.begin(), edges.end());
    return edges;
}

}  // namespace

TEST_CASE("chain topology emits the downstream path") {
    CommunicationGraph g = generate_topology(TopologyKind::chain, 3, 1.0, 0);
    CHECK(g.edges == std::vector<Edge>{{0, 1}, {1, 2}});
}

TEST_CASE("complete topology emits all ordered pairs") {
    CommunicationGraph g = generate_topology(TopologyKind::complete, 4, 1.0, 0);
    CHECK(g.edges.size() == 12);
    for (const Edge& e : g.edges) CHECK(e.src != e.dst);
}

TEST_CASE("star topology is bidirectional hub<->leaf by default") {
    CommunicationGraph g = generate_topology(TopologyKind::star, 5, 1.0, 0);
    CHECK(g.edges.size() == 8);
    for (AgentId leaf = 1; leaf < 5; ++leaf) {
        CHECK(g.has_edge(0, leaf));
        CHECK(g.has_edge(leaf, 0));
    }
    CommunicationGraph down =
        generate_topology(TopologyKind::star, 5, 1.0, 0, Orientation::downstream);
    CHECK(down.edges.size() == 4);
    CHECK(down.has_edge(0, 3));
    CHECK(!down.has_edge(3, 0));
}

TEST_CASE("tree topology is a breadth-first balanced binary tree") {
    CommunicationGraph g = generate_topology(TopologyKind::tree, 7, 1.0, 0);
    CHECK(g.edges == std::vector<Edge>{{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}});
}

TEST_CASE("random topology matches the sampling oracle") {
    CommunicationGraph g = generate_topology(TopologyKind::random_graph, 8, 0.4, 7);
    CHECK(g.edges == random_edges_oracle(8, 0.4, 7));
    // Golden fixture recorded from the oracle.
    CHECK(g.edges.size() == 27);
}

TEST_CASE("invalid configurations are rejected") {
    CHECK_THROWS_AS(generate_topology(TopologyKind::chain, 1, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(generate_topology(TopologyKind::random_graph, 4, 0.0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(generate_topology(TopologyKind::random_graph, 4, 1.5, 0),
                    std::invalid_argument);
}

TEST_CASE("generation is a pure function of its inputs") {
    for (auto kind : {TopologyKind::chain, TopologyKind::star, TopologyKind::random_graph}) {
        CommunicationGraph a = generate_topology(kind, 9, 0.6, 42);
        CommunicationGraph b = generate_topology(kind, 9, 0.6, 42);
        CHECK(a.to_json().dump() == b.to_json().dump());
    }
}

TEST_CASE("random at density 1.0 equals complete") {
    CommunicationGraph r = generate_topology(TopologyKind::random_graph, 6, 1.0, 3);
    CommunicationGraph c = generate_topology(TopologyKind::complete, 6, 1.0, 3);
    CHECK(r.edges == c.edges);
}

TEST_CASE("execution order on a chain is the identity with no deferrals") {
    ExecutionOrder eo = execution_order(generate_topology(TopologyKind::chain, 3, 1.0, 0));
    CHECK(eo.order == std::vector<AgentId>{0, 1, 2});
    CHECK(eo.deferred_edges.empty());
}

TEST_CASE("every edge is either order-respecting or deferred") {
    for (auto kind : {TopologyKind::star, TopologyKind::complete, TopologyKind::random_graph}) {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
            CommunicationGraph g = generate_topology(kind, 7, 0.5, seed);
            ExecutionOrder eo = execution_order(g);
            std::vector<int> pos(7);
            for (std::size_t k = 0; k < eo.order.size(); ++k)
                pos[static_cast<std::size_t>(eo.order[k])] = static_cast<int>(k);
            for (const Edge& e : g.edges) {
                bool deferred = std::binary_search(eo.deferred_edges.begin(),
                                                   eo.deferred_edges.end(), e);
                CHECK(deferred == (pos[static_cast<std::size_t>(e.src)] >
                                   pos[static_cast<std::size_t>(e.dst)]));
            }
        }
    }
}

TEST_CASE("complete(3) defers exactly one direction of each pair") {
    ExecutionOrder eo = execution_order(generate_topology(TopologyKind::complete, 3, 1.0, 0));
    CHECK(eo.order == std::vector<AgentId>{0, 1, 2});
    CHECK(eo.deferred_edges == std::vector<Edge>{{1, 0}, {2, 0}, {2, 1}});
}

TEST_CASE("acyclic graphs get a valid topological order") {
    // Property: every edge source precedes its destination, brute-force
    // checked over random DAGs (edges only from lower to higher index).
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SplitMix64 rng(seed);
        const int n = 4 + static_cast<int>(rng.next_index(7));
        std::vector<Edge> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.bernoulli(0.4)) edges.push_back({i, j});
        ExecutionOrder eo = execution_order(n, edges);
        CHECK(eo.deferred_edges.empty());
        std::vector<int> pos(static_cast<std::size_t>(n));
        for (std::size_t k = 0; k < eo.order.size(); ++k)
            pos[static_cast<std::size_t>(eo.order[k])] = static_cast<int>(k);
        for (const Edge& e : edges)
            CHECK(pos[static_cast<std::size_t>(e.src)] < pos[static_cast<std::size_t>(e.dst)]);
        std::set<AgentId> unique(eo.order.begin(), eo.order.end());
        CHECK(unique.size() == static_cast<std::size_t>(n));
    }
}

TEST_CASE("in_neighbors matches a linear scan of the edge set") {
    CommunicationGraph chain = generate_topology(TopologyKind::chain, 3, 1.0, 0);
    CHECK(in_neighbors(chain, 1) == std::vector<AgentId>{0});

    CommunicationGraph star = generate_topology(TopologyKind::star, 5, 1.0, 0);
    CHECK(in_neighbors(star, 0) == std::vector<AgentId>{1, 2, 3, 4});

    CommunicationGraph rnd = generate_topology(TopologyKind::random_graph, 8, 0.4, 7);
    std::vector<AgentId> expected;
    for (const Edge& e : rnd.edges)
        if (e.dst == 3) expected.push_back(e.src);
    std::sort(expected.begin(), expected.end());
    CHECK(in_neighbors(rnd, 3) == expected);

    CHECK_THROWS_AS(in_neighbors(chain, 9), std::invalid_argument);
}

TEST_CASE("graph serialization round-trips") {
    CommunicationGraph g = generate_topology(TopologyKind::random_graph, 8, 0.6, 99);
    CommunicationGraph back = CommunicationGraph::from_json(g.to_json());
    CHECK(back.to_json().dump() == g.to_json().dump());
}
