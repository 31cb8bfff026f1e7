#include <doctest.h>

#include <algorithm>
#include <set>

#include "masguard/harness.hpp"
#include "masguard/metrics.hpp"
#include "masguard/remediate.hpp"
#include "masguard/rng.hpp"
#include "oracle_contagion.hpp"

using namespace masguard;

TEST_CASE("pruning with an empty detected set changes nothing") {
    CommunicationGraph g = generate_topology(TopologyKind::complete, 4, 1.0, 0);
    CHECK(prune_outgoing(g.edges, {}) == g.edges);
}

TEST_CASE("pruning removes exactly the detected agents' outgoing edges") {
    CommunicationGraph g = generate_topology(TopologyKind::complete, 4, 1.0, 0);
    std::vector<Edge> pruned = prune_outgoing(g.edges, {1});
    CHECK(pruned.size() == 9);
    for (const Edge& e : pruned) CHECK(e.src != 1);
    // Incoming edges of the detected agent survive.
    int incoming = 0;
    for (const Edge& e : pruned)
        if (e.dst == 1) ++incoming;
    CHECK(incoming == 3);
}

TEST_CASE("pruning matches a brute-force filter and is idempotent") {
    SplitMix64 rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 4 + static_cast<int>(rng.next_index(8));
        CommunicationGraph g =
            generate_topology(TopologyKind::random_graph, n, 0.4, rng.next_u64());
        std::vector<AgentId> detected;
        for (AgentId i = 0; i < n; ++i)
            if (rng.bernoulli(0.3)) detected.push_back(i);

        std::vector<Edge> pruned = prune_outgoing(g.edges, detected);
        std::vector<Edge> expected;
        for (const Edge& e : g.edges)
            if (std::find(detected.begin(), detected.end(), e.src) == detected.end())
                expected.push_back(e);
        CHECK(pruned == expected);
        CHECK(prune_outgoing(pruned, detected) == pruned);
    }
}

TEST_CASE("oracle defense contains the cascade after the first hook") {
    // Deterministic contagion, seeds as the only initially-wrong agents: once
    // every round-0 adversarial agent is pruned, nothing new gets infected.
    for (auto kind : {TopologyKind::chain, TopologyKind::tree, TopologyKind::star,
                      TopologyKind::complete}) {
        for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
            ScenarioSpec spec;
            spec.kind = kind;
            spec.n = 8;
            spec.attack = AttackKind::prompt_injection;
            spec.attacker_count = 2;
            spec.contagion = {1.0, 0.25, 1.0};
            MultiAgentSystem system = make_scenario(spec, seed);
            Transcript tr = run_dialogue(system, 4, nullptr, make_oracle_hook());

            std::set<AgentId> infected_r0;
            for (const Response& r : tr.rounds[0])
                if (r.adversarial) infected_r0.insert(r.agent);
            for (int t = 1; t < 4; ++t)
                for (const Response& r : tr.rounds[static_cast<std::size_t>(t)])
                    CHECK(r.adversarial == (infected_r0.count(r.agent) > 0));
        }
    }
}

TEST_CASE("a hook that detects nothing reproduces the undefended run") {
    ScenarioSpec spec;
    spec.kind = TopologyKind::star;
    spec.n = 6;
    spec.attack = AttackKind::tool_attack;
    spec.attacker_count = 1;
    spec.contagion = {0.95, 0.25, 0.7};
    MultiAgentSystem a = make_scenario(spec, 7);
    MultiAgentSystem b = make_scenario(spec, 7);
    DefenseHook idle = [](const Transcript&, int) { return DefenseDecision{}; };
    Transcript undefended = run_dialogue(a, 4);
    Transcript defended = run_dialogue(b, 4, nullptr, idle);
    for (int t = 0; t < 4; ++t) {
        CHECK(asr(undefended, t) == asr(defended, t));
        for (AgentId i = 0; i < 6; ++i)
            CHECK(undefended.rounds[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]
                      .text ==
                  defended.rounds[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)].text);
    }
    for (const DefenseDecision& d : defended.defense) CHECK(d.removed.empty());
}

TEST_CASE("after the hook no message originates from a detected agent") {
    ScenarioSpec spec;
    spec.kind = TopologyKind::complete;
    spec.n = 6;
    spec.attack = AttackKind::prompt_injection;
    spec.attacker_count = 2;
    spec.contagion = {1.0, 0.25, 1.0};
    MultiAgentSystem system = make_scenario(spec, 19);
    Transcript tr = run_dialogue(system, 4, nullptr, make_oracle_hook());

    std::set<AgentId> detected;
    for (const DefenseDecision& d : tr.defense) {
        for (AgentId a : d.detected) detected.insert(a);
        for (const MessageRecord& m : tr.messages) {
            if (m.round <= d.round) continue;
            const bool from_detected = detected.count(m.src) > 0;
            CHECK(!from_detected);
        }
    }

    // Live edge sets shrink monotonically under the hook.
    for (std::size_t t = 0; t + 1 < tr.live_edges.size(); ++t) {
        for (const Edge& e : tr.live_edges[t + 1])
            CHECK(std::binary_search(tr.live_edges[t].begin(), tr.live_edges[t].end(), e));
    }
}

TEST_CASE("oracle-defended star fixtures match the pinned ASR sequences") {
    // Golden values recorded from the first run of these seeded scenarios;
    // counts out of 8 agents, rounds 0..3.
    struct Golden {
        std::uint64_t seed;
        std::vector<AgentId> seeds;
        std::vector<int> baseline;
        std::vector<int> defended;
    };
    const std::vector<Golden> golden = {
        {101, {2, 3}, {2, 7, 8, 8}, {2, 2, 2, 2}},
        {102, {0, 3}, {6, 8, 8, 8}, {6, 6, 6, 6}},
    };
    for (const Golden& fixture : golden) {
        ScenarioSpec spec;
        spec.kind = TopologyKind::star;
        spec.n = 8;
        spec.attack = AttackKind::prompt_injection;
        spec.attacker_count = 2;
        spec.contagion = {0.95, 0.25, 0.7};
        MultiAgentSystem base = make_scenario(spec, fixture.seed);
        MultiAgentSystem guarded = base;
        CHECK(base.attack.seeds == fixture.seeds);
        Transcript b = run_dialogue(base, 4);
        Transcript d = run_dialogue(guarded, 4, nullptr, make_oracle_hook());
        for (int t = 0; t < 4; ++t) {
            CHECK(asr(b, t) * 8 == doctest::Approx(fixture.baseline[static_cast<std::size_t>(t)]));
            CHECK(asr(d, t) * 8 == doctest::Approx(fixture.defended[static_cast<std::size_t>(t)]));
        }
    }
}

TEST_CASE("defense_step prunes based on detector output") {
    ScenarioSpec spec;
    spec.kind = TopologyKind::chain;
    spec.n = 4;
    spec.attack = AttackKind::prompt_injection;
    spec.attacker_count = 1;
    spec.contagion = {1.0, 0.5, 1.0};
    MultiAgentSystem system = make_scenario(spec, 23);
    Transcript tr = run_dialogue(system, 1);

    FeatureHashEmbedder embedder(16);
    // A classifier biased positive flags everyone.
    DetectorParams params = DetectorParams::zeros(16, 4, 1);
    params.cls_bias = 5.0;
    auto [detected, pruned] =
        defense_step(tr, 0, embedder, params, 0.5, system.graph.edges, {});
    CHECK(detected.size() == 4);
    CHECK(pruned.empty());

    // A negative classifier flags no one and leaves the edge set alone.
    params.cls_bias = -5.0;
    auto [none, intact] = defense_step(tr, 0, embedder, params, 0.5, system.graph.edges, {});
    CHECK(none.empty());
    CHECK(intact == system.graph.edges);
}
