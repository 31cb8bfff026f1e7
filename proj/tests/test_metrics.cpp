#include <doctest.h>

#include <cmath>

#include "masguard/harness.hpp"
#include "masguard/metrics.hpp"
#include "masguard/remediate.hpp"
#include "masguard/rng.hpp"

using namespace masguard;

namespace {

// Brute-force confusion-matrix computation, independent of recognition().
RecognitionMetrics brute_force(const Vec& probs, const std::vector<std::uint8_t>& labels,
                               double thr) {
    int tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (probs[i] > thr && labels[i]) ++tp;
        if (probs[i] > thr && !labels[i]) ++fp;
        if (probs[i] <= thr && labels[i]) ++fn;
        if (probs[i] <= thr && !labels[i]) ++tn;
    }
    RecognitionMetrics m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    if (tp + fp + tn + fn) m.accuracy = double(tp + tn) / (tp + fp + tn + fn);
    if (tp + fp) m.precision = double(tp) / (tp + fp);
    if (tp + fn) m.recall = double(tp) / (tp + fn);
    if (m.precision && m.recall && *m.precision + *m.recall > 0)
        m.f1 = 2 * *m.precision * *m.recall / (*m.precision + *m.recall);
    // Exhaustive pair-counting AUC with half credit for ties.
    double wins = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < labels.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (probs[i] > probs[j])
                wins += 1.0;
            else if (probs[i] == probs[j])
                wins += 0.5;
        }
    }
    if (pairs > 0) m.auc = wins / pairs;
    return m;
}

ScenarioSpec cascade_spec(TopologyKind kind, int n) {
    ScenarioSpec spec;
    spec.kind = kind;
    spec.n = n;
    spec.attack = AttackKind::prompt_injection;
    spec.attacker_count = 1;
    spec.contagion = {1.0, 0.5, 1.0};
    return spec;
}

}  // namespace

TEST_CASE("perfect prediction scores ones across the board") {
    RecognitionMetrics m = recognition({0.9, 0.1, 0.8, 0.2}, {1, 0, 1, 0});
    CHECK(*m.accuracy == 1.0);
    CHECK(*m.precision == 1.0);
    CHECK(*m.recall == 1.0);
    CHECK(*m.f1 == 1.0);
    CHECK(*m.auc == 1.0);
}

TEST_CASE("empty prediction with positives present reports absent precision") {
    RecognitionMetrics m = recognition_from_set({}, {1, 0, 1});
    CHECK(*m.recall == 0.0);
    CHECK(!m.precision.has_value());
    CHECK(!m.f1.has_value());
}

TEST_CASE("rank-counted AUC example") {
    RecognitionMetrics m = recognition({0.9, 0.8, 0.1}, {1, 0, 0});
    CHECK(*m.auc == 1.0);  // the positive outranks both negatives

    CHECK(!auc_midrank({0.4, 0.6}, {1, 1}).has_value());  // single class: absent
    CHECK(*auc_midrank({0.5, 0.5}, {1, 0}) == 0.5);       // tie handled by midrank
}

TEST_CASE("recognition matches the brute-force confusion computation") {
    SplitMix64 rng(66);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 3 + rng.next_index(20);
        Vec probs(n);
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            probs[i] = rng.bernoulli(0.3) ? 0.5 : rng.next_double();
            labels[i] = rng.bernoulli(0.4) ? 1 : 0;
        }
        RecognitionMetrics fast = recognition(probs, labels, 0.5);
        RecognitionMetrics slow = brute_force(probs, labels, 0.5);
        CHECK(fast.tp == slow.tp);
        CHECK(fast.fp == slow.fp);
        CHECK(fast.tn == slow.tn);
        CHECK(fast.fn == slow.fn);
        CHECK(fast.auc.has_value() == slow.auc.has_value());
        if (fast.auc) CHECK(*fast.auc == doctest::Approx(*slow.auc).epsilon(1e-12));
    }
}

TEST_CASE("asr on the deterministic chain cascade") {
    std::uint64_t seed = 0;
    MultiAgentSystem system = make_scenario(cascade_spec(TopologyKind::chain, 3), seed);
    while (system.attack.seeds != std::vector<AgentId>{0})
        system = make_scenario(cascade_spec(TopologyKind::chain, 3), ++seed);
    Transcript tr = run_dialogue(system, 1);
    CHECK(asr(tr, 0) == 1.0);
    // Excluding the seeded attacker leaves the two infected agents.
    CHECK(asr(tr, 0, false) == 1.0);
    CHECK_THROWS_AS(asr(tr, 5), std::invalid_argument);
}

TEST_CASE("asr counts wrong answers even without an adversarial flag") {
    // Natural wrongness with no attack: answer != gold is enough.
    ScenarioSpec spec = cascade_spec(TopologyKind::chain, 8);
    spec.attack = AttackKind::none;
    spec.attacker_count = 0;
    spec.contagion = {0.5, 0.25, 0.7};  // half the agents start wrong
    MultiAgentSystem system = make_scenario(spec, 31);
    Transcript tr = run_dialogue(system, 1);
    int wrong = 0;
    for (const Response& r : tr.rounds[0]) {
        CHECK(!r.adversarial);
        if (r.answer != tr.task.gold) ++wrong;
    }
    CHECK(asr(tr, 0) == doctest::Approx(wrong / 8.0));
    CHECK(wrong > 0);
}

TEST_CASE("undefended asr grows monotonically on the seeded cascade") {
    ScenarioSpec spec = cascade_spec(TopologyKind::complete, 8);
    spec.contagion = {1.0, 0.25, 0.7};
    MultiAgentSystem system = make_scenario(spec, 3);
    Transcript tr = run_dialogue(system, 4);
    for (int t = 0; t + 1 < 4; ++t) CHECK(asr(tr, t) <= asr(tr, t + 1));
}

TEST_CASE("system accuracy per round") {
    std::vector<Transcript> runs;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
        MultiAgentSystem system = make_scenario(cascade_spec(TopologyKind::star, 6), seed);
        runs.push_back(run_dialogue(system, 3));
    }
    std::vector<double> acc = system_accuracy(runs);
    REQUIRE(acc.size() == 3);
    for (int t = 0; t < 3; ++t) {
        double expect = 0.0;
        for (const Transcript& tr : runs)
            if (tr.aggregated[static_cast<std::size_t>(t)] == tr.task.gold) expect += 1.0;
        CHECK(acc[static_cast<std::size_t>(t)] == doctest::Approx(expect / 5.0));
    }

    // Single correct task scores 1.0.
    ScenarioSpec clean = cascade_spec(TopologyKind::chain, 4);
    clean.attack = AttackKind::none;
    clean.attacker_count = 0;
    MultiAgentSystem system = make_scenario(clean, 9);
    std::vector<Transcript> one{run_dialogue(system, 2)};
    for (double a : system_accuracy(one)) CHECK(a == 1.0);
}

TEST_CASE("defense lifts final-round majority-vote accuracy") {
    std::vector<Transcript> undefended;
    std::vector<Transcript> defended;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ScenarioSpec spec = cascade_spec(TopologyKind::complete, 8);
        spec.attacker_count = 2;
        spec.contagion = {1.0, 0.25, 1.0};
        MultiAgentSystem a = make_scenario(spec, seed);
        MultiAgentSystem b = a;
        undefended.push_back(run_dialogue(a, 4));
        defended.push_back(run_dialogue(b, 4, nullptr, make_oracle_hook()));
    }
    std::vector<double> base = system_accuracy(undefended);
    std::vector<double> guarded = system_accuracy(defended);
    CHECK(guarded[3] >= base[3]);
    // The undefended complete graph collapses to the adversarial answer.
    // Detected agents drop out of the defended vote, which recovers gold
    // except in seeds where the whole graph was corrupted within round 0
    // (nothing left to save once every agent is compromised).
    CHECK(base[3] == 0.0);
    CHECK(guarded[3] > 0.5);
}

TEST_CASE("asr table formats paired runs and validates inputs") {
    std::vector<Transcript> baseline;
    std::vector<Transcript> defended;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        ScenarioSpec spec = cascade_spec(TopologyKind::star, 6);
        spec.contagion = {1.0, 0.25, 1.0};
        MultiAgentSystem a = make_scenario(spec, seed);
        MultiAgentSystem b = a;
        baseline.push_back(run_dialogue(a, 3));
        defended.push_back(run_dialogue(b, 3, nullptr, make_oracle_hook()));
    }
    std::string table = asr_table(baseline, defended);
    CHECK(table.find("metric\tR0\tR1\tR2") == 0);
    CHECK(table.find("baseline_asr") != std::string::npos);
    CHECK(table.find("defended_asr") != std::string::npos);
    CHECK(table.find("paired") != std::string::npos);
    // Deterministic given identical runs.
    CHECK(table == asr_table(baseline, defended));

    CHECK_THROWS_AS(asr_table({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(asr_table(baseline, {defended[0]}), std::invalid_argument);

    // Mismatched configs are rejected.
    std::vector<Transcript> other;
    for (std::uint64_t seed : {7ULL, 8ULL, 9ULL}) {
        ScenarioSpec spec = cascade_spec(TopologyKind::chain, 6);
        MultiAgentSystem a = make_scenario(spec, seed);
        other.push_back(run_dialogue(a, 3));
    }
    CHECK_THROWS_AS(asr_table(baseline, other), std::invalid_argument);
}
