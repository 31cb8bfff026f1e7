#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "masguard/attacks.hpp"
#include "masguard/linalg.hpp"
#include "masguard/topology.hpp"

namespace masguard {

enum class BackendKind { scripted, external_llm };
enum class AggregationStrategy { majority_vote, last_agent };

AggregationStrategy aggregation_from_string(std::string_view s);
std::string to_string(AggregationStrategy s);

struct MemoryEntry {
    std::string text;
    bool truthful = true;
};

struct ToolDescriptor {
    std::string name;
    std::string behavior;
};

struct AgentProfile {
    AgentId id = 0;
    std::string role;
    BackendKind base = BackendKind::scripted;
    std::vector<MemoryEntry> memory;  // append-only during a dialogue
    std::vector<ToolDescriptor> plugins;
};

// Synthetic QA item: the dialogue argues between the gold token and one
// adversarial distractor token.
struct Task {
    std::string id;
    std::string question;
    std::string gold;
    std::string distractor;
};

struct ContagionParams {
    double gold_prior = 0.95;      // probability an honest agent starts on the gold answer
    double susceptibility = 0.25;  // adversarial incoming fraction that triggers a flip attempt
    double persuasion = 0.7;       // probability a triggered flip succeeds
};

// What inject() left behind; default-constructed means "no attack".
struct AttackState {
    AttackKind kind = AttackKind::none;
    std::vector<AgentId> seeds;  // sorted
    std::string target;
    LabelSemantics semantics = LabelSemantics::seed_plus_infected;
    std::string utterance_template;  // resolved attacker phrasing, {qid}/{ans}/{role} open

    nlohmann::json to_json() const;
    static AttackState from_json(const nlohmann::json& j);
};

struct MultiAgentSystem {
    CommunicationGraph graph;
    std::vector<AgentProfile> agents;
    Task task;
    ContagionParams contagion;
    AttackState attack;
    AggregationStrategy aggregation = AggregationStrategy::majority_vote;
    // Once an agent is flagged by the defense it stops counting toward the
    // majority vote; an isolated attacker would otherwise still poison a^(t).
    bool exclude_detected_from_vote = true;
    std::uint64_t run_seed = 0;
};

MultiAgentSystem make_system(const CommunicationGraph& graph, const Task& task,
                             const ContagionParams& contagion, std::uint64_t run_seed);

struct Response {
    AgentId agent = 0;
    int round = 0;
    std::string text;
    std::string answer;
    bool adversarial = false;  // emitted answer equals the attack target
};

struct MessageRecord {
    AgentId src = 0;
    AgentId dst = 0;
    int round = 0;
    std::string text;
};

struct IncomingMessage {
    AgentId src = 0;
    std::string text;
    std::string answer;
};

struct BackendContext {
    const Task* task = nullptr;
    std::string target;  // empty when no attack is active
    std::vector<IncomingMessage> incoming;
    int round = 0;
    const std::vector<MemoryEntry>* memory = nullptr;
};

struct DefenseDecision {
    int round = -1;
    std::vector<AgentId> detected;  // newly flagged this round
    Vec probabilities;              // per-agent attack probability; empty for oracle hooks
    std::vector<Edge> removed;      // edges pruned for the next round
};

struct Transcript {
    nlohmann::json config;  // snapshot written into the header record
    Task task;
    AttackState attack;
    int n = 0;
    std::vector<std::vector<Response>> rounds;  // rounds[t][agent]
    std::vector<std::string> aggregated;        // a^(t)
    std::vector<LabelVector> labels;
    std::vector<std::vector<Edge>> live_edges;  // edge set in force during round t
    std::vector<std::vector<AgentId>> orders;
    std::vector<MessageRecord> messages;  // every delivered edge message
    std::vector<DefenseDecision> defense;

    int round_count() const { return static_cast<int>(rounds.size()); }
    std::string to_jsonl() const;
    static Transcript from_jsonl(std::string_view text);
};

struct BackendError : std::runtime_error {
    BackendError(const std::string& what, bool retryable_)
        : std::runtime_error(what), retryable(retryable_) {}
    bool retryable;
};

struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string answer_marker(std::string_view token);
// Reads the token out of the last <<ANSWER:..>> marker; empty if absent.
std::string extract_answer(std::string_view text);

class Backend {
public:
    virtual ~Backend() = default;
    // seed is derived from (run seed, agent, round) by the engine, never from
    // scheduling, so concurrent execution cannot change outcomes.
    virtual Response respond(const AgentProfile& profile, const std::string& sys_prompt,
                             const BackendContext& ctx, std::uint64_t seed) = 0;
};

// Deterministic desk-scale stand-in for an LLM. Each agent holds a latent
// belief in {gold, adversarial target}; seeded attackers always push the
// target, honest agents flip when persuaded per ContagionParams. Flips are
// one-way, which is what makes undefended corruption monotone.
class ScriptedBackend final : public Backend {
public:
    explicit ScriptedBackend(const MultiAgentSystem& system);
    Response respond(const AgentProfile& profile, const std::string& sys_prompt,
                     const BackendContext& ctx, std::uint64_t seed) override;
    bool believes_adversarial(AgentId id) const { return adversarial_belief_.at(id); }

private:
    const MultiAgentSystem* system_;
    std::vector<bool> adversarial_belief_;
    std::vector<bool> is_seed_;
};

// Plain HTTP chat-completion client. Endpoint and credentials come from the
// environment; excluded from acceptance runs.
class HttpChatBackend final : public Backend {
public:
    struct Options {
        std::string host;
        int port = 80;
        std::string path = "/v1/chat/completions";
        std::string model;
        std::string api_key;
        double temperature = 0.0;
        int max_retries = 3;
    };
    static Options from_environment();
    explicit HttpChatBackend(Options options);
    Response respond(const AgentProfile& profile, const std::string& sys_prompt,
                     const BackendContext& ctx, std::uint64_t seed) override;

private:
    Options options_;
};

// Returns the newly detected agents (and optionally probabilities) for round
// t; the engine accumulates detections and prunes outgoing edges itself.
using DefenseHook = std::function<DefenseDecision(const Transcript&, int round)>;

std::string system_prompt_for(const MultiAgentSystem& system, AgentId agent);

std::string aggregate(const std::vector<Response>& responses, AggregationStrategy strategy,
                      AgentId last_in_order = -1, const std::vector<AgentId>& excluded = {});

// Executes round t over the given live edges and appends it to the transcript.
std::vector<Response>& run_round(MultiAgentSystem& system, Backend& backend,
                                 Transcript& transcript, int t, const std::vector<Edge>& live);

// K rounds with optional per-round defense. A null backend runs the scripted
// one. The hook fires at every round boundary; pruning applies from the next
// round and accumulates.
Transcript run_dialogue(MultiAgentSystem& system, int rounds, Backend* backend = nullptr,
                        const DefenseHook& hook = {});

namespace stream {
// Substream purpose tags for derive_seed.
constexpr std::uint64_t initial_belief = 1;
constexpr std::uint64_t respond = 2;
constexpr std::uint64_t persuasion_flip = 3;
constexpr std::uint64_t attack_selection = 4;
constexpr std::uint64_t param_init = 5;
constexpr std::uint64_t train_shuffle = 6;
constexpr std::uint64_t corpus_sample = 7;
constexpr std::uint64_t split = 8;
}  // namespace stream

}  // namespace masguard
