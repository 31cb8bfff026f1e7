#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "masguard/topology.hpp"

namespace masguard {

struct MultiAgentSystem;
struct Transcript;

enum class AttackKind { none, prompt_injection, memory_poison, tool_attack };

AttackKind attack_kind_from_string(std::string_view s);
std::string to_string(AttackKind k);

// seed_only labels exactly the agents compromised at initialization;
// seed_plus_infected additionally labels every agent currently emitting the
// attack target, tracking the growing corrupted set.
enum class LabelSemantics { seed_only, seed_plus_infected };

LabelSemantics label_semantics_from_string(std::string_view s);
std::string to_string(LabelSemantics s);

struct AttackPayload {
    std::string target;   // adversarial answer token; resolved from the task when empty
    int template_id = 0;  // persuasion phrasing variant
};

struct AttackConfig {
    AttackKind kind = AttackKind::none;
    int attacker_count = 0;
    std::uint64_t selection_seed = 0;
    AttackPayload payload;
    LabelSemantics label_semantics = LabelSemantics::seed_plus_infected;
    int poison_entries = 3;  // memory_poison: false records appended per victim
};

struct LabelVector {
    int round = 0;
    std::vector<std::uint8_t> labels;  // per-agent y_i
};

// Utterance/persona templates per attack kind. Each kind uses a distinct
// phrasing family so embeddings carry kind-specific signatures. Placeholders:
// {role}, {qid}, {ans}.
struct AttackTemplates {
    std::vector<std::string> prompt_injection;
    std::vector<std::string> memory_poison;
    std::vector<std::string> tool_attack;
    std::string injected_persona;  // replaces the role of a prompt-injected agent
    std::string poison_entry;      // false memory record text

    static const AttackTemplates& builtin();
    // Loads <kind>.txt (one variant per line) plus optional persona.txt and
    // poison_entry.txt from a directory; missing files keep the built-ins.
    static AttackTemplates load(const std::filesystem::path& dir);

    const std::vector<std::string>& for_kind(AttackKind k) const;
};

std::string substitute(std::string_view tmpl,
                       std::initializer_list<std::pair<std::string_view, std::string_view>> vars);

// Seeds attackers into the system: picks attacker_count agents uniformly via
// selection_seed and applies the kind-specific compromise. Returns the seed
// set (also recorded in system.attack).
std::vector<AgentId> inject(MultiAgentSystem& system, const AttackConfig& cfg,
                            const AttackTemplates& templates = AttackTemplates::builtin());

LabelVector ground_truth(const Transcript& transcript, int round, LabelSemantics semantics);

}  // namespace masguard
