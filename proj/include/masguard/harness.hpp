#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "masguard/attacks.hpp"
#include "masguard/detector.hpp"
#include "masguard/embedder.hpp"
#include "masguard/engine.hpp"
#include "masguard/ugraph.hpp"

namespace masguard {

// Everything a run needs; serializable so a run is reproducible from the
// config and the code version alone.
struct ExperimentConfig {
    std::string topology = "star";
    int agents = 8;
    double density = 0.4;
    std::string orientation = "preset";
    int rounds = 4;

    std::string attack = "prompt_injection";
    int attacker_count = 2;
    int template_id = 0;
    std::string label_semantics = "seed_plus_infected";
    int poison_entries = 3;
    std::string template_dir;  // empty -> built-in attack templates

    std::string backend = "scripted";
    double gold_prior = 0.95;
    double susceptibility = 0.25;
    double persuasion = 0.7;

    std::string embedder = "hash";
    std::string node_feature_mode = "concat";
    std::size_t char_budget = 4000;

    DetectorHyper detector;

    std::string aggregation = "majority_vote";
    bool exclude_detected_from_vote = true;
    bool oracle_defense = false;  // substitute ground truth for the GNN in defend runs
    bool count_seeds_in_asr = true;

    // Scaled-evaluation scenarios: random graphs with attacker count growing
    // with system size.
    double transfer_density = 0.2;
    double transfer_attacker_fraction = 0.2;

    std::uint64_t run_seed = 1;
    std::uint64_t attack_seed = 2;
    std::uint64_t init_seed = 3;

    ContagionParams contagion() const { return {gold_prior, susceptibility, persuasion}; }
    std::unique_ptr<Embedder> make_text_embedder() const;
    UGraphOptions ugraph_options() const;
    // Non-null only for the external backend; scripted runs build their
    // per-dialogue backend inside the engine.
    std::unique_ptr<Backend> make_dialogue_backend() const;

    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

// One attacked, seeded, ready-to-run system.
struct ScenarioSpec {
    TopologyKind kind = TopologyKind::star;
    int n = 8;
    double density = 1.0;
    Orientation orientation = Orientation::preset;
    AttackKind attack = AttackKind::prompt_injection;
    int attacker_count = 2;
    int template_id = 0;
    int poison_entries = 3;
    LabelSemantics semantics = LabelSemantics::seed_plus_infected;
    ContagionParams contagion;
    AggregationStrategy aggregation = AggregationStrategy::majority_vote;
    bool exclude_detected_from_vote = true;
    std::uint64_t attack_seed = 0;  // mixed into attacker placement
    std::string qid = "q0";
    AttackTemplates templates = AttackTemplates::builtin();
};

Task make_task(std::uint64_t seed, const std::string& qid);
MultiAgentSystem make_scenario(const ScenarioSpec& spec, std::uint64_t scenario_seed);

// Corpus generation: per sample, draw topology / density / attack kind /
// attacker placement, run the undefended dialogue and emit one labeled
// utterance graph per round to <out>/graphs.jsonl (manifest.json alongside).
void cmd_generate(const ExperimentConfig& cfg, int samples,
                  const std::filesystem::path& out_dir);

std::vector<UtteranceGraph> load_corpus(const std::filesystem::path& corpus_dir);

// Wrapper over detector train(); persists checkpoint.bin and train_report.json.
std::pair<DetectorParams, TrainReport> cmd_train(const ExperimentConfig& cfg,
                                                 const std::filesystem::path& corpus_dir,
                                                 const std::filesystem::path& out_dir);

// Runs the identical seeded scenarios twice, without and with the defense
// hook, writes transcripts plus the comparison table, and returns the table.
std::string cmd_defend(const ExperimentConfig& cfg, const DetectorParams& params,
                       int scenario_count, const std::filesystem::path& out_dir);

// Evaluates a checkpoint trained at one size on larger systems without
// retraining; per-size defended/baseline ASR plus pooled detection F1.
std::string cmd_transfer(const ExperimentConfig& cfg, const DetectorParams& params,
                         const std::vector<int>& sizes, int scenarios_per_size,
                         const std::filesystem::path& out_dir);

// Recognition metrics on held-out corpus graphs, grouped by topology and by
// attack kind. holdout_runs empty -> evaluate the whole corpus. A non-empty
// out_dir gets eval.tsv plus eval.jsonl for machine consumption.
std::string cmd_eval(const ExperimentConfig& cfg, const DetectorParams& params,
                     const std::filesystem::path& corpus_dir,
                     const std::vector<std::string>& holdout_runs,
                     const std::filesystem::path& out_dir = {});

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace masguard
