#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "masguard/harness.hpp"

namespace {

using masguard::ExperimentConfig;

void add_config_options(CLI::App* cmd, ExperimentConfig& cfg) {
    cmd->add_option("--topology", cfg.topology, "chain|tree|star|random|complete");
    cmd->add_option("--agents", cfg.agents, "agent count N");
    cmd->add_option("--density", cfg.density, "edge density for random topologies");
    cmd->add_option("--orientation", cfg.orientation,
                    "preset|downstream|upstream|bidirectional");
    cmd->add_option("--rounds", cfg.rounds, "dialogue rounds K");
    cmd->add_option("--attack", cfg.attack,
                    "none|prompt_injection|memory_poison|tool_attack");
    cmd->add_option("--attackers", cfg.attacker_count, "seeded attacker count");
    cmd->add_option("--template-id", cfg.template_id, "attack phrasing variant");
    cmd->add_option("--label-semantics", cfg.label_semantics, "seed_only|seed_plus_infected");
    cmd->add_option("--poison-entries", cfg.poison_entries,
                    "false memory records per poisoned agent");
    cmd->add_option("--template-dir", cfg.template_dir, "attack template directory override");
    cmd->add_option("--backend", cfg.backend, "scripted|external_llm");
    cmd->add_option("--gold-prior", cfg.gold_prior, "probability an honest agent starts gold");
    cmd->add_option("--susceptibility", cfg.susceptibility,
                    "adversarial fraction that triggers a flip attempt");
    cmd->add_option("--persuasion", cfg.persuasion, "flip success probability");
    cmd->add_option("--embedder", cfg.embedder, "hash|service");
    cmd->add_option("--node-feature-mode", cfg.node_feature_mode, "concat|pooled");
    cmd->add_option("--char-budget", cfg.char_budget, "history truncation budget");
    cmd->add_option("--dim", cfg.detector.dim, "embedding dimension D");
    cmd->add_option("--hidden", cfg.detector.hidden, "detector hidden width H");
    cmd->add_option("--layers", cfg.detector.layers, "detector layer count L");
    cmd->add_option("--threshold", cfg.detector.threshold, "detection threshold");
    cmd->add_option("--epochs", cfg.detector.epochs, "training epochs");
    cmd->add_option("--learning-rate", cfg.detector.learning_rate, "optimizer step size");
    cmd->add_option("--validation-fraction", cfg.detector.validation_fraction,
                    "fraction of runs held out for validation");
    cmd->add_option("--aggregation", cfg.aggregation, "majority_vote|last_agent");
    cmd->add_flag("--oracle", cfg.oracle_defense,
                  "use ground-truth labels instead of the detector in defend runs");
    cmd->add_option("--transfer-density", cfg.transfer_density,
                    "random-graph density for scaled runs");
    cmd->add_option("--transfer-attacker-fraction", cfg.transfer_attacker_fraction,
                    "attacker fraction for scaled runs");
    cmd->add_option("--seed", cfg.run_seed, "run seed");
    cmd->add_option("--attack-seed", cfg.attack_seed, "attacker selection seed");
    cmd->add_option("--init-seed", cfg.init_seed, "model initialization seed");
}

std::vector<std::string> holdout_from_report(const std::filesystem::path& report) {
    nlohmann::json j = nlohmann::json::parse(masguard::read_text_file(report));
    return j.at("val_runs").get<std::vector<std::string>>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"masguard: attack simulation, graph-based detection and edge-pruning "
                 "remediation for multi-agent dialogues"};
    app.set_config("--config", "", "read options from an INI file");
    app.require_subcommand(1);

    ExperimentConfig cfg;

    std::string out_dir = "run";
    std::string corpus_dir;
    std::string checkpoint;
    std::string report;
    int samples = 200;
    int scenarios = 10;
    std::vector<int> sizes = {20, 35, 50, 65, 80};

    CLI::App* generate = app.add_subcommand("generate", "generate a labeled training corpus");
    generate->add_option("--out", out_dir, "corpus directory")->required();
    generate->add_option("--samples", samples, "dialogue samples to generate");
    add_config_options(generate, cfg);

    CLI::App* train_cmd = app.add_subcommand("train", "train the detector on a corpus");
    train_cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
    train_cmd->add_option("--out", out_dir, "output directory for checkpoint and report")
        ->required();
    add_config_options(train_cmd, cfg);

    std::string eval_out;
    CLI::App* eval_cmd = app.add_subcommand("eval", "recognition metrics, grouped breakdowns");
    eval_cmd->add_option("--corpus", corpus_dir, "corpus directory")->required();
    eval_cmd->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    eval_cmd->add_option("--report", report,
                         "train report whose validation runs form the held-out set");
    eval_cmd->add_option("--out", eval_out, "directory for eval.tsv and eval.jsonl");
    add_config_options(eval_cmd, cfg);

    CLI::App* defend = app.add_subcommand(
        "defend", "paired baseline/defended runs on one scenario family, ASR table");
    defend->add_option("--checkpoint", checkpoint,
                       "trained checkpoint (optional with --oracle)");
    defend->add_option("--out", out_dir, "output directory")->required();
    defend->add_option("--scenarios", scenarios, "seeded scenario count");
    add_config_options(defend, cfg);

    CLI::App* transfer = app.add_subcommand(
        "transfer", "evaluate a small-system checkpoint on larger systems without retraining");
    transfer->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
    transfer->add_option("--out", out_dir, "output directory")->required();
    transfer->add_option("--sizes", sizes, "agent counts to evaluate");
    transfer->add_option("--scenarios", scenarios, "scenarios per size");
    add_config_options(transfer, cfg);

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            masguard::cmd_generate(cfg, samples, out_dir);
            std::cout << "corpus written to " << out_dir << "\n";
        } else if (train_cmd->parsed()) {
            auto [params, train_report] = masguard::cmd_train(cfg, corpus_dir, out_dir);
            std::cout << "checkpoint written to " << out_dir << "/checkpoint.bin";
            if (train_report.best_val_auc)
                std::cout << " (best validation AUC " << *train_report.best_val_auc << ")";
            std::cout << "\n";
        } else if (eval_cmd->parsed()) {
            auto params = masguard::DetectorParams::load(checkpoint);
            std::vector<std::string> holdout;
            if (!report.empty()) holdout = holdout_from_report(report);
            std::cout << masguard::cmd_eval(cfg, params, corpus_dir, holdout, eval_out);
        } else if (defend->parsed()) {
            if (checkpoint.empty() && !cfg.oracle_defense)
                throw std::invalid_argument("defend needs --checkpoint unless --oracle is set");
            auto params = checkpoint.empty()
                              ? masguard::DetectorParams::glorot(cfg.detector.dim,
                                                                 cfg.detector.hidden,
                                                                 cfg.detector.layers, 0)
                              : masguard::DetectorParams::load(checkpoint);
            std::cout << masguard::cmd_defend(cfg, params, scenarios, out_dir);
        } else if (transfer->parsed()) {
            auto params = masguard::DetectorParams::load(checkpoint);
            std::cout << masguard::cmd_transfer(cfg, params, sizes, scenarios, out_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
