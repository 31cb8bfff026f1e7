#include "masguard/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "masguard/metrics.hpp"
#include "masguard/remediate.hpp"
#include "masguard/rng.hpp"

namespace masguard {

namespace {

// Purpose tags for scenario substreams.
constexpr std::uint64_t kTagTopology = 0x101;
constexpr std::uint64_t kTagSelection = 0x102;
constexpr std::uint64_t kTagRun = 0x103;
constexpr std::uint64_t kTagTask = 0x104;
constexpr std::uint64_t kTagDefendScenario = 0x201;
constexpr std::uint64_t kTagTransferScenario = 0x202;

std::string zero_pad(int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*d", width, value);
    return buf;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::unique_ptr<Embedder> ExperimentConfig::make_text_embedder() const {
    return make_embedder(embedder, detector.dim);
}

std::unique_ptr<Backend> ExperimentConfig::make_dialogue_backend() const {
    if (backend == "scripted") return nullptr;
    if (backend == "external_llm")
        return std::make_unique<HttpChatBackend>(HttpChatBackend::from_environment());
    throw std::invalid_argument("unknown backend: " + backend);
}

UGraphOptions ExperimentConfig::ugraph_options() const {
    return UGraphOptions{node_feature_mode_from_string(node_feature_mode), char_budget};
}

nlohmann::json ExperimentConfig::to_json() const {
    return nlohmann::json{{"topology", topology},
                          {"agents", agents},
                          {"density", density},
                          {"orientation", orientation},
                          {"rounds", rounds},
                          {"attack", attack},
                          {"attacker_count", attacker_count},
                          {"template_id", template_id},
                          {"label_semantics", label_semantics},
                          {"poison_entries", poison_entries},
                          {"template_dir", template_dir},
                          {"backend", backend},
                          {"gold_prior", gold_prior},
                          {"susceptibility", susceptibility},
                          {"persuasion", persuasion},
                          {"embedder", embedder},
                          {"node_feature_mode", node_feature_mode},
                          {"char_budget", char_budget},
                          {"detector", detector.to_json()},
                          {"aggregation", aggregation},
                          {"exclude_detected_from_vote", exclude_detected_from_vote},
                          {"oracle_defense", oracle_defense},
                          {"count_seeds_in_asr", count_seeds_in_asr},
                          {"transfer_density", transfer_density},
                          {"transfer_attacker_fraction", transfer_attacker_fraction},
                          {"run_seed", run_seed},
                          {"attack_seed", attack_seed},
                          {"init_seed", init_seed}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.topology = j.at("topology").get<std::string>();
    c.agents = j.at("agents").get<int>();
    c.density = j.at("density").get<double>();
    c.orientation = j.at("orientation").get<std::string>();
    c.rounds = j.at("rounds").get<int>();
    c.attack = j.at("attack").get<std::string>();
    c.attacker_count = j.at("attacker_count").get<int>();
    c.template_id = j.at("template_id").get<int>();
    c.label_semantics = j.at("label_semantics").get<std::string>();
    c.poison_entries = j.at("poison_entries").get<int>();
    c.template_dir = j.at("template_dir").get<std::string>();
    c.backend = j.at("backend").get<std::string>();
    c.gold_prior = j.at("gold_prior").get<double>();
    c.susceptibility = j.at("susceptibility").get<double>();
    c.persuasion = j.at("persuasion").get<double>();
    c.embedder = j.at("embedder").get<std::string>();
    c.node_feature_mode = j.at("node_feature_mode").get<std::string>();
    c.char_budget = j.at("char_budget").get<std::size_t>();
    c.detector = DetectorHyper::from_json(j.at("detector"));
    c.aggregation = j.at("aggregation").get<std::string>();
    c.exclude_detected_from_vote = j.at("exclude_detected_from_vote").get<bool>();
    c.oracle_defense = j.at("oracle_defense").get<bool>();
    c.count_seeds_in_asr = j.at("count_seeds_in_asr").get<bool>();
    c.transfer_density = j.at("transfer_density").get<double>();
    c.transfer_attacker_fraction = j.at("transfer_attacker_fraction").get<double>();
    c.run_seed = j.at("run_seed").get<std::uint64_t>();
    c.attack_seed = j.at("attack_seed").get<std::uint64_t>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    return c;
}

Task make_task(std::uint64_t seed, const std::string& qid) {
    static const char* kLetters[] = {"A", "B", "C", "D", "E"};
    SplitMix64 rng(derive_seed(seed, kTagTask));
    const std::size_t gold = static_cast<std::size_t>(rng.next_index(5));
    const std::size_t distractor = (gold + 1 + rng.next_index(4)) % 5;
    Task t;
    t.id = qid;
    t.question = "Which option is correct for item " + qid + "?";
    t.gold = kLetters[gold];
    t.distractor = kLetters[distractor];
    return t;
}

MultiAgentSystem make_scenario(const ScenarioSpec& spec, std::uint64_t scenario_seed) {
    CommunicationGraph graph =
        generate_topology(spec.kind, spec.n, spec.density, derive_seed(scenario_seed, kTagTopology),
                          spec.orientation);
    Task task = make_task(scenario_seed, spec.qid);
    MultiAgentSystem system =
        make_system(graph, task, spec.contagion, derive_seed(scenario_seed, kTagRun));
    system.aggregation = spec.aggregation;
    system.exclude_detected_from_vote = spec.exclude_detected_from_vote;

    AttackConfig attack_cfg;
    attack_cfg.kind = spec.attack;
    attack_cfg.attacker_count = spec.attack == AttackKind::none ? 0 : spec.attacker_count;
    attack_cfg.selection_seed = derive_seed(scenario_seed, kTagSelection, spec.attack_seed);
    attack_cfg.payload.template_id = spec.template_id;
    attack_cfg.label_semantics = spec.semantics;
    attack_cfg.poison_entries = spec.poison_entries;
    inject(system, attack_cfg, spec.templates);
    return system;
}

namespace {

ScenarioSpec spec_from_config(const ExperimentConfig& cfg) {
    ScenarioSpec spec;
    spec.kind = topology_kind_from_string(cfg.topology);
    spec.n = cfg.agents;
    spec.density = cfg.density;
    spec.orientation = orientation_from_string(cfg.orientation);
    spec.attack = attack_kind_from_string(cfg.attack);
    spec.attacker_count = cfg.attacker_count;
    spec.template_id = cfg.template_id;
    spec.poison_entries = cfg.poison_entries;
    spec.semantics = label_semantics_from_string(cfg.label_semantics);
    spec.contagion = cfg.contagion();
    spec.aggregation = aggregation_from_string(cfg.aggregation);
    spec.exclude_detected_from_vote = cfg.exclude_detected_from_vote;
    spec.attack_seed = cfg.attack_seed;
    if (!cfg.template_dir.empty()) spec.templates = AttackTemplates::load(cfg.template_dir);
    return spec;
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void cmd_generate(const ExperimentConfig& cfg, int samples,
                  const std::filesystem::path& out_dir) {
    if (samples < 1) throw std::invalid_argument("sample count must be positive");
    std::filesystem::create_directories(out_dir);

    auto embedder = cfg.make_text_embedder();
    const FusionParams fusion = FusionParams::identity(cfg.detector.dim);
    const UGraphOptions options = cfg.ugraph_options();
    const AttackTemplates templates =
        cfg.template_dir.empty() ? AttackTemplates::builtin() : AttackTemplates::load(cfg.template_dir);

    static const TopologyKind kKinds[] = {TopologyKind::chain, TopologyKind::tree,
                                          TopologyKind::star, TopologyKind::random_graph};
    static const double kDensities[] = {0.2, 0.4, 0.6, 0.8, 1.0};
    static const AttackKind kAttacks[] = {AttackKind::prompt_injection,
                                          AttackKind::memory_poison, AttackKind::tool_attack};

    std::unique_ptr<Backend> external = cfg.make_dialogue_backend();
    std::ostringstream graphs;
    for (int i = 0; i < samples; ++i) {
        const std::uint64_t sample_seed =
            derive_seed(cfg.run_seed, stream::corpus_sample, static_cast<std::uint64_t>(i));
        SplitMix64 rng(sample_seed);

        ScenarioSpec spec = spec_from_config(cfg);
        spec.templates = templates;
        spec.kind = kKinds[rng.next_index(std::size(kKinds))];
        spec.density =
            spec.kind == TopologyKind::random_graph ? kDensities[rng.next_index(5)] : 1.0;
        spec.attack = kAttacks[rng.next_index(std::size(kAttacks))];
        spec.attacker_count = 1 + static_cast<int>(rng.next_index(2));
        spec.qid = "q" + std::to_string(i);

        MultiAgentSystem system = make_scenario(spec, sample_seed);
        Transcript transcript = run_dialogue(system, cfg.rounds, external.get());

        const std::string run_id = "sample_" + zero_pad(i, 4);
        for (int t = 0; t < cfg.rounds; ++t) {
            UtteranceGraph g = build_graph(transcript, t, *embedder, fusion, true, options);
            g.run_id = run_id;
            g.topology = spec.kind;
            g.attack = spec.attack;
            graphs << g.to_jsonl();
        }
    }

    write_text_file(out_dir / "graphs.jsonl", graphs.str());
    nlohmann::json manifest{{"format", 1}, {"samples", samples}, {"config", cfg.to_json()}};
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

std::vector<UtteranceGraph> load_corpus(const std::filesystem::path& corpus_dir) {
    const std::filesystem::path file = corpus_dir / "graphs.jsonl";
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot read corpus: " + file.string());
    std::vector<UtteranceGraph> graphs = parse_graph_records(in);
    if (graphs.empty()) throw std::runtime_error("corpus is empty: " + file.string());
    return graphs;
}

std::pair<DetectorParams, TrainReport> cmd_train(const ExperimentConfig& cfg,
                                                 const std::filesystem::path& corpus_dir,
                                                 const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<UtteranceGraph> corpus = load_corpus(corpus_dir);
    auto [params, report] = train(corpus, cfg.detector, cfg.init_seed);
    params.save(out_dir / "checkpoint.bin");
    write_text_file(out_dir / "train_report.json", report.to_json().dump(2) + "\n");
    return {std::move(params), std::move(report)};
}

std::string cmd_defend(const ExperimentConfig& cfg, const DetectorParams& params,
                       int scenario_count, const std::filesystem::path& out_dir) {
    if (scenario_count < 1) throw std::invalid_argument("scenario count must be positive");
    if (params.dim != cfg.detector.dim)
        throw std::invalid_argument("checkpoint dims do not match config");
    std::filesystem::create_directories(out_dir);

    auto embedder = cfg.make_text_embedder();
    std::unique_ptr<Backend> external = cfg.make_dialogue_backend();
    DefenseHook hook = cfg.oracle_defense
                           ? make_oracle_hook()
                           : make_detector_hook(params, *embedder, cfg.detector.threshold);

    std::vector<Transcript> baseline;
    std::vector<Transcript> defended;
    for (int k = 0; k < scenario_count; ++k) {
        const std::uint64_t scenario_seed =
            derive_seed(cfg.run_seed, kTagDefendScenario, static_cast<std::uint64_t>(k));
        ScenarioSpec spec = spec_from_config(cfg);
        spec.qid = "d" + std::to_string(k);
        MultiAgentSystem base_system = make_scenario(spec, scenario_seed);
        MultiAgentSystem defended_system = base_system;

        baseline.push_back(run_dialogue(base_system, cfg.rounds, external.get()));
        defended.push_back(run_dialogue(defended_system, cfg.rounds, external.get(), hook));

        write_text_file(out_dir / ("baseline_" + zero_pad(k, 3) + ".jsonl"),
                        baseline.back().to_jsonl());
        write_text_file(out_dir / ("defended_" + zero_pad(k, 3) + ".jsonl"),
                        defended.back().to_jsonl());
    }

    std::string table = asr_table(baseline, defended);
    write_text_file(out_dir / "table.tsv", table);

    // Machine-readable companion to the table: one record per round.
    std::ostringstream records;
    for (int r = 0; r < cfg.rounds; ++r) {
        double b = 0.0;
        double d = 0.0;
        for (int k = 0; k < scenario_count; ++k) {
            b += asr(baseline[static_cast<std::size_t>(k)], r, cfg.count_seeds_in_asr);
            d += asr(defended[static_cast<std::size_t>(k)], r, cfg.count_seeds_in_asr);
        }
        records << nlohmann::json{{"round", r},
                                  {"baseline_asr", b / scenario_count},
                                  {"defended_asr", d / scenario_count}}
                       .dump()
                << "\n";
    }
    write_text_file(out_dir / "asr.jsonl", records.str());
    return table;
}

std::string cmd_transfer(const ExperimentConfig& cfg, const DetectorParams& params,
                         const std::vector<int>& sizes, int scenarios_per_size,
                         const std::filesystem::path& out_dir) {
    if (sizes.empty()) throw std::invalid_argument("transfer needs at least one size");
    if (scenarios_per_size < 1) throw std::invalid_argument("scenario count must be positive");
    std::filesystem::create_directories(out_dir);

    auto embedder = cfg.make_text_embedder();
    std::unique_ptr<Backend> external = cfg.make_dialogue_backend();
    const UGraphOptions options = cfg.ugraph_options();
    DefenseHook hook = cfg.oracle_defense
                           ? make_oracle_hook()
                           : make_detector_hook(params, *embedder, cfg.detector.threshold);

    std::ostringstream table;
    table << "size\tf1";
    for (int r = 0; r < cfg.rounds; ++r) table << "\tR" << r;
    table << "\n";

    for (int size : sizes) {
        std::vector<Transcript> baseline;
        std::vector<Transcript> defended;
        Vec probs;
        std::vector<std::uint8_t> labels;

        for (int k = 0; k < scenarios_per_size; ++k) {
            const std::uint64_t scenario_seed =
                derive_seed(cfg.run_seed, kTagTransferScenario, static_cast<std::uint64_t>(size),
                            static_cast<std::uint64_t>(k));
            ScenarioSpec spec = spec_from_config(cfg);
            // Scaled systems communicate over general random graphs, not the
            // debate presets.
            spec.kind = TopologyKind::random_graph;
            spec.n = size;
            spec.density = cfg.transfer_density;
            spec.attacker_count = std::max(
                2, static_cast<int>(std::lround(cfg.transfer_attacker_fraction * size)));
            spec.qid = "t" + std::to_string(size) + "_" + std::to_string(k);

            MultiAgentSystem base_system = make_scenario(spec, scenario_seed);
            MultiAgentSystem defended_system = base_system;
            baseline.push_back(run_dialogue(base_system, cfg.rounds, external.get()));
            defended.push_back(
                run_dialogue(defended_system, cfg.rounds, external.get(), hook));

            // Detection quality measured on the undefended run's graphs.
            const Transcript& tr = baseline.back();
            for (int t = 0; t < cfg.rounds; ++t) {
                UtteranceGraph g = build_graph(tr, t, *embedder, params.fusion, true, options);
                Prediction pred = forward(g, params);
                probs.insert(probs.end(), pred.prob.begin(), pred.prob.end());
                labels.insert(labels.end(), g.labels.begin(), g.labels.end());
            }
        }

        RecognitionMetrics rec = recognition(probs, labels, cfg.detector.threshold);
        table << size << "\t" << (rec.f1 ? fmt2(*rec.f1) : std::string("-"));
        for (int r = 0; r < cfg.rounds; ++r) {
            double b = 0.0;
            double d = 0.0;
            for (int k = 0; k < scenarios_per_size; ++k) {
                b += asr(baseline[static_cast<std::size_t>(k)], r, cfg.count_seeds_in_asr);
                d += asr(defended[static_cast<std::size_t>(k)], r, cfg.count_seeds_in_asr);
            }
            b = 100.0 * b / scenarios_per_size;
            d = 100.0 * d / scenarios_per_size;
            table << "\t" << fmt2(b) << "/" << fmt2(d);
        }
        table << "\n";
    }

    std::string out = table.str();
    write_text_file(out_dir / "transfer.tsv", out);
    return out;
}

namespace {

std::string metric_cell(const std::optional<double>& v) {
    return v ? fmt2(*v) : std::string("-");
}

}  // namespace

std::string cmd_eval(const ExperimentConfig& cfg, const DetectorParams& params,
                     const std::filesystem::path& corpus_dir,
                     const std::vector<std::string>& holdout_runs,
                     const std::filesystem::path& out_dir) {
    std::vector<UtteranceGraph> corpus = load_corpus(corpus_dir);
    std::vector<const UtteranceGraph*> selected;
    if (holdout_runs.empty()) {
        for (const UtteranceGraph& g : corpus) selected.push_back(&g);
    } else {
        std::vector<std::string> sorted = holdout_runs;
        std::sort(sorted.begin(), sorted.end());
        for (const UtteranceGraph& g : corpus)
            if (std::binary_search(sorted.begin(), sorted.end(), g.run_id))
                selected.push_back(&g);
    }
    if (selected.empty()) throw std::invalid_argument("held-out set is empty");

    struct Bucket {
        Vec probs;
        std::vector<std::uint8_t> labels;
        int graphs = 0;
    };
    std::map<std::string, Bucket> groups;
    auto add_to = [&](const std::string& key, const Prediction& pred,
                      const std::vector<std::uint8_t>& labels) {
        Bucket& b = groups[key];
        b.probs.insert(b.probs.end(), pred.prob.begin(), pred.prob.end());
        b.labels.insert(b.labels.end(), labels.begin(), labels.end());
        b.graphs += 1;
    };

    for (const UtteranceGraph* g : selected) {
        Prediction pred = forward(*g, params);
        add_to("all", pred, g->labels);
        add_to("topology:" + to_string(g->topology), pred, g->labels);
        add_to("attack:" + to_string(g->attack), pred, g->labels);
        add_to("round:" + std::to_string(g->round), pred, g->labels);
    }

    std::ostringstream out;
    std::ostringstream records;
    out << "group\tgraphs\taccuracy\tprecision\trecall\tf1\tauc\n";
    auto opt_json = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const auto& [key, bucket] : groups) {
        RecognitionMetrics m = recognition(bucket.probs, bucket.labels, cfg.detector.threshold);
        out << key << "\t" << bucket.graphs << "\t" << metric_cell(m.accuracy) << "\t"
            << metric_cell(m.precision) << "\t" << metric_cell(m.recall) << "\t"
            << metric_cell(m.f1) << "\t" << metric_cell(m.auc) << "\n";
        records << nlohmann::json{{"group", key},          {"graphs", bucket.graphs},
                                  {"accuracy", opt_json(m.accuracy)},
                                  {"precision", opt_json(m.precision)},
                                  {"recall", opt_json(m.recall)},
                                  {"f1", opt_json(m.f1)},  {"auc", opt_json(m.auc)}}
                       .dump()
                << "\n";
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_text_file(out_dir / "eval.tsv", out.str());
        write_text_file(out_dir / "eval.jsonl", records.str());
    }
    return out.str();
}

}  // namespace masguard
