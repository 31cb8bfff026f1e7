#include "masguard/ugraph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace masguard {

FusionParams FusionParams::identity(std::size_t dim) {
    FusionParams f;
    f.weight = Matrix(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) f.weight(i, i) = 1.0;
    f.bias.assign(dim, 0.0);
    return f;
}

Vec fuse_edge(const std::vector<Vec>& history, const FusionParams& fusion) {
    if (history.empty()) throw std::invalid_argument("fuse_edge needs a non-empty history");
    const std::size_t dim = history.front().size();
    for (const Vec& v : history)
        if (v.size() != dim) throw std::invalid_argument("fuse_edge history dims disagree");

    std::vector<const Vec*> sorted;
    sorted.reserve(history.size());
    for (const Vec& v : history) sorted.push_back(&v);
    std::sort(sorted.begin(), sorted.end(),
              [](const Vec* a, const Vec* b) { return *a < *b; });

    Vec mean(dim, 0.0);
    for (const Vec* v : sorted) add_scaled(mean, 1.0, *v);
    for (double& x : mean) x /= static_cast<double>(history.size());

    Vec out = matvec(fusion.weight, mean);
    add_scaled(out, 1.0, fusion.bias);
    return out;
}

NodeFeatureMode node_feature_mode_from_string(std::string_view s) {
    if (s == "concat") return NodeFeatureMode::concat;
    if (s == "pooled") return NodeFeatureMode::pooled;
    throw std::invalid_argument("unknown node feature mode: " + std::string(s));
}

std::string to_string(NodeFeatureMode m) {
    return m == NodeFeatureMode::concat ? "concat" : "pooled";
}

namespace {

void check_round(const Transcript& transcript, int round) {
    if (round < 0 || round >= transcript.round_count())
        throw std::invalid_argument("round not present in transcript");
}

}  // namespace

Matrix build_node_features(const Transcript& transcript, int round, const Embedder& embedder,
                           const UGraphOptions& options) {
    check_round(transcript, round);
    const std::size_t dim = embedder.dim();
    Matrix features(static_cast<std::size_t>(transcript.n), dim);

    for (AgentId i = 0; i < transcript.n; ++i) {
        Vec row;
        if (options.mode == NodeFeatureMode::concat) {
            // Newest first, so truncation keeps the current utterance dominant.
            std::string text;
            for (int t = round; t >= 0; --t) {
                if (!text.empty()) text += ' ';
                text += transcript.rounds[static_cast<std::size_t>(t)]
                                          [static_cast<std::size_t>(i)]
                            .text;
                if (text.size() >= options.char_budget) {
                    text.resize(options.char_budget);
                    break;
                }
            }
            row = embedder.embed(text);
        } else {
            row.assign(dim, 0.0);
            for (int t = 0; t <= round; ++t)
                add_scaled(row, 1.0,
                           embedder.embed(transcript.rounds[static_cast<std::size_t>(t)]
                                                           [static_cast<std::size_t>(i)]
                                              .text));
            double norm = 0.0;
            for (double x : row) norm += x * x;
            norm = std::sqrt(norm);
            if (norm > 0.0)
                for (double& x : row) x /= norm;
        }
        for (std::size_t j = 0; j < dim; ++j) features(static_cast<std::size_t>(i), j) = row[j];
    }
    return features;
}

UtteranceGraph build_graph(const Transcript& transcript, int round, const Embedder& embedder,
                           const FusionParams& fusion, bool with_labels,
                           const UGraphOptions& options) {
    check_round(transcript, round);
    const std::size_t dim = embedder.dim();
    if (fusion.weight.rows != dim || fusion.weight.cols != dim || fusion.bias.size() != dim)
        throw std::invalid_argument("fusion parameter dims do not match the embedder");

    UtteranceGraph g;
    g.round = round;
    g.n = transcript.n;
    g.dim = dim;
    g.node_features = build_node_features(transcript, round, embedder, options);

    // Delivered texts per edge, oldest first. Repeated texts share one
    // embedding via the cache; a broadcast round reuses the same utterance on
    // every out-edge.
    std::map<std::pair<AgentId, AgentId>, std::vector<const std::string*>> delivered;
    for (const MessageRecord& m : transcript.messages)
        if (m.round <= round) delivered[{m.src, m.dst}].push_back(&m.text);

    std::unordered_map<std::string, Vec> cache;
    auto embed_cached = [&](const std::string& text) -> const Vec& {
        auto it = cache.find(text);
        if (it == cache.end()) it = cache.emplace(text, embedder.embed(text)).first;
        return it->second;
    };

    for (const Edge& e : transcript.live_edges[static_cast<std::size_t>(round)]) {
        EdgeFeature feature;
        feature.src = e.src;
        feature.dst = e.dst;
        auto it = delivered.find({e.src, e.dst});
        if (it != delivered.end() && !it->second.empty()) {
            std::vector<Vec> history;
            history.reserve(it->second.size());
            for (const std::string* text : it->second) history.push_back(embed_cached(*text));
            feature.hist_count = static_cast<int>(history.size());
            feature.fused = fuse_edge(history, fusion);
            std::sort(history.begin(), history.end());
            feature.hist_mean.assign(dim, 0.0);
            for (const Vec& v : history) add_scaled(feature.hist_mean, 1.0, v);
            for (double& x : feature.hist_mean) x /= static_cast<double>(history.size());
        } else {
            feature.fused.assign(dim, 0.0);
        }
        g.edges.push_back(std::move(feature));
    }

    if (with_labels) {
        if (static_cast<std::size_t>(round) >= transcript.labels.size())
            throw std::invalid_argument("transcript has no labels for this round");
        g.labels = transcript.labels[static_cast<std::size_t>(round)].labels;
    }
    return g;
}

std::string UtteranceGraph::to_jsonl() const {
    std::ostringstream out;
    out << nlohmann::json{{"type", "ugraph"},
                          {"run", run_id},
                          {"round", round},
                          {"n", n},
                          {"dim", dim},
                          {"topology", to_string(topology)},
                          {"attack", to_string(attack)},
                          {"labels", labels}}
               .dump()
        << "\n";
    for (int i = 0; i < n; ++i) {
        Vec row(dim);
        for (std::size_t c = 0; c < dim; ++c) row[c] = node_features(static_cast<std::size_t>(i), c);
        out << nlohmann::json{{"type", "node"}, {"i", i}, {"x", row}}.dump() << "\n";
    }
    for (const EdgeFeature& e : edges) {
        out << nlohmann::json{{"type", "edge"},
                              {"src", e.src},
                              {"dst", e.dst},
                              {"hist_mean", e.hist_mean},
                              {"hist_count", e.hist_count},
                              {"fused", e.fused}}
                   .dump()
            << "\n";
    }
    return out.str();
}

std::vector<UtteranceGraph> parse_graph_records(std::istream& in) {
    std::vector<UtteranceGraph> graphs;
    std::string line;
    int nodes_seen = 0;
    auto finalize = [&]() {
        if (graphs.empty()) return;
        if (nodes_seen != graphs.back().n)
            throw std::invalid_argument("graph record is missing node rows");
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        const std::string type = j.at("type").get<std::string>();
        if (type == "ugraph") {
            finalize();
            UtteranceGraph g;
            g.run_id = j.at("run").get<std::string>();
            g.round = j.at("round").get<int>();
            g.n = j.at("n").get<int>();
            g.dim = j.at("dim").get<std::size_t>();
            g.topology = topology_kind_from_string(j.at("topology").get<std::string>());
            g.attack = attack_kind_from_string(j.at("attack").get<std::string>());
            g.labels = j.at("labels").get<std::vector<std::uint8_t>>();
            g.node_features = Matrix(static_cast<std::size_t>(g.n), g.dim);
            graphs.push_back(std::move(g));
            nodes_seen = 0;
        } else if (type == "node") {
            if (graphs.empty()) throw std::invalid_argument("node record before graph header");
            UtteranceGraph& g = graphs.back();
            const int i = j.at("i").get<int>();
            Vec row = j.at("x").get<Vec>();
            if (i < 0 || i >= g.n || row.size() != g.dim)
                throw std::invalid_argument("node record shape mismatch");
            for (std::size_t c = 0; c < g.dim; ++c)
                g.node_features(static_cast<std::size_t>(i), c) = row[c];
            ++nodes_seen;
        } else if (type == "edge") {
            if (graphs.empty()) throw std::invalid_argument("edge record before graph header");
            EdgeFeature f;
            f.src = j.at("src").get<int>();
            f.dst = j.at("dst").get<int>();
            f.hist_mean = j.at("hist_mean").get<Vec>();
            f.hist_count = j.at("hist_count").get<int>();
            f.fused = j.at("fused").get<Vec>();
            graphs.back().edges.push_back(std::move(f));
        } else {
            throw std::invalid_argument("unknown graph record type: " + type);
        }
    }
    finalize();
    return graphs;
}

UtteranceGraph UtteranceGraph::from_jsonl(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::vector<UtteranceGraph> graphs = parse_graph_records(in);
    if (graphs.size() != 1)
        throw std::invalid_argument("expected exactly one graph block, got " +
                                    std::to_string(graphs.size()));
    return std::move(graphs.front());
}

}  // namespace masguard
