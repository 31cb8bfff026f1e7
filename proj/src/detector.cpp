#include "masguard/detector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "masguard/engine.hpp"
#include "masguard/metrics.hpp"
#include "masguard/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace masguard {

constexpr double kProbEps = 1e-12;
constexpr std::uint32_t kCheckpointMagic = 0x4447524DU;  // "MRGD" little-endian
constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json DetectorHyper::to_json() const {
    return nlohmann::json{{"dim", dim},
                          {"hidden", hidden},
                          {"layers", layers},
                          {"threshold", threshold},
                          {"epochs", epochs},
                          {"learning_rate", learning_rate},
                          {"beta1", beta1},
                          {"beta2", beta2},
                          {"epsilon", epsilon},
                          {"validation_fraction", validation_fraction},
                          {"positive_weight_cap", positive_weight_cap}};
}

DetectorHyper DetectorHyper::from_json(const nlohmann::json& j) {
    DetectorHyper h;
    h.dim = j.at("dim").get<std::size_t>();
    h.hidden = j.at("hidden").get<std::size_t>();
    h.layers = j.at("layers").get<int>();
    h.threshold = j.at("threshold").get<double>();
    h.epochs = j.at("epochs").get<int>();
    h.learning_rate = j.at("learning_rate").get<double>();
    h.beta1 = j.at("beta1").get<double>();
    h.beta2 = j.at("beta2").get<double>();
    h.epsilon = j.at("epsilon").get<double>();
    h.validation_fraction = j.at("validation_fraction").get<double>();
    h.positive_weight_cap = j.at("positive_weight_cap").get<double>();
    return h;
}

DetectorParams DetectorParams::zeros(std::size_t dim, std::size_t hidden, int layers) {
    if (dim == 0 || hidden == 0 || layers < 1)
        throw std::invalid_argument("detector needs positive dim, hidden and layer count");
    DetectorParams p;
    p.dim = dim;
    p.hidden = hidden;
    p.fusion.weight = Matrix(dim, dim);
    p.fusion.bias.assign(dim, 0.0);
    for (int l = 0; l < layers; ++l) {
        LayerParams layer;
        const std::size_t in = (l == 0) ? dim : hidden;
        layer.w_self = Matrix(hidden, in);
        layer.w_nbr = Matrix(hidden, in);
        layer.w_edge = Matrix(hidden, dim);
        layer.bias.assign(hidden, 0.0);
        p.layers.push_back(std::move(layer));
    }
    p.cls_weight.assign(hidden, 0.0);
    p.cls_bias = 0.0;
    return p;
}

std::vector<DetectorParams::TensorRef> DetectorParams::named_tensors() {
    std::vector<TensorRef> refs;
    refs.push_back({"fusion.weight", fusion.weight.data.data(), fusion.weight.data.size()});
    refs.push_back({"fusion.bias", fusion.bias.data(), fusion.bias.size()});
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        refs.push_back({prefix + "w_self", layers[l].w_self.data.data(),
                        layers[l].w_self.data.size()});
        refs.push_back(
            {prefix + "w_nbr", layers[l].w_nbr.data.data(), layers[l].w_nbr.data.size()});
        refs.push_back(
            {prefix + "w_edge", layers[l].w_edge.data.data(), layers[l].w_edge.data.size()});
        refs.push_back({prefix + "bias", layers[l].bias.data(), layers[l].bias.size()});
    }
    refs.push_back({"cls.weight", cls_weight.data(), cls_weight.size()});
    refs.push_back({"cls.bias", &cls_bias, 1});
    return refs;
}

namespace {

void fill_glorot(Matrix& m, SplitMix64& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
    for (double& x : m.data) x = rng.next_in(-a, a);
}

}  // namespace

DetectorParams DetectorParams::glorot(std::size_t dim, std::size_t hidden, int layers,
                                      std::uint64_t seed) {
    DetectorParams p = zeros(dim, hidden, layers);
    SplitMix64 rng(derive_seed(seed, stream::param_init));
    fill_glorot(p.fusion.weight, rng);
    for (LayerParams& layer : p.layers) {
        fill_glorot(layer.w_self, rng);
        fill_glorot(layer.w_nbr, rng);
        fill_glorot(layer.w_edge, rng);
    }
    const double a = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    for (double& x : p.cls_weight) x = rng.next_in(-a, a);
    return p;
}

void DetectorParams::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_u32(kCheckpointMagic);
    put_u32(kCheckpointVersion);
    put_u32(static_cast<std::uint32_t>(dim));
    put_u32(static_cast<std::uint32_t>(hidden));
    put_u32(static_cast<std::uint32_t>(layers.size()));
    auto refs = const_cast<DetectorParams*>(this)->named_tensors();
    put_u32(static_cast<std::uint32_t>(refs.size()));
    for (const auto& ref : refs) {
        put_u32(static_cast<std::uint32_t>(ref.name.size()));
        out.write(ref.name.data(), static_cast<std::streamsize>(ref.name.size()));
        put_u64(ref.size);
        out.write(reinterpret_cast<const char*>(ref.data),
                  static_cast<std::streamsize>(ref.size * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

DetectorParams DetectorParams::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    auto get_u32 = [&]() {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get_u64 = [&]() {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    if (get_u32() != kCheckpointMagic)
        throw std::runtime_error("not a detector checkpoint: " + path.string());
    if (get_u32() != kCheckpointVersion)
        throw std::runtime_error("unsupported checkpoint version: " + path.string());
    const std::uint32_t dim = get_u32();
    const std::uint32_t hidden = get_u32();
    const std::uint32_t layer_count = get_u32();
    DetectorParams p = zeros(dim, hidden, static_cast<int>(layer_count));
    auto refs = p.named_tensors();
    const std::uint32_t tensor_count = get_u32();
    if (tensor_count != refs.size())
        throw std::runtime_error("checkpoint tensor count mismatch");
    for (auto& ref : refs) {
        const std::uint32_t name_len = get_u32();
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (name != ref.name) throw std::runtime_error("checkpoint tensor order mismatch: " + name);
        const std::uint64_t count = get_u64();
        if (count != ref.size)
            throw std::runtime_error("checkpoint shape mismatch for tensor " + name);
        in.read(reinterpret_cast<char*>(ref.data),
                static_cast<std::streamsize>(count * sizeof(double)));
    }
    if (!in) throw std::runtime_error("checkpoint truncated: " + path.string());
    return p;
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct ForwardCache {
    std::vector<Vec> fused;                   // per edge
    std::vector<std::vector<Vec>> edge_pre;   // [layer][edge] pre-relu psi
    std::vector<Matrix> node_pre;             // [layer] n x H pre-relu combine
    std::vector<Matrix> h;                    // [0..L] activations
    std::vector<std::vector<std::size_t>> in_edges;  // per node
};

Vec row_of(const Matrix& m, std::size_t i) {
    Vec v(m.cols);
    for (std::size_t j = 0; j < m.cols; ++j) v[j] = m(i, j);
    return v;
}

void check_graph(const UtteranceGraph& graph, const DetectorParams& params) {
    if (graph.dim != params.dim)
        throw std::invalid_argument("graph feature dim does not match detector params");
    if (graph.node_features.rows != static_cast<std::size_t>(graph.n) ||
        graph.node_features.cols != graph.dim)
        throw std::invalid_argument("node feature matrix shape mismatch");
    for (double x : graph.node_features.data)
        if (!std::isfinite(x)) throw std::domain_error("non-finite node feature");
    for (const EdgeFeature& e : graph.edges) {
        if (e.src < 0 || e.src >= graph.n || e.dst < 0 || e.dst >= graph.n)
            throw std::invalid_argument("edge endpoint out of range");
        if (e.hist_count > 0 && e.hist_mean.size() != graph.dim)
            throw std::invalid_argument("edge history width mismatch");
        for (double x : e.hist_mean)
            if (!std::isfinite(x)) throw std::domain_error("non-finite edge feature");
    }
}

Prediction forward_cached(const UtteranceGraph& graph, const DetectorParams& params,
                          ForwardCache& cache) {
    check_graph(graph, params);
    const std::size_t n = static_cast<std::size_t>(graph.n);
    const std::size_t hidden = params.hidden;
    const int L = params.layer_count();

    cache.in_edges.assign(n, {});
    for (std::size_t e = 0; e < graph.edges.size(); ++e)
        cache.in_edges[static_cast<std::size_t>(graph.edges[e].dst)].push_back(e);

    cache.fused.resize(graph.edges.size());
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const EdgeFeature& edge = graph.edges[e];
        if (edge.hist_count > 0) {
            cache.fused[e] = matvec(params.fusion.weight, edge.hist_mean);
            add_scaled(cache.fused[e], 1.0, params.fusion.bias);
        } else {
            cache.fused[e].assign(params.dim, 0.0);
        }
    }

    cache.h.assign(1, graph.node_features);
    cache.edge_pre.assign(static_cast<std::size_t>(L), {});
    cache.node_pre.assign(static_cast<std::size_t>(L), Matrix(n, hidden));

    for (int l = 0; l < L; ++l) {
        const LayerParams& layer = params.layers[static_cast<std::size_t>(l)];
        const Matrix& prev = cache.h.back();
        auto& pre_edges = cache.edge_pre[static_cast<std::size_t>(l)];
        pre_edges.resize(graph.edges.size());

        for (std::size_t e = 0; e < graph.edges.size(); ++e) {
            const EdgeFeature& edge = graph.edges[e];
            Vec z = matvec(layer.w_nbr, row_of(prev, static_cast<std::size_t>(edge.src)));
            Vec ze = matvec(layer.w_edge, cache.fused[e]);
            add_scaled(z, 1.0, ze);
            pre_edges[e] = std::move(z);
        }

        Matrix next(n, hidden);
        Matrix& pre_nodes = cache.node_pre[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < n; ++i) {
            Vec s = matvec(layer.w_self, row_of(prev, i));
            add_scaled(s, 1.0, layer.bias);
            const auto& incoming = cache.in_edges[i];
            if (!incoming.empty()) {
                const double inv = 1.0 / static_cast<double>(incoming.size());
                for (std::size_t e : incoming) {
                    const Vec& z = pre_edges[e];
                    for (std::size_t k = 0; k < hidden; ++k)
                        if (z[k] > 0.0) s[k] += inv * z[k];
                }
            }
            for (std::size_t k = 0; k < hidden; ++k) {
                pre_nodes(i, k) = s[k];
                next(i, k) = s[k] > 0.0 ? s[k] : 0.0;
            }
        }
        cache.h.push_back(std::move(next));
    }

    Prediction pred;
    pred.logits.resize(n);
    pred.prob.resize(n);
    const Matrix& top = cache.h.back();
    for (std::size_t i = 0; i < n; ++i) {
        double z = params.cls_bias;
        for (std::size_t k = 0; k < hidden; ++k) z += params.cls_weight[k] * top(i, k);
        pred.logits[i] = z;
        pred.prob[i] = sigmoid(z);
    }
    return pred;
}

}  // namespace

Prediction forward(const UtteranceGraph& graph, const DetectorParams& params) {
    ForwardCache cache;
    return forward_cached(graph, params, cache);
}

double loss(const Prediction& pred, const std::vector<std::uint8_t>& labels, double pos_weight) {
    if (pred.prob.size() != labels.size())
        throw std::invalid_argument("loss: prediction and labels length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(pred.prob[i], kProbEps, 1.0 - kProbEps);
        total += labels[i] ? -pos_weight * std::log(p) : -std::log(1.0 - p);
    }
    return total / static_cast<double>(labels.size());
}

DetectorParams gradient(const UtteranceGraph& graph, const DetectorParams& params,
                        const std::vector<std::uint8_t>& labels, double pos_weight) {
    if (static_cast<std::size_t>(graph.n) != labels.size())
        throw std::invalid_argument("gradient: labels length mismatch");

    ForwardCache cache;
    Prediction pred = forward_cached(graph, params, cache);

    const std::size_t n = static_cast<std::size_t>(graph.n);
    const std::size_t hidden = params.hidden;
    const int L = params.layer_count();
    DetectorParams grads = DetectorParams::zeros(params.dim, params.hidden, L);

    // d loss / d logit; zero where the clamp flattened the objective.
    Vec dlogit(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = pred.prob[i];
        if (p <= kProbEps || p >= 1.0 - kProbEps) continue;
        const double w = labels[i] ? pos_weight : 1.0;
        dlogit[i] = w * (p - static_cast<double>(labels[i])) / static_cast<double>(n);
    }

    Matrix dh(n, hidden);
    const Matrix& top = cache.h.back();
    for (std::size_t i = 0; i < n; ++i) {
        grads.cls_bias += dlogit[i];
        for (std::size_t k = 0; k < hidden; ++k) {
            grads.cls_weight[k] += dlogit[i] * top(i, k);
            dh(i, k) = dlogit[i] * params.cls_weight[k];
        }
    }

    std::vector<Vec> dfused(graph.edges.size(), Vec(params.dim, 0.0));

    for (int l = L - 1; l >= 0; --l) {
        const LayerParams& layer = params.layers[static_cast<std::size_t>(l)];
        LayerParams& layer_grads = grads.layers[static_cast<std::size_t>(l)];
        const Matrix& prev = cache.h[static_cast<std::size_t>(l)];
        const Matrix& pre_nodes = cache.node_pre[static_cast<std::size_t>(l)];
        const auto& pre_edges = cache.edge_pre[static_cast<std::size_t>(l)];
        Matrix dprev(n, prev.cols);

        for (std::size_t i = 0; i < n; ++i) {
            Vec ds(hidden, 0.0);
            for (std::size_t k = 0; k < hidden; ++k)
                if (pre_nodes(i, k) > 0.0) ds[k] = dh(i, k);

            const Vec prev_i = row_of(prev, i);
            add_scaled(layer_grads.bias, 1.0, ds);
            add_outer(layer_grads.w_self, ds, prev_i);
            Vec back_self = matvec_transposed(layer.w_self, ds);
            for (std::size_t j = 0; j < prev.cols; ++j) dprev(i, j) += back_self[j];

            const auto& incoming = cache.in_edges[i];
            if (incoming.empty()) continue;
            const double inv = 1.0 / static_cast<double>(incoming.size());
            for (std::size_t e : incoming) {
                const EdgeFeature& edge = graph.edges[e];
                const Vec& z = pre_edges[e];
                Vec dz(hidden, 0.0);
                bool alive = false;
                for (std::size_t k = 0; k < hidden; ++k) {
                    if (z[k] > 0.0 && ds[k] != 0.0) {
                        dz[k] = inv * ds[k];
                        alive = true;
                    }
                }
                if (!alive) continue;
                const Vec prev_src = row_of(prev, static_cast<std::size_t>(edge.src));
                add_outer(layer_grads.w_nbr, dz, prev_src);
                add_outer(layer_grads.w_edge, dz, cache.fused[e]);
                Vec back_nbr = matvec_transposed(layer.w_nbr, dz);
                for (std::size_t j = 0; j < prev.cols; ++j)
                    dprev(static_cast<std::size_t>(edge.src), j) += back_nbr[j];
                Vec back_edge = matvec_transposed(layer.w_edge, dz);
                add_scaled(dfused[e], 1.0, back_edge);
            }
        }
        dh = std::move(dprev);
        // dh now matches cache.h[l]; gradients w.r.t. the input features
        // themselves (l == 0) are discarded.
    }

    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const EdgeFeature& edge = graph.edges[e];
        if (edge.hist_count == 0) continue;  // fused is a constant zero vector
        add_outer(grads.fusion.weight, dfused[e], edge.hist_mean);
        add_scaled(grads.fusion.bias, 1.0, dfused[e]);
    }
    return grads;
}

std::vector<AgentId> predict_attackers(const UtteranceGraph& graph, const DetectorParams& params,
                                       double threshold) {
    Prediction pred = forward(graph, params);
    std::vector<AgentId> out;
    for (std::size_t i = 0; i < pred.prob.size(); ++i)
        if (pred.prob[i] > threshold) out.push_back(static_cast<AgentId>(i));
    return out;
}

nlohmann::json TrainReport::to_json() const {
    auto opt_array = [](const std::vector<std::optional<double>>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& x : v) {
            if (x)
                a.push_back(*x);
            else
                a.push_back(nullptr);
        }
        return a;
    };
    nlohmann::json j{{"train_loss", train_loss},
                     {"val_loss", val_loss},
                     {"val_auc", opt_array(val_auc)},
                     {"val_f1", opt_array(val_f1)},
                     {"best_epoch", best_epoch},
                     {"val_runs", val_runs},
                     {"hyper", hyper}};
    j["best_val_auc"] = best_val_auc ? nlohmann::json(*best_val_auc) : nlohmann::json(nullptr);
    return j;
}

namespace {

struct AdamState {
    std::vector<Vec> m;
    std::vector<Vec> v;
    long step = 0;
};

double graph_pos_weight(const UtteranceGraph& g, double cap) {
    int pos = 0;
    for (std::uint8_t y : g.labels) pos += y ? 1 : 0;
    const int neg = static_cast<int>(g.labels.size()) - pos;
    if (pos == 0 || neg == 0) return 1.0;
    return std::min(cap, static_cast<double>(neg) / pos);
}

}  // namespace

std::pair<DetectorParams, TrainReport> train(const std::vector<UtteranceGraph>& corpus,
                                             const DetectorHyper& hyper, std::uint64_t seed) {
    if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
    for (const UtteranceGraph& g : corpus) {
        if (g.labels.size() != static_cast<std::size_t>(g.n))
            throw std::invalid_argument("train: corpus contains unlabeled graphs");
        if (g.dim != hyper.dim)
            throw std::invalid_argument("train: corpus dim does not match hyperparameters");
    }

    // Split by run id so no dialogue straddles train and validation.
    std::vector<std::string> runs;
    for (const UtteranceGraph& g : corpus) runs.push_back(g.run_id);
    std::sort(runs.begin(), runs.end());
    runs.erase(std::unique(runs.begin(), runs.end()), runs.end());
    SplitMix64 split_rng(derive_seed(seed, stream::split));
    split_rng.shuffle(runs);
    std::size_t val_count = static_cast<std::size_t>(
        std::floor(hyper.validation_fraction * static_cast<double>(runs.size())));
    if (runs.size() >= 2 && val_count == 0) val_count = 1;
    std::vector<std::string> val_runs(runs.begin(), runs.begin() + static_cast<std::ptrdiff_t>(val_count));
    std::sort(val_runs.begin(), val_runs.end());

    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (std::binary_search(val_runs.begin(), val_runs.end(), corpus[i].run_id))
            val_idx.push_back(i);
        else
            train_idx.push_back(i);
    }
    if (train_idx.empty()) throw std::invalid_argument("train: no training graphs after split");

    DetectorParams params = DetectorParams::glorot(hyper.dim, hyper.hidden, hyper.layers, seed);
    auto refs = params.named_tensors();
    AdamState adam;
    adam.m.resize(refs.size());
    adam.v.resize(refs.size());
    for (std::size_t t = 0; t < refs.size(); ++t) {
        adam.m[t].assign(refs[t].size, 0.0);
        adam.v[t].assign(refs[t].size, 0.0);
    }

    TrainReport report;
    report.hyper = hyper.to_json();
    report.val_runs = val_runs;

    DetectorParams best = params;
    double best_auc = -1.0;
    int best_epoch = -1;

    auto evaluate_validation = [&](const DetectorParams& p, double& out_loss,
                                   std::optional<double>& out_auc,
                                   std::optional<double>& out_f1) {
        Vec probs;
        std::vector<std::uint8_t> ys;
        double total = 0.0;
        for (std::size_t i : val_idx) {
            Prediction pred = forward(corpus[i], p);
            total += loss(pred, corpus[i].labels);
            probs.insert(probs.end(), pred.prob.begin(), pred.prob.end());
            ys.insert(ys.end(), corpus[i].labels.begin(), corpus[i].labels.end());
        }
        out_loss = val_idx.empty() ? 0.0 : total / static_cast<double>(val_idx.size());
        if (!ys.empty()) {
            RecognitionMetrics m = recognition(probs, ys, hyper.threshold);
            out_auc = m.auc;
            out_f1 = m.f1;
        }
    };

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::vector<std::size_t> order = train_idx;
        SplitMix64 shuffle_rng(derive_seed(seed, stream::train_shuffle,
                                           static_cast<std::uint64_t>(epoch)));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t gi : order) {
            const UtteranceGraph& g = corpus[gi];
            const double pw = graph_pos_weight(g, hyper.positive_weight_cap);
            Prediction pred = forward(g, params);
            epoch_loss += loss(pred, g.labels, pw);
            DetectorParams grads = gradient(g, params, g.labels, pw);
            auto gref = grads.named_tensors();
            auto pref = params.named_tensors();
            adam.step += 1;
            const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(adam.step));
            const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(adam.step));
            for (std::size_t t = 0; t < pref.size(); ++t) {
                for (std::size_t k = 0; k < pref[t].size; ++k) {
                    const double gk = gref[t].data[k];
                    adam.m[t][k] = hyper.beta1 * adam.m[t][k] + (1.0 - hyper.beta1) * gk;
                    adam.v[t][k] = hyper.beta2 * adam.v[t][k] + (1.0 - hyper.beta2) * gk * gk;
                    const double mhat = adam.m[t][k] / bc1;
                    const double vhat = adam.v[t][k] / bc2;
                    pref[t].data[k] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.epsilon);
                }
            }
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));

        double vloss = 0.0;
        std::optional<double> vauc;
        std::optional<double> vf1;
        evaluate_validation(params, vloss, vauc, vf1);
        report.val_loss.push_back(vloss);
        report.val_auc.push_back(vauc);
        report.val_f1.push_back(vf1);

        const double score = vauc.value_or(0.0);
        if (score > best_auc) {
            best_auc = score;
            best = params;
            best_epoch = epoch;
        }
    }

    report.best_epoch = best_epoch;
    if (best_epoch >= 0 && report.val_auc[static_cast<std::size_t>(best_epoch)])
        report.best_val_auc = report.val_auc[static_cast<std::size_t>(best_epoch)];
    if (best_epoch < 0) best = params;
    return {std::move(best), std::move(report)};
}

}  // namespace masguard
