#pragma once

// Shared random fixtures for detector tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <vector>

#include "masguard/detector.hpp"
#include "masguard/rng.hpp"
#include "masguard/ugraph.hpp"

namespace masguard::testing {

inline UtteranceGraph random_graph_fixture(SplitMix64& rng, int n, std::size_t dim,
                                           double edge_probability) {
    UtteranceGraph g;
    g.n = n;
    g.dim = dim;
    g.round = 0;
    g.node_features = Matrix(static_cast<std::size_t>(n), dim);
    for (double& x : g.node_features.data) x = rng.next_in(-1.0, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j || !rng.bernoulli(edge_probability)) continue;
            EdgeFeature e;
            e.src = i;
            e.dst = j;
            if (rng.bernoulli(0.85)) {
                e.hist_count = 1 + static_cast<int>(rng.next_index(4));
                e.hist_mean.resize(dim);
                for (double& x : e.hist_mean) x = rng.next_in(-1.0, 1.0);
            }
            e.fused.assign(dim, 0.0);  // recomputed by the detector from hist_mean
            g.edges.push_back(std::move(e));
        }
    }
    g.labels.resize(static_cast<std::size_t>(n));
    for (auto& y : g.labels) y = rng.bernoulli(0.3) ? 1 : 0;
    return g;
}

inline DetectorParams random_params(SplitMix64& rng, std::size_t dim, std::size_t hidden,
                                    int layers, double scale) {
    DetectorParams p = DetectorParams::zeros(dim, hidden, layers);
    for (auto& ref : p.named_tensors())
        for (std::size_t k = 0; k < ref.size; ++k) ref.data[k] = rng.next_in(-scale, scale);
    return p;
}

// Relabels nodes by perm (new id = perm[old id]) consistently across
// features, edges and labels.
inline UtteranceGraph permute_graph(const UtteranceGraph& g, const std::vector<int>& perm) {
    UtteranceGraph out = g;
    for (int i = 0; i < g.n; ++i)
        for (std::size_t c = 0; c < g.dim; ++c)
            out.node_features(static_cast<std::size_t>(perm[static_cast<std::size_t>(i)]), c) =
                g.node_features(static_cast<std::size_t>(i), c);
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        out.edges[e].src = perm[static_cast<std::size_t>(g.edges[e].src)];
        out.edges[e].dst = perm[static_cast<std::size_t>(g.edges[e].dst)];
    }
    if (!g.labels.empty())
        for (int i = 0; i < g.n; ++i)
            out.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
                g.labels[static_cast<std::size_t>(i)];
    return out;
}

// Max relative disagreement between analytic gradients and central finite
// differences over every parameter entry.
inline double fd_max_rel_error(const UtteranceGraph& g, DetectorParams params,
                               const std::vector<std::uint8_t>& labels, double pos_weight,
                               double step) {
    DetectorParams grads = gradient(g, params, labels, pos_weight);
    auto grefs = grads.named_tensors();
    auto prefs = params.named_tensors();
    double worst = 0.0;
    for (std::size_t t = 0; t < prefs.size(); ++t) {
        for (std::size_t k = 0; k < prefs[t].size; ++k) {
            const double saved = prefs[t].data[k];
            prefs[t].data[k] = saved + step;
            const double up = loss(forward(g, params), labels, pos_weight);
            prefs[t].data[k] = saved - step;
            const double down = loss(forward(g, params), labels, pos_weight);
            prefs[t].data[k] = saved;
            const double fd = (up - down) / (2.0 * step);
            const double analytic = grefs[t].data[k];
            const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic) / denom);
        }
    }
    return worst;
}

// Disjoint union of a graph with itself; mean-reduction over agents must
// leave gradients unchanged.
inline UtteranceGraph duplicate_graph(const UtteranceGraph& g) {
    UtteranceGraph out = g;
    out.n = 2 * g.n;
    out.node_features = Matrix(static_cast<std::size_t>(out.n), g.dim);
    for (int copy = 0; copy < 2; ++copy)
        for (int i = 0; i < g.n; ++i)
            for (std::size_t c = 0; c < g.dim; ++c)
                out.node_features(static_cast<std::size_t>(copy * g.n + i), c) =
                    g.node_features(static_cast<std::size_t>(i), c);
    out.edges.clear();
    for (int copy = 0; copy < 2; ++copy) {
        for (const EdgeFeature& e : g.edges) {
            EdgeFeature shifted = e;
            shifted.src = e.src + copy * g.n;
            shifted.dst = e.dst + copy * g.n;
            out.edges.push_back(std::move(shifted));
        }
    }
    out.labels.clear();
    for (int copy = 0; copy < 2; ++copy)
        out.labels.insert(out.labels.end(), g.labels.begin(), g.labels.end());
    return out;
}

}  // namespace masguard::testing
