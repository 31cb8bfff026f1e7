#pragma once

#include <cstddef>
#include <memory>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "masguard/linalg.hpp"

namespace masguard {

// Transient failure talking to an embedding service; safe to retry.
struct EmbedderError : std::runtime_error {
    explicit EmbedderError(const std::string& what, bool retryable_)
        : std::runtime_error(what), retryable(retryable_) {}
    bool retryable;
};

// Maps utterance text to a fixed-dimension real vector.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual Vec embed(std::string_view text) const = 0;
    virtual std::vector<Vec> embed_batch(const std::vector<std::string>& texts) const;
};

// Signed feature hashing over lowercased unigrams and bigrams, L2-normalized.
// Dependency-free and deterministic across platforms; an empty token stream
// yields the zero vector.
class FeatureHashEmbedder final : public Embedder {
public:
    explicit FeatureHashEmbedder(std::size_t dim = 64);
    std::size_t dim() const override { return dim_; }
    Vec embed(std::string_view text) const override;

private:
    std::size_t dim_;
};

// Client for an external embedding service: POST /embed {"texts": [..]} ->
// {"vectors": [[..]]}. Endpoint comes from config/environment; a dimension
// mismatch from the service is a configuration error, not retryable.
// Concurrent callers are throttled to max_in_flight requests.
class ServiceEmbedder final : public Embedder {
public:
    ServiceEmbedder(std::string host, int port, std::string path, std::size_t dim,
                    int max_retries = 3, int max_in_flight = 4);
    std::size_t dim() const override { return dim_; }
    Vec embed(std::string_view text) const override;
    std::vector<Vec> embed_batch(const std::vector<std::string>& texts) const override;

private:
    std::string host_;
    int port_;
    std::string path_;
    std::size_t dim_;
    int max_retries_;
    mutable std::counting_semaphore<> in_flight_;
};

std::unique_ptr<Embedder> make_embedder(const std::string& selector, std::size_t dim);

}  // namespace masguard
