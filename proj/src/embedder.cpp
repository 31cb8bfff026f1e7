#include "masguard/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace masguard {

std::vector<Vec> Embedder::embed_batch(const std::vector<std::string>& texts) const {
    std::vector<Vec> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(embed(t));
    return out;
}

FeatureHashEmbedder::FeatureHashEmbedder(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) {
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

void accumulate(Vec& acc, std::uint64_t h, std::size_t dim) {
    double sign = (h & 1) ? 1.0 : -1.0;
    acc[(h >> 1) % dim] += sign;
}

}  // namespace

Vec FeatureHashEmbedder::embed(std::string_view text) const {
    Vec acc(dim_, 0.0);

    std::string token;
    std::string prev;
    bool any = false;
    auto flush = [&]() {
        if (token.empty()) return;
        any = true;
        accumulate(acc, fnv1a(token), dim_);
        if (!prev.empty()) {
            // Bigram hash chains the two token hashes with a separator byte.
            std::uint64_t h = fnv1a(token, fnv1a("\x1f", fnv1a(prev)));
            accumulate(acc, h, dim_);
        }
        prev = token;
        token.clear();
    };

    for (char raw : text) {
        unsigned char c = static_cast<unsigned char>(raw);
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();

    if (!any) return acc;  // zero vector by convention

    double norm = 0.0;
    for (double x : acc) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : acc) x /= norm;
    return acc;
}

ServiceEmbedder::ServiceEmbedder(std::string host, int port, std::string path, std::size_t dim,
                                 int max_retries, int max_in_flight)
    : host_(std::move(host)), port_(port), path_(std::move(path)), dim_(dim),
      max_retries_(max_retries), in_flight_(std::max(1, max_in_flight)) {
    if (dim == 0) throw std::invalid_argument("embedding dimension must be positive");
}

Vec ServiceEmbedder::embed(std::string_view text) const {
    return embed_batch({std::string(text)}).front();
}

namespace {

struct SemaphoreGuard {
    std::counting_semaphore<>& sem;
    explicit SemaphoreGuard(std::counting_semaphore<>& s) : sem(s) { sem.acquire(); }
    ~SemaphoreGuard() { sem.release(); }
};

}  // namespace

std::vector<Vec> ServiceEmbedder::embed_batch(const std::vector<std::string>& texts) const {
    SemaphoreGuard guard(in_flight_);
    nlohmann::json req{{"texts", texts}};
    const std::string body = req.dump();

    std::string last_error = "embedding service unreachable";
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(50 << (attempt - 1)));
        httplib::Client cli(host_, port_);
        auto res = cli.Post(path_, body, "application/json");
        if (!res) {
            last_error = "embedding service unreachable";
            continue;
        }
        if (res->status != 200) {
            last_error = "embedding service returned status " + std::to_string(res->status);
            continue;
        }
        nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("vectors"))
            throw EmbedderError("malformed embedding service response", false);
        std::vector<Vec> out;
        for (const auto& v : parsed["vectors"]) {
            Vec vec = v.get<Vec>();
            if (vec.size() != dim_)
                throw EmbedderError("embedding service dimension mismatch: expected " +
                                        std::to_string(dim_) + ", got " +
                                        std::to_string(vec.size()),
                                    false);
            out.push_back(std::move(vec));
        }
        if (out.size() != texts.size())
            throw EmbedderError("embedding service returned wrong vector count", false);
        return out;
    }
    throw EmbedderError(last_error + " after " + std::to_string(max_retries_ + 1) + " attempts",
                        true);
}

std::unique_ptr<Embedder> make_embedder(const std::string& selector, std::size_t dim) {
    if (selector == "hash" || selector.empty()) return std::make_unique<FeatureHashEmbedder>(dim);
    if (selector == "service") {
        const char* host = std::getenv("MASGUARD_EMBED_HOST");
        const char* port = std::getenv("MASGUARD_EMBED_PORT");
        if (!host || !port)
            throw std::invalid_argument(
                "service embedder requires MASGUARD_EMBED_HOST and MASGUARD_EMBED_PORT");
        return std::make_unique<ServiceEmbedder>(host, std::atoi(port), "/embed", dim);
    }
    throw std::invalid_argument("unknown embedder: " + selector);
}

}  // namespace masguard
