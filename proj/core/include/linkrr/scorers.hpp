#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "linkrr/config.hpp"
#include "linkrr/error.hpp"
#include "linkrr/graph.hpp"
#include "linkrr/pairwise.hpp"
#include "linkrr/rerank.hpp"
#include "linkrr/retrieval.hpp"

namespace linkrr {

struct ProviderCapabilities {
    bool embedding_injection = false;
    bool grouped_decoding = false;
    bool prefix_reuse = false;
    bool deterministic = false;
};

struct YesNoLogits {
    double yes = 0.0;
    double no = 0.0;
};

enum class ProviderErrorKind { transport, protocol, capability };

class ProviderError : public Error {
public:
    ProviderError(ProviderErrorKind kind, const std::string& message)
        : Error("scorers", message), kind_(kind) {}
    ProviderErrorKind kind() const { return kind_; }
    bool retriable() const { return kind_ == ProviderErrorKind::transport; }

private:
    ProviderErrorKind kind_;
};

class LogitProvider {
public:
    virtual ~LogitProvider() = default;
    virtual ProviderCapabilities capabilities() const = 0;
    // Must be safe for concurrent calls. Non-finite logits are rejected by
    // callers as capability errors.
    virtual YesNoLogits score(const PromptParts& prompt, NodeId source, NodeId candidate) = 0;
};

// yes = logistic-head pre-activation of the trained combiner, no = 0, so the
// Yes/No index collapses to sigmoid(model score).
YesNoLogits heuristic_logits(const CombinerParams& combiner,
                             const TextAttributedGraph& graph,
                             NodeId source,
                             NodeId candidate,
                             const PairwiseConfig& pairwise_config,
                             const PprConfig& ppr_config,
                             const RpeConfig& rpe_config);

class HeuristicProvider : public LogitProvider {
public:
    HeuristicProvider(const TextAttributedGraph& graph,
                      CombinerParams params,
                      PprConfig ppr_config,
                      RpeConfig rpe_config,
                      PairwiseConfig pairwise_config)
        : encoder_(graph, ppr_config, rpe_config, pairwise_config), params_(std::move(params)) {}

    ProviderCapabilities capabilities() const override { return {.deterministic = true}; }
    YesNoLogits score(const PromptParts& prompt, NodeId source, NodeId candidate) override;

private:
    PairwiseEncoder encoder_;
    CombinerParams params_;
};

// Bounded concurrency gate for outbound requests.
class InFlightLimiter {
public:
    explicit InFlightLimiter(std::size_t limit) : available_(limit) {}
    void acquire();
    void release();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::size_t available_;
};

struct CompletionRequest {
    std::string prompt;
    std::size_t max_tokens = 0;
    std::size_t logprobs = 0;  // 0 = omit
    std::size_t n = 1;
    std::optional<std::size_t> groups;  // grouped decoding extension
    std::optional<std::uint64_t> seed;
    std::optional<double> temperature;
    std::optional<std::string> prefix_id;  // prefix-reuse extension
};

struct Completion {
    std::string text;
    std::optional<double> yes_logprob;
    std::optional<double> no_logprob;
};

// JSON-over-HTTP completion client. One POST to /v1/completions per call,
// bearer auth from the configured environment variable, doubling backoff on
// retriable failures (transport, 5xx, 429), bounded in-flight requests.
// Safe for concurrent use; each call runs on a fresh connection.
class RemoteClient {
public:
    explicit RemoteClient(RemoteConfig config);

    std::vector<Completion> post(const CompletionRequest& request);
    YesNoLogits yes_no_logits(const std::string& prompt_text, std::optional<std::string> prefix_id = {});

    std::size_t total_retries() const { return retries_.load(); }
    const RemoteConfig& config() const { return config_; }

private:
    RemoteConfig config_;
    InFlightLimiter limiter_;
    std::atomic<std::size_t> retries_{0};
};

YesNoLogits remote_logits(RemoteClient& client, const PromptParts& prompt);

class RemoteProvider : public LogitProvider {
public:
    explicit RemoteProvider(RemoteConfig config) : client_(std::move(config)) {}

    ProviderCapabilities capabilities() const override {
        return {.grouped_decoding = client_.config().grouped_decoding,
                .prefix_reuse = client_.config().prefix_reuse};
    }
    YesNoLogits score(const PromptParts& prompt, NodeId source, NodeId candidate) override;
    RemoteClient& client() { return client_; }

private:
    RemoteClient client_;
};

// Grouped decoding when the backend supports it, otherwise n_groups *
// group_size independent sampled decodes (per-group seed and temperature)
// flagged as diversity = "sampled". Empty completions are replaced by the
// source text and counted in `substituted`.
QuerySet remote_generate(RemoteClient& client,
                         const PromptParts& prompt,
                         std::size_t n_groups,
                         std::size_t group_size,
                         const std::string& source_text);

}  // namespace linkrr
