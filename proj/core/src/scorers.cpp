#include "linkrr/scorers.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "linkrr/rng.hpp"

namespace linkrr {

namespace {

using json = nlohmann::json;

constexpr const char* kCompletionPath = "/v1/completions";

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

struct LimiterGuard {
    InFlightLimiter& limiter;
    explicit LimiterGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
    ~LimiterGuard() { limiter.release(); }
};

std::optional<double> extract_logprob(const json& top, std::initializer_list<const char*> spellings) {
    for (const char* key : spellings) {
        auto it = top.find(key);
        if (it == top.end()) continue;
        if (it->is_null() || !it->is_number()) {
            throw ProviderError(ProviderErrorKind::capability, "backend returned a non-numeric logprob");
        }
        const double v = it->get<double>();
        if (!std::isfinite(v)) {
            throw ProviderError(ProviderErrorKind::capability, "backend returned a non-finite logprob");
        }
        return v;
    }
    return std::nullopt;
}

}  // namespace

YesNoLogits heuristic_logits(const CombinerParams& combiner,
                             const TextAttributedGraph& graph,
                             NodeId source,
                             NodeId candidate,
                             const PairwiseConfig& pairwise_config,
                             const PprConfig& ppr_config,
                             const RpeConfig& rpe_config) {
    PairwiseEncoder encoder(graph, ppr_config, rpe_config, pairwise_config);
    return {encoder.score(source, candidate, combiner), 0.0};
}

YesNoLogits HeuristicProvider::score(const PromptParts&, NodeId source, NodeId candidate) {
    return {encoder_.score(source, candidate, params_), 0.0};
}

void InFlightLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
}

void InFlightLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        ++available_;
    }
    cv_.notify_one();
}

RemoteClient::RemoteClient(RemoteConfig config)
    : config_(std::move(config)), limiter_(std::max<std::size_t>(config_.max_in_flight, 1)) {
    config_.validate();
}

std::vector<Completion> RemoteClient::post(const CompletionRequest& request) {
    json body;
    body["model"] = config_.model;
    body["prompt"] = request.prompt;
    body["max_tokens"] = request.max_tokens;
    body["echo"] = false;
    if (request.logprobs > 0) body["logprobs"] = request.logprobs;
    if (request.n > 1) body["n"] = request.n;
    if (request.groups) body["groups"] = *request.groups;
    if (request.seed) body["seed"] = *request.seed;
    if (request.temperature) body["temperature"] = *request.temperature;
    if (request.prefix_id) body["prefix_id"] = *request.prefix_id;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!config_.auth_env.empty()) {
        if (const char* token = std::getenv(config_.auth_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }

    std::string response_body;
    const std::size_t attempts = config_.retries + 1;
    for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
        std::string failure;
        {
            LimiterGuard guard(limiter_);
            httplib::Client client(config_.endpoint);
            const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
            client.set_connection_timeout(timeout);
            client.set_read_timeout(timeout);
            client.set_write_timeout(timeout);

            auto res = client.Post(kCompletionPath, headers, payload, "application/json");
            if (!res) {
                failure = "transport failure: " + httplib::to_string(res.error());
            } else if (res->status >= 500 || res->status == 429) {
                failure = "retriable status " + std::to_string(res->status);
            } else if (res->status < 200 || res->status >= 300) {
                throw ProviderError(ProviderErrorKind::protocol,
                                    "unexpected status " + std::to_string(res->status));
            } else {
                response_body = res->body;
            }
        }
        if (failure.empty()) break;
        if (attempt + 1 == attempts) throw ProviderError(ProviderErrorKind::transport, failure);
        retries_.fetch_add(1);
        std::this_thread::sleep_for(std::chrono::milliseconds(config_.backoff_ms << attempt));
    }

    json doc = json::parse(response_body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ProviderError(ProviderErrorKind::protocol, "response is not a JSON object");
    }
    auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) {
        throw ProviderError(ProviderErrorKind::protocol, "response has no choices");
    }

    std::vector<Completion> out;
    out.reserve(choices->size());
    for (const json& choice : *choices) {
        Completion c;
        c.text = choice.value("text", std::string());
        if (request.logprobs > 0) {
            auto lp = choice.find("logprobs");
            if (lp == choice.end() || lp->is_null()) {
                throw ProviderError(ProviderErrorKind::protocol, "response is missing logprobs");
            }
            auto top = lp->find("top_logprobs");
            if (top == lp->end() || !top->is_array() || top->empty() || !(*top)[0].is_object()) {
                throw ProviderError(ProviderErrorKind::protocol, "response is missing top_logprobs");
            }
            c.yes_logprob = extract_logprob((*top)[0], {"Yes", " Yes"});
            c.no_logprob = extract_logprob((*top)[0], {"No", " No"});
        }
        out.push_back(std::move(c));
    }
    return out;
}

YesNoLogits RemoteClient::yes_no_logits(const std::string& prompt_text, std::optional<std::string> prefix_id) {
    CompletionRequest request;
    request.prompt = prompt_text;
    request.max_tokens = 1;
    request.logprobs = config_.logprobs;
    request.prefix_id = std::move(prefix_id);
    const auto completions = post(request);
    const Completion& c = completions.front();
    if (!c.yes_logprob || !c.no_logprob) {
        throw ProviderError(ProviderErrorKind::capability,
                            "Yes/No tokens are outside the backend's top logprobs");
    }
    return {*c.yes_logprob, *c.no_logprob};
}

YesNoLogits remote_logits(RemoteClient& client, const PromptParts& prompt) {
    std::optional<std::string> prefix_id;
    if (client.config().prefix_reuse) prefix_id = hex64(fnv1a64(prompt.shared_prefix));
    return client.yes_no_logits(prompt.full_prompt(), std::move(prefix_id));
}

YesNoLogits RemoteProvider::score(const PromptParts& prompt, NodeId, NodeId) {
    return remote_logits(client_, prompt);
}

QuerySet remote_generate(RemoteClient& client,
                         const PromptParts& prompt,
                         std::size_t n_groups,
                         std::size_t group_size,
                         const std::string& source_text) {
    if (n_groups == 0 || group_size == 0) throw Error("scorers", "n_groups and group_size must be positive");
    const std::size_t total = n_groups * group_size;
    const std::string prompt_text = prompt.full_prompt();

    QuerySet qs;
    qs.queries.reserve(total);
    qs.groups.reserve(total);

    if (client.config().grouped_decoding) {
        CompletionRequest request;
        request.prompt = prompt_text;
        request.max_tokens = client.config().gen_max_tokens;
        request.n = total;
        request.groups = n_groups;
        const auto completions = client.post(request);
        if (completions.size() != total) {
            throw ProviderError(ProviderErrorKind::protocol, "grouped decode returned wrong completion count");
        }
        for (const Completion& c : completions) qs.queries.push_back(c.text);
        qs.diversity = "grouped";
    } else {
        for (std::size_t g = 0; g < n_groups; ++g) {
            for (std::size_t i = 0; i < group_size; ++i) {
                CompletionRequest request;
                request.prompt = prompt_text;
                request.max_tokens = client.config().gen_max_tokens;
                request.seed = mix_seed(0x6c6e6b7267656eULL, g * group_size + i);
                request.temperature = 0.7 + 0.1 * static_cast<double>(g);
                qs.queries.push_back(client.post(request).front().text);
            }
        }
        qs.diversity = "sampled";
    }

    for (std::size_t i = 0; i < total; ++i) {
        if (qs.queries[i].empty()) {
            qs.queries[i] = source_text;
            ++qs.substituted;
        }
        qs.groups.push_back(i / group_size);
    }
    return qs;
}

}  // namespace linkrr
