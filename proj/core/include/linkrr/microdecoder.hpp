#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace linkrr {

struct MicroDecoderConfig {
    std::size_t vocab = 256;
    std::size_t dim = 32;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t max_seq = 512;
    std::uint64_t seed = 7;
    void validate() const;
};

class MicroDecoder;

// Per-layer keys and values for a processed token prefix. Bound to the
// decoder instance that produced it.
class KvCache {
public:
    std::size_t size() const { return tokens_.size(); }
    const std::vector<int>& tokens() const { return tokens_; }

private:
    friend class MicroDecoder;
    std::uint64_t instance_id = 0;
    std::vector<int> tokens_;
    std::vector<std::vector<double>> k_;  // [layer][pos * dim]
    std::vector<std::vector<double>> v_;
};

// "Ops" are attended (query, key) position pairs in one layer; every layer
// attends identically, so a single per-layer count captures the Appendix-style
// complexity being verified.
struct ForwardResult {
    std::vector<double> logits;  // vocab, last position
    std::size_t ops_per_layer = 0;
};

struct ForwardAllResult {
    std::vector<std::vector<double>> logits;  // one vocab-sized row per position
    std::size_t ops_per_layer = 0;
};

struct CostReport {
    std::size_t naive_ops = 0;   // per-layer attended pairs without prefix reuse
    std::size_t cached_ops = 0;  // per-layer attended pairs with reuse (measured)
    std::size_t m_s = 0;
    std::size_t m_t = 0;  // common suffix length; 0 when suffixes differ in length
    std::size_t n_c = 0;
};

// Tokens are processed strictly one position at a time in both the cached and
// uncached paths, so cached logits are bit-identical to uncached ones.
class MicroDecoder {
public:
    explicit MicroDecoder(MicroDecoderConfig config);
    const MicroDecoderConfig& config() const { return config_; }

    KvCache prefill(const std::vector<int>& tokens) const;

    // With a cache covering a proper prefix of `tokens`, only the remaining
    // positions are computed; each attends to all earlier positions through
    // the cached keys and values.
    ForwardResult forward_logits(const std::vector<int>& tokens, const KvCache* prefix = nullptr) const;

    // Logits at every position (causality checks).
    ForwardAllResult forward_all(const std::vector<int>& tokens) const;

    // Computes the prefix once and replays its cache for every suffix.
    std::pair<std::vector<std::vector<double>>, CostReport> shared_prefix_batch(
        const std::vector<int>& prefix_tokens,
        const std::vector<std::vector<int>>& suffix_token_lists) const;

private:
    struct Layer {
        std::vector<double> wq, wk, wv, wo;  // dim x dim
        std::vector<double> w1;              // ff x dim
        std::vector<double> w2;              // dim x ff
    };

    void check_tokens(const std::vector<int>& tokens) const;
    // Processes one token at position cache.size(), extending the cache;
    // returns the post-block hidden state and adds attended pairs to ops.
    std::vector<double> step(int token, KvCache& cache, std::size_t& ops_per_layer) const;
    std::vector<double> logits_from_hidden(const std::vector<double>& h) const;

    MicroDecoderConfig config_;
    std::uint64_t instance_id_;
    std::vector<double> embed_;  // vocab x dim
    std::vector<double> pos_;    // max_seq x dim
    std::vector<Layer> layers_;
    std::vector<double> wout_;   // vocab x dim
};

// Closed forms for the per-layer attended-pair counts of scoring n_C
// uniform-length instructions: naive = n_C * T(m_s + m_t), cached =
// T(m_s) + n_C * (m_s * m_t + T(m_t)), with T(x) = x(x+1)/2.
std::pair<std::size_t, std::size_t> predicted_cost(std::size_t m_s, std::size_t m_t, std::size_t n_c);

}  // namespace linkrr
