#include "linkrr/microdecoder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "linkrr/error.hpp"
#include "linkrr/rng.hpp"

namespace linkrr {

void MicroDecoderConfig::validate() const {
    if (vocab == 0 || dim == 0 || layers == 0 || heads == 0 || max_seq == 0) {
        throw Error("microdecoder", "all decoder dimensions must be positive");
    }
    if (dim % heads != 0) throw Error("microdecoder", "model dim must be divisible by heads");
}

namespace {

std::atomic<std::uint64_t> next_instance_id{1};

void fill_normal(std::vector<double>& w, std::size_t count, Rng& rng, double scale) {
    w.resize(count);
    for (double& x : w) x = scale * rng.normal();
}

// y = W x, W row-major rows x cols
void matvec(const std::vector<double>& w, const double* x, std::size_t rows, std::size_t cols, double* y) {
    for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* row = w.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

}  // namespace

MicroDecoder::MicroDecoder(MicroDecoderConfig config) : config_(config) {
    config_.validate();
    instance_id_ = next_instance_id.fetch_add(1);

    Rng rng(config_.seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.dim));
    const std::size_t d = config_.dim;
    const std::size_t ff = 2 * d;

    fill_normal(embed_, config_.vocab * d, rng, scale);
    fill_normal(pos_, config_.max_seq * d, rng, scale);
    layers_.resize(config_.layers);
    for (Layer& layer : layers_) {
        fill_normal(layer.wq, d * d, rng, scale);
        fill_normal(layer.wk, d * d, rng, scale);
        fill_normal(layer.wv, d * d, rng, scale);
        fill_normal(layer.wo, d * d, rng, scale);
        fill_normal(layer.w1, ff * d, rng, scale);
        fill_normal(layer.w2, d * ff, rng, scale);
    }
    fill_normal(wout_, config_.vocab * d, rng, scale);
}

void MicroDecoder::check_tokens(const std::vector<int>& tokens) const {
    if (tokens.empty()) throw Error("microdecoder", "token sequence is empty");
    if (tokens.size() > config_.max_seq) throw Error("microdecoder", "sequence exceeds max length");
    for (int t : tokens) {
        if (t < 0 || static_cast<std::size_t>(t) >= config_.vocab) {
            throw Error("microdecoder", "token id out of vocabulary");
        }
    }
}

std::vector<double> MicroDecoder::step(int token, KvCache& cache, std::size_t& ops_per_layer) const {
    const std::size_t d = config_.dim;
    const std::size_t ff = 2 * d;
    const std::size_t heads = config_.heads;
    const std::size_t dh = d / heads;
    const std::size_t pos = cache.tokens_.size();
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) {
        x[i] = embed_[static_cast<std::size_t>(token) * d + i] + pos_[pos * d + i];
    }

    // Every layer attends over the same pos+1 (query, key) pairs, so one
    // per-layer count captures the whole step.
    ops_per_layer += pos + 1;

    std::vector<double> q(d), k(d), v(d), ctx(d), attn(d), hidden(ff);
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const Layer& layer = layers_[l];
        matvec(layer.wq, x.data(), d, d, q.data());
        matvec(layer.wk, x.data(), d, d, k.data());
        matvec(layer.wv, x.data(), d, d, v.data());
        cache.k_[l].insert(cache.k_[l].end(), k.begin(), k.end());
        cache.v_[l].insert(cache.v_[l].end(), v.begin(), v.end());

        const std::size_t cols = pos + 1;
        const double* keys = cache.k_[l].data();
        const double* vals = cache.v_[l].data();
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dh;
            std::vector<double> scores(cols);
            double m = -INFINITY;
            for (std::size_t j = 0; j < cols; ++j) {
                double dot = 0.0;
                for (std::size_t i = 0; i < dh; ++i) dot += q[off + i] * keys[j * d + off + i];
                scores[j] = dot * inv_sqrt_dh;
                m = std::max(m, scores[j]);
            }
            double z = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                scores[j] = std::exp(scores[j] - m);
                z += scores[j];
            }
            for (std::size_t i = 0; i < dh; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < cols; ++j) acc += scores[j] * vals[j * d + off + i];
                ctx[off + i] = acc / z;
            }
        }
        matvec(layer.wo, ctx.data(), d, d, attn.data());
        for (std::size_t i = 0; i < d; ++i) x[i] += attn[i];

        matvec(layer.w1, x.data(), ff, d, hidden.data());
        for (double& u : hidden) u = std::max(0.0, u);
        std::vector<double> ffn(d);
        matvec(layer.w2, hidden.data(), d, ff, ffn.data());
        for (std::size_t i = 0; i < d; ++i) x[i] += ffn[i];
    }

    cache.tokens_.push_back(token);
    return x;
}

std::vector<double> MicroDecoder::logits_from_hidden(const std::vector<double>& h) const {
    std::vector<double> logits(config_.vocab);
    matvec(wout_, h.data(), config_.vocab, config_.dim, logits.data());
    return logits;
}

KvCache MicroDecoder::prefill(const std::vector<int>& tokens) const {
    check_tokens(tokens);
    KvCache cache;
    cache.instance_id = instance_id_;
    cache.k_.resize(config_.layers);
    cache.v_.resize(config_.layers);
    std::size_t ops = 0;
    for (int t : tokens) step(t, cache, ops);
    return cache;
}

ForwardResult MicroDecoder::forward_logits(const std::vector<int>& tokens, const KvCache* prefix) const {
    check_tokens(tokens);
    KvCache cache;
    if (prefix) {
        if (prefix->instance_id != instance_id_) {
            throw Error("microdecoder", "cache belongs to a different decoder instance");
        }
        if (prefix->size() >= tokens.size() ||
            !std::equal(prefix->tokens_.begin(), prefix->tokens_.end(), tokens.begin())) {
            throw Error("microdecoder", "cache does not cover a proper prefix of the tokens");
        }
        cache = *prefix;
    } else {
        cache.instance_id = instance_id_;
        cache.k_.resize(config_.layers);
        cache.v_.resize(config_.layers);
    }

    ForwardResult result;
    std::vector<double> last;
    for (std::size_t i = cache.size(); i < tokens.size(); ++i) {
        last = step(tokens[i], cache, result.ops_per_layer);
    }
    result.logits = logits_from_hidden(last);
    return result;
}

ForwardAllResult MicroDecoder::forward_all(const std::vector<int>& tokens) const {
    check_tokens(tokens);
    KvCache cache;
    cache.instance_id = instance_id_;
    cache.k_.resize(config_.layers);
    cache.v_.resize(config_.layers);

    ForwardAllResult result;
    result.logits.reserve(tokens.size());
    for (int t : tokens) {
        result.logits.push_back(logits_from_hidden(step(t, cache, result.ops_per_layer)));
    }
    return result;
}

std::pair<std::vector<std::vector<double>>, CostReport> MicroDecoder::shared_prefix_batch(
    const std::vector<int>& prefix_tokens, const std::vector<std::vector<int>>& suffix_token_lists) const {
    if (suffix_token_lists.empty()) throw Error("microdecoder", "suffix list is empty");
    check_tokens(prefix_tokens);
    for (const auto& suffix : suffix_token_lists) {
        if (suffix.empty()) throw Error("microdecoder", "suffixes must be non-empty");
        if (prefix_tokens.size() + suffix.size() > config_.max_seq) {
            throw Error("microdecoder", "sequence exceeds max length");
        }
    }

    const std::size_t m_s = prefix_tokens.size();
    std::size_t cached_ops = 0;

    KvCache prefix_cache;
    prefix_cache.instance_id = instance_id_;
    prefix_cache.k_.resize(config_.layers);
    prefix_cache.v_.resize(config_.layers);
    for (int t : prefix_tokens) step(t, prefix_cache, cached_ops);

    CostReport report;
    report.m_s = m_s;
    report.n_c = suffix_token_lists.size();
    report.m_t = suffix_token_lists.front().size();

    std::vector<std::vector<double>> logits;
    logits.reserve(suffix_token_lists.size());
    for (const auto& suffix : suffix_token_lists) {
        if (suffix.size() != report.m_t) report.m_t = 0;
        KvCache cache = prefix_cache;
        std::vector<double> last;
        for (int t : suffix) last = step(t, cache, cached_ops);
        logits.push_back(logits_from_hidden(last));

        const std::size_t total = m_s + suffix.size();
        report.naive_ops += total * (total + 1) / 2;
    }
    report.cached_ops = cached_ops;
    return {std::move(logits), report};
}

std::pair<std::size_t, std::size_t> predicted_cost(std::size_t m_s, std::size_t m_t, std::size_t n_c) {
    if (m_s == 0 || m_t == 0 || n_c == 0) throw Error("microdecoder", "cost inputs must be positive");
    auto tri = [](std::size_t x) { return x * (x + 1) / 2; };
    const std::size_t naive = n_c * tri(m_s + m_t);
    const std::size_t cached = tri(m_s) + n_c * (m_s * m_t + tri(m_t));
    return {naive, cached};
}

}  // namespace linkrr
