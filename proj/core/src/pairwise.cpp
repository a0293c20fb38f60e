#include "linkrr/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "linkrr/error.hpp"
#include "linkrr/rng.hpp"

namespace linkrr {

namespace {

using json = nlohmann::json;

void check_pair(const TextAttributedGraph& graph, NodeId a, NodeId b) {
    if (!graph.contains(a) || !graph.contains(b)) throw Error("pairwise", "pair endpoint out of range");
    if (a == b) throw Error("pairwise", "pair endpoints must differ");
}

std::vector<NodeId> common_neighbor_list(const TextAttributedGraph& graph, NodeId a, NodeId b) {
    const auto na = graph.neighbors(a);
    const auto nb = graph.neighbors(b);
    std::vector<NodeId> out;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(), std::back_inserter(out));
    return out;
}

double truncated_katz(const TextAttributedGraph& graph, NodeId a, NodeId b, double beta, int horizon) {
    std::vector<double> walk(graph.node_count(), 0.0);
    walk[a] = 1.0;
    double katz = 0.0;
    double beta_pow = 1.0;
    std::vector<double> next(graph.node_count(), 0.0);
    for (int step = 1; step <= horizon; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (NodeId u = 0; u < graph.node_count(); ++u) {
            if (walk[u] == 0.0) continue;
            for (NodeId v : graph.neighbors(u)) next[v] += walk[u];
        }
        walk.swap(next);
        beta_pow *= beta;
        katz += beta_pow * walk[b];
    }
    return katz;
}

}  // namespace

HeuristicFeatures heuristic_features(const TextAttributedGraph& graph,
                                     NodeId a,
                                     NodeId b,
                                     const PprScores& ppr_a,
                                     const PprScores& ppr_b,
                                     const PairwiseConfig& config) {
    config.validate();
    check_pair(graph, a, b);

    HeuristicFeatures hf;
    const auto common = common_neighbor_list(graph, a, b);
    hf.common_neighbors = common.size();
    for (NodeId u : common) {
        const std::size_t deg = graph.degree(u);
        if (deg >= 2) hf.adamic_adar += 1.0 / std::log(static_cast<double>(deg));
    }
    hf.katz_truncated = truncated_katz(graph, a, b, config.katz_beta, config.katz_horizon);
    hf.ppr_ab = ppr_a.at(b);
    hf.ppr_ba = ppr_b.at(a);
    return hf;
}

std::vector<double> CombinerParams::flatten() const {
    std::vector<double> flat;
    flat.reserve(flat_size());
    flat.insert(flat.end(), attention_weights.begin(), attention_weights.end());
    flat.insert(flat.end(), mix_matrix.begin(), mix_matrix.end());
    flat.insert(flat.end(), logistic_head.begin(), logistic_head.end());
    flat.push_back(bias);
    return flat;
}

CombinerParams CombinerParams::unflatten(const std::vector<double>& flat,
                                         std::size_t d_p,
                                         std::size_t d_rpe,
                                         std::size_t d_feat) {
    CombinerParams p;
    p.d_p = d_p;
    p.d_rpe = d_rpe;
    p.d_feat = d_feat;
    if (flat.size() != p.flat_size()) throw Error("pairwise", "flattened parameter size mismatch");
    auto it = flat.begin();
    p.attention_weights.assign(it, it + static_cast<std::ptrdiff_t>(p.input_dim()));
    it += static_cast<std::ptrdiff_t>(p.input_dim());
    p.mix_matrix.assign(it, it + static_cast<std::ptrdiff_t>(d_p * p.input_dim()));
    it += static_cast<std::ptrdiff_t>(d_p * p.input_dim());
    p.logistic_head.assign(it, it + static_cast<std::ptrdiff_t>(p.head_dim()));
    it += static_cast<std::ptrdiff_t>(p.head_dim());
    p.bias = *it;
    return p;
}

CombinerParams CombinerParams::init(const PairwiseConfig& config, const RpeConfig& rpe, std::uint64_t seed) {
    CombinerParams p;
    p.d_p = config.dp;
    p.d_rpe = rpe.dim;
    p.d_feat = 3;
    Rng rng(seed);
    p.attention_weights.resize(p.input_dim());
    for (double& w : p.attention_weights) w = 0.1 * rng.normal();
    p.mix_matrix.resize(p.d_p * p.input_dim());
    for (double& w : p.mix_matrix) w = 0.1 * rng.normal();
    p.logistic_head.assign(p.head_dim(), 0.0);
    p.bias = 0.0;
    return p;
}

void CombinerParams::validate() const {
    if (attention_weights.size() != input_dim() || mix_matrix.size() != d_p * input_dim() ||
        logistic_head.size() != head_dim()) {
        throw Error("pairwise", "combiner parameter shapes inconsistent with declared dims");
    }
    auto all_finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    if (!all_finite(attention_weights) || !all_finite(mix_matrix) || !all_finite(logistic_head) ||
        !std::isfinite(bias)) {
        throw Error("pairwise", "combiner parameters must be finite");
    }
}

void save_params(const CombinerParams& params, const std::string& path) {
    params.validate();
    json doc;
    doc["schema_version"] = 1;
    doc["d_p"] = params.d_p;
    doc["d_rpe"] = params.d_rpe;
    doc["d_feat"] = params.d_feat;
    doc["attention_weights"] = params.attention_weights;
    doc["mix_matrix"] = params.mix_matrix;
    doc["logistic_head"] = params.logistic_head;
    doc["bias"] = params.bias;
    std::ofstream out(path);
    if (!out) throw Error("pairwise", "cannot write file: " + path);
    out << doc.dump() << '\n';
}

CombinerParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("pairwise", "cannot open file: " + path);
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("d_p")) {
        throw Error("pairwise", "not a combiner params file: " + path);
    }
    CombinerParams p;
    p.d_p = doc.at("d_p").get<std::size_t>();
    p.d_rpe = doc.at("d_rpe").get<std::size_t>();
    p.d_feat = doc.at("d_feat").get<std::size_t>();
    p.attention_weights = doc.at("attention_weights").get<std::vector<double>>();
    p.mix_matrix = doc.at("mix_matrix").get<std::vector<double>>();
    p.logistic_head = doc.at("logistic_head").get<std::vector<double>>();
    p.bias = doc.at("bias").get<double>();
    p.validate();
    return p;
}

std::array<double, 3> node_features(const TextAttributedGraph& graph,
                                    NodeId u,
                                    const PprScores& ppr_a,
                                    const PprScores& ppr_b) {
    const double max_deg = std::max<std::size_t>(graph.max_degree(), 1);
    return {static_cast<double>(graph.degree(u)) / max_deg, ppr_a.at(u), ppr_b.at(u)};
}

namespace {

// Scoring-order context vector: concat(rpe, feats).
std::array<double, 9> context_vector(const TextAttributedGraph& graph,
                                     NodeId u,
                                     const PprScores& ppr_a,
                                     const PprScores& ppr_b,
                                     const RpeConfig& rpe_config) {
    const RpeVector rpe = relative_positional_encoding(ppr_a.at(u), ppr_b.at(u), rpe_config);
    const auto feats = node_features(graph, u, ppr_a, ppr_b);
    std::array<double, 9> x{};
    std::copy(rpe.begin(), rpe.end(), x.begin());
    std::copy(feats.begin(), feats.end(), x.begin() + 6);
    return x;
}

// Encoding order is concat(feats, rpe): a rotation of the scoring order.
inline double h_order(const std::array<double, 9>& x_s, std::size_t i) { return x_s[(i + 6) % 9]; }

std::vector<double> softmax(const std::vector<double>& s) {
    const double m = *std::max_element(s.begin(), s.end());
    std::vector<double> w(s.size());
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        w[i] = std::exp(s[i] - m);
        total += w[i];
    }
    for (double& wi : w) wi /= total;
    return w;
}

}  // namespace

PairwiseEncoding pairwise_encoding(const TextAttributedGraph& graph,
                                   NodeId a,
                                   NodeId b,
                                   const PprScores& ppr_a,
                                   const PprScores& ppr_b,
                                   const CombinerParams& params,
                                   const PprConfig& ppr_config,
                                   const RpeConfig& rpe_config) {
    check_pair(graph, a, b);
    params.validate();
    if (params.input_dim() != 9) throw Error("pairwise", "encoder expects d_rpe + d_feat == 9");

    const auto context = select_context_nodes(graph, a, b, ppr_a, ppr_b, ppr_config);
    PairwiseEncoding enc;
    enc.vector.assign(params.d_p, 0.0);
    if (context.empty()) {
        enc.empty_context = true;
        return enc;
    }

    std::vector<std::array<double, 9>> xs;
    std::vector<double> scores;
    xs.reserve(context.size());
    scores.reserve(context.size());
    for (NodeId u : context) {
        xs.push_back(context_vector(graph, u, ppr_a, ppr_b, rpe_config));
        double s = 0.0;
        for (std::size_t i = 0; i < 9; ++i) s += params.attention_weights[i] * xs.back()[i];
        scores.push_back(s);
    }
    const std::vector<double> weights = softmax(scores);

    for (std::size_t c = 0; c < context.size(); ++c) {
        std::vector<double> h(params.d_p, 0.0);
        for (std::size_t row = 0; row < params.d_p; ++row) {
            double acc = 0.0;
            for (std::size_t i = 0; i < 9; ++i) acc += params.mix_matrix[row * 9 + i] * h_order(xs[c], i);
            h[row] = acc;
            enc.vector[row] += weights[c] * acc;
        }
        enc.contributions.push_back({context[c], weights[c], std::move(h)});
    }
    return enc;
}

TrainBatch build_train_batch(const TextAttributedGraph& graph,
                             const std::vector<Edge>& train_edges,
                             const PairwiseConfig& config,
                             const PprConfig& ppr_config,
                             const RpeConfig& rpe_config) {
    if (train_edges.empty()) throw Error("pairwise", "training requires a non-empty edge set");
    config.validate();

    const std::size_t n = graph.node_count();
    std::unordered_set<std::uint64_t> edge_keys;
    edge_keys.reserve(train_edges.size() * 2);
    for (const Edge& e : train_edges) {
        const Edge c = make_edge(e.u, e.v);
        edge_keys.insert(static_cast<std::uint64_t>(c.u) * n + c.v);
    }

    Rng rng(config.train.seed);
    std::vector<std::pair<Edge, double>> pairs;
    pairs.reserve(train_edges.size() * 2);
    for (const Edge& e : train_edges) {
        pairs.emplace_back(e, 1.0);
        for (;;) {
            const auto u = static_cast<NodeId>(rng.below(n));
            const auto v = static_cast<NodeId>(rng.below(n));
            if (u == v) continue;
            const Edge c = make_edge(u, v);
            if (edge_keys.count(static_cast<std::uint64_t>(c.u) * n + c.v)) continue;
            pairs.emplace_back(c, 0.0);
            break;
        }
    }

    PprCache cache(graph, ppr_config);
    TrainBatch batch;
    batch.d_p = config.dp;
    batch.d_rpe = rpe_config.dim;
    batch.d_feat = 3;
    batch.samples.reserve(pairs.size());
    for (const auto& [edge, label] : pairs) {
        const PprScores& pa = cache.get(edge.u);
        const PprScores& pb = cache.get(edge.v);
        TrainSample sample;
        sample.label = label;
        sample.heuristics = heuristic_features(graph, edge.u, edge.v, pa, pb, config).as_array();
        for (NodeId u : select_context_nodes(graph, edge.u, edge.v, pa, pb, ppr_config)) {
            sample.context.push_back(context_vector(graph, u, pa, pb, rpe_config));
        }
        batch.samples.push_back(std::move(sample));
    }
    return batch;
}

std::pair<double, std::vector<double>> pair_loss_and_grad(const TrainBatch& batch,
                                                          const std::vector<double>& flat_params) {
    const CombinerParams params = CombinerParams::unflatten(flat_params, batch.d_p, batch.d_rpe, batch.d_feat);
    if (params.input_dim() != 9) throw Error("pairwise", "encoder expects d_rpe + d_feat == 9");
    const std::size_t d_p = params.d_p;

    double loss = 0.0;
    std::vector<double> grad(flat_params.size(), 0.0);
    double* g_attn = grad.data();
    double* g_mix = g_attn + 9;
    double* g_head = g_mix + d_p * 9;
    double* g_bias = g_head + params.head_dim();

    std::vector<double> scores;
    std::vector<double> f(d_p);
    std::vector<std::vector<double>> hs;
    std::vector<double> df(d_p);

    for (const TrainSample& sample : batch.samples) {
        const std::size_t m = sample.context.size();
        std::fill(f.begin(), f.end(), 0.0);
        std::vector<double> weights;
        hs.assign(m, std::vector<double>(d_p, 0.0));
        if (m > 0) {
            scores.assign(m, 0.0);
            for (std::size_t c = 0; c < m; ++c) {
                for (std::size_t i = 0; i < 9; ++i) scores[c] += params.attention_weights[i] * sample.context[c][i];
            }
            weights = softmax(scores);
            for (std::size_t c = 0; c < m; ++c) {
                for (std::size_t row = 0; row < d_p; ++row) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < 9; ++i) {
                        acc += params.mix_matrix[row * 9 + i] * h_order(sample.context[c], i);
                    }
                    hs[c][row] = acc;
                    f[row] += weights[c] * acc;
                }
            }
        }

        double z = params.bias;
        for (std::size_t row = 0; row < d_p; ++row) z += params.logistic_head[row] * f[row];
        for (std::size_t i = 0; i < 5; ++i) z += params.logistic_head[d_p + i] * sample.heuristics[i];

        // softplus(z) - y z, numerically stable for either sign of z
        const double y = sample.label;
        loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - y * z;

        const double p = 1.0 / (1.0 + std::exp(-z));
        const double dz = p - y;

        *g_bias += dz;
        for (std::size_t row = 0; row < d_p; ++row) g_head[row] += dz * f[row];
        for (std::size_t i = 0; i < 5; ++i) g_head[d_p + i] += dz * sample.heuristics[i];

        if (m == 0) continue;
        for (std::size_t row = 0; row < d_p; ++row) df[row] = dz * params.logistic_head[row];

        // t_c = df . h_c, then softmax backprop into the attention scores
        std::vector<double> t(m, 0.0);
        double t_mean = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            for (std::size_t row = 0; row < d_p; ++row) t[c] += df[row] * hs[c][row];
            t_mean += weights[c] * t[c];
        }
        for (std::size_t c = 0; c < m; ++c) {
            const double ds = weights[c] * (t[c] - t_mean);
            for (std::size_t i = 0; i < 9; ++i) g_attn[i] += ds * sample.context[c][i];
            for (std::size_t row = 0; row < d_p; ++row) {
                const double dh = weights[c] * df[row];
                for (std::size_t i = 0; i < 9; ++i) g_mix[row * 9 + i] += dh * h_order(sample.context[c], i);
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.samples.size());
    loss *= inv;
    for (double& g : grad) g *= inv;
    return {loss, std::move(grad)};
}

CombinerParams train_combiner(const TextAttributedGraph& graph,
                              const std::vector<Edge>& train_edges,
                              const PairwiseConfig& config,
                              const PprConfig& ppr_config,
                              const RpeConfig& rpe_config) {
    const TrainBatch batch = build_train_batch(graph, train_edges, config, ppr_config, rpe_config);
    CombinerParams params = CombinerParams::init(config, rpe_config, config.train.seed);
    std::vector<double> flat = params.flatten();

    auto [loss, grad] = pair_loss_and_grad(batch, flat);
    if (!std::isfinite(loss)) throw Error("pairwise", "training diverged before the first step");
    double last_loss = loss;

    for (std::size_t epoch = 0; epoch < config.train.epochs; ++epoch) {
        double step = config.train.lr;
        std::vector<double> trial(flat.size());
        for (int attempt = 0; attempt < 40; ++attempt) {
            for (std::size_t i = 0; i < flat.size(); ++i) trial[i] = flat[i] - step * grad[i];
            auto [trial_loss, trial_grad] = pair_loss_and_grad(batch, trial);
            if (std::isnan(trial_loss)) {
                throw Error("pairwise",
                            "training diverged (loss NaN); last finite loss " + std::to_string(last_loss));
            }
            if (trial_loss <= last_loss) {
                flat.swap(trial);
                grad.swap(trial_grad);
                last_loss = trial_loss;
                break;
            }
            step *= 0.5;
        }
    }

    CombinerParams out = CombinerParams::unflatten(flat, config.dp, rpe_config.dim, 3);
    out.validate();
    return out;
}

HeuristicFeatures PairwiseEncoder::heuristics(NodeId a, NodeId b) {
    return heuristic_features(graph_, a, b, cache_.get(a), cache_.get(b), pairwise_config_);
}

PairwiseEncoding PairwiseEncoder::encode(NodeId a, NodeId b, const CombinerParams& params) {
    return pairwise_encoding(graph_, a, b, cache_.get(a), cache_.get(b), params, ppr_config_, rpe_config_);
}

double PairwiseEncoder::score(NodeId a, NodeId b, const CombinerParams& params) {
    const PairwiseEncoding enc = encode(a, b, params);
    const auto heur = heuristics(a, b).as_array();
    double z = params.bias;
    for (std::size_t row = 0; row < params.d_p; ++row) z += params.logistic_head[row] * enc.vector[row];
    for (std::size_t i = 0; i < 5; ++i) z += params.logistic_head[params.d_p + i] * heur[i];
    return z;
}

}  // namespace linkrr
