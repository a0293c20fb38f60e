#include "linkrr/text_align.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "linkrr/error.hpp"
#include "linkrr/rng.hpp"
#include "linkrr/tokenize.hpp"

namespace linkrr {

void EmbeddingTable::validate() const {
    if (data.size() != rows * dim) throw Error("text_align", "embedding table shape mismatch");
    for (double x : data) {
        if (!std::isfinite(x)) throw Error("text_align", "embedding table contains non-finite values");
    }
}

namespace {

constexpr char kMagic[4] = {'L', 'R', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("text_align", "truncated embedding file: " + path);
    return v;
}

}  // namespace

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    table.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("text_align", "cannot write file: " + path);
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(table.rows));
    write_pod(out, static_cast<std::uint64_t>(table.dim));
    out.write(reinterpret_cast<const char*>(table.data.data()),
              static_cast<std::streamsize>(table.data.size() * sizeof(double)));
    if (!out) throw Error("text_align", "write failed: " + path);
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("text_align", "cannot open file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw Error("text_align", "not an embedding file: " + path);
    }
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kVersion) throw Error("text_align", "unsupported embedding file version");
    EmbeddingTable table;
    table.rows = read_pod<std::uint64_t>(in, path);
    table.dim = read_pod<std::uint64_t>(in, path);
    table.data.resize(table.rows * table.dim);
    in.read(reinterpret_cast<char*>(table.data.data()),
            static_cast<std::streamsize>(table.data.size() * sizeof(double)));
    if (!in) throw Error("text_align", "truncated embedding file: " + path);
    table.validate();
    return table;
}

EmbeddingTable hashed_bow_embeddings(const TextAttributedGraph& graph, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) throw Error("text_align", "embedding dim must be positive");
    EmbeddingTable table;
    table.rows = graph.node_count();
    table.dim = dim;
    table.data.assign(table.rows * dim, 0.0);
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        auto row = table.row(v);
        for (const std::string& tok : tokenize(graph.text(v))) {
            const std::uint64_t h = splitmix64(fnv1a64(tok) ^ seed);
            const std::size_t idx = h % dim;
            const double sign = (h >> 63) ? -1.0 : 1.0;
            row[idx] += sign;
        }
    }
    return table;
}

std::vector<double> neighborhood_text_representation(const EmbeddingTable& t_prime,
                                                     const TextAttributedGraph& graph,
                                                     NodeId v) {
    if (t_prime.rows != graph.node_count()) {
        throw Error("text_align", "embedding row count does not match node count");
    }
    if (!graph.contains(v)) throw Error("text_align", "node out of range");

    const std::size_t d = t_prime.dim;
    std::vector<double> out(2 * d, 0.0);
    const auto self = t_prime.row(v);
    std::copy(self.begin(), self.end(), out.begin());
    const auto nbrs = graph.neighbors(v);
    if (!nbrs.empty()) {
        for (NodeId u : nbrs) {
            const auto row = t_prime.row(u);
            for (std::size_t i = 0; i < d; ++i) out[d + i] += row[i];
        }
        const double inv = 1.0 / static_cast<double>(nbrs.size());
        for (std::size_t i = 0; i < d; ++i) out[d + i] *= inv;
    }
    return out;
}

EmbeddingTable neighborhood_table(const EmbeddingTable& t_prime, const TextAttributedGraph& graph) {
    EmbeddingTable table;
    table.rows = graph.node_count();
    table.dim = 2 * t_prime.dim;
    table.data.reserve(table.rows * table.dim);
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        const auto row = neighborhood_text_representation(t_prime, graph, v);
        table.data.insert(table.data.end(), row.begin(), row.end());
    }
    return table;
}

void ContrastiveBatch::validate() const {
    h.validate();
    t.validate();
    if (h.rows != t.rows) throw Error("text_align", "contrastive batch row counts differ");
    if (h.dim != t.dim) throw Error("text_align", "contrastive batch dims differ");
    if (h.rows < 2) throw Error("text_align", "contrastive batch needs at least 2 rows");
    if (!(tau > 0.0)) throw Error("text_align", "temperature must be positive");
}

namespace {

// Row-normalized copy plus per-row norms; errors name the offending row.
std::pair<std::vector<double>, std::vector<double>> normalize_rows(const EmbeddingTable& table,
                                                                   const char* name) {
    std::vector<double> normed(table.data.size());
    std::vector<double> norms(table.rows);
    for (std::size_t i = 0; i < table.rows; ++i) {
        const auto row = table.row(i);
        double sq = 0.0;
        for (double x : row) sq += x * x;
        const double norm = std::sqrt(sq);
        if (norm == 0.0) {
            throw Error("text_align", std::string("zero-norm row ") + std::to_string(i) + " in " + name);
        }
        norms[i] = norm;
        for (std::size_t j = 0; j < table.dim; ++j) normed[i * table.dim + j] = row[j] / norm;
    }
    return {std::move(normed), std::move(norms)};
}

}  // namespace

ContrastiveResult contrastive_loss(const ContrastiveBatch& batch) {
    batch.validate();
    const std::size_t n = batch.h.rows;
    const std::size_t d = batch.h.dim;
    const double tau = batch.tau;

    auto [hn, h_norms] = normalize_rows(batch.h, "H");
    auto [tn, t_norms] = normalize_rows(batch.t, "T");

    std::vector<double> gamma(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += hn[i * d + k] * tn[j * d + k];
            gamma[i * n + j] = dot / tau;
        }
    }

    auto row_ce = [&](auto at) {
        double total = 0.0;
        std::vector<double> probs(n * n);
        for (std::size_t i = 0; i < n; ++i) {
            double m = at(i, 0);
            for (std::size_t j = 1; j < n; ++j) m = std::max(m, at(i, j));
            double z = 0.0;
            for (std::size_t j = 0; j < n; ++j) z += std::exp(at(i, j) - m);
            total += (m + std::log(z)) - at(i, i);
            for (std::size_t j = 0; j < n; ++j) probs[i * n + j] = std::exp(at(i, j) - m) / z;
        }
        return std::pair(total / static_cast<double>(n), std::move(probs));
    };

    auto [ce_rows, p_rows] = row_ce([&](std::size_t i, std::size_t j) { return gamma[i * n + j]; });
    auto [ce_cols, p_cols] = row_ce([&](std::size_t i, std::size_t j) { return gamma[j * n + i]; });

    ContrastiveResult result;
    result.loss = 0.5 * (ce_rows + ce_cols);

    // dL/dGamma_ij = (R_ij + C_ij - 2*delta_ij) / (2N), R = row softmax,
    // C_ij = softmax over column j evaluated at i.
    std::vector<double> g(n * n);
    const double inv2n = 1.0 / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double delta = (i == j) ? 1.0 : 0.0;
            g[i * n + j] = inv2n * (p_rows[i * n + j] + p_cols[j * n + i] - 2.0 * delta);
        }
    }

    // Through Gamma = Hn Tn^T / tau, then through the row normalizations.
    std::vector<double> grad_hn(n * d, 0.0);
    std::vector<double> grad_tn(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double coef = g[i * n + j] / tau;
            for (std::size_t k = 0; k < d; ++k) {
                grad_hn[i * d + k] += coef * tn[j * d + k];
                grad_tn[j * d + k] += coef * hn[i * d + k];
            }
        }
    }

    auto backprop_norm = [d](const std::vector<double>& grad_unit, const std::vector<double>& unit,
                             const std::vector<double>& norms, std::size_t row_count) {
        std::vector<double> out(grad_unit.size());
        for (std::size_t i = 0; i < row_count; ++i) {
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += grad_unit[i * d + k] * unit[i * d + k];
            for (std::size_t k = 0; k < d; ++k) {
                out[i * d + k] = (grad_unit[i * d + k] - dot * unit[i * d + k]) / norms[i];
            }
        }
        return out;
    };

    result.grad_h = backprop_norm(grad_hn, hn, h_norms, n);
    result.grad_t = backprop_norm(grad_tn, tn, t_norms, n);
    return result;
}

}  // namespace linkrr
