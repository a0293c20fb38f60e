#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "linkrr/graph.hpp"

namespace linkrr {

struct EmbeddingTable {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> data;  // row-major

    std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
    std::span<double> row(std::size_t i) { return {data.data() + i * dim, dim}; }
    void validate() const;
};

// Binary layout: magic "LREM", u32 version, u64 rows, u64 dim, then
// rows*dim little-endian doubles row-major.
void save_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

// Deterministic signed hashed bag-of-words over each node's tokens.
EmbeddingTable hashed_bow_embeddings(const TextAttributedGraph& graph, std::size_t dim, std::uint64_t seed);

// concat(T'_v, mean of T'_u over one-hop neighbors); isolated node gets a
// zero second half.
std::vector<double> neighborhood_text_representation(const EmbeddingTable& t_prime,
                                                     const TextAttributedGraph& graph,
                                                     NodeId v);

EmbeddingTable neighborhood_table(const EmbeddingTable& t_prime, const TextAttributedGraph& graph);

struct ContrastiveBatch {
    EmbeddingTable h;
    EmbeddingTable t;
    double tau = 0.07;
    void validate() const;
};

struct ContrastiveResult {
    double loss = 0.0;
    std::vector<double> grad_h;  // same shape as batch.h
    std::vector<double> grad_t;  // same shape as batch.t
};

// Symmetric InfoNCE over row-normalized tables: Gamma = Hn Tn^T / tau,
// loss = (CE(Gamma, diag) + CE(Gamma^T, diag)) / 2 with row-mean CE.
// Gradients are exact through the normalization.
ContrastiveResult contrastive_loss(const ContrastiveBatch& batch);

}  // namespace linkrr
