#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is deliberately naive: dense vectors, explicit matrix
// powers, full scans. Keep these free of any linkrr internals beyond the
// graph accessors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "linkrr/graph.hpp"
#include "linkrr/tokenize.hpp"

namespace oracle {

// Exact personalized PageRank by distributing residual mass until it is
// exhausted: p += alpha * r, r <- (1 - alpha) * P^T r. Matches the fixed
// point the forward-push approximation converges to. An isolated source
// keeps all its mass.
inline std::vector<double> dense_ppr(const linkrr::TextAttributedGraph& g,
                                     linkrr::NodeId source,
                                     double alpha,
                                     double tail_tol = 1e-15) {
    const std::size_t n = g.node_count();
    std::vector<double> p(n, 0.0), r(n, 0.0), next(n, 0.0);
    if (g.degree(source) == 0) {
        p[source] = 1.0;
        return p;
    }
    r[source] = 1.0;
    for (std::size_t round = 0; round < 100000; ++round) {
        double mass = 0.0;
        for (double x : r) mass += x;
        if (mass < tail_tol) break;
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t u = 0; u < n; ++u) {
            if (r[u] == 0.0) continue;
            p[u] += alpha * r[u];
            const double spread = (1.0 - alpha) * r[u] / static_cast<double>(g.degree(u));
            for (linkrr::NodeId v : g.neighbors(static_cast<linkrr::NodeId>(u))) next[v] += spread;
        }
        std::swap(r, next);
    }
    return p;
}

inline std::size_t brute_common_neighbors(const linkrr::TextAttributedGraph& g,
                                          linkrr::NodeId a,
                                          linkrr::NodeId b) {
    std::size_t count = 0;
    for (std::size_t w = 0; w < g.node_count(); ++w) {
        const auto u = static_cast<linkrr::NodeId>(w);
        if (u == a || u == b) continue;
        if (g.has_edge(a, u) && g.has_edge(b, u)) ++count;
    }
    return count;
}

inline double brute_adamic_adar(const linkrr::TextAttributedGraph& g,
                                linkrr::NodeId a,
                                linkrr::NodeId b) {
    double sum = 0.0;
    for (std::size_t w = 0; w < g.node_count(); ++w) {
        const auto u = static_cast<linkrr::NodeId>(w);
        if (u == a || u == b) continue;
        if (g.has_edge(a, u) && g.has_edge(b, u) && g.degree(u) >= 2) {
            sum += 1.0 / std::log(static_cast<double>(g.degree(u)));
        }
    }
    return sum;
}

// Truncated Katz via explicit adjacency-matrix powers.
inline double matrix_power_katz(const linkrr::TextAttributedGraph& g,
                                linkrr::NodeId a,
                                linkrr::NodeId b,
                                double beta,
                                int horizon) {
    const std::size_t n = g.node_count();
    std::vector<double> adj(n * n, 0.0);
    for (const auto& e : g.edges()) {
        adj[e.u * n + e.v] = 1.0;
        adj[e.v * n + e.u] = 1.0;
    }
    std::vector<double> power(adj), tmp(n * n, 0.0);
    double result = 0.0;
    double scale = beta;
    for (int step = 1; step <= horizon; ++step) {
        if (step > 1) {
            std::fill(tmp.begin(), tmp.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < n; ++k) {
                    const double x = power[i * n + k];
                    if (x == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) tmp[i * n + j] += x * adj[k * n + j];
                }
            std::swap(power, tmp);
        }
        result += scale * power[a * n + b];
        scale *= beta;
    }
    return result;
}

// Reference BM25 score of one document for one query.
struct Bm25Reference {
    std::vector<std::vector<std::string>> docs;
    double k1 = 1.2;
    double b = 0.75;
    double avg_len = 0.0;

    explicit Bm25Reference(const std::vector<std::string>& texts, double k1_in = 1.2, double b_in = 0.75)
        : k1(k1_in), b(b_in) {
        for (const auto& t : texts) docs.push_back(linkrr::tokenize(t));
        for (const auto& d : docs) avg_len += static_cast<double>(d.size());
        avg_len /= docs.empty() ? 1.0 : static_cast<double>(docs.size());
    }

    double idf(const std::string& term) const {
        double df = 0.0;
        for (const auto& d : docs) {
            if (std::find(d.begin(), d.end(), term) != d.end()) df += 1.0;
        }
        const double n = static_cast<double>(docs.size());
        return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    }

    double score(std::size_t doc, const std::string& query) const {
        std::set<std::string> terms;
        for (const auto& t : linkrr::tokenize(query)) terms.insert(t);
        const double len = static_cast<double>(docs[doc].size());
        double s = 0.0;
        for (const auto& term : terms) {
            const double tf = static_cast<double>(std::count(docs[doc].begin(), docs[doc].end(), term));
            if (tf == 0.0) continue;
            const double denom = tf + k1 * (1.0 - b + b * len / avg_len);
            s += idf(term) * tf * (k1 + 1.0) / denom;
        }
        return s;
    }
};

struct Metrics {
    double mrr = 0.0;
    double hits_at_1 = 0.0;
    double hits_at_k = 0.0;
};

// rank == SIZE_MAX means the positive never appeared; its reciprocal rank
// contributes 0.
inline Metrics brute_metrics(const std::vector<std::size_t>& ranks, std::size_t k) {
    Metrics m;
    for (std::size_t r : ranks) {
        if (r != static_cast<std::size_t>(-1)) {
            m.mrr += 1.0 / static_cast<double>(r);
            if (r <= 1) m.hits_at_1 += 1.0;
            if (r <= k) m.hits_at_k += 1.0;
        }
    }
    const double n = static_cast<double>(ranks.size());
    m.mrr /= n;
    m.hits_at_1 /= n;
    m.hits_at_k /= n;
    return m;
}

// Central finite difference of f at x along every coordinate.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x,
                                             double h = 1e-5) {
    std::vector<double> grad(x.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = x[i];
        x[i] = saved + h;
        const double up = f(x);
        x[i] = saved - h;
        const double down = f(x);
        x[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline double max_rel_error(const std::vector<double>& got, const std::vector<double>& want) {
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double denom = std::max({std::abs(got[i]), std::abs(want[i]), 1e-8});
        worst = std::max(worst, std::abs(got[i] - want[i]) / denom);
    }
    return worst;
}

}  // namespace oracle
