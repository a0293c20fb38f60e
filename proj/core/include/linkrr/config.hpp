#pragma once

#include <cstdint>
#include <string>

#include "linkrr/error.hpp"

namespace linkrr {

struct PprConfig {
    double alpha = 0.15;     // teleport probability
    double epsilon = 1e-5;   // push residual tolerance, scaled by degree
    double eta_near = 0.01;  // context threshold for 1-hop neighbors of a or b
    double eta_far = 1.0;    // context threshold for everything else

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw Error("ppr", "ppr.alpha must be in (0, 1)");
        if (!(epsilon > 0.0)) throw Error("ppr", "ppr.epsilon must be positive");
        if (eta_near < 0.0 || eta_far < 0.0) throw Error("ppr", "ppr thresholds must be non-negative");
    }
};

struct RpeConfig {
    // The default feature map of (ppr_a, ppr_b) has exactly six components:
    // [p, q, p+q, p*q, log(1+p), log(1+q)].
    int dim = 6;

    void validate() const {
        if (dim != 6) throw Error("ppr", "rpe.dim must be 6 for the built-in feature map");
    }
};

struct PairwiseTrainConfig {
    double lr = 0.5;
    int epochs = 120;
    std::uint64_t seed = 17;

    void validate() const {
        if (!(lr > 0.0)) throw Error("pairwise", "pairwise.train.lr must be positive");
        if (epochs < 1) throw Error("pairwise", "pairwise.train.epochs must be >= 1");
    }
};

struct PairwiseConfig {
    double katz_beta = 0.05;
    int katz_horizon = 4;
    int dp = 16;  // pairwise encoding width
    PairwiseTrainConfig train;

    void validate() const {
        if (!(katz_beta > 0.0)) throw Error("pairwise", "pairwise.katz_beta must be positive");
        if (katz_horizon < 1) throw Error("pairwise", "pairwise.katz_horizon must be >= 1");
        if (dp < 1) throw Error("pairwise", "pairwise encoding width must be >= 1");
        train.validate();
    }
};

struct RetrievalConfig {
    double k1 = 1.2;
    double b = 0.75;
    double beta = 0.65;  // near-group fraction of n_C
    int n_groups = 5;
    int group_size = 3;

    void validate() const {
        if (!(k1 >= 0.0)) throw Error("retrieval", "retrieval.k1 must be non-negative");
        if (b < 0.0 || b > 1.0) throw Error("retrieval", "retrieval.b must be in [0, 1]");
        if (beta < 0.0 || beta > 1.0) throw Error("retrieval", "retrieval.beta must be in [0, 1]");
        if (n_groups < 1 || group_size < 1) throw Error("retrieval", "retrieval group shape must be positive");
    }
};

struct RerankConfig {
    int icl_k = 2;        // in-context positives (and negatives) per prompt
    bool strict = false;  // propagate provider errors instead of fail-soft scoring

    void validate() const {
        if (icl_k < 0) throw Error("rerank", "rerank.icl_k must be >= 0");
    }
};

struct RemoteConfig {
    std::string endpoint;        // e.g. http://127.0.0.1:8080/v1/completions
    std::string model;
    int timeout_ms = 30000;
    int max_in_flight = 4;
    int retries = 2;             // retriable failures re-attempted this many times
    int backoff_ms = 100;        // base delay, doubled per retry
    int logprobs = 5;            // top-logprob count requested per position
    std::string auth_env;        // env var holding the bearer token, empty = none
    bool grouped_decoding = false;
    bool prefix_reuse = false;
    int gen_max_tokens = 64;

    void validate() const {
        if (timeout_ms <= 0) throw Error("scorers", "remote.timeout_ms must be positive");
        if (retries < 0) throw Error("scorers", "remote.retries must be >= 0");
        if (max_in_flight < 1) throw Error("scorers", "remote.max_in_flight must be >= 1");
        if (logprobs < 2) throw Error("scorers", "remote.logprobs must be >= 2");
    }
};

// One structured config for the whole pipeline; the CLI maps its config file
// keys (ppr.alpha, retrieval.beta, ...) onto these fields.
struct PipelineConfig {
    PprConfig ppr;
    RpeConfig rpe;
    PairwiseConfig pairwise;
    RetrievalConfig retrieval;
    RerankConfig rerank;
    RemoteConfig remote;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string provider = "heuristic";  // heuristic | remote

    void validate() const {
        ppr.validate();
        rpe.validate();
        pairwise.validate();
        retrieval.validate();
        rerank.validate();
        if (workers < 1) throw Error("cli", "workers must be >= 1");
        if (provider != "heuristic" && provider != "remote")
            throw Error("cli", "provider must be 'heuristic' or 'remote'");
        if (provider == "remote") remote.validate();
    }
};

}  // namespace linkrr
