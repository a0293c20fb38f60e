#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "linkrr/config.hpp"
#include "linkrr/error.hpp"
#include "linkrr/eval.hpp"
#include "linkrr/graph.hpp"
#include "linkrr/microdecoder.hpp"
#include "linkrr/pairwise.hpp"
#include "linkrr/retrieval.hpp"
#include "linkrr/rng.hpp"
#include "linkrr/scorers.hpp"
#include "linkrr/text_align.hpp"

namespace {

using nlohmann::json;

struct Paths {
    std::string graph;
    std::string split;
    std::string embeddings;
    std::string params;
    std::string report;
};

void log_line(const std::string& msg) { std::fprintf(stderr, "[linkrr] %s\n", msg.c_str()); }

void require_file(const std::string& path, const std::string& key) {
    if (path.empty()) throw linkrr::Error("config", "missing required path: " + key);
    if (!std::filesystem::exists(path)) {
        throw linkrr::Error("config", key + " does not exist: " + path);
    }
}

std::array<double, 3> parse_ratios(const std::string& text) {
    std::array<double, 3> out{};
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) {
        const std::size_t comma = text.find(',', pos);
        const std::string part =
            text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            out[static_cast<std::size_t>(i)] = std::stod(part);
        } catch (const std::exception&) {
            throw linkrr::Error("config", "ratios must be three comma-separated numbers");
        }
        if (comma == std::string::npos && i < 2) {
            throw linkrr::Error("config", "ratios must be three comma-separated numbers");
        }
        pos = comma + 1;
    }
    return out;
}

linkrr::NodeId resolve_node(const linkrr::TextAttributedGraph& graph, const std::string& original_id) {
    if (auto v = graph.find(original_id)) return *v;
    throw linkrr::Error("cli", "unknown node id: " + original_id);
}

std::unique_ptr<linkrr::LogitProvider> make_provider(const linkrr::TextAttributedGraph& train_view,
                                                     const linkrr::EdgeSplit& split,
                                                     const linkrr::PipelineConfig& config,
                                                     const std::string& params_path) {
    if (config.provider == "remote") {
        return std::make_unique<linkrr::RemoteProvider>(config.remote);
    }
    linkrr::CombinerParams params;
    if (!params_path.empty()) {
        require_file(params_path, "paths.params");
        params = linkrr::load_params(params_path);
        log_line("loaded combiner params from " + params_path);
    } else {
        log_line("training combiner on the train split");
        params = linkrr::train_combiner(train_view, split.train, config.pairwise, config.ppr, config.rpe);
    }
    return std::make_unique<linkrr::HeuristicProvider>(train_view, std::move(params), config.ppr,
                                                       config.rpe, config.pairwise);
}

struct RetrievedForSource {
    linkrr::CandidateSet picked;
    linkrr::TextAttributedGraph train_view;
};

RetrievedForSource retrieve_for_source(const linkrr::TextAttributedGraph& graph,
                                       const linkrr::EdgeSplit& split,
                                       linkrr::NodeId source,
                                       std::size_t n_c,
                                       const linkrr::PipelineConfig& config) {
    linkrr::TextAttributedGraph train_view = linkrr::edge_subgraph(graph, split.train);

    linkrr::CandidateSet pool;
    pool.source = source;
    for (linkrr::NodeId v = 0; v < graph.node_count(); ++v) {
        if (v == source || train_view.has_edge(source, v)) continue;
        pool.candidates.push_back(v);
        pool.provenance.push_back(linkrr::Provenance::sampled);
    }

    std::vector<std::string> docs;
    docs.reserve(graph.node_count());
    for (linkrr::NodeId v = 0; v < graph.node_count(); ++v) docs.push_back(graph.text(v));
    const auto index = linkrr::Bm25Index::build(docs, config.retrieval.k1, config.retrieval.b);

    linkrr::TemplateQueryGenerator generator(train_view, config.seed);
    const auto queries = linkrr::generate_queries(source, generator, config.retrieval.n_groups,
                                                  config.retrieval.group_size);
    linkrr::CandidateSet picked = linkrr::retrieve_candidates(train_view, index, source, queries, pool,
                                                              n_c, config.retrieval.beta);
    return {std::move(picked), std::move(train_view)};
}

const char* provenance_name(linkrr::Provenance p) {
    switch (p) {
        case linkrr::Provenance::near:
            return "near";
        case linkrr::Provenance::far:
            return "far";
        default:
            return "sampled";
    }
}

void write_output(const json& doc, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << doc.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw linkrr::Error("cli", "cannot write file: " + out_path);
    out << doc.dump(2) << "\n";
    log_line("wrote " + out_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retrieval-rerank link prediction for text-attributed graphs"};
    app.require_subcommand(1);
    app.set_config("--config")->check(CLI::ExistingFile);
    app.allow_config_extras(false);

    linkrr::PipelineConfig cfg;
    Paths paths;

    app.add_option("--seed", cfg.seed, "global seed");
    app.add_option("--workers", cfg.workers, "evaluation worker threads");
    app.add_option("--provider", cfg.provider, "heuristic | remote");

    app.add_option("--paths.graph", paths.graph, "graph artifact path");
    app.add_option("--paths.split", paths.split, "edge split path");
    app.add_option("--paths.embeddings", paths.embeddings, "embedding table path");
    app.add_option("--paths.params", paths.params, "combiner params path");
    app.add_option("--paths.report", paths.report, "report output path");

    app.add_option("--ppr.alpha", cfg.ppr.alpha);
    app.add_option("--ppr.epsilon", cfg.ppr.epsilon);
    app.add_option("--ppr.eta_near", cfg.ppr.eta_near);
    app.add_option("--ppr.eta_far", cfg.ppr.eta_far);
    app.add_option("--rpe.dim", cfg.rpe.dim);
    app.add_option("--pairwise.katz_beta", cfg.pairwise.katz_beta);
    app.add_option("--pairwise.katz_horizon", cfg.pairwise.katz_horizon);
    app.add_option("--pairwise.dp", cfg.pairwise.dp);
    app.add_option("--pairwise.train.lr", cfg.pairwise.train.lr);
    app.add_option("--pairwise.train.epochs", cfg.pairwise.train.epochs);
    app.add_option("--pairwise.train.seed", cfg.pairwise.train.seed);
    app.add_option("--retrieval.k1", cfg.retrieval.k1);
    app.add_option("--retrieval.b", cfg.retrieval.b);
    app.add_option("--retrieval.beta", cfg.retrieval.beta);
    app.add_option("--retrieval.n_groups", cfg.retrieval.n_groups);
    app.add_option("--retrieval.group_size", cfg.retrieval.group_size);
    app.add_option("--rerank.icl_k", cfg.rerank.icl_k);
    app.add_option("--rerank.strict", cfg.rerank.strict);
    app.add_option("--remote.endpoint", cfg.remote.endpoint);
    app.add_option("--remote.model", cfg.remote.model);
    app.add_option("--remote.timeout_ms", cfg.remote.timeout_ms);
    app.add_option("--remote.max_in_flight", cfg.remote.max_in_flight);
    app.add_option("--remote.retries", cfg.remote.retries);
    app.add_option("--remote.backoff_ms", cfg.remote.backoff_ms);
    app.add_option("--remote.logprobs", cfg.remote.logprobs);
    app.add_option("--remote.auth_env", cfg.remote.auth_env);
    app.add_option("--remote.grouped_decoding", cfg.remote.grouped_decoding);
    app.add_option("--remote.prefix_reuse", cfg.remote.prefix_reuse);
    app.add_option("--remote.gen_max_tokens", cfg.remote.gen_max_tokens);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Read JSONL nodes/edges and write the graph artifact");
    std::string nodes_path, edges_path, out_path;
    ingest->add_option("--nodes", nodes_path, "nodes JSONL")->required();
    ingest->add_option("--edges", edges_path, "edges JSONL")->required();
    ingest->add_option("--out", out_path, "output graph path")->required();

    // split
    auto* split_cmd = app.add_subcommand("split", "Split graph edges into train/valid/test");
    std::string ratios_text = "0.8,0.1,0.1";
    std::string split_out;
    split_cmd->add_option("--ratios", ratios_text, "train,valid,test ratios");
    split_cmd->add_option("--out", split_out, "output split path")->required();

    // embed
    auto* embed = app.add_subcommand("embed", "Write an embedding table for the graph texts");
    std::string method = "hashed-bow";
    std::size_t embed_dim = 64;
    std::string embed_out;
    embed->add_option("--method", method, "hashed-bow");
    embed->add_option("--dim", embed_dim, "embedding dimension");
    embed->add_option("--out", embed_out, "output embedding path")->required();

    // train-pairwise
    auto* train = app.add_subcommand("train-pairwise", "Train the combiner on the train split");
    std::string train_out;
    train->add_option("--out", train_out, "output params path")->required();

    // retrieve
    auto* retrieve = app.add_subcommand("retrieve", "Retrieve candidates for a source node");
    std::string retrieve_source;
    std::size_t retrieve_nc = 30;
    std::string retrieve_out;
    retrieve->add_option("--source", retrieve_source, "source node id")->required();
    retrieve->add_option("--nc", retrieve_nc, "number of candidates");
    retrieve->add_option("--out", retrieve_out, "output path (default stdout)");

    // rerank
    auto* rerank = app.add_subcommand("rerank", "Retrieve and rerank candidates for a source node");
    std::string rerank_source;
    std::size_t rerank_nc = 30;
    std::string rerank_out;
    rerank->add_option("--source", rerank_source, "source node id")->required();
    rerank->add_option("--nc", rerank_nc, "number of candidates");
    rerank->add_option("--out", rerank_out, "output path (default stdout)");

    // eval
    auto* eval = app.add_subcommand("eval", "Run the ranking experiment and write a report");
    std::string protocol_name = "rank";
    linkrr::EvalProtocol protocol;
    eval->add_option("--protocol", protocol_name, "rank | retrieve-rerank");
    eval->add_option("--NC", protocol.total_candidates, "total candidates per pair");
    eval->add_option("--nc", protocol.retrieved, "retrieved candidates (retrieve-rerank)");
    eval->add_option("--pairs", protocol.num_pairs, "number of evaluated pairs");
    eval->add_option("--icl-k", protocol.icl_k, "in-context example pairs");
    std::string eval_out;
    eval->add_option("--out", eval_out, "report path (overrides paths.report)");

    // kvbench
    auto* kvbench = app.add_subcommand("kvbench", "Verify shared-prefix attention op counts");
    std::size_t ms = 100, mt = 5, nc = 50;
    kvbench->add_option("--ms", ms, "prefix length");
    kvbench->add_option("--mt", mt, "suffix length");
    kvbench->add_option("--nc", nc, "number of suffixes");

    for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "[config] %s\n", e.what());
        return 2;
    }

    try {
        cfg.validate();
        protocol.seed = cfg.seed;
    } catch (const linkrr::Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    }

    try {
        if (ingest->parsed()) {
            require_file(nodes_path, "--nodes");
            require_file(edges_path, "--edges");
            linkrr::IngestStats stats;
            const auto graph = linkrr::load_graph_jsonl(nodes_path, edges_path, &stats);
            linkrr::save_graph(graph, out_path);
            json doc{{"nodes", graph.node_count()},
                     {"edges", graph.edge_count()},
                     {"self_loops_dropped", stats.self_loops_dropped},
                     {"duplicate_edges_dropped", stats.duplicate_edges_dropped}};
            std::cout << doc.dump() << "\n";
            log_line("wrote " + out_path);
        } else if (split_cmd->parsed()) {
            require_file(paths.graph, "paths.graph");
            const auto graph = linkrr::load_graph(paths.graph);
            const auto split = linkrr::split_edges(graph, parse_ratios(ratios_text), cfg.seed);
            linkrr::save_split(split, split_out);
            json doc{{"train", split.train.size()}, {"valid", split.valid.size()}, {"test", split.test.size()}};
            std::cout << doc.dump() << "\n";
            log_line("wrote " + split_out);
        } else if (embed->parsed()) {
            require_file(paths.graph, "paths.graph");
            if (method != "hashed-bow") throw linkrr::Error("cli", "unknown embed method: " + method);
            const auto graph = linkrr::load_graph(paths.graph);
            const auto table = linkrr::hashed_bow_embeddings(graph, embed_dim, cfg.seed);
            linkrr::save_embeddings(table, embed_out);
            json doc{{"rows", table.rows}, {"dim", table.dim}};
            std::cout << doc.dump() << "\n";
            log_line("wrote " + embed_out);
        } else if (train->parsed()) {
            require_file(paths.graph, "paths.graph");
            require_file(paths.split, "paths.split");
            const auto graph = linkrr::load_graph(paths.graph);
            const auto split = linkrr::load_split(paths.split);
            const auto train_view = linkrr::edge_subgraph(graph, split.train);
            const auto params =
                linkrr::train_combiner(train_view, split.train, cfg.pairwise, cfg.ppr, cfg.rpe);
            linkrr::save_params(params, train_out);
            log_line("wrote " + train_out);
        } else if (retrieve->parsed()) {
            require_file(paths.graph, "paths.graph");
            require_file(paths.split, "paths.split");
            const auto graph = linkrr::load_graph(paths.graph);
            const auto split = linkrr::load_split(paths.split);
            const auto source = resolve_node(graph, retrieve_source);
            const auto result = retrieve_for_source(graph, split, source, retrieve_nc, cfg);
            json cands = json::array();
            for (std::size_t i = 0; i < result.picked.candidates.size(); ++i) {
                cands.push_back({{"id", graph.original_id(result.picked.candidates[i])},
                                 {"provenance", provenance_name(result.picked.provenance[i])}});
            }
            write_output(json{{"source", retrieve_source}, {"candidates", cands}}, retrieve_out);
        } else if (rerank->parsed()) {
            require_file(paths.graph, "paths.graph");
            require_file(paths.split, "paths.split");
            const auto graph = linkrr::load_graph(paths.graph);
            const auto split = linkrr::load_split(paths.split);
            const auto source = resolve_node(graph, rerank_source);
            auto result = retrieve_for_source(graph, split, source, rerank_nc, cfg);
            const auto provider = make_provider(result.train_view, split, cfg, paths.params);
            const auto examples = linkrr::select_icl_examples(result.train_view, split, source,
                                                              cfg.rerank.icl_k, cfg.seed);
            const auto ranked = linkrr::rerank_candidates(*provider, result.train_view, source,
                                                          result.picked, examples, std::nullopt,
                                                          cfg.rerank);
            json items = json::array();
            for (std::size_t i = 0; i < ranked.ordering.size(); ++i) {
                items.push_back({{"id", graph.original_id(ranked.ordering[i])},
                                 {"score", ranked.scores[i]}});
            }
            write_output(json{{"source", rerank_source}, {"ranking", items}}, rerank_out);
        } else if (eval->parsed()) {
            require_file(paths.graph, "paths.graph");
            require_file(paths.split, "paths.split");
            if (protocol_name == "rank") {
                protocol.retrieved = 0;
            } else if (protocol_name != "retrieve-rerank") {
                throw linkrr::Error("config", "unknown protocol: " + protocol_name);
            } else if (protocol.retrieved == 0) {
                throw linkrr::Error("config", "retrieve-rerank requires --nc >= 1");
            }
            const auto graph = linkrr::load_graph(paths.graph);
            const auto split = linkrr::load_split(paths.split);
            const auto report = linkrr::run_experiment(graph, split, protocol, cfg);
            const std::string report_path = eval_out.empty() ? paths.report : eval_out;
            if (!report_path.empty()) {
                linkrr::save_report(report, report_path);
                log_line("wrote " + report_path);
            }
            json doc{{"mrr", report.mrr},
                     {"hits_at_1", report.hits_at_1},
                     {"hits_at_k", report.hits_at_k},
                     {"k", report.k},
                     {"pairs", report.ranks.size()},
                     {"provider_errors", report.provider_errors},
                     {"reranker_calls", report.reranker_calls}};
            std::cout << doc.dump() << "\n";
        } else if (kvbench->parsed()) {
            const auto [pred_naive, pred_cached] = linkrr::predicted_cost(ms, mt, nc);
            linkrr::MicroDecoderConfig dc;
            dc.max_seq = ms + mt;
            dc.seed = cfg.seed;
            const linkrr::MicroDecoder decoder(dc);
            linkrr::Rng rng(cfg.seed);
            auto random_tokens = [&](std::size_t n) {
                std::vector<int> t(n);
                for (auto& x : t) x = static_cast<int>(rng.below(dc.vocab));
                return t;
            };
            const auto prefix = random_tokens(ms);
            std::vector<std::vector<int>> suffixes;
            for (std::size_t i = 0; i < nc; ++i) suffixes.push_back(random_tokens(mt));
            const auto [logits, report] = decoder.shared_prefix_batch(prefix, suffixes);

            std::size_t measured_naive = 0;
            for (const auto& suffix : suffixes) {
                std::vector<int> full = prefix;
                full.insert(full.end(), suffix.begin(), suffix.end());
                measured_naive += decoder.forward_logits(full).ops_per_layer;
            }
            const bool agreement = measured_naive == pred_naive && report.cached_ops == pred_cached &&
                                   report.naive_ops == pred_naive;
            json doc{{"m_s", report.m_s},
                     {"m_t", report.m_t},
                     {"n_C", report.n_c},
                     {"naive_ops", report.naive_ops},
                     {"cached_ops", report.cached_ops},
                     {"measured_naive_ops", measured_naive},
                     {"predicted_naive_ops", pred_naive},
                     {"predicted_cached_ops", pred_cached},
                     {"ratio", static_cast<double>(report.naive_ops) /
                                   static_cast<double>(report.cached_ops)},
                     {"agreement", agreement}};
            std::cout << doc.dump(2) << "\n";
            if (!agreement) throw linkrr::Error("microdecoder", "measured ops diverge from predicted");
        }
    } catch (const linkrr::Error& e) {
        const std::string what = e.what();
        if (what.rfind("[config]", 0) == 0) {
            std::fprintf(stderr, "%s\n", what.c_str());
            return 2;
        }
        std::fprintf(stderr, "%s\n", what.c_str());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "[cli] %s\n", e.what());
        return 1;
    }
    return 0;
}
