// Operator CLI. Every subcommand runs one pipeline stage against a storage root.
// Errors print one JSON line on stderr: {"error": <code>, "message": ...}.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "aquadapt/error.hpp"
#include "aquadapt/service.hpp"

using namespace aquadapt;

namespace {

struct Globals {
    std::string config;
    std::string storage;
    std::optional<std::uint64_t> seed;
    bool strict_taxonomy = false;
};

PipelineConfig resolve_config(const Globals& g) {
    auto cfg = load_config(g.config);
    if (!g.storage.empty()) cfg.storage = std::filesystem::absolute(g.storage);
    if (g.seed) cfg.apply_seed(*g.seed);
    if (g.strict_taxonomy) cfg.strict_taxonomy = true;
    return cfg;
}

void emit(const Json& j) { std::cout << j.dump() << std::endl; }

int report_error(std::string_view code, const std::string& message) {
    std::cerr << Json{{"error", code}, {"message", message}}.dump() << std::endl;
    return code == "ConfigError" ? 2 : 1;
}

std::pair<std::string, std::string> split_run_spec(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
        fail(ErrorCode::ConfigError, "--run expects label=path, got '" + spec + "'");
    }
    return {spec.substr(0, eq), spec.substr(eq + 1)};
}

ApiServer* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"aquadapt: aquaculture instruction-dataset pipeline"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "pipeline config (JSON)")->required();
    app.add_option("--storage", g.storage, "storage root (overrides the config)");
    app.add_option("--seed", g.seed, "reseed mock backends, scripted rater and split");
    app.add_flag("--strict-taxonomy", g.strict_taxonomy, "require the eleven canonical categories");

    struct Stage {
        const char* name;
        JobKind kind;
        const char* help;
    };
    const Stage stages[] = {
        {"ingest", JobKind::ingest, "read the corpus manifest into raw documents"},
        {"clean", JobKind::clean, "apply the cleaning rules"},
        {"index", JobKind::index, "build the BM25 index"},
        {"filter", JobKind::filter, "keep documents scoring at least tau"},
        {"generate", JobKind::generate, "generate expert and literature candidates"},
        {"cleanup", JobKind::cleanup, "run the literature cleanup rules"},
        {"score", JobKind::score, "judge-score the eligible pool"},
        {"assemble", JobKind::assemble, "filter, merge, split and export the dataset"},
        {"eval", JobKind::eval, "BLEU/ROUGE on the validation split"},
    };
    std::optional<JobKind> chosen;
    for (const auto& s : stages) {
        app.add_subcommand(s.name, s.help)->callback([&chosen, kind = s.kind] { chosen = kind; });
    }

    auto* bench = app.add_subcommand("judge-bench", "benchmark judges against the gold standard");
    std::string gold_file;
    std::vector<std::string> run_specs;
    bench->add_option("--gold", gold_file, "gold standard records {pair_id, score}");
    bench->add_option("--run", run_specs, "precomputed judge run, label=path (repeatable)");

    auto* serve = app.add_subcommand("review-serve", "serve the review API");
    std::string host = "127.0.0.1";
    int port = 8080;
    bool headless = false;
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_flag("--headless", headless, "apply the scripted expert instead of serving");

    auto* run_all = app.add_subcommand("run-all", "run every stage from a clean storage root");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        return report_error("UsageError", e.what());
    }

    try {
        auto cfg = resolve_config(g);
        Pipeline pipeline(cfg);

        if (chosen) {
            if (*chosen == JobKind::assemble) {
                emit(Json(pipeline.assemble()));
            } else if (*chosen == JobKind::eval) {
                emit(Json(pipeline.eval()));
            } else {
                pipeline.run_stage(*chosen);
                emit({{"stage", std::string(to_string(*chosen))}, {"status", "done"}});
            }
        } else if (bench->parsed()) {
            if (run_specs.empty()) {
                pipeline.judge_bench();
                emit(Json::parse(read_text_file(pipeline.path("judgebench.json"))));
            } else {
                if (gold_file.empty()) {
                    fail(ErrorCode::ConfigError, "--run needs --gold");
                }
                auto gold = load_gold_standard(gold_file, "supplied file");
                std::vector<JudgeReport> reports;
                for (const auto& spec : run_specs) {
                    auto [label, file] = split_run_spec(spec);
                    reports.push_back(benchmark_judge(gold, load_judge_run(file, label)));
                }
                Json out{{"reports", reports}, {"selected", select_judge(reports)},
                         {"gold_count", gold.entries.size()}, {"sample_policy", gold.sample_policy}};
                write_text_file(pipeline.path("judgebench.json"), out.dump(2) + "\n");
                write_text_file(pipeline.path("judgebench.txt"), render_judge_table(reports));
                emit(out);
            }
        } else if (serve->parsed()) {
            if (headless) {
                pipeline.review_headless();
                emit({{"stage", "review"}, {"status", "done"}});
            } else {
                pipeline.store();
                JobQueue jobs(pipeline);
                ApiServer server(pipeline, jobs);
                g_server = &server;
                std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
                std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
                std::cerr << "serving on " << host << ":" << port << std::endl;
                server.serve(host, port);
                g_server = nullptr;
            }
        } else if (run_all->parsed()) {
            emit(Json(pipeline.run_all()));
        }
    } catch (const Error& e) {
        return report_error(error_code_name(e.code()), e.what());
    } catch (const std::exception& e) {
        return report_error("InternalError", e.what());
    }
    return 0;
}
