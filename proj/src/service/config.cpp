#include <fmt/format.h>

#include "aquadapt/error.hpp"
#include "aquadapt/hashing.hpp"
#include "aquadapt/service.hpp"

namespace aquadapt {

namespace {

void require_file(const std::filesystem::path& p, std::string_view what) {
    if (p.empty()) {
        fail(ErrorCode::ConfigError, fmt::format("config is missing '{}'", what));
    }
    if (!std::filesystem::is_regular_file(p)) {
        fail(ErrorCode::ConfigError, fmt::format("{} '{}' is not a readable file", what, p.string()));
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
    if (value.empty()) return {};
    std::filesystem::path p(value);
    return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::optional<std::filesystem::path> optional_path(const Json& j, const char* key,
                                                   const std::filesystem::path& base) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return resolve(base, j.at(key).get<std::string>());
}

}  // namespace

void PipelineConfig::validate() const {
    require_file(corpus_manifest, "corpus_manifest");
    require_file(taxonomy, "taxonomy");
    if (gold) require_file(*gold, "gold");
    if (eval_samples) require_file(*eval_samples, "eval_samples");
    if (storage.empty()) {
        fail(ErrorCode::ConfigError, "config is missing 'storage'");
    }
    bm25.validate();
    cleanup.validate();
    review.validate();
    generator.validate();
    if (judges.empty()) {
        fail(ErrorCode::ConfigError, "config needs at least one judge");
    }
    for (const auto& judge : judges) {
        judge.validate();
    }
    if (generation.expert_requests_per_category < 0 || generation.pairs_per_request < 1 ||
        generation.fewshot_k < 1 || generation.literature_pairs_per_window < 0 ||
        generation.window_tokens < 16) {
        fail(ErrorCode::ConfigError, "generation plan has out-of-range values");
    }
    if (!(headless.accept_rate >= 0.0 && headless.accept_rate <= 1.0)) {
        fail(ErrorCode::ConfigError, "headless_review.accept_rate must be in [0,1]");
    }
    if (!is_valid_score(final_threshold)) {
        fail(ErrorCode::ConfigError, "final_threshold must be in 2..5");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        fail(ErrorCode::BadFraction, "split.validation_fraction must be in (0,1)");
    }
    if (gold_fewshot < 1) {
        fail(ErrorCode::ConfigError, "gold_fewshot must be >= 1");
    }
}

void PipelineConfig::apply_seed(std::uint64_t seed) {
    auto derive = [seed](std::uint64_t salt) { return splitmix64(seed ^ splitmix64(salt)); };
    if (generator.kind == BackendKind::mock) {
        generator.rng_seed = derive(1);
    }
    for (std::size_t i = 0; i < judges.size(); ++i) {
        if (judges[i].kind == BackendKind::mock) {
            judges[i].rng_seed = derive(100 + i);
        }
    }
    headless.rater_seed = derive(2);
    split_seed = derive(3);
}

PipelineConfig load_config(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::exception& e) {
        fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    auto base = std::filesystem::absolute(path).parent_path();
    PipelineConfig cfg;
    try {
        cfg.name = j.value("name", cfg.name);
        cfg.corpus_manifest = resolve(base, j.value("corpus_manifest", ""));
        cfg.taxonomy = resolve(base, j.value("taxonomy", ""));
        cfg.gold = optional_path(j, "gold", base);
        cfg.eval_samples = optional_path(j, "eval_samples", base);
        cfg.storage = resolve(base, j.value("storage", "storage"));
        if (j.contains("query") && !j.at("query").is_null()) {
            cfg.query = j.at("query").get<std::string>();
        }
        if (j.contains("bm25")) cfg.bm25 = j.at("bm25").get<Bm25Params>();
        if (j.contains("cleanup")) cfg.cleanup = j.at("cleanup").get<CleanupConfig>();
        if (j.contains("review")) cfg.review = j.at("review").get<ReviewPolicy>();
        if (j.contains("generator")) cfg.generator = j.at("generator").get<GeneratorRef>();
        if (j.contains("judges")) {
            cfg.judges = j.at("judges").get<std::vector<GeneratorRef>>();
        } else if (j.contains("judge")) {
            cfg.judges = {j.at("judge").get<GeneratorRef>()};
        }
        if (j.contains("generation")) {
            const auto& g = j.at("generation");
            auto& plan = cfg.generation;
            plan.expert_requests_per_category =
                g.value("expert_requests_per_category", plan.expert_requests_per_category);
            plan.pairs_per_request = g.value("pairs_per_request", plan.pairs_per_request);
            plan.fewshot_k = g.value("fewshot_k", plan.fewshot_k);
            plan.literature_pairs_per_window =
                g.value("literature_pairs_per_window", plan.literature_pairs_per_window);
            plan.window_tokens = g.value("window_tokens", plan.window_tokens);
        }
        if (j.contains("headless_review")) {
            const auto& h = j.at("headless_review");
            cfg.headless.enabled = h.value("enabled", cfg.headless.enabled);
            cfg.headless.rater_seed = h.value("rater_seed", cfg.headless.rater_seed);
            cfg.headless.accept_rate = h.value("accept_rate", cfg.headless.accept_rate);
        }
        cfg.final_threshold = j.value("final_threshold", cfg.final_threshold);
        if (j.contains("split")) {
            cfg.validation_fraction = j.at("split").value("validation_fraction", cfg.validation_fraction);
            cfg.split_seed = j.at("split").value("seed", cfg.split_seed);
        }
        cfg.gold_fewshot = j.value("gold_fewshot", cfg.gold_fewshot);
        cfg.strict_taxonomy = j.value("strict_taxonomy", cfg.strict_taxonomy);
        cfg.logical_clock = j.value("logical_clock", cfg.logical_clock);
    } catch (const Json::exception& e) {
        fail(ErrorCode::ConfigError, path.string() + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void to_json(Json& j, const PipelineConfig& cfg) {
    auto opt = [](const std::optional<std::filesystem::path>& p) {
        return p ? Json(p->string()) : Json(nullptr);
    };
    j = Json{{"name", cfg.name},
             {"corpus_manifest", cfg.corpus_manifest.string()},
             {"taxonomy", cfg.taxonomy.string()},
             {"gold", opt(cfg.gold)},
             {"eval_samples", opt(cfg.eval_samples)},
             {"storage", cfg.storage.string()},
             {"query", cfg.query ? Json(*cfg.query) : Json(nullptr)},
             {"bm25", cfg.bm25},
             {"cleanup", cfg.cleanup},
             {"review", cfg.review},
             {"generator", cfg.generator},
             {"judges", cfg.judges},
             {"generation",
              {{"expert_requests_per_category", cfg.generation.expert_requests_per_category},
               {"pairs_per_request", cfg.generation.pairs_per_request},
               {"fewshot_k", cfg.generation.fewshot_k},
               {"literature_pairs_per_window", cfg.generation.literature_pairs_per_window},
               {"window_tokens", cfg.generation.window_tokens}}},
             {"headless_review",
              {{"enabled", cfg.headless.enabled},
               {"rater_seed", cfg.headless.rater_seed},
               {"accept_rate", cfg.headless.accept_rate}}},
             {"final_threshold", cfg.final_threshold},
             {"split", {{"validation_fraction", cfg.validation_fraction}, {"seed", cfg.split_seed}}},
             {"gold_fewshot", cfg.gold_fewshot},
             {"strict_taxonomy", cfg.strict_taxonomy},
             {"logical_clock", cfg.logical_clock}};
}

}  // namespace aquadapt
