#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <thread>

#include "aquadapt/corpus.hpp"
#include "aquadapt/dispatch.hpp"
#include "aquadapt/error.hpp"
#include "aquadapt/hashing.hpp"
#include "aquadapt/service.hpp"
#include "aquadapt/taxonomy.hpp"

namespace aquadapt {

namespace {

constexpr const char* kRawDocs = "documents.raw.jsonl";
constexpr const char* kCleanDocs = "documents.clean.jsonl";
constexpr const char* kCorpusStats = "corpus_stats.json";
constexpr const char* kIndex = "index.json";
constexpr const char* kRelevant = "relevant.jsonl";
constexpr const char* kEvents = "events.jsonl";
constexpr const char* kCleanup = "cleanup.jsonl";
constexpr const char* kJudgeBench = "judgebench.json";
constexpr const char* kJudgeTable = "judgebench.txt";
constexpr const char* kScoreFailures = "score_failures.jsonl";
constexpr const char* kDatasetDir = "dataset";
constexpr const char* kEval = "eval.json";
constexpr const char* kEvalTable = "eval.txt";

constexpr const char* kHeadlessRater = "headless-expert";

void report(const Progress& progress, std::size_t done, std::size_t total) {
    if (progress) progress(done, total);
}

void require_input(const std::filesystem::path& p, std::string_view stage) {
    if (!std::filesystem::exists(p)) {
        fail(ErrorCode::IoError,
             fmt::format("{} needs '{}'; run the earlier stage first", stage, p.filename().string()));
    }
}

std::vector<CleanDocument> load_clean(const std::filesystem::path& p) {
    std::vector<CleanDocument> docs;
    for (const auto& r : read_jsonl(p)) docs.push_back(r.get<CleanDocument>());
    return docs;
}

Bm25Index load_index(const std::filesystem::path& p) {
    return Bm25Index::from_snapshot(Json::parse(read_text_file(p)));
}

std::size_t worker_count() {
    return std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
}

template <typename T>
std::vector<Json> to_records(const std::vector<T>& items) {
    std::vector<Json> out;
    out.reserve(items.size());
    for (const auto& item : items) out.emplace_back(item);
    return out;
}

std::vector<SeedPair> rotated(const std::vector<SeedPair>& seeds, std::size_t by) {
    std::vector<SeedPair> out(seeds);
    if (!out.empty()) {
        std::rotate(out.begin(), out.begin() + static_cast<long>(by % out.size()), out.end());
    }
    return out;
}

struct GoldRecord {
    std::string pair_id;
    std::string category_id;
    std::string question;
    std::string answer;
    int score = 0;
};

std::vector<GoldRecord> load_gold_records(const std::filesystem::path& p) {
    std::vector<GoldRecord> out;
    for (const auto& r : read_jsonl(p)) {
        GoldRecord g;
        g.pair_id = r.at("pair_id").get<std::string>();
        g.category_id = r.value("category_id", "");
        g.question = r.at("question").get<std::string>();
        g.answer = r.at("answer").get<std::string>();
        g.score = r.at("score").get<int>();
        if (!is_valid_score(g.score)) {
            fail(ErrorCode::IllegalScore, fmt::format("gold '{}' has score {}", g.pair_id, g.score));
        }
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    // Fail at startup, not mid-run, on a broken taxonomy.
    load_taxonomy(cfg_.taxonomy, cfg_.strict_taxonomy);
    std::filesystem::create_directories(cfg_.storage);
}

ReviewStore& Pipeline::store() {
    std::lock_guard lock(store_mutex_);
    if (!store_) {
        std::filesystem::create_directories(cfg_.storage);
        store_ = ReviewStore::recover(cfg_.review, path(kEvents), std::nullopt,
                                      cfg_.logical_clock ? logical_clock() : system_clock_millis());
        if (!store_->taxonomy()) {
            store_->initialize_taxonomy(load_taxonomy(cfg_.taxonomy, cfg_.strict_taxonomy));
        }
        auto clean_path = path(kCleanDocs);
        store_->set_document_lookup([clean_path](const std::string& id) -> std::optional<std::string> {
            if (!std::filesystem::exists(clean_path)) return std::nullopt;
            for (const auto& r : read_jsonl(clean_path)) {
                if (r.at("id").get<std::string>() == id) return r.at("clean_text").get<std::string>();
            }
            return std::nullopt;
        });
    }
    return *store_;
}

AquaQuery Pipeline::query() const {
    if (cfg_.query) {
        return AquaQuery::from_text(*cfg_.query);
    }
    return default_query(load_taxonomy(cfg_.taxonomy, cfg_.strict_taxonomy));
}

void Pipeline::run_stage(JobKind kind, const Progress& progress) {
    switch (kind) {
        case JobKind::ingest: return ingest(progress);
        case JobKind::clean: return clean(progress);
        case JobKind::index: return index(progress);
        case JobKind::filter: return filter(progress);
        case JobKind::generate: return generate(progress);
        case JobKind::cleanup: return cleanup(progress);
        case JobKind::judge_bench: return judge_bench(progress);
        case JobKind::score: return score(progress);
        case JobKind::assemble: assemble(progress); return;
        case JobKind::eval: eval(progress); return;
    }
}

void Pipeline::ingest(const Progress& progress) {
    auto entries = read_manifest(cfg_.corpus_manifest);
    if (entries.empty()) {
        fail(ErrorCode::EmptyInput, "corpus manifest lists no documents");
    }
    Ingestor ingestor;
    std::vector<RawDocument> docs;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        std::ifstream in(e.path, std::ios::binary);
        if (!in) {
            fail(ErrorCode::IoError, "cannot read " + e.path.string());
        }
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        std::span<const std::uint8_t> view(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                           bytes.size());
        docs.push_back(ingestor.ingest(view, e.source_kind, e.path.filename().string(), e.id));
        report(progress, i + 1, entries.size());
    }
    write_jsonl(path(kRawDocs), to_records(docs));
}

void Pipeline::clean(const Progress& progress) {
    require_input(path(kRawDocs), "clean");
    std::vector<RawDocument> raw;
    for (const auto& r : read_jsonl(path(kRawDocs))) raw.push_back(r.get<RawDocument>());
    std::vector<CleanDocument> docs(raw.size());
    bounded_parallel_for(raw.size(), worker_count(),
                         [&](std::size_t i) { docs[i] = clean_document(raw[i]); });
    write_jsonl(path(kCleanDocs), to_records(docs));
    write_text_file(path(kCorpusStats), Json(corpus_stats(docs)).dump(2) + "\n");
    report(progress, docs.size(), docs.size());
}

void Pipeline::index(const Progress& progress) {
    require_input(path(kCleanDocs), "index");
    auto docs = load_clean(path(kCleanDocs));
    auto idx = Bm25Index::build(docs);
    write_text_file(path(kIndex), idx.to_snapshot().dump() + "\n");
    report(progress, docs.size(), docs.size());
}

void Pipeline::filter(const Progress& progress) {
    require_input(path(kIndex), "filter");
    auto idx = load_index(path(kIndex));
    auto relevant = filter_relevant(idx, query(), cfg_.bm25);
    std::vector<Json> out;
    for (const auto& d : relevant) out.push_back({{"id", d.id}, {"score", d.score}});
    write_jsonl(path(kRelevant), out);
    report(progress, relevant.size(), idx.doc_count());
}

void Pipeline::generate(const Progress& progress) {
    auto& st = store();
    auto tax = *st.taxonomy();
    const auto& plan = cfg_.generation;
    std::vector<GenerationRequest> requests;

    for (const auto& cat : tax.categories) {
        int k = std::min<int>(plan.fewshot_k, static_cast<int>(cat.seeds.size()));
        for (int r = 0; r < plan.expert_requests_per_category; ++r) {
            // Rotating the exemplars varies the prompt between requests.
            auto prompt = assemble_prompt(cat.prompt_template, cat.name,
                                          rotated(cat.seeds, static_cast<std::size_t>(r)), k);
            requests.push_back({prompt, cat.id, plan.pairs_per_request, std::nullopt});
        }
    }

    if (plan.literature_pairs_per_window > 0 && std::filesystem::exists(path(kRelevant))) {
        auto idx = load_index(path(kIndex));
        std::map<std::string, std::string> texts;
        for (auto& d : load_clean(path(kCleanDocs))) texts[d.id] = std::move(d.clean_text);
        std::vector<AquaQuery> cat_queries;
        for (const auto& cat : tax.categories) {
            std::string text = cat.name;
            for (const auto& sub : cat.subcategories) text += " " + sub;
            cat_queries.push_back(AquaQuery::from_text(text));
        }
        for (const auto& r : read_jsonl(path(kRelevant))) {
            auto id = r.at("id").get<std::string>();
            for (const auto& window : split_windows(texts.at(id), plan.window_tokens)) {
                std::size_t best = 0;
                double best_score = -1.0;
                for (std::size_t c = 0; c < cat_queries.size(); ++c) {
                    double s = bm25_score_text(window, cat_queries[c], idx, cfg_.bm25);
                    if (s > best_score) {
                        best = c;
                        best_score = s;
                    }
                }
                const auto& cat = tax.categories[best];
                int k = std::min<int>(plan.fewshot_k, static_cast<int>(cat.seeds.size()));
                auto prompt = assemble_prompt(cat.prompt_template, cat.name, cat.seeds, k,
                                              std::string_view(window));
                requests.push_back({prompt, cat.id, plan.literature_pairs_per_window, id});
            }
        }
    }

    auto backend = make_backend(cfg_.generator, BackendRole::generator,
                                path("generator_audit.jsonl"));
    auto created = st.generate_and_add(*backend, requests, cfg_.generator.max_concurrency);
    report(progress, created.size(), created.size());
}

void Pipeline::cleanup(const Progress& progress) {
    require_input(path(kIndex), "cleanup");
    auto& st = store();
    std::vector<QAPair> batch;
    for (auto& p : st.all_pairs()) {
        if (p.origin == Origin::literature && !p.cleanup_checked) batch.push_back(std::move(p));
    }
    auto idx = load_index(path(kIndex));
    std::unique_ptr<TextBackend> gate;
    if (cfg_.cleanup.judge_assist) {
        gate = make_backend(*cfg_.cleanup.judge_assist, BackendRole::gate);
    }
    auto verdicts = run_rules(batch, idx, query(), cfg_.cleanup, gate.get(), cfg_.bm25);
    std::vector<CleanupOutcome> outcomes;
    for (const auto& v : verdicts) outcomes.push_back({v.pair_id, v.kept, v.fired_rules});
    st.record_cleanup(outcomes);
    write_jsonl(path(kCleanup), to_records(verdicts));
    report(progress, verdicts.size(), verdicts.size());
}

void Pipeline::review_headless(const Progress& progress) {
    if (!cfg_.headless.enabled) {
        return;
    }
    auto& st = store();
    auto backend = make_backend(cfg_.generator, BackendRole::generator);
    auto rate = [&](const QAPair& p) {
        auto h = splitmix64(fnv1a64(p.id + "\x1f" + p.question + "\x1f" + p.answer) ^
                            splitmix64(cfg_.headless.rater_seed));
        double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        int high = static_cast<int>(splitmix64(h) & 1U);
        return u < cfg_.headless.accept_rate ? 4 + high : 2 + high;
    };
    std::size_t actions = 0;
    for (bool progressed = true; progressed;) {
        progressed = false;
        for (const auto& p : st.queue(std::nullopt, Origin::expert_synthetic)) {
            if (p.status == PairStatus::pending) {
                st.submit_rating(p.id, {kHeadlessRater, rate(p), 0, std::nullopt, RaterKind::expert},
                                 p.version);
                progressed = true;
            } else if (p.status == PairStatus::flagged && p.generation < cfg_.review.max_rounds) {
                RefinementRequest req;
                req.regenerate_as_is = true;
                req.expected_version = p.version;
                req.fewshot_k = cfg_.generation.fewshot_k;
                st.request_refinement(p.id, req, *backend);
                progressed = true;
            }
            ++actions;
        }
    }
    report(progress, actions, actions);
}

std::unique_ptr<TextBackend> Pipeline::judge_backend() {
    std::string selected = cfg_.judges.front().model_label;
    if (std::filesystem::exists(path(kJudgeBench))) {
        selected = Json::parse(read_text_file(path(kJudgeBench))).at("selected").get<std::string>();
    }
    for (const auto& j : cfg_.judges) {
        if (j.model_label == selected) {
            return make_backend(j, BackendRole::judge, path("judge_audit.jsonl"));
        }
    }
    fail(ErrorCode::ConfigError, "selected judge '" + selected + "' is not configured");
}

void Pipeline::judge_bench(const Progress& progress) {
    Json out;
    if (!cfg_.gold) {
        out = {{"reports", Json::array()},
               {"selected", cfg_.judges.front().model_label},
               {"note", "no gold standard configured; first judge used"}};
        write_text_file(path(kJudgeBench), out.dump(2) + "\n");
        return;
    }
    auto gold = load_gold_records(*cfg_.gold);
    auto fewshot_n = static_cast<std::size_t>(cfg_.gold_fewshot);
    if (gold.size() < fewshot_n + 3) {
        fail(ErrorCode::DegenerateInput, "gold standard too small to benchmark after few-shot split");
    }
    std::vector<GoldExemplar> exemplars;
    for (std::size_t i = 0; i < fewshot_n; ++i) {
        exemplars.push_back({gold[i].question, gold[i].answer, gold[i].score});
    }
    GoldStandard standard;
    standard.sample_policy = fmt::format("file order; first {} records held out as exemplars", fewshot_n);
    std::vector<QAPair> probe;
    for (std::size_t i = fewshot_n; i < gold.size(); ++i) {
        standard.entries.emplace_back(gold[i].pair_id, gold[i].score);
        QAPair p;
        p.id = gold[i].pair_id;
        p.category_id = gold[i].category_id;
        p.question = gold[i].question;
        p.answer = gold[i].answer;
        probe.push_back(std::move(p));
    }

    std::vector<JudgeReport> reports;
    for (std::size_t j = 0; j < cfg_.judges.size(); ++j) {
        const auto& ref = cfg_.judges[j];
        auto backend = make_backend(ref, BackendRole::judge);
        auto scored = score_pool(*backend, probe, exemplars, ref.max_concurrency);
        if (!scored.failures.empty()) {
            fail(ErrorCode::UnparseableScore,
                 fmt::format("judge '{}' gave {} unparseable scores on the gold standard",
                             ref.model_label, scored.failures.size()));
        }
        JudgeRun run{ref.model_label, {}};
        for (const auto& p : scored.pairs) run.scores.emplace_back(p.id, *judge_score(p));
        reports.push_back(benchmark_judge(standard, run));
        report(progress, j + 1, cfg_.judges.size());
    }
    out = {{"reports", reports},
           {"selected", select_judge(reports)},
           {"gold_count", standard.entries.size()},
           {"sample_policy", standard.sample_policy}};
    write_text_file(path(kJudgeBench), out.dump(2) + "\n");
    write_text_file(path(kJudgeTable), render_judge_table(reports));
}

std::vector<QAPair> Pipeline::scoring_pool() {
    auto& st = store();
    std::vector<QAPair> pool;
    for (auto& p : st.all_pairs()) {
        bool expert_ok = p.origin == Origin::expert_synthetic && p.status == PairStatus::accepted;
        bool literature_ok = p.origin == Origin::literature && p.cleanup_checked &&
                             p.cleanup_rules.empty() && p.status != PairStatus::rejected;
        if (expert_ok || literature_ok) pool.push_back(std::move(p));
    }
    return pool;
}

void Pipeline::score(const Progress& progress) {
    auto& st = store();
    std::vector<QAPair> todo;
    for (auto& p : scoring_pool()) {
        if (!judge_score(p)) todo.push_back(std::move(p));
    }
    std::vector<GoldExemplar> exemplars;
    if (cfg_.gold) {
        auto gold = load_gold_records(*cfg_.gold);
        for (std::size_t i = 0; i < gold.size() && i < static_cast<std::size_t>(cfg_.gold_fewshot); ++i) {
            exemplars.push_back({gold[i].question, gold[i].answer, gold[i].score});
        }
    } else {
        for (const auto& cat : st.taxonomy()->categories) {
            for (const auto& s : cat.seeds) {
                if (exemplars.size() < static_cast<std::size_t>(cfg_.gold_fewshot)) {
                    exemplars.push_back({s.question, s.answer, kMaxScore});
                }
            }
        }
    }
    auto judge = judge_backend();
    auto scored = score_pool(*judge, todo, exemplars, cfg_.judges.front().max_concurrency);
    for (const auto& p : scored.pairs) {
        if (p.ratings.size() > 0 && p.ratings.back().kind == RaterKind::judge && judge_score(p)) {
            st.record_judge_rating(p.id, p.ratings.back());
        }
    }
    write_jsonl(path(kScoreFailures), to_records(scored.failures));
    report(progress, scored.pairs.size() - scored.failures.size(), scored.pairs.size());
}

DatasetManifest Pipeline::assemble(const Progress& progress) {
    require_input(path(kEvents), "assemble");
    std::vector<QAPair> expert;
    std::vector<QAPair> literature;
    // Pairs the judge could not score were reported by the score stage and are
    // left out here.
    for (auto& p : scoring_pool()) {
        if (!judge_score(p)) continue;
        (p.origin == Origin::expert_synthetic ? expert : literature).push_back(std::move(p));
    }
    auto expert_final = filter_final(expert, cfg_.final_threshold);
    auto literature_final = filter_final(literature, cfg_.final_threshold);
    auto merged = merge_datasets(expert_final, literature_final);
    auto split = split_dataset(merged, cfg_.validation_fraction, cfg_.split_seed);
    auto label = judge_backend()->label();
    auto manifest = build_manifest(cfg_.name, expert_final, literature_final, merged, split,
                                   cfg_.final_threshold, label);
    export_dataset(path(kDatasetDir), merged, split, manifest);
    report(progress, merged.size(), expert.size() + literature.size());
    return manifest;
}

EvalReport Pipeline::eval(const Progress& progress) {
    std::vector<EvalSample> samples;
    if (cfg_.eval_samples) {
        samples = load_eval_samples(*cfg_.eval_samples);
    } else {
        // No trained model here: the configured generator answers the held-out
        // questions, which exercises the metric path end to end.
        auto validation = path(kDatasetDir) / "validation.jsonl";
        require_input(validation, "eval");
        auto records = read_jsonl(validation);
        samples.resize(records.size());
        auto backend = make_backend(cfg_.generator, BackendRole::generator);
        bounded_parallel_for(records.size(), cfg_.generator.max_concurrency, [&](std::size_t i) {
            GenerationRequest req;
            req.prompt = "Answer the aquaculture question.\n\nQ: " +
                         records[i].at("question").get<std::string>();
            req.category_id = records[i].at("category_id").get<std::string>();
            req.n = 1;
            auto reply = backend->complete({completion_prompt(req), 1});
            samples[i] = {records[i].at("id").get<std::string>(), parse_qa_reply(reply, 1).front().second,
                          records[i].at("answer").get<std::string>()};
        });
    }
    auto result = evaluate_corpus(samples);
    write_text_file(path(kEval), Json(result).dump(2) + "\n");
    write_text_file(path(kEvalTable), render_eval_table(result));
    report(progress, samples.size(), samples.size());
    return result;
}

DatasetManifest Pipeline::run_all(const Progress& progress) {
    {
        std::lock_guard lock(store_mutex_);
        store_.reset();
    }
    std::filesystem::remove_all(cfg_.storage);
    std::filesystem::create_directories(cfg_.storage);
    ingest(progress);
    clean(progress);
    index(progress);
    filter(progress);
    generate(progress);
    cleanup(progress);
    review_headless(progress);
    judge_bench(progress);
    score(progress);
    auto manifest = assemble(progress);
    eval(progress);
    return manifest;
}

}  // namespace aquadapt
