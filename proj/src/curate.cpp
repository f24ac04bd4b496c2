#include "aquadapt/curate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "aquadapt/dispatch.hpp"
#include "aquadapt/error.hpp"
#include "aquadapt/hashing.hpp"
#include "aquadapt/tokenizer.hpp"

namespace aquadapt {

std::string judge_scoring_prompt(const QAPair& pair, const std::vector<GoldExemplar>& fewshot) {
    std::string out =
        "Rate the aquaculture question-answer pair on a 2-5 scale (5 = expert quality, "
        "2 = wrong or unusable). Reply with the integer only.\n";
    for (const auto& ex : fewshot) {
        out += fmt::format("\nQ: {}\nA: {}\nScore: {}\n", ex.question, ex.answer, ex.score);
    }
    out += fmt::format("\n{}\nQ: {}\nA: {}\nScore:", MockBackend::kCandidateMarker, pair.question,
                       pair.answer);
    return out;
}

int parse_judge_score(std::string_view reply) {
    auto text = trim(reply);
    if (text.size() == 1 && text[0] >= '0' && text[0] <= '9') {
        int score = text[0] - '0';
        if (is_valid_score(score)) {
            return score;
        }
    }
    fail(ErrorCode::UnparseableScore, fmt::format("judge reply '{}' is not an integer 2-5", text));
}

ScoredPool score_pool(TextBackend& judge, std::vector<QAPair> pairs,
                      const std::vector<GoldExemplar>& fewshot, std::size_t max_concurrency,
                      std::int64_t timestamp) {
    if (fewshot.empty()) {
        fail(ErrorCode::ValidationError, "score_pool needs at least one gold exemplar");
    }
    std::vector<std::optional<ScoreFailure>> failed(pairs.size());
    bounded_parallel_for(pairs.size(), max_concurrency, [&](std::size_t i) {
        auto reply = judge.complete({judge_scoring_prompt(pairs[i], fewshot), 0});
        try {
            int score = parse_judge_score(reply);
            pairs[i].ratings.push_back({judge.label(), score, timestamp, std::nullopt, RaterKind::judge});
        } catch (const Error& e) {
            failed[i] = ScoreFailure{pairs[i].id, e.what(), reply};
        }
    });
    ScoredPool out;
    out.pairs = std::move(pairs);
    for (auto& f : failed) {
        if (f) out.failures.push_back(std::move(*f));
    }
    return out;
}

std::optional<int> judge_score(const QAPair& pair) { return latest_score(pair, RaterKind::judge); }

std::vector<QAPair> filter_final(const std::vector<QAPair>& pairs, int threshold) {
    std::vector<QAPair> out;
    for (const auto& pair : pairs) {
        auto score = judge_score(pair);
        if (!score) {
            fail(ErrorCode::UnscoredPair, "pair '" + pair.id + "' has no judge score");
        }
        if (*score >= threshold) {
            out.push_back(pair);
        }
    }
    return out;
}

std::vector<QAPair> merge_datasets(const std::vector<QAPair>& expert,
                                   const std::vector<QAPair>& literature_clean) {
    auto wins = [](const QAPair& a, const QAPair& b) {
        bool ea = a.origin == Origin::expert_synthetic;
        bool eb = b.origin == Origin::expert_synthetic;
        if (ea != eb) return ea;
        return a.id < b.id;
    };
    std::map<std::string, const QAPair*> by_question;
    for (const auto* set : {&expert, &literature_clean}) {
        for (const auto& pair : *set) {
            auto [it, inserted] = by_question.emplace(normalize_for_comparison(pair.question), &pair);
            if (!inserted && wins(pair, *it->second)) {
                it->second = &pair;
            }
        }
    }
    // Distinct questions may still share an id when a pair appears in both sets
    // under edited text; keep one per id.
    std::map<std::string, const QAPair*> by_id;
    for (const auto& [key, pair] : by_question) {
        auto [it, inserted] = by_id.emplace(pair->id, pair);
        if (!inserted && wins(*pair, *it->second)) {
            it->second = pair;
        }
    }
    std::vector<QAPair> out;
    out.reserve(by_id.size());
    for (const auto& [id, pair] : by_id) {
        out.push_back(*pair);
    }
    return out;
}

namespace {

void sort_by_id(std::vector<QAPair>& pairs) {
    std::sort(pairs.begin(), pairs.end(),
              [](const QAPair& a, const QAPair& b) { return a.id < b.id; });
}

}  // namespace

DatasetSplit split_dataset(const std::vector<QAPair>& pairs, double validation_fraction,
                           std::uint64_t rng_seed) {
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        fail(ErrorCode::BadFraction,
             fmt::format("validation fraction {} is outside (0,1)", validation_fraction));
    }
    // Start from a canonical order so the result depends only on content and seed.
    std::vector<QAPair> sorted = pairs;
    sort_by_id(sorted);
    auto total_validation =
        static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(sorted.size())));

    std::map<std::string, std::vector<QAPair>> strata;
    for (auto& pair : sorted) {
        strata[pair.category_id].push_back(std::move(pair));
    }
    bool stratify = std::all_of(strata.begin(), strata.end(),
                                [](const auto& kv) { return kv.second.size() >= 2; });
    if (!stratify) {
        std::vector<QAPair> all;
        for (auto& [cat, items] : strata) {
            for (auto& p : items) all.push_back(std::move(p));
        }
        sort_by_id(all);
        strata.clear();
        strata[""] = std::move(all);
    }

    // Largest-remainder apportionment of the validation total across strata.
    struct Quota {
        std::string category;
        std::size_t count;
        double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (const auto& [cat, items] : strata) {
        double exact = validation_fraction * static_cast<double>(items.size());
        auto base = static_cast<std::size_t>(std::floor(exact));
        quotas.push_back({cat, base, exact - static_cast<double>(base)});
        assigned += base;
    }
    std::vector<std::size_t> order(quotas.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return quotas[a].remainder > quotas[b].remainder;
    });
    for (std::size_t k = 0; assigned < total_validation && k < order.size(); ++k) {
        auto& q = quotas[order[k]];
        if (q.count < strata[q.category].size()) {
            ++q.count;
            ++assigned;
        }
    }

    SeededRng rng(rng_seed);
    DatasetSplit out;
    for (const auto& q : quotas) {
        auto& items = strata[q.category];
        rng.shuffle(items);
        for (std::size_t i = 0; i < items.size(); ++i) {
            (i < q.count ? out.validation : out.train).push_back(std::move(items[i]));
        }
    }
    sort_by_id(out.train);
    sort_by_id(out.validation);
    return out;
}

Json final_record(const QAPair& pair) {
    auto score = judge_score(pair);
    return Json{{"id", pair.id},
                {"category_id", pair.category_id},
                {"origin", std::string(to_string(pair.origin))},
                {"question", pair.question},
                {"answer", pair.answer},
                {"judge_score", score ? Json(*score) : Json(nullptr)},
                {"lineage", pair.lineage}};
}

std::string dataset_digest(const std::vector<QAPair>& pairs) {
    std::vector<const QAPair*> sorted;
    for (const auto& p : pairs) sorted.push_back(&p);
    std::sort(sorted.begin(), sorted.end(),
              [](const QAPair* a, const QAPair* b) { return a->id < b->id; });
    std::string body;
    for (const auto* p : sorted) {
        body += canonical_dump(final_record(*p));
        body += '\n';
    }
    return sha256_hex(body);
}

DatasetManifest build_manifest(std::string name, const std::vector<QAPair>& expert_stream,
                               const std::vector<QAPair>& literature_stream,
                               const std::vector<QAPair>& final_pairs, const DatasetSplit& split,
                               int threshold, std::string judge_label) {
    if (split.train.size() + split.validation.size() != final_pairs.size()) {
        fail(ErrorCode::ValidationError, "split does not partition the final dataset");
    }
    DatasetManifest m;
    m.name = std::move(name);
    m.source_sets = {{std::string(to_string(Origin::expert_synthetic)), expert_stream.size()},
                     {std::string(to_string(Origin::literature)), literature_stream.size()}};
    m.final_count = final_pairs.size();
    m.threshold_used = threshold;
    m.judge_label = std::move(judge_label);
    m.train_count = split.train.size();
    m.validation_count = split.validation.size();
    m.content_digest = dataset_digest(final_pairs);
    return m;
}

namespace {

std::vector<Json> records(const std::vector<QAPair>& pairs) {
    std::vector<Json> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(final_record(p));
    return out;
}

}  // namespace

void export_dataset(const std::filesystem::path& dir, const std::vector<QAPair>& final_pairs,
                    const DatasetSplit& split, const DatasetManifest& manifest) {
    std::filesystem::create_directories(dir);
    auto sorted = final_pairs;
    sort_by_id(sorted);
    write_jsonl(dir / "final.jsonl", records(sorted));
    write_jsonl(dir / "train.jsonl", records(split.train));
    write_jsonl(dir / "validation.jsonl", records(split.validation));
    write_text_file(dir / "manifest.json", Json(manifest).dump(2) + "\n");
}

void to_json(Json& j, const DatasetManifest& m) {
    Json sources = Json::array();
    for (const auto& [origin, count] : m.source_sets) {
        sources.push_back({{"origin", origin}, {"count", count}});
    }
    j = Json{{"name", m.name},
             {"source_sets", sources},
             {"final_count", m.final_count},
             {"threshold_used", m.threshold_used},
             {"judge_label", m.judge_label},
             {"split", {{"train_count", m.train_count}, {"validation_count", m.validation_count}}},
             {"content_digest", m.content_digest}};
}

void from_json(const Json& j, DatasetManifest& m) {
    m.name = j.at("name").get<std::string>();
    m.source_sets.clear();
    for (const auto& s : j.at("source_sets")) {
        m.source_sets.emplace_back(s.at("origin").get<std::string>(), s.at("count").get<std::size_t>());
    }
    m.final_count = j.at("final_count").get<std::size_t>();
    m.threshold_used = j.at("threshold_used").get<int>();
    m.judge_label = j.at("judge_label").get<std::string>();
    m.train_count = j.at("split").at("train_count").get<std::size_t>();
    m.validation_count = j.at("split").at("validation_count").get<std::size_t>();
    m.content_digest = j.at("content_digest").get<std::string>();
    if (m.final_count != m.train_count + m.validation_count) {
        fail(ErrorCode::ValidationError, "manifest final_count differs from train + validation");
    }
}

void to_json(Json& j, const ScoreFailure& f) {
    j = Json{{"pair_id", f.pair_id}, {"reason", f.reason}, {"raw_reply", f.raw_reply}};
}

}  // namespace aquadapt
