#include "support.hpp"

#include <set>

#include "aquadapt/curate.hpp"
#include "aquadapt/tokenizer.hpp"

using namespace aquadapt;

namespace {

QAPair pair(std::string id, std::string question, Origin origin = Origin::expert_synthetic,
            std::string category = "water-quality") {
    QAPair p;
    p.id = std::move(id);
    p.category_id = std::move(category);
    p.question = std::move(question);
    p.answer = "Answer for " + p.question + ".";
    p.origin = origin;
    if (origin == Origin::literature) p.source_doc_id = "doc-1";
    return p;
}

QAPair judged(QAPair p, int score) {
    RatingRecord r;
    r.rater = "judge";
    r.score = score;
    r.kind = RaterKind::judge;
    p.ratings.push_back(r);
    return p;
}

// Replies with a fixed string, or per-candidate text via a callback.
class ScriptedJudge : public TextBackend {
public:
    explicit ScriptedJudge(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
    std::string complete(const BackendRequest& r) override { return fn_(r.prompt); }
    const std::string& label() const override { return label_; }

private:
    std::function<std::string(const std::string&)> fn_;
    std::string label_ = "scripted";
};

std::vector<QAPair> pool(int n) {
    std::vector<QAPair> out;
    for (int i = 0; i < n; ++i) out.push_back(pair("qa-" + std::to_string(100 + i), "How does factor " + std::to_string(i) + " work?"));
    return out;
}

std::vector<GoldExemplar> fewshot() { return {{"What is DO?", "Dissolved oxygen.", 5}}; }

}  // namespace

TEST_CASE("mock judge scoring is deterministic and adds one record per pair") {
    MockBackend judge(3, BackendRole::judge, "mock-judge");
    auto a = score_pool(judge, pool(7), fewshot());
    auto b = score_pool(judge, pool(7), fewshot());
    CHECK(a.failures.empty());
    REQUIRE(a.pairs.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        REQUIRE(a.pairs[i].ratings.size() == 1);
        CHECK(a.pairs[i].ratings[0].rater == "mock-judge");
        CHECK(a.pairs[i].ratings[0].kind == RaterKind::judge);
        CHECK(is_valid_score(a.pairs[i].ratings[0].score));
        CHECK(a.pairs[i].ratings == b.pairs[i].ratings);
    }
}

TEST_CASE("unparseable replies are isolated per pair") {
    ScriptedJudge judge([](const std::string& prompt) {
        return prompt.find("factor 2 ") != std::string::npos ? std::string("excellent") : std::string("4");
    });
    auto scored = score_pool(judge, pool(5), fewshot());
    REQUIRE(scored.failures.size() == 1);
    CHECK(scored.failures[0].pair_id == "qa-102");
    CHECK(scored.failures[0].raw_reply == "excellent");
    CHECK_FALSE(judge_score(scored.pairs[2]).has_value());
    CHECK(judge_score(scored.pairs[3]) == std::optional<int>(4));
}

TEST_CASE("unavailable judge aborts the run") {
    ScriptedJudge judge([](const std::string&) -> std::string {
        throw Error(ErrorCode::BackendUnavailable, "down");
    });
    CHECK_CODE(score_pool(judge, pool(3), fewshot()), ErrorCode::BackendUnavailable);
}

TEST_CASE("score parsing") {
    CHECK(parse_judge_score(" 5\n") == 5);
    CHECK(parse_judge_score("2") == 2);
    for (auto bad : {"1", "6", "4.5", "excellent", "", "45", "4 stars"})
        CHECK_CODE(parse_judge_score(bad), ErrorCode::UnparseableScore);
}

TEST_CASE("final filter keeps scores at or above threshold") {
    auto ps = pool(4);
    std::vector<QAPair> scored{judged(ps[0], 5), judged(ps[1], 4), judged(ps[2], 3), judged(ps[3], 2)};
    auto kept = filter_final(scored, 4);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == ps[0].id);
    CHECK(kept[1].id == ps[1].id);

    std::vector<QAPair> all5;
    for (auto& p : ps) all5.push_back(judged(p, 5));
    CHECK(filter_final(all5).size() == 4);
    CHECK(filter_final({}).empty());
    CHECK_CODE(filter_final({ps[0]}), ErrorCode::UnscoredPair);
}

TEST_CASE("merge examples") {
    std::vector<QAPair> e{pair("e1", "What is ammonia?"), pair("e2", "Why aerate?"), pair("e3", "How to feed?")};
    std::vector<QAPair> l{pair("l1", "What is nitrite?", Origin::literature),
                          pair("l2", "When to harvest?", Origin::literature)};
    CHECK(merge_datasets(e, l).size() == 5);
    CHECK(merge_datasets(e, {}) == merge_datasets(e, e));
    CHECK(merge_datasets({}, l).size() == 2);

    std::vector<QAPair> clash{pair("a0", "what is AMMONIA ?", Origin::literature)};
    auto m = merge_datasets(e, clash);
    CHECK(m.size() == 3);
    for (const auto& p : m) CHECK(p.origin == Origin::expert_synthetic);
}

TEST_CASE("merge is commutative and idempotent on random sets") {
    std::mt19937 rng(4);
    const char* qs[] = {"What is ammonia?", "Why aerate?", "How to feed?", "When to harvest?",
                        "What is nitrite?", "Which species?", "Where to site ponds?"};
    for (int t = 0; t < 50; ++t) {
        std::vector<QAPair> a, b;
        for (int i = 0; i < 4; ++i) {
            a.push_back(pair("x" + std::to_string(rng() % 1000), qs[rng() % 7],
                             rng() % 2 ? Origin::expert_synthetic : Origin::literature));
            b.push_back(pair("y" + std::to_string(rng() % 1000), qs[rng() % 7],
                             rng() % 2 ? Origin::expert_synthetic : Origin::literature));
        }
        auto ab = merge_datasets(a, b);
        CHECK(ab == merge_datasets(b, a));
        CHECK(merge_datasets(ab, ab) == ab);
        std::set<std::string> keys;
        for (const auto& p : ab) CHECK(keys.insert(normalize_for_comparison(p.question)).second);
    }
}

TEST_CASE("split partitions exactly and reproducibly") {
    std::vector<QAPair> ps;
    const char* cats[] = {"a", "b", "c", "d"};
    for (int i = 0; i < 100; ++i)
        ps.push_back(pair("qa-" + std::to_string(1000 + i), "Q" + std::to_string(i) + "?",
                          Origin::expert_synthetic, cats[i % 4]));
    auto s = split_dataset(ps, 0.2, 7);
    CHECK(s.train.size() == 80);
    CHECK(s.validation.size() == 20);
    std::set<std::string> ids;
    for (const auto& p : s.train) ids.insert(p.id);
    for (const auto& p : s.validation) CHECK(ids.insert(p.id).second);
    CHECK(ids.size() == 100);
    std::map<std::string, int> per_cat;
    for (const auto& p : s.validation) per_cat[p.category_id]++;
    for (auto c : cats) CHECK(per_cat[c] == 5);

    auto again = split_dataset(ps, 0.2, 7);
    CHECK(again.train == s.train);
    CHECK(again.validation == s.validation);
    auto other = split_dataset(ps, 0.2, 8);
    CHECK(other.validation != s.validation);

    // Input order does not matter.
    std::mt19937 rng(1);
    std::shuffle(ps.begin(), ps.end(), rng);
    CHECK(split_dataset(ps, 0.2, 7).validation == s.validation);

    CHECK_CODE(split_dataset(ps, 1.5, 7), ErrorCode::BadFraction);
    CHECK_CODE(split_dataset(ps, 0.0, 7), ErrorCode::BadFraction);
}

TEST_CASE("digest tracks content and manifest counts add up") {
    auto ps = pool(5);
    std::vector<QAPair> final_pairs;
    for (auto& p : ps) final_pairs.push_back(judged(p, 5));
    auto d = dataset_digest(final_pairs);
    CHECK(d.size() == 64);
    auto reversed = final_pairs;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(dataset_digest(reversed) == d);
    auto changed = final_pairs;
    changed[2].answer += " More.";
    CHECK(dataset_digest(changed) != d);

    auto split = split_dataset(final_pairs, 0.4, 3);
    auto m = build_manifest("t", final_pairs, {}, final_pairs, split, 4, "judge");
    CHECK(m.final_count == m.train_count + m.validation_count);
    CHECK(m.content_digest == d);

    TempDir tmp;
    export_dataset(tmp.path, final_pairs, split, m);
    auto lines = read_jsonl(tmp / "final.jsonl");
    CHECK(lines.size() == 5);
    for (const auto& l : lines) CHECK(l.at("judge_score").get<int>() >= 4);
    auto back = Json::parse(read_text_file(tmp / "manifest.json")).get<DatasetManifest>();
    CHECK(back.content_digest == d);
}
