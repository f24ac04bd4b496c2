#include "aquadapt/review.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>

#include "aquadapt/dispatch.hpp"
#include "aquadapt/error.hpp"

namespace aquadapt {

void ReviewPolicy::validate() const {
    if (threshold < kMinScore || threshold > kMaxScore) {
        fail(ErrorCode::ValidationError,
             fmt::format("review threshold must be in 2..5 (got {})", threshold));
    }
    if (max_rounds < 1) {
        fail(ErrorCode::ValidationError,
             fmt::format("max_rounds must be >= 1 (got {})", max_rounds));
    }
}

std::optional<double> controlling_score(const QAPair& pair, ControllingRule rule) {
    std::vector<int> scores;
    for (const auto& r : pair.ratings) {
        if (r.kind == RaterKind::expert) {
            scores.push_back(r.score);
        }
    }
    if (scores.empty()) {
        return std::nullopt;
    }
    if (rule == ControllingRule::latest) {
        return scores.back();
    }
    std::sort(scores.begin(), scores.end());
    auto mid = scores.size() / 2;
    if (scores.size() % 2 == 1) {
        return scores[mid];
    }
    return (scores[mid - 1] + scores[mid]) / 2.0;
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::pair_created: return "pair_created";
        case EventKind::rating_submitted: return "rating_submitted";
        case EventKind::refinement_created: return "refinement_created";
        case EventKind::cleanup_recorded: return "cleanup_recorded";
        case EventKind::judge_scored: return "judge_scored";
        case EventKind::taxonomy_revised: return "taxonomy_revised";
    }
    return "pair_created";
}

EventKind parse_event_kind(std::string_view text) {
    for (auto kind : {EventKind::pair_created, EventKind::rating_submitted,
                      EventKind::refinement_created, EventKind::cleanup_recorded,
                      EventKind::judge_scored, EventKind::taxonomy_revised}) {
        if (to_string(kind) == text) {
            return kind;
        }
    }
    fail(ErrorCode::ParseError, fmt::format("unknown event kind '{}'", text));
}

void to_json(Json& j, const Event& event) {
    j = Json{{"seq", event.seq},
             {"kind", to_string(event.kind)},
             {"pair_id", event.pair_id},
             {"payload", event.payload},
             {"timestamp", event.timestamp},
             {"version", event.version}};
}

void from_json(const Json& j, Event& event) {
    event.seq = j.at("seq").get<std::uint64_t>();
    event.kind = parse_event_kind(j.at("kind").get<std::string>());
    event.pair_id = j.value("pair_id", "");
    event.payload = j.value("payload", Json::object());
    event.timestamp = j.value("timestamp", std::int64_t{0});
    event.version = j.value("version", std::int64_t{0});
}

Clock system_clock_millis() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

Clock logical_clock() {
    auto tick = std::make_shared<std::atomic<std::int64_t>>(0);
    return [tick] { return ++*tick; };
}

ReviewStore::ReviewStore(ReviewPolicy policy, std::optional<std::filesystem::path> event_log,
                         Clock clock)
    : policy_(policy), clock_(std::move(clock)) {
    policy_.validate();
    if (event_log) {
        log_ = std::make_unique<JsonlAppender>(*event_log);
    }
}

ReviewStore::~ReviewStore() = default;

std::unique_ptr<ReviewStore> ReviewStore::replay(ReviewPolicy policy,
                                                 const std::vector<Event>& events) {
    auto store = std::make_unique<ReviewStore>(policy);
    for (const auto& event : events) {
        store->apply(event);
        store->events_.push_back(event);
        store->seq_ = event.seq;
    }
    return store;
}

std::unique_ptr<ReviewStore> ReviewStore::recover(ReviewPolicy policy,
                                                  const std::filesystem::path& event_log,
                                                  std::optional<std::filesystem::path> snapshot,
                                                  Clock clock) {
    std::vector<Event> events;
    if (std::filesystem::exists(event_log)) {
        // Drop a torn final line so later appends start on a fresh line.
        auto raw = read_text_file(event_log);
        if (!raw.empty() && raw.back() != '\n') {
            raw.erase(raw.rfind('\n') == std::string::npos ? 0 : raw.rfind('\n') + 1);
            write_text_file(event_log, raw);
        }
        for (const auto& record : read_jsonl(event_log, true)) {
            events.push_back(record.get<Event>());
        }
    }
    auto store = std::make_unique<ReviewStore>(policy, std::nullopt, std::move(clock));
    if (snapshot && std::filesystem::exists(*snapshot)) {
        store->load_snapshot(*snapshot);
    }
    for (const auto& event : events) {
        if (event.seq <= store->seq_) {
            continue;
        }
        store->apply(event);
        store->events_.push_back(event);
        store->seq_ = event.seq;
    }
    store->log_ = std::make_unique<JsonlAppender>(event_log);
    return store;
}

void ReviewStore::emit(EventKind kind, const std::string& pair_id, Json payload) {
    Event event;
    event.seq = seq_ + 1;
    event.kind = kind;
    event.pair_id = pair_id;
    event.payload = std::move(payload);
    event.timestamp = clock_();
    if (kind == EventKind::taxonomy_revised) {
        event.version = event.payload.at("taxonomy").value("version", std::int64_t{1});
    } else if (kind == EventKind::pair_created) {
        event.version = 1;
    } else {
        event.version = require_pair(pair_id).version + 1;
    }
    if (log_) {
        log_->append(Json(event));
    }
    apply(event);
    events_.push_back(std::move(event));
    seq_ = events_.back().seq;
}

QAPair& ReviewStore::require_pair(const std::string& pair_id) {
    auto it = pairs_.find(pair_id);
    if (it == pairs_.end()) {
        fail(ErrorCode::UnknownPair, "unknown pair '" + pair_id + "'");
    }
    return it->second;
}

void ReviewStore::apply(const Event& event) {
    auto track_id = [&](const std::string& id) {
        if (auto n = ids_.parse(id); n && *n > ids_.last()) {
            ids_ = IdSequence("qa", *n);
        }
    };
    switch (event.kind) {
        case EventKind::pair_created: {
            auto pair = event.payload.at("pair").get<QAPair>();
            pair.version = event.version;
            track_id(pair.id);
            if (!pairs_.emplace(pair.id, pair).second) {
                fail(ErrorCode::ValidationError, "event log creates pair '" + pair.id + "' twice");
            }
            break;
        }
        case EventKind::rating_submitted: {
            auto& pair = require_pair(event.pair_id);
            pair.ratings.push_back(event.payload.at("rating").get<RatingRecord>());
            pair.status = parse_pair_status(event.payload.at("status").get<std::string>());
            pair.version = event.version;
            break;
        }
        case EventKind::refinement_created: {
            auto child = event.payload.at("child").get<QAPair>();
            auto& parent = require_pair(event.pair_id);
            parent.status = PairStatus::rejected;
            parent.superseded_by = child.id;
            parent.version = event.version;
            child.version = 1;
            track_id(child.id);
            pairs_.emplace(child.id, std::move(child));
            break;
        }
        case EventKind::cleanup_recorded: {
            auto& pair = require_pair(event.pair_id);
            pair.cleanup_checked = true;
            pair.cleanup_rules = event.payload.at("fired_rules").get<std::vector<std::string>>();
            if (!event.payload.at("kept").get<bool>()) {
                pair.status = PairStatus::rejected;
            }
            pair.version = event.version;
            break;
        }
        case EventKind::judge_scored: {
            auto& pair = require_pair(event.pair_id);
            pair.ratings.push_back(event.payload.at("rating").get<RatingRecord>());
            pair.version = event.version;
            break;
        }
        case EventKind::taxonomy_revised:
            taxonomy_ = event.payload.at("taxonomy").get<Taxonomy>();
            break;
    }
}

void ReviewStore::initialize_taxonomy(Taxonomy taxonomy) {
    std::unique_lock lock(mutex_);
    if (taxonomy_ && *taxonomy_ == taxonomy) {
        return;
    }
    if (taxonomy_) {
        taxonomy.version = taxonomy_->version + 1;
    }
    emit(EventKind::taxonomy_revised, "", Json{{"taxonomy", taxonomy}});
}

Taxonomy ReviewStore::update_taxonomy(Taxonomy taxonomy, std::int64_t expected_version,
                                      bool strict) {
    std::unique_lock lock(mutex_);
    std::int64_t current = taxonomy_ ? taxonomy_->version : 0;
    if (expected_version != current) {
        fail(ErrorCode::StaleVersion, fmt::format("taxonomy is at version {}, update was based on {}",
                                                  current, expected_version));
    }
    taxonomy.version = current + 1;
    auto problems = validate_taxonomy(taxonomy, strict);
    if (!problems.empty()) {
        std::string message = "invalid taxonomy:";
        for (const auto& p : problems) message += "\n  - " + p;
        fail(ErrorCode::ValidationError, message);
    }
    emit(EventKind::taxonomy_revised, "", Json{{"taxonomy", taxonomy}});
    return *taxonomy_;
}

std::optional<Taxonomy> ReviewStore::taxonomy() const {
    std::shared_lock lock(mutex_);
    return taxonomy_;
}

void ReviewStore::set_document_lookup(
    std::function<std::optional<std::string>(const std::string&)> lookup) {
    std::unique_lock lock(mutex_);
    document_lookup_ = std::move(lookup);
}

void ReviewStore::add_pairs(const std::vector<QAPair>& pairs) {
    std::unique_lock lock(mutex_);
    for (const auto& pair : pairs) {
        check_pair_invariants(pair);
        if (pairs_.count(pair.id) > 0) {
            fail(ErrorCode::ValidationError, "pair '" + pair.id + "' already exists");
        }
    }
    for (const auto& pair : pairs) {
        emit(EventKind::pair_created, pair.id, Json{{"pair", pair}});
    }
}

std::vector<QAPair> ReviewStore::generate_and_add(TextBackend& backend,
                                                  const std::vector<GenerationRequest>& requests,
                                                  std::size_t max_concurrency) {
    std::vector<std::string> replies(requests.size());
    bounded_parallel_for(requests.size(), max_concurrency, [&](std::size_t i) {
        requests[i].validate();
        replies[i] = backend.complete({completion_prompt(requests[i]), requests[i].n});
        parse_qa_reply(replies[i], requests[i].n);
    });
    std::unique_lock lock(mutex_);
    std::vector<QAPair> created;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        for (auto& pair : materialize_pairs(replies[i], requests[i], ids_)) {
            emit(EventKind::pair_created, pair.id, Json{{"pair", pair}});
            created.push_back(pairs_.at(pair.id));
        }
    }
    return created;
}

PairStatus ReviewStore::submit_rating(const std::string& pair_id, RatingRecord record,
                                      std::optional<std::int64_t> expected_version) {
    std::unique_lock lock(mutex_);
    auto& pair = require_pair(pair_id);
    if (!is_valid_score(record.score)) {
        fail(ErrorCode::IllegalScore,
             fmt::format("score {} is outside the 2..5 scale", record.score));
    }
    if (expected_version && *expected_version != pair.version) {
        fail(ErrorCode::StaleVersion,
             fmt::format("pair '{}' is at version {}, rating was based on {}", pair_id,
                         pair.version, *expected_version));
    }
    if (pair.status == PairStatus::accepted || pair.status == PairStatus::rejected) {
        fail(ErrorCode::PairFinalized,
             fmt::format("pair '{}' is already {}", pair_id, to_string(pair.status)));
    }
    record.kind = RaterKind::expert;
    if (record.timestamp == 0) {
        record.timestamp = clock_();
    }
    QAPair projected = pair;
    projected.ratings.push_back(record);
    auto score = controlling_score(projected, policy_.controlling_rule);
    auto status = score && *score >= policy_.threshold ? PairStatus::accepted : PairStatus::flagged;
    emit(EventKind::rating_submitted, pair_id,
         Json{{"rating", record}, {"status", to_string(status)}});
    return status;
}

QAPair ReviewStore::request_refinement(const std::string& pair_id,
                                       const RefinementRequest& request, TextBackend& backend) {
    std::optional<Category> revised_category;
    GenerationRequest generation;
    std::int64_t observed_version = 0;
    {
        std::shared_lock lock(mutex_);
        auto it = pairs_.find(pair_id);
        if (it == pairs_.end()) {
            fail(ErrorCode::UnknownPair, "unknown pair '" + pair_id + "'");
        }
        const auto& pair = it->second;
        if (request.expected_version && *request.expected_version != pair.version) {
            fail(ErrorCode::StaleVersion,
                 fmt::format("pair '{}' is at version {}, refinement was based on {}", pair_id,
                             pair.version, *request.expected_version));
        }
        if (pair.status != PairStatus::flagged) {
            fail(ErrorCode::PairNotFlagged,
                 fmt::format("pair '{}' is {}, only flagged pairs can be refined", pair_id,
                             to_string(pair.status)));
        }
        if (pair.generation >= policy_.max_rounds) {
            fail(ErrorCode::RoundsExhausted,
                 fmt::format("lineage of '{}' already used {} refinement rounds", pair_id,
                             policy_.max_rounds));
        }
        if (!request.revised_template && !request.revised_seeds && !request.regenerate_as_is) {
            fail(ErrorCode::ValidationError,
                 "refinement needs a revised template, revised seeds, or regenerate_as_is");
        }
        if (!taxonomy_) {
            fail(ErrorCode::ValidationError, "no taxonomy loaded; cannot rebuild the prompt");
        }
        const auto* category = taxonomy_->find(pair.category_id);
        if (!category) {
            fail(ErrorCode::ValidationError,
                 "pair '" + pair_id + "' has unknown category '" + pair.category_id + "'");
        }
        Category effective = *category;
        if (request.revised_template) {
            auto problems = validate_template(*request.revised_template);
            if (!problems.empty()) {
                fail(ErrorCode::ValidationError, "revised template: " + problems.front());
            }
            effective.prompt_template = *request.revised_template;
        }
        if (request.revised_seeds) {
            if (request.revised_seeds->empty()) {
                fail(ErrorCode::ValidationError, "revised seed list is empty");
            }
            effective.seeds = *request.revised_seeds;
        }
        if (request.revised_template || request.revised_seeds) {
            revised_category = effective;
        }
        std::optional<std::string> document;
        if (pair.source_doc_id && document_lookup_) {
            document = document_lookup_(*pair.source_doc_id);
        }
        int k = std::clamp(request.fewshot_k, 1, static_cast<int>(effective.seeds.size()));
        generation.prompt = assemble_prompt(effective.prompt_template, effective.name,
                                            effective.seeds, k,
                                            document ? std::optional<std::string_view>(*document)
                                                     : std::nullopt);
        generation.category_id = pair.category_id;
        generation.n = 1;
        generation.source_doc_id = pair.source_doc_id;
        observed_version = pair.version;
    }

    auto reply = backend.complete({completion_prompt(generation), 1});
    parse_qa_reply(reply, 1);

    std::unique_lock lock(mutex_);
    auto& parent = require_pair(pair_id);
    if (parent.version != observed_version) {
        fail(ErrorCode::StaleVersion,
             fmt::format("pair '{}' changed while its refinement was generated", pair_id));
    }
    if (revised_category) {
        Taxonomy revised = *taxonomy_;
        *revised.find(revised_category->id) = *revised_category;
        revised.version = taxonomy_->version + 1;
        emit(EventKind::taxonomy_revised, "", Json{{"taxonomy", revised}});
    }
    auto children = materialize_pairs(reply, generation, ids_, &parent);
    auto child = children.front();
    emit(EventKind::refinement_created, pair_id, Json{{"child", child}});
    return pairs_.at(child.id);
}

void ReviewStore::record_cleanup(const std::vector<CleanupOutcome>& outcomes) {
    std::unique_lock lock(mutex_);
    for (const auto& outcome : outcomes) {
        require_pair(outcome.pair_id);
    }
    for (const auto& outcome : outcomes) {
        emit(EventKind::cleanup_recorded, outcome.pair_id,
             Json{{"kept", outcome.kept}, {"fired_rules", outcome.fired_rules}});
    }
}

void ReviewStore::record_judge_rating(const std::string& pair_id, RatingRecord record) {
    std::unique_lock lock(mutex_);
    require_pair(pair_id);
    if (!is_valid_score(record.score)) {
        fail(ErrorCode::IllegalScore,
             fmt::format("judge score {} is outside the 2..5 scale", record.score));
    }
    record.kind = RaterKind::judge;
    if (record.timestamp == 0) {
        record.timestamp = clock_();
    }
    emit(EventKind::judge_scored, pair_id, Json{{"rating", record}});
}

std::optional<QAPair> ReviewStore::get(const std::string& pair_id) const {
    std::shared_lock lock(mutex_);
    auto it = pairs_.find(pair_id);
    if (it == pairs_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<QAPair> ReviewStore::all_pairs() const {
    std::shared_lock lock(mutex_);
    std::vector<QAPair> out;
    out.reserve(pairs_.size());
    for (const auto& [id, pair] : pairs_) {
        out.push_back(pair);
    }
    return out;
}

std::vector<QAPair> ReviewStore::queue(std::optional<std::string> category_id,
                                       std::optional<Origin> origin) const {
    std::shared_lock lock(mutex_);
    std::vector<QAPair> out;
    for (const auto& [id, pair] : pairs_) {
        if (pair.status != PairStatus::pending && pair.status != PairStatus::flagged) {
            continue;
        }
        if ((category_id && pair.category_id != *category_id) ||
            (origin && pair.origin != *origin)) {
            continue;
        }
        out.push_back(pair);
    }
    return out;
}

std::vector<QAPair> ReviewStore::lineage_of(const std::string& pair_id) const {
    std::shared_lock lock(mutex_);
    auto it = pairs_.find(pair_id);
    if (it == pairs_.end()) {
        fail(ErrorCode::UnknownPair, "unknown pair '" + pair_id + "'");
    }
    std::vector<QAPair> chain;
    for (const auto& ancestor : it->second.lineage) {
        chain.push_back(pairs_.at(ancestor));
    }
    chain.push_back(it->second);
    return chain;
}

AggregateResult ReviewStore::aggregate_dataset(const std::string& category_id) const {
    std::shared_lock lock(mutex_);
    AggregateResult result;
    for (const auto& [id, pair] : pairs_) {
        if (pair.category_id != category_id || pair.origin != Origin::expert_synthetic) {
            continue;
        }
        if (pair.status == PairStatus::accepted) {
            result.accepted.push_back(pair);
        } else if (!pair.superseded_by &&
                   (pair.status == PairStatus::pending || pair.status == PairStatus::flagged)) {
            UnresolvedLineage lineage;
            lineage.root_id = pair.lineage.empty() ? pair.id : pair.lineage.front();
            lineage.leaf_id = pair.id;
            lineage.generation = pair.generation;
            lineage.status = pair.status;
            lineage.rounds_exhausted =
                pair.status == PairStatus::flagged && pair.generation >= policy_.max_rounds;
            result.unresolved.push_back(std::move(lineage));
        }
    }
    return result;
}

std::vector<Event> ReviewStore::events() const {
    std::shared_lock lock(mutex_);
    return events_;
}

std::uint64_t ReviewStore::last_seq() const {
    std::shared_lock lock(mutex_);
    return seq_;
}

IdSequence ReviewStore::id_sequence_copy() const {
    std::shared_lock lock(mutex_);
    return ids_;
}

void ReviewStore::write_snapshot(const std::filesystem::path& path) const {
    std::shared_lock lock(mutex_);
    std::vector<Json> records;
    Json header{{"kind", "snapshot"}, {"seq", seq_}, {"id_counter", ids_.last()}};
    header["taxonomy"] = taxonomy_ ? Json(*taxonomy_) : Json(nullptr);
    records.push_back(std::move(header));
    for (const auto& [id, pair] : pairs_) {
        records.push_back(Json{{"pair", pair}});
    }
    write_jsonl(path, records);
}

void ReviewStore::load_snapshot(const std::filesystem::path& path) {
    auto records = read_jsonl(path);
    if (records.empty() || records.front().value("kind", "") != "snapshot") {
        fail(ErrorCode::ParseError, path.string() + " is not a review snapshot");
    }
    const auto& header = records.front();
    seq_ = header.at("seq").get<std::uint64_t>();
    ids_ = IdSequence("qa", header.value("id_counter", std::uint64_t{0}));
    if (!header.at("taxonomy").is_null()) {
        taxonomy_ = header.at("taxonomy").get<Taxonomy>();
    }
    for (std::size_t i = 1; i < records.size(); ++i) {
        auto pair = records[i].at("pair").get<QAPair>();
        pairs_.emplace(pair.id, std::move(pair));
    }
}

void to_json(Json& j, const ReviewPolicy& policy) {
    j = Json{{"threshold", policy.threshold},
             {"max_rounds", policy.max_rounds},
             {"controlling_rule",
              policy.controlling_rule == ControllingRule::latest ? "latest" : "median"}};
}

void from_json(const Json& j, ReviewPolicy& policy) {
    policy.threshold = j.value("threshold", 4);
    policy.max_rounds = j.value("max_rounds", 5);
    auto rule = j.value("controlling_rule", "latest");
    if (rule == "latest") {
        policy.controlling_rule = ControllingRule::latest;
    } else if (rule == "median") {
        policy.controlling_rule = ControllingRule::median;
    } else {
        fail(ErrorCode::ConfigError, "controlling_rule must be 'latest' or 'median'");
    }
    policy.validate();
}

void to_json(Json& j, const UnresolvedLineage& lineage) {
    j = Json{{"root_id", lineage.root_id},
             {"leaf_id", lineage.leaf_id},
             {"generation", lineage.generation},
             {"status", to_string(lineage.status)},
             {"rounds_exhausted", lineage.rounds_exhausted}};
}

}  // namespace aquadapt
