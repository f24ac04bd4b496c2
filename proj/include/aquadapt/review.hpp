#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "aquadapt/genkit.hpp"
#include "aquadapt/jsonl.hpp"
#include "aquadapt/taxonomy.hpp"
#include "aquadapt/types.hpp"

namespace aquadapt {

enum class ControllingRule { latest, median };

struct ReviewPolicy {
    int threshold = 4;
    int max_rounds = 5;
    ControllingRule controlling_rule = ControllingRule::latest;

    void validate() const;
};

/// Controlling expert score of a pair, or nullopt when no expert has rated it.
/// Median of an even count is the mean of the two middle scores.
std::optional<double> controlling_score(const QAPair& pair, ControllingRule rule);

enum class EventKind {
    pair_created,
    rating_submitted,
    refinement_created,
    cleanup_recorded,
    judge_scored,
    taxonomy_revised,
};

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);

/// One persisted state transition. Replaying the events in order rebuilds the
/// store exactly.
struct Event {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::pair_created;
    std::string pair_id;
    Json payload;
    std::int64_t timestamp = 0;
    std::int64_t version = 0;  // pair (or taxonomy) version after the event
};

void to_json(Json& j, const Event& event);
void from_json(const Json& j, Event& event);

using Clock = std::function<std::int64_t()>;

Clock system_clock_millis();
/// Returns 1, 2, 3, ... on successive calls; keeps headless runs reproducible.
Clock logical_clock();

struct RefinementRequest {
    std::optional<PromptTemplate> revised_template;
    std::optional<std::vector<SeedPair>> revised_seeds;
    bool regenerate_as_is = false;
    std::optional<std::int64_t> expected_version;
    int fewshot_k = 3;
};

struct UnresolvedLineage {
    std::string root_id;
    std::string leaf_id;
    int generation = 0;
    PairStatus status = PairStatus::pending;
    bool rounds_exhausted = false;
};

struct AggregateResult {
    std::vector<QAPair> accepted;
    std::vector<UnresolvedLineage> unresolved;
};

struct CleanupOutcome {
    std::string pair_id;
    bool kept = true;
    std::vector<std::string> fired_rules;
};

/// The expert review loop over an append-only event log.
///
/// Every mutation is expressed as an Event and applied through a single code
/// path, both live and during replay. Writers are serialized; readers share.
class ReviewStore {
public:
    explicit ReviewStore(ReviewPolicy policy, std::optional<std::filesystem::path> event_log = {},
                         Clock clock = system_clock_millis());
    ~ReviewStore();

    ReviewStore(const ReviewStore&) = delete;
    ReviewStore& operator=(const ReviewStore&) = delete;

    /// Rebuilds state from a snapshot (optional) plus the event log, then keeps
    /// appending to that log. A torn final log line is ignored.
    static std::unique_ptr<ReviewStore> recover(ReviewPolicy policy,
                                                const std::filesystem::path& event_log,
                                                std::optional<std::filesystem::path> snapshot = {},
                                                Clock clock = system_clock_millis());

    /// Pure replay into a fresh store with no log attached.
    static std::unique_ptr<ReviewStore> replay(ReviewPolicy policy, const std::vector<Event>& events);

    const ReviewPolicy& policy() const { return policy_; }

    void initialize_taxonomy(Taxonomy taxonomy);
    /// Requires `expected_version` to equal the current version; stores the new
    /// taxonomy with version + 1 and returns it.
    Taxonomy update_taxonomy(Taxonomy taxonomy, std::int64_t expected_version, bool strict);
    std::optional<Taxonomy> taxonomy() const;

    /// Registers source text so literature refinements can rebuild their prompt.
    void set_document_lookup(std::function<std::optional<std::string>(const std::string&)> lookup);

    void add_pairs(const std::vector<QAPair>& pairs);

    /// Sends every request (bounded concurrency), then assigns ids in request
    /// order and records the new pairs.
    std::vector<QAPair> generate_and_add(TextBackend& backend,
                                         const std::vector<GenerationRequest>& requests,
                                         std::size_t max_concurrency);

    PairStatus submit_rating(const std::string& pair_id, RatingRecord record,
                             std::optional<std::int64_t> expected_version = std::nullopt);

    QAPair request_refinement(const std::string& pair_id, const RefinementRequest& request,
                              TextBackend& backend);

    void record_cleanup(const std::vector<CleanupOutcome>& outcomes);
    void record_judge_rating(const std::string& pair_id, RatingRecord record);

    std::optional<QAPair> get(const std::string& pair_id) const;
    std::vector<QAPair> all_pairs() const;
    /// Pending and flagged pairs, optionally restricted to one category/origin.
    std::vector<QAPair> queue(std::optional<std::string> category_id = std::nullopt,
                              std::optional<Origin> origin = std::nullopt) const;
    /// The pair and its ancestors, root first.
    std::vector<QAPair> lineage_of(const std::string& pair_id) const;

    /// Accepted expert-path pairs of the category plus the lineages that never
    /// reached acceptance.
    AggregateResult aggregate_dataset(const std::string& category_id) const;

    std::vector<Event> events() const;
    std::uint64_t last_seq() const;

    void write_snapshot(const std::filesystem::path& path) const;

    IdSequence id_sequence_copy() const;

private:
    void emit(EventKind kind, const std::string& pair_id, Json payload);
    void apply(const Event& event);
    QAPair& require_pair(const std::string& pair_id);
    void load_snapshot(const std::filesystem::path& path);

    ReviewPolicy policy_;
    Clock clock_;
    std::unique_ptr<JsonlAppender> log_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, QAPair> pairs_;
    std::vector<Event> events_;
    std::uint64_t seq_ = 0;
    std::optional<Taxonomy> taxonomy_;
    IdSequence ids_{"qa"};
    std::function<std::optional<std::string>(const std::string&)> document_lookup_;
};

void to_json(Json& j, const ReviewPolicy& policy);
void from_json(const Json& j, ReviewPolicy& policy);
void to_json(Json& j, const UnresolvedLineage& lineage);

}  // namespace aquadapt
