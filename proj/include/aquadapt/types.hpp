#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aquadapt/jsonl.hpp"

namespace aquadapt {

enum class Origin { expert_synthetic, literature };
enum class PairStatus { pending, flagged, accepted, rejected };
enum class RaterKind { expert, judge };

std::string_view to_string(Origin origin);
std::string_view to_string(PairStatus status);
std::string_view to_string(RaterKind kind);
Origin parse_origin(std::string_view text);
PairStatus parse_pair_status(std::string_view text);
RaterKind parse_rater_kind(std::string_view text);

inline constexpr int kMinScore = 2;
inline constexpr int kMaxScore = 5;

inline bool is_valid_score(int score) { return score >= kMinScore && score <= kMaxScore; }

/// One score on the 2..5 star scale.
struct RatingRecord {
    std::string rater;
    int score = 0;
    std::int64_t timestamp = 0;  // milliseconds since epoch, or a logical tick
    std::optional<std::string> note;
    RaterKind kind = RaterKind::expert;

    friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct QAPair {
    std::string id;
    std::string category_id;
    std::string question;
    std::string answer;
    Origin origin = Origin::expert_synthetic;
    std::optional<std::string> source_doc_id;
    std::optional<std::string> parent_id;
    /// Ancestor ids, root first. Its size equals `generation`.
    std::vector<std::string> lineage;
    int generation = 0;
    PairStatus status = PairStatus::pending;
    std::vector<RatingRecord> ratings;
    std::optional<std::string> superseded_by;
    /// Set once the literature cleanup rules have run on this pair.
    bool cleanup_checked = false;
    std::vector<std::string> cleanup_rules;
    /// Optimistic concurrency token; bumped on every state change.
    std::int64_t version = 0;

    friend bool operator==(const QAPair&, const QAPair&) = default;
};

/// Throws ValidationError naming the first broken structural invariant.
void check_pair_invariants(const QAPair& pair);

std::optional<int> latest_score(const QAPair& pair, RaterKind kind);

void to_json(Json& j, const RatingRecord& record);
void from_json(const Json& j, RatingRecord& record);
void to_json(Json& j, const QAPair& pair);
void from_json(const Json& j, QAPair& pair);

}  // namespace aquadapt
