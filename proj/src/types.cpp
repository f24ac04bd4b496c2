#include "aquadapt/types.hpp"

#include <fmt/format.h>

#include "aquadapt/error.hpp"

namespace aquadapt {

std::string_view to_string(Origin origin) {
    return origin == Origin::expert_synthetic ? "expert_synthetic" : "literature";
}

std::string_view to_string(PairStatus status) {
    switch (status) {
        case PairStatus::pending: return "pending";
        case PairStatus::flagged: return "flagged";
        case PairStatus::accepted: return "accepted";
        case PairStatus::rejected: return "rejected";
    }
    return "pending";
}

std::string_view to_string(RaterKind kind) {
    return kind == RaterKind::expert ? "expert" : "judge";
}

Origin parse_origin(std::string_view text) {
    if (text == "expert_synthetic") return Origin::expert_synthetic;
    if (text == "literature") return Origin::literature;
    fail(ErrorCode::ParseError, fmt::format("unknown origin '{}'", text));
}

PairStatus parse_pair_status(std::string_view text) {
    if (text == "pending") return PairStatus::pending;
    if (text == "flagged") return PairStatus::flagged;
    if (text == "accepted") return PairStatus::accepted;
    if (text == "rejected") return PairStatus::rejected;
    fail(ErrorCode::ParseError, fmt::format("unknown pair status '{}'", text));
}

RaterKind parse_rater_kind(std::string_view text) {
    if (text == "expert") return RaterKind::expert;
    if (text == "judge") return RaterKind::judge;
    fail(ErrorCode::ParseError, fmt::format("unknown rater kind '{}'", text));
}

void check_pair_invariants(const QAPair& pair) {
    auto broken = [&](const std::string& what) {
        fail(ErrorCode::ValidationError, fmt::format("pair '{}': {}", pair.id, what));
    };
    if (pair.generation < 0) {
        broken("negative generation");
    }
    if (pair.parent_id.has_value() != (pair.generation > 0)) {
        broken("parent_id must be present exactly when generation > 0");
    }
    if (static_cast<int>(pair.lineage.size()) != pair.generation) {
        broken("lineage length must equal generation");
    }
    if (pair.parent_id && pair.lineage.back() != *pair.parent_id) {
        broken("lineage must end with parent_id");
    }
    if (pair.origin == Origin::literature && !pair.source_doc_id) {
        broken("literature pairs need source_doc_id");
    }
    for (const auto& r : pair.ratings) {
        if (!is_valid_score(r.score)) {
            broken(fmt::format("rating {} outside 2..5", r.score));
        }
    }
}

std::optional<int> latest_score(const QAPair& pair, RaterKind kind) {
    for (auto it = pair.ratings.rbegin(); it != pair.ratings.rend(); ++it) {
        if (it->kind == kind) {
            return it->score;
        }
    }
    return std::nullopt;
}

void to_json(Json& j, const RatingRecord& record) {
    j = Json{{"rater", record.rater},
             {"score", record.score},
             {"timestamp", record.timestamp},
             {"kind", to_string(record.kind)}};
    j["note"] = record.note ? Json(*record.note) : Json(nullptr);
}

void from_json(const Json& j, RatingRecord& record) {
    record.rater = j.at("rater").get<std::string>();
    if (!j.at("score").is_number_integer()) {
        fail(ErrorCode::IllegalScore, "score must be an integer in 2..5");
    }
    record.score = j.at("score").get<int>();
    record.timestamp = j.value("timestamp", std::int64_t{0});
    record.kind = parse_rater_kind(j.value("kind", "expert"));
    if (j.contains("note") && !j.at("note").is_null()) {
        record.note = j.at("note").get<std::string>();
    } else {
        record.note.reset();
    }
}

namespace {

Json optional_string(const std::optional<std::string>& value) {
    return value ? Json(*value) : Json(nullptr);
}

std::optional<std::string> read_optional_string(const Json& j, const char* key) {
    if (j.contains(key) && !j.at(key).is_null()) {
        return j.at(key).get<std::string>();
    }
    return std::nullopt;
}

}  // namespace

void to_json(Json& j, const QAPair& pair) {
    j = Json{{"id", pair.id},
             {"category_id", pair.category_id},
             {"question", pair.question},
             {"answer", pair.answer},
             {"origin", to_string(pair.origin)},
             {"source_doc_id", optional_string(pair.source_doc_id)},
             {"parent_id", optional_string(pair.parent_id)},
             {"lineage", pair.lineage},
             {"generation", pair.generation},
             {"status", to_string(pair.status)},
             {"ratings", pair.ratings},
             {"superseded_by", optional_string(pair.superseded_by)},
             {"cleanup_checked", pair.cleanup_checked},
             {"cleanup_rules", pair.cleanup_rules},
             {"version", pair.version}};
}

void from_json(const Json& j, QAPair& pair) {
    pair.id = j.at("id").get<std::string>();
    pair.category_id = j.at("category_id").get<std::string>();
    pair.question = j.at("question").get<std::string>();
    pair.answer = j.at("answer").get<std::string>();
    pair.origin = parse_origin(j.at("origin").get<std::string>());
    pair.source_doc_id = read_optional_string(j, "source_doc_id");
    pair.parent_id = read_optional_string(j, "parent_id");
    pair.lineage = j.value("lineage", std::vector<std::string>{});
    pair.generation = j.value("generation", 0);
    pair.status = parse_pair_status(j.value("status", "pending"));
    pair.ratings = j.value("ratings", std::vector<RatingRecord>{});
    pair.superseded_by = read_optional_string(j, "superseded_by");
    pair.cleanup_checked = j.value("cleanup_checked", false);
    pair.cleanup_rules = j.value("cleanup_rules", std::vector<std::string>{});
    pair.version = j.value("version", std::int64_t{0});
}

}  // namespace aquadapt
