#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aquadapt/jsonl.hpp"

namespace aquadapt {

enum class SourceKind { web, open_access };

std::string_view to_string(SourceKind kind);
SourceKind parse_source_kind(std::string_view text);

struct RawDocument {
    std::string id;
    SourceKind source_kind = SourceKind::web;
    std::string origin_uri;
    std::string raw_text;
    std::vector<std::string> warnings;
};

struct CleanDocument {
    std::string id;
    SourceKind source_kind = SourceKind::web;
    std::string origin_uri;
    std::string clean_text;
    std::size_t token_count = 0;
    std::vector<std::string> applied_rules;
};

struct CorpusStats {
    std::size_t doc_count = 0;
    std::size_t total_tokens = 0;
    double avg_doc_len = 0.0;
    std::map<SourceKind, std::size_t> per_source_counts;
};

/// Decodes bytes as UTF-8, replacing each invalid sequence with U+FFFD.
/// Returns true in `replaced` when any substitution happened.
std::string decode_utf8_lossy(std::span<const std::uint8_t> bytes, bool& replaced);

/// Assigns fresh document ids ("doc-000001", ...) and rejects reuse of
/// explicitly supplied ids.
class Ingestor {
public:
    RawDocument ingest(std::span<const std::uint8_t> bytes, SourceKind kind,
                       std::string origin_uri, std::optional<std::string> id = std::nullopt);
    RawDocument ingest(std::string_view text, SourceKind kind, std::string origin_uri,
                       std::optional<std::string> id = std::nullopt);

    std::size_t ingested() const { return seen_.size(); }

private:
    std::string next_id();

    std::set<std::string> seen_;
    std::uint64_t counter_ = 0;
};

// Rule names, in pipeline order.
inline constexpr std::string_view kRuleStripUrls = "strip_urls";
inline constexpr std::string_view kRuleDropPageNumbers = "drop_page_numbers";
inline constexpr std::string_view kRuleDropRepeatedHeaders = "drop_repeated_headers";
inline constexpr std::string_view kRuleTruncateReferences = "truncate_references";
inline constexpr std::string_view kRuleDropCaptions = "drop_captions";
inline constexpr std::string_view kRuleStripControlChars = "strip_control_chars";
inline constexpr std::string_view kRuleNormalizeWhitespace = "normalize_whitespace";

struct CleanOptions {
    /// A line equal to this marker is a page boundary, as is a form feed.
    std::string page_marker = "<<<PAGE>>>";
    std::size_t header_min_pages = 3;
    /// References headings before this fraction of the text are ignored.
    double references_min_position = 0.5;
};

struct CleanResult {
    std::string text;
    std::vector<std::string> applied_rules;
};

/// Runs the seven cleaning rules in order, repeating the pass until the text
/// stops changing. The result is therefore a fixed point of the pipeline.
CleanResult clean_text(std::string_view raw, const CleanOptions& options = {});

CleanDocument clean_document(const RawDocument& raw, const CleanOptions& options = {});

CorpusStats corpus_stats(std::span<const CleanDocument> docs);

/// Regex used by the URL stripper; exposed so tests can check its own output.
bool contains_url(std::string_view text);

struct ManifestEntry {
    std::string id;
    SourceKind source_kind = SourceKind::web;
    std::filesystem::path path;
};

/// Manifest: one record per line, `id source_kind path`, whitespace separated.
/// Blank lines and lines starting with '#' are ignored; relative paths resolve
/// against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

void to_json(Json& j, const RawDocument& doc);
void from_json(const Json& j, RawDocument& doc);
void to_json(Json& j, const CleanDocument& doc);
/// Rejects records whose token_count disagrees with a recount of clean_text.
void from_json(const Json& j, CleanDocument& doc);
void to_json(Json& j, const CorpusStats& stats);

}  // namespace aquadapt
