#include "aquadapt/corpus.hpp"

#include <fmt/format.h>

#include <regex>
#include <sstream>
#include <unordered_map>

#include "aquadapt/error.hpp"
#include "aquadapt/tokenizer.hpp"

namespace aquadapt {

namespace {

const std::regex& url_pattern() {
    static const std::regex re(R"((?:https?|ftp)://[^\s<>"]+|www\.[^\s<>"]+)",
                               std::regex::ECMAScript | std::regex::icase);
    return re;
}

const std::regex& page_number_pattern() {
    static const std::regex re(R"(^\s*(?:\d+|[Pp]age\s+\d+(?:\s+of\s+\d+)?)\s*$)");
    return re;
}

const std::regex& caption_pattern() {
    static const std::regex re(R"(^\s*(?:Figure|Fig\.|Table)\s*\d)");
    return re;
}

bool is_references_heading(std::string_view line) {
    auto lowered = to_lower_ascii(trim(line));
    if (!lowered.empty() && lowered.back() == ':') {
        lowered.pop_back();
    }
    return lowered == "references" || lowered == "bibliography";
}

// A page boundary is kept as a line of its own between the split and the
// header rule, so line-level rules never see form feeds.
constexpr std::string_view kBoundary = "\f";

std::vector<std::string> split_lines(std::string_view text, const CleanOptions& options) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    auto push_line = [&](std::string_view line) {
        bool has_feed = line.find('\f') != std::string_view::npos;
        std::size_t piece_start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i < line.size() && line[i] != '\f') {
                continue;
            }
            auto piece = line.substr(piece_start, i - piece_start);
            if (!options.page_marker.empty() && trim(piece) == options.page_marker) {
                lines.emplace_back(kBoundary);
            } else if (!has_feed || !piece.empty()) {
                lines.emplace_back(piece);
            }
            if (i < line.size()) {
                lines.emplace_back(kBoundary);
            }
            piece_start = i + 1;
        }
    };
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            push_line(text.substr(start, i - start));
            start = i + 1;
        }
    }
    return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) {
            out.push_back('\n');
        }
        out += lines[i];
    }
    return out;
}

bool rule_strip_urls(std::vector<std::string>& lines) {
    bool fired = false;
    std::vector<std::string> kept;
    kept.reserve(lines.size());
    for (auto& line : lines) {
        if (line == kBoundary || !std::regex_search(line, url_pattern())) {
            kept.push_back(std::move(line));
            continue;
        }
        fired = true;
        auto stripped = std::regex_replace(line, url_pattern(), "");
        // A line that held nothing but URLs disappears entirely.
        if (!trim(stripped).empty()) {
            kept.push_back(std::move(stripped));
        }
    }
    lines = std::move(kept);
    return fired;
}

bool rule_drop_page_numbers(std::vector<std::string>& lines) {
    auto before = lines.size();
    std::erase_if(lines, [](const std::string& line) {
        return line != kBoundary && std::regex_match(line, page_number_pattern());
    });
    return lines.size() != before;
}

bool rule_drop_repeated_headers(std::vector<std::string>& lines, const CleanOptions& options) {
    bool has_boundary = false;
    std::unordered_map<std::string, std::set<std::size_t>> pages_by_line;
    std::size_t page = 0;
    for (const auto& line : lines) {
        if (line == kBoundary) {
            has_boundary = true;
            ++page;
            continue;
        }
        auto key = std::string(trim(line));
        if (!key.empty()) {
            pages_by_line[key].insert(page);
        }
    }
    if (!has_boundary) {
        return false;
    }
    std::set<std::string> repeated;
    for (const auto& [line, pages] : pages_by_line) {
        if (pages.size() >= options.header_min_pages) {
            repeated.insert(line);
        }
    }
    std::erase_if(lines, [&](const std::string& line) {
        return line == kBoundary || repeated.count(std::string(trim(line))) > 0;
    });
    return true;
}

bool rule_truncate_references(std::vector<std::string>& lines, const CleanOptions& options) {
    std::size_t total = 0;
    for (const auto& line : lines) {
        total += line.size() + 1;
    }
    std::size_t offset = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (static_cast<double>(offset) >= options.references_min_position * static_cast<double>(total) &&
            is_references_heading(lines[i])) {
            lines.resize(i);
            return true;
        }
        offset += lines[i].size() + 1;
    }
    return false;
}

bool rule_drop_captions(std::vector<std::string>& lines) {
    auto before = lines.size();
    std::erase_if(lines, [](const std::string& line) {
        return std::regex_search(line, caption_pattern());
    });
    return lines.size() != before;
}

bool rule_strip_control_chars(std::vector<std::string>& lines) {
    bool fired = false;
    for (auto& line : lines) {
        std::string out;
        out.reserve(line.size());
        for (std::size_t i = 0; i < line.size(); ++i) {
            auto c = static_cast<unsigned char>(line[i]);
            if (c == '\t') {
                out.push_back(' ');
                fired = true;
            } else if (c < 0x20 || c == 0x7f) {
                fired = true;
            } else if (c == 0xc2 && i + 1 < line.size() &&
                       static_cast<unsigned char>(line[i + 1]) >= 0x80 &&
                       static_cast<unsigned char>(line[i + 1]) <= 0x9f) {
                // C1 control characters (U+0080..U+009F) in UTF-8.
                ++i;
                fired = true;
            } else {
                out.push_back(line[i]);
            }
        }
        line = std::move(out);
    }
    return fired;
}

bool rule_normalize_whitespace(std::vector<std::string>& lines) {
    std::vector<std::string> out;
    out.reserve(lines.size());
    bool previous_blank = true;  // drops leading blank lines
    for (const auto& line : lines) {
        std::string collapsed;
        collapsed.reserve(line.size());
        for (char c : trim(line)) {
            if (c == ' ' && !collapsed.empty() && collapsed.back() == ' ') {
                continue;
            }
            collapsed.push_back(c);
        }
        bool blank = collapsed.empty();
        if (blank && previous_blank) {
            continue;
        }
        previous_blank = blank;
        out.push_back(std::move(collapsed));
    }
    while (!out.empty() && out.back().empty()) {
        out.pop_back();
    }
    bool changed = out != lines;
    lines = std::move(out);
    return changed;
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
    return out;
}

}  // namespace

std::string_view to_string(SourceKind kind) {
    return kind == SourceKind::web ? "web" : "open_access";
}

SourceKind parse_source_kind(std::string_view text) {
    if (text == "web") {
        return SourceKind::web;
    }
    if (text == "open_access") {
        return SourceKind::open_access;
    }
    fail(ErrorCode::ParseError, fmt::format("unknown source_kind '{}'", text));
}

std::string decode_utf8_lossy(std::span<const std::uint8_t> bytes, bool& replaced) {
    replaced = false;
    std::string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    while (i < bytes.size()) {
        std::uint8_t lead = bytes[i];
        std::size_t length = 0;
        char32_t cp = 0;
        char32_t min_cp = 0;
        if (lead < 0x80) {
            out.push_back(static_cast<char>(lead));
            ++i;
            continue;
        } else if ((lead & 0xe0) == 0xc0) {
            length = 2, cp = lead & 0x1f, min_cp = 0x80;
        } else if ((lead & 0xf0) == 0xe0) {
            length = 3, cp = lead & 0x0f, min_cp = 0x800;
        } else if ((lead & 0xf8) == 0xf0) {
            length = 4, cp = lead & 0x07, min_cp = 0x10000;
        }
        bool valid = length > 0 && i + length <= bytes.size();
        for (std::size_t k = 1; valid && k < length; ++k) {
            if ((bytes[i + k] & 0xc0) != 0x80) {
                valid = false;
            } else {
                cp = (cp << 6) | (bytes[i + k] & 0x3f);
            }
        }
        valid = valid && cp >= min_cp && cp <= 0x10ffff && !(cp >= 0xd800 && cp <= 0xdfff);
        if (valid) {
            out.append(reinterpret_cast<const char*>(bytes.data() + i), length);
            i += length;
        } else {
            out += encode_utf8(0xfffd);
            replaced = true;
            ++i;
        }
    }
    return out;
}

std::string Ingestor::next_id() {
    std::string id;
    do {
        id = fmt::format("doc-{:06d}", ++counter_);
    } while (seen_.count(id) > 0);
    return id;
}

RawDocument Ingestor::ingest(std::span<const std::uint8_t> bytes, SourceKind kind,
                             std::string origin_uri, std::optional<std::string> id) {
    if (bytes.empty()) {
        fail(ErrorCode::EmptyInput, "document '" + origin_uri + "' has zero length");
    }
    RawDocument doc;
    if (id) {
        if (seen_.count(*id) > 0) {
            fail(ErrorCode::DuplicateDocId, "document id '" + *id + "' already ingested");
        }
        doc.id = std::move(*id);
    } else {
        doc.id = next_id();
    }
    seen_.insert(doc.id);
    doc.source_kind = kind;
    doc.origin_uri = std::move(origin_uri);
    bool replaced = false;
    doc.raw_text = decode_utf8_lossy(bytes, replaced);
    if (replaced) {
        doc.warnings.push_back("invalid UTF-8 replaced with U+FFFD");
    }
    return doc;
}

RawDocument Ingestor::ingest(std::string_view text, SourceKind kind, std::string origin_uri,
                             std::optional<std::string> id) {
    std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(text.data()),
                                        text.size());
    return ingest(bytes, kind, std::move(origin_uri), std::move(id));
}

bool contains_url(std::string_view text) {
    return std::regex_search(text.begin(), text.end(), url_pattern());
}

CleanResult clean_text(std::string_view raw, const CleanOptions& options) {
    static constexpr std::string_view kOrder[] = {
        kRuleStripUrls,        kRuleDropPageNumbers,  kRuleDropRepeatedHeaders,
        kRuleTruncateReferences, kRuleDropCaptions,   kRuleStripControlChars,
        kRuleNormalizeWhitespace,
    };
    std::set<std::string_view> fired;
    std::string current(raw);
    for (int pass = 0; pass < 32; ++pass) {
        auto lines = split_lines(current, options);
        // A rule has fired only if it actually changed something.
        auto run = [&](std::string_view name, auto&& rule) {
            auto before = join_lines(lines);
            if (rule() && join_lines(lines) != before) fired.insert(name);
        };
        run(kRuleStripUrls, [&] { return rule_strip_urls(lines); });
        run(kRuleDropPageNumbers, [&] { return rule_drop_page_numbers(lines); });
        run(kRuleDropRepeatedHeaders, [&] { return rule_drop_repeated_headers(lines, options); });
        run(kRuleTruncateReferences, [&] { return rule_truncate_references(lines, options); });
        run(kRuleDropCaptions, [&] { return rule_drop_captions(lines); });
        run(kRuleStripControlChars, [&] { return rule_strip_control_chars(lines); });
        run(kRuleNormalizeWhitespace, [&] { return rule_normalize_whitespace(lines); });
        auto next = join_lines(lines);
        if (next == current) {
            break;
        }
        current = std::move(next);
    }
    CleanResult result;
    result.text = std::move(current);
    for (auto rule : kOrder) {
        if (fired.count(rule) > 0) {
            result.applied_rules.emplace_back(rule);
        }
    }
    return result;
}

CleanDocument clean_document(const RawDocument& raw, const CleanOptions& options) {
    auto cleaned = clean_text(raw.raw_text, options);
    CleanDocument doc;
    doc.id = raw.id;
    doc.source_kind = raw.source_kind;
    doc.origin_uri = raw.origin_uri;
    doc.token_count = whitespace_token_count(cleaned.text);
    doc.clean_text = std::move(cleaned.text);
    doc.applied_rules = std::move(cleaned.applied_rules);
    return doc;
}

CorpusStats corpus_stats(std::span<const CleanDocument> docs) {
    CorpusStats stats;
    stats.per_source_counts[SourceKind::web] = 0;
    stats.per_source_counts[SourceKind::open_access] = 0;
    for (const auto& doc : docs) {
        ++stats.doc_count;
        stats.total_tokens += doc.token_count;
        ++stats.per_source_counts[doc.source_kind];
    }
    if (stats.doc_count > 0) {
        stats.avg_doc_len =
            static_cast<double>(stats.total_tokens) / static_cast<double>(stats.doc_count);
    }
    return stats;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
    std::istringstream in(read_text_file(manifest));
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto content = trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        std::istringstream fields{std::string(content)};
        std::string id, kind, path;
        if (!(fields >> id >> kind >> path)) {
            fail(ErrorCode::ParseError,
                 fmt::format("{}:{}: expected 'id source_kind path'", manifest.string(), line_no));
        }
        ManifestEntry entry;
        entry.id = id;
        entry.source_kind = parse_source_kind(kind);
        entry.path = path;
        if (entry.path.is_relative()) {
            entry.path = manifest.parent_path() / entry.path;
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

void to_json(Json& j, const RawDocument& doc) {
    j = Json{{"id", doc.id},
             {"source_kind", to_string(doc.source_kind)},
             {"origin_uri", doc.origin_uri},
             {"raw_text", doc.raw_text},
             {"warnings", doc.warnings}};
}

void from_json(const Json& j, RawDocument& doc) {
    doc.id = j.at("id").get<std::string>();
    doc.source_kind = parse_source_kind(j.at("source_kind").get<std::string>());
    doc.origin_uri = j.value("origin_uri", "");
    doc.raw_text = j.at("raw_text").get<std::string>();
    doc.warnings = j.value("warnings", std::vector<std::string>{});
}

void to_json(Json& j, const CleanDocument& doc) {
    j = Json{{"id", doc.id},
             {"source_kind", to_string(doc.source_kind)},
             {"origin_uri", doc.origin_uri},
             {"clean_text", doc.clean_text},
             {"token_count", doc.token_count},
             {"applied_rules", doc.applied_rules}};
}

void from_json(const Json& j, CleanDocument& doc) {
    doc.id = j.at("id").get<std::string>();
    doc.source_kind = parse_source_kind(j.at("source_kind").get<std::string>());
    doc.origin_uri = j.value("origin_uri", "");
    doc.clean_text = j.at("clean_text").get<std::string>();
    doc.token_count = j.at("token_count").get<std::size_t>();
    doc.applied_rules = j.value("applied_rules", std::vector<std::string>{});
    if (doc.token_count != whitespace_token_count(doc.clean_text)) {
        fail(ErrorCode::ValidationError,
             fmt::format("document '{}': token_count {} does not match clean_text", doc.id,
                         doc.token_count));
    }
}

void to_json(Json& j, const CorpusStats& stats) {
    Json per_source = Json::object();
    for (const auto& [kind, count] : stats.per_source_counts) {
        per_source[std::string(to_string(kind))] = count;
    }
    j = Json{{"doc_count", stats.doc_count},
             {"total_tokens", stats.total_tokens},
             {"avg_doc_len", stats.avg_doc_len},
             {"per_source_counts", per_source}};
}

}  // namespace aquadapt
