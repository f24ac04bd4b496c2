#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace aquadapt {

using Json = nlohmann::json;

/// Reads line-delimited JSON. Blank lines are skipped. A malformed final line
/// is treated as a torn write and dropped when `tolerate_torn_tail` is set;
/// any other malformed line is a ParseError.
std::vector<Json> read_jsonl(const std::filesystem::path& path, bool tolerate_torn_tail = false);

/// Writes records one per line via a temporary file and rename.
void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// Compact, key-sorted serialization; byte-stable for equal values.
std::string canonical_dump(const Json& value);

class JsonlAppender {
public:
    explicit JsonlAppender(std::filesystem::path path, bool truncate = false);

    void append(const Json& record);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mutex_;
};

}  // namespace aquadapt
