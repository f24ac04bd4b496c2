#include "aquadapt/jsonl.hpp"

#include <sstream>

#include "aquadapt/error.hpp"

namespace aquadapt {

namespace fs = std::filesystem;

std::vector<Json> read_jsonl(const fs::path& path, bool tolerate_torn_tail) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) {
            lines.push_back(line);
        }
    }
    std::vector<Json> records;
    records.reserve(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            records.push_back(Json::parse(lines[i]));
        } catch (const Json::parse_error& e) {
            if (tolerate_torn_tail && i + 1 == lines.size()) {
                break;
            }
            fail(ErrorCode::ParseError,
                 path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return records;
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            fail(ErrorCode::IoError, "cannot write " + tmp.string());
        }
        out << content;
        if (!out) {
            fail(ErrorCode::IoError, "short write to " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_jsonl(const fs::path& path, const std::vector<Json>& records) {
    std::string content;
    for (const auto& record : records) {
        content += canonical_dump(record);
        content.push_back('\n');
    }
    write_text_file(path, content);
}

std::string canonical_dump(const Json& value) {
    // nlohmann::json objects are std::map backed, so keys are already sorted.
    return value.dump(-1, ' ', false, Json::error_handler_t::replace);
}

JsonlAppender::JsonlAppender(fs::path path, bool truncate) : path_(std::move(path)) {
    if (path_.has_parent_path()) {
        fs::create_directories(path_.parent_path());
    }
    out_.open(path_, std::ios::binary | (truncate ? std::ios::trunc : std::ios::app));
    if (!out_) {
        fail(ErrorCode::IoError, "cannot open " + path_.string() + " for append");
    }
}

void JsonlAppender::append(const Json& record) {
    std::lock_guard lock(mutex_);
    out_ << canonical_dump(record) << '\n';
    out_.flush();
    if (!out_) {
        fail(ErrorCode::IoError, "append to " + path_.string() + " failed");
    }
}

}  // namespace aquadapt
