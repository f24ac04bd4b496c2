#include "aquadapt/tokenizer.hpp"

#include <cctype>

namespace aquadapt {

namespace {

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_word_byte(unsigned char c) {
    return c >= 0x80 || std::isalnum(c) != 0;
}

}  // namespace

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

std::string_view trim(std::string_view text) {
    std::size_t begin = 0;
    while (begin < text.size() && is_space(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    std::size_t end = text.size();
    while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return text.substr(begin, end - begin);
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    };
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (is_space(c)) {
            flush();
        } else if (is_word_byte(c)) {
            current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
        } else {
            flush();
            tokens.emplace_back(1, ch);
        }
    }
    flush();
    return tokens;
}

bool is_punctuation_token(std::string_view token) {
    return token.size() == 1 && !is_word_byte(static_cast<unsigned char>(token[0])) &&
           !is_space(static_cast<unsigned char>(token[0]));
}

std::vector<std::string> word_tokens(std::string_view text) {
    auto tokens = tokenize(text);
    std::erase_if(tokens, [](const std::string& t) { return is_punctuation_token(t); });
    return tokens;
}

std::size_t whitespace_token_count(std::string_view text) {
    std::size_t count = 0;
    bool in_token = false;
    for (char ch : text) {
        if (is_space(static_cast<unsigned char>(ch))) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++count;
        }
    }
    return count;
}

std::string normalize_for_comparison(std::string_view text) {
    std::string out;
    for (const auto& token : tokenize(text)) {
        if (!out.empty()) {
            out.push_back(' ');
        }
        out += token;
    }
    return out;
}

const std::set<std::string, std::less<>>& stop_words() {
    // Articles, conjunctions and prepositions.
    static const std::set<std::string, std::less<>> words = {
        "a",     "an",      "the",    "and",     "or",    "but",    "nor",   "so",
        "yet",   "for",     "of",     "in",      "on",    "at",     "to",    "from",
        "by",    "with",    "as",     "into",    "onto",  "over",   "under", "about",
        "above", "below",   "across", "after",   "before", "between", "through", "during",
        "without", "within", "against", "among",  "around", "upon",  "via",   "per",
        "than",  "like",    "such",   "both",    "either", "neither", "whether", "if",
        "while", "although", "because", "since", "unless", "until",
    };
    return words;
}

}  // namespace aquadapt
