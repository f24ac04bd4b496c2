#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace aquadapt {

/// Shared tokenizer used by every component that counts tokens.
///
/// Text is lowercased (ASCII), split on whitespace, and punctuation is split
/// away from words: each punctuation byte becomes its own token. Bytes >= 0x80
/// are treated as word characters so UTF-8 sequences stay intact.
std::vector<std::string> tokenize(std::string_view text);

/// Word tokens only (punctuation tokens dropped). This is the term stream the
/// relevance index and the cleanup length checks count.
std::vector<std::string> word_tokens(std::string_view text);

bool is_punctuation_token(std::string_view token);

/// Number of whitespace-separated tokens, without any normalization.
std::size_t whitespace_token_count(std::string_view text);

/// Tokens joined by single spaces; the canonical form used for equality checks.
std::string normalize_for_comparison(std::string_view text);

const std::set<std::string, std::less<>>& stop_words();

std::string to_lower_ascii(std::string_view text);
std::string_view trim(std::string_view text);

}  // namespace aquadapt
