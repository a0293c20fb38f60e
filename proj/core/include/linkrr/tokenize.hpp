#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace linkrr {

// Shared tokenization rule for BM25 and the hashed bag-of-words embedder:
// lowercase, split on any non-alphanumeric byte, drop empty tokens.
// No stemming, no stopwords.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

// Prompt text sanitizer: collapse whitespace runs to single spaces and trim.
// Empty result becomes the "(no text)" sentinel so templates stay well-formed.
inline std::string sanitize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = true;  // leading whitespace is dropped
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(static_cast<char>(c));
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    if (out.empty()) out = "(no text)";
    return out;
}

}  // namespace linkrr
