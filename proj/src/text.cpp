#include "sentinel/text.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_set>

namespace sentinel {

namespace {

bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_control(unsigned char c) {
    return c < 0x20 || c == 0x7F;
}

bool is_utf8_continuation(unsigned char c) {
    return (c & 0xC0) == 0x80;
}

} // namespace

std::string clean_text(const std::string& s, std::size_t max_chars) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    std::size_t chars = 0;
    std::size_t i = 0;
    while (i < s.size() && chars < max_chars) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (is_ascii_space(c) || is_control(c)) {
            if (!out.empty()) pending_space = true;
            ++i;
            continue;
        }
        if (pending_space) {
            if (chars + 1 >= max_chars) break; // no room for space + char
            out.push_back(' ');
            ++chars;
            pending_space = false;
        }
        // Copy one code point whole.
        std::size_t len = 1;
        if (c >= 0xF0) len = 4;
        else if (c >= 0xE0) len = 3;
        else if (c >= 0xC0) len = 2;
        len = std::min(len, s.size() - i);
        out.append(s, i, len);
        i += len;
        ++chars;
    }
    return out;
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::size_t utf8_length(const std::string& s) {
    std::size_t n = 0;
    for (char ch : s) {
        if (!is_utf8_continuation(static_cast<unsigned char>(ch))) ++n;
    }
    return n;
}

std::vector<std::string> tokenize(const std::string& s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : s) {
        unsigned char c = static_cast<unsigned char>(ch);
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

std::vector<std::string> tokenize_for_stats(const std::string& s) {
    std::vector<std::string> tokens = tokenize(s);
    std::erase_if(tokens, [](const std::string& t) {
        return t.size() < 3 || is_stopword(t);
    });
    return tokens;
}

const char* const stopword_list_version = "en-basic-1";

const std::vector<std::string>& stopword_list() {
    static const std::vector<std::string> words = {
        "the", "and", "for", "are", "but", "not", "you", "all", "any", "can",
        "had", "her", "was", "one", "our", "out", "day", "get", "has", "him",
        "his", "how", "man", "new", "now", "old", "see", "two", "way", "who",
        "did", "its", "let", "put", "say", "she", "too", "use", "that", "with",
        "have", "this", "will", "your", "from", "they", "know", "want", "been",
        "good", "much", "some", "time", "very", "when", "come", "here", "just",
        "like", "long", "make", "many", "more", "most", "only", "over", "such",
        "take", "than", "them", "then", "were", "what", "which", "while", "would",
        "there", "their", "about", "could", "other", "after", "first", "never",
        "these", "think", "where", "being", "every", "those", "shall", "should",
        "still", "because", "between", "before", "under", "again", "doing",
        "does", "each", "further", "having", "into", "itself", "once", "same",
        "through", "until", "above", "against", "below", "both", "down", "during",
        "few", "off", "own", "why", "yours", "himself", "herself", "ourselves",
        "themselves", "also",
    };
    return words;
}

bool is_stopword(const std::string& token) {
    static const std::unordered_set<std::string> set(stopword_list().begin(),
                                                     stopword_list().end());
    return set.count(token) > 0;
}

std::uint64_t hash64(const std::string& data, std::uint64_t seed) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
    for (char ch : data) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001B3ULL;
    }
    // Avalanche finalizer.
    h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
    h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
    return h ^ (h >> 31);
}

std::string author_hash(const std::string& raw_sender, const std::string& key) {
    std::uint64_t h = hash64(key + "\x1F" + raw_sender, 0x53454E54494E454CULL);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace sentinel
