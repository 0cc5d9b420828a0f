#include "pairrank/text.hpp"

#include <cctype>

namespace pairrank {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    };
    for (unsigned char ch : text) {
        if (ch < 0x80 && std::isspace(ch)) {
            flush();
        } else if (ch < 0x80 && std::ispunct(ch)) {
            flush();
            out.emplace_back(1, static_cast<char>(ch));
        } else {
            cur.push_back(ch < 0x80 ? static_cast<char>(std::tolower(ch))
                                    : static_cast<char>(ch));
        }
    }
    flush();
    return out;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n) {
    std::vector<std::string> out;
    if (n <= 0 || static_cast<int>(tokens.size()) < n) return out;
    out.reserve(tokens.size() - n + 1);
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string g = tokens[i];
        for (int j = 1; j < n; ++j) {
            g += ' ';
            g += tokens[i + j];
        }
        out.push_back(std::move(g));
    }
    return out;
}

uint64_t mix_seed(uint64_t seed, uint64_t tag) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t hash_text(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace pairrank
