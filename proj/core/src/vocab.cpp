#include "pairrank/vocab.hpp"

#include <algorithm>

#include "pairrank/text.hpp"

namespace pairrank {

const std::vector<std::string>& Vocabulary::special_tokens() {
    static const std::vector<std::string> specials{"<s>", "</s>", "<unk>", "<source>",
                                                   "<candidate1>", "<candidate2>"};
    return specials;
}

Vocabulary::Vocabulary() {
    for (const auto& s : special_tokens()) add(s);
}

void Vocabulary::add(const std::string& token) {
    token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(token);
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts, size_t max_words) {
    std::unordered_map<std::string, int64_t> freq;
    for (const auto& text : texts) {
        for (auto& tok : tokenize(text)) freq[tok] += 1;
    }
    std::vector<std::pair<std::string, int64_t>> sorted(freq.begin(), freq.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [tok, count] : sorted) {
        if (v.token_to_id_.count(tok)) continue;  // a text may spell a special token
        if (v.id_to_token_.size() >= special_tokens().size() + max_words) break;
        v.add(tok);
    }
    return v;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
    Vocabulary v;
    for (const auto& w : words) v.add(w);
    return v;
}

int Vocabulary::id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it != token_to_id_.end() ? it->second : kUnk;
}

std::vector<std::string> Vocabulary::words() const {
    return {id_to_token_.begin() + static_cast<long>(special_tokens().size()),
            id_to_token_.end()};
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
    std::vector<int> out;
    for (const auto& tok : tokenize(text)) out.push_back(id(tok));
    return out;
}

} // namespace pairrank
