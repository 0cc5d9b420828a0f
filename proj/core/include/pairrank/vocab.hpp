#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace pairrank {

/// Word-level vocabulary over the shared tokenization rule, with the model's
/// special tokens registered at fixed ids. Unknown words map to <unk>.
class Vocabulary {
public:
    static constexpr int kBos = 0;      // <s>
    static constexpr int kEos = 1;      // </s>
    static constexpr int kUnk = 2;      // <unk>
    static constexpr int kSource = 3;   // <source>
    static constexpr int kCand1 = 4;    // <candidate1>
    static constexpr int kCand2 = 5;    // <candidate2>

    static const std::vector<std::string>& special_tokens();

    /// Most frequent words first (frequency desc, then lexicographic), capped
    /// at max_words beyond the specials.
    static Vocabulary build(const std::vector<std::string>& texts, size_t max_words);
    /// Rebuild from a serialized word list (ids continue after the specials).
    static Vocabulary from_words(const std::vector<std::string>& words);

    int size() const { return static_cast<int>(id_to_token_.size()); }
    int id(const std::string& token) const;
    const std::string& token(int id) const { return id_to_token_.at(id); }
    /// Non-special words in id order, for serialization.
    std::vector<std::string> words() const;

    /// Tokenizes the text and maps to ids (no BOS/EOS added).
    std::vector<int> encode(const std::string& text) const;

private:
    Vocabulary();
    void add(const std::string& token);

    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
};

} // namespace pairrank
