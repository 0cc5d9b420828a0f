#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pairrank {

/// Tokenization rule shared by every metric and by the model vocabularies:
/// ASCII-lowercase, split on whitespace, and split punctuation characters
/// into single-character tokens. Bytes >= 0x80 are kept inside word tokens
/// so arbitrary UTF-8 input stays intact.
std::vector<std::string> tokenize(const std::string& text);

/// N-grams of a token sequence, joined with a single space.
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int n);

/// Deterministic 64-bit stream seeding helper (splitmix64 over seed and tag).
uint64_t mix_seed(uint64_t seed, uint64_t tag);

/// Stable FNV-1a hash of a string, for seeding per-example streams.
uint64_t hash_text(const std::string& s);

} // namespace pairrank
