#pragma once

// Independent reference implementations of the text metrics, written from
// the documented rules alone. They share no code with the library so they
// can act as oracles for it. Deliberately plain: full tables, explicit
// vectors, no shortcuts.

#include <string>
#include <utility>
#include <vector>

namespace oracle {

std::vector<std::string> tokenize(const std::string& text);

double rouge_n(const std::string& candidate, const std::string& reference, int n);
double rouge_l(const std::string& candidate, const std::string& reference);
double bleu(const std::string& candidate, const std::vector<std::string>& references,
            int max_order = 4);

/// Whole-corpus CIDEr: per-candidate scores with the IDF built from the
/// corpus references.
std::vector<double> cider(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& corpus);

int argmax(const std::vector<double>& values);

} // namespace oracle
