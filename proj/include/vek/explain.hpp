#pragma once

// ROUGE metrics and extractive explanation utilities: greedy ROUGE-2 oracle,
// lead-k, and corpus evaluation.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vek/dataio.hpp"
#include "vek/error.hpp"

namespace vek::explain {

using Tokens = std::vector<std::string>;

/// Lowercased maximal runs of ASCII letters and digits. Bytes >= 0x80 count
/// as word characters so UTF-8 words stay whole.
inline Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline RougeScore make_score(double overlap, double candidate_total, double reference_total) {
  if (candidate_total == 0.0 || reference_total == 0.0) return {};
  RougeScore s{overlap / candidate_total, overlap / reference_total, 0.0};
  if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

using NgramCounts = std::map<std::string, int>;

inline NgramCounts ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (std::size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += tokens[i + j];
    }
    ++out[key];
  }
  return out;
}

inline RougeScore rouge_n(const NgramCounts& candidate, const NgramCounts& reference) {
  double overlap = 0, cand_total = 0, ref_total = 0;
  for (const auto& [g, c] : candidate) {
    cand_total += c;
    auto it = reference.find(g);
    if (it != reference.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : reference) ref_total += c;
  return make_score(overlap, cand_total, ref_total);
}

/// Clipped n-gram overlap.
inline RougeScore rouge_n(const Tokens& candidate, const Tokens& reference, std::size_t n) {
  require(n >= 1, Errc::invalid_argument, "ROUGE-N needs n >= 1");
  return rouge_n(ngrams(candidate, n), ngrams(reference, n));
}

inline std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline RougeScore rouge_l(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return {};
  return make_score(static_cast<double>(lcs_length(candidate, reference)), static_cast<double>(candidate.size()),
                    static_cast<double>(reference.size()));
}

struct OracleSelection {
  std::vector<std::size_t> selected;                 // document order
  std::vector<std::pair<std::size_t, double>> trace;  // (pick, ROUGE-2 F1 after it), pick order
};

/// Greedy ROUGE-2 oracle. Each step adds the sentence that maximises the
/// ROUGE-2 F1 of the selected sentences (concatenated in document order)
/// against the justification. After the first pick it stops early when no
/// sentence improves the score, unless `force_k`.
inline OracleSelection greedy_oracle(const std::vector<std::string>& sentences, const std::string& justification,
                                     std::size_t k = 4, bool force_k = false) {
  require(!sentences.empty(), Errc::no_sentences, "document has no sentences");
  require(k >= 1, Errc::invalid_argument, "k must be at least 1");
  std::vector<Tokens> toks;
  for (const auto& s : sentences) toks.push_back(tokenize(s));
  const NgramCounts ref = ngrams(tokenize(justification), 2);

  OracleSelection out;
  std::vector<bool> taken(sentences.size(), false);
  double current = 0.0;
  while (out.selected.size() < std::min(k, sentences.size())) {
    std::optional<std::size_t> best;
    double best_score = -1.0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (taken[i]) continue;
      Tokens cand;
      for (std::size_t j = 0; j < sentences.size(); ++j)
        if (taken[j] || j == i) cand.insert(cand.end(), toks[j].begin(), toks[j].end());
      const double score = rouge_n(ngrams(cand, 2), ref).f1;
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    if (!out.selected.empty() && !force_k && !(best_score > current)) break;
    taken[*best] = true;
    current = best_score;
    out.selected.push_back(*best);
    out.trace.emplace_back(*best, best_score);
  }
  std::sort(out.selected.begin(), out.selected.end());
  return out;
}

inline OracleSelection lead_k(const std::vector<std::string>& sentences, std::size_t k = 4) {
  require(!sentences.empty(), Errc::no_sentences, "document has no sentences");
  OracleSelection out;
  for (std::size_t i = 0; i < std::min(k, sentences.size()); ++i) out.selected.push_back(i);
  return out;
}

/// Selected sentences joined with single spaces in document order.
inline std::string selection_text(const std::vector<std::string>& sentences, const std::vector<std::size_t>& selected) {
  std::vector<std::size_t> order = selected;
  std::sort(order.begin(), order.end());
  std::string out;
  for (std::size_t i : order) {
    require(i < sentences.size(), Errc::invalid_argument, "selected index " + std::to_string(i) + " out of range");
    if (!out.empty()) out.push_back(' ');
    out += sentences[i];
  }
  return out;
}

struct RougeTriple {
  RougeScore rouge1, rouge2, rougeL;
};

inline RougeTriple score_text(const std::string& candidate, const std::string& reference) {
  const auto c = tokenize(candidate), r = tokenize(reference);
  return {rouge_n(c, r, 1), rouge_n(c, r, 2), rouge_l(c, r)};
}

struct EvalResult {
  RougeTriple mean;
  std::size_t instances = 0;
};

/// Mean ROUGE-1/2/L of predicted texts against gold justifications, aligned
/// by id; both sides must cover the same ids.
inline EvalResult evaluate_explanations(const std::map<std::string, std::string>& predicted,
                                        const std::map<std::string, std::string>& gold) {
  for (const auto& [id, text] : predicted)
    if (!gold.contains(id)) fail(Errc::id_mismatch, "prediction '" + id + "' has no gold justification");
  for (const auto& [id, text] : gold)
    if (!predicted.contains(id)) fail(Errc::id_mismatch, "gold '" + id + "' has no prediction");
  require(!gold.empty(), Errc::id_mismatch, "no instances to evaluate");

  EvalResult out;
  auto add = [](RougeScore& acc, const RougeScore& s) {
    acc.precision += s.precision;
    acc.recall += s.recall;
    acc.f1 += s.f1;
  };
  for (const auto& [id, ref] : gold) {
    const auto s = score_text(predicted.at(id), ref);
    add(out.mean.rouge1, s.rouge1);
    add(out.mean.rouge2, s.rouge2);
    add(out.mean.rougeL, s.rougeL);
  }
  out.instances = gold.size();
  const double n = static_cast<double>(out.instances);
  for (RougeScore* s : {&out.mean.rouge1, &out.mean.rouge2, &out.mean.rougeL}) {
    s->precision /= n;
    s->recall /= n;
    s->f1 /= n;
  }
  return out;
}

/// Prediction texts for a corpus: explicit text, or the selected sentences.
inline std::map<std::string, std::string> prediction_texts(const std::vector<ExplainDocument>& docs,
                                                           const std::vector<ExplainPrediction>& predictions) {
  std::map<std::string, const ExplainDocument*> by_id;
  for (const auto& d : docs) by_id[d.id] = &d;
  std::map<std::string, std::string> out;
  for (const auto& p : predictions) {
    if (p.text) {
      out[p.id] = *p.text;
      continue;
    }
    auto it = by_id.find(p.id);
    if (it == by_id.end()) fail(Errc::id_mismatch, "prediction '" + p.id + "' is not in the corpus");
    out[p.id] = selection_text(it->second->sentences, *p.selected);
  }
  return out;
}

inline Json to_json(const RougeScore& s) { return Json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}}; }

inline Json to_json(const RougeTriple& t) {
  return Json{{"rouge1", to_json(t.rouge1)}, {"rouge2", to_json(t.rouge2)}, {"rougeL", to_json(t.rougeL)}};
}

}  // namespace vek::explain
