#pragma once
// Strict and tolerant precision/recall/F1 against best/okay gold classes,
// rank AUC, average score, and per-class TM/FM model diagnostics.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "colnet/annotator.hpp"
#include "colnet/kb.hpp"
#include "colnet/lookup.hpp"

namespace colnet {

struct GoldEntry {
  ClassId best;
  std::set<ClassId> okay;

  std::set<ClassId> correct() const {
    auto out = okay;
    out.insert(best);
    return out;
  }
};

using GoldStandard = std::map<std::string, GoldEntry>;

// CSV rows: column_id,best_class,okay_classes (';'-separated, may be empty).
// A first row starting with "column_id" is treated as a header.
inline GoldStandard load_gold(std::istream& in, const std::string& source = "<stream>") {
  GoldStandard gold;
  const auto rows = read_csv(in);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (i == 0 && !r.empty() && trim(r[0]) == "column_id") continue;
    const auto where = source + ": row " + std::to_string(i + 1);
    if (r.size() < 2 || trim(r[0]).empty() || trim(r[1]).empty()) throw DataError(where + ": need column_id,best_class");
    GoldEntry e;
    e.best = std::string(trim(r[1]));
    if (r.size() > 2) {
      std::string_view rest = r[2];
      while (!rest.empty()) {
        auto cut = rest.find(';');
        auto piece = trim(rest.substr(0, cut));
        if (!piece.empty()) e.okay.emplace(piece);
        if (cut == std::string_view::npos) break;
        rest.remove_prefix(cut + 1);
      }
    }
    if (e.okay.contains(e.best)) throw DataError(where + ": best class also listed as okay");
    if (!gold.emplace(std::string(trim(r[0])), std::move(e)).second) {
      throw DataError(where + ": duplicate column '" + r[0] + "'");
    }
  }
  return gold;
}

inline GoldStandard load_gold(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open gold standard file '" + path.string() + "'");
  return load_gold(in, path.string());
}

// Okay classes must be superclasses of the best class.
inline void check_gold(const GoldStandard& gold, const KnowledgeBase& kb) {
  for (const auto& [col, e] : gold) {
    if (!kb.has_class(e.best)) throw DataError("gold for '" + col + "': unknown class '" + e.best + "'");
    const auto supers = kb.superclasses_of(e.best);
    for (const auto& o : e.okay) {
      if (!supers.contains(o)) throw DataError("gold for '" + col + "': '" + o + "' is not a superclass of best");
    }
  }
}

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t relevant = 0;  // |{best} ∪ okay|
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline Prf prf_from_counts(const Counts& c) {
  Prf out;
  out.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  out.recall = c.relevant == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.relevant);
  out.f1 = out.precision + out.recall == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

enum class Averaging { micro, macro };

// Contribution of one column. Strict mode voids a column that misses its
// best class: every accepted class becomes a false positive.
inline Counts column_counts(const std::set<ClassId>& accepted, const GoldEntry& gold, bool strict) {
  Counts c;
  const auto correct = gold.correct();
  c.relevant = correct.size();
  if (strict && !accepted.contains(gold.best)) {
    c.fp = accepted.size();
    return c;
  }
  for (const auto& a : accepted) {
    if (correct.contains(a)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  return c;
}

inline Prf score(const std::vector<AnnotationResult>& results, const GoldStandard& gold, bool strict,
                 Averaging averaging = Averaging::micro) {
  Counts pooled;
  double p_sum = 0.0, r_sum = 0.0;
  for (const auto& r : results) {
    auto it = gold.find(r.column_id);
    if (it == gold.end()) throw DataError("column '" + r.column_id + "' has no gold entry");
    const auto c = column_counts(r.accepted(), it->second, strict);
    pooled.tp += c.tp;
    pooled.fp += c.fp;
    pooled.relevant += c.relevant;
    const auto per = prf_from_counts(c);
    p_sum += per.precision;
    r_sum += per.recall;
  }
  if (averaging == Averaging::micro) return prf_from_counts(pooled);
  Prf out;
  if (results.empty()) return out;
  out.precision = p_sum / static_cast<double>(results.size());
  out.recall = r_sum / static_cast<double>(results.size());
  out.f1 = out.precision + out.recall == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

inline Prf score_tolerant(const std::vector<AnnotationResult>& results, const GoldStandard& gold,
                          Averaging averaging = Averaging::micro) {
  return score(results, gold, false, averaging);
}

inline Prf score_strict(const std::vector<AnnotationResult>& results, const GoldStandard& gold,
                        Averaging averaging = Averaging::micro) {
  return score(results, gold, true, averaging);
}

struct ScoredSample {
  double score = 0.0;
  bool positive = false;
};

// Mann-Whitney AUC using mid-ranks, so ties count one half.
inline double auc(const std::vector<ScoredSample>& samples) {
  std::vector<ScoredSample> s = samples;
  std::sort(s.begin(), s.end(), [](const ScoredSample& a, const ScoredSample& b) { return a.score < b.score; });
  double pos_rank_sum = 0.0;
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j].score == s[i].score) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (s[k].positive) {
        pos_rank_sum += mid;
        ++pos;
      } else {
        ++neg;
      }
    }
    i = j;
  }
  if (pos == 0 || neg == 0) throw PreconditionError("auc: need both positive and negative samples");
  const double np = static_cast<double>(pos), nn = static_cast<double>(neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

inline double avg_score(const std::vector<double>& scores) {
  if (scores.empty()) throw PreconditionError("avg_score: empty input");
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

// --- TM/FM diagnostics -----------------------------------------------------------

enum class MatchKind { tm, fm };

struct ClassDiagnostic {
  ClassId cls;
  MatchKind kind = MatchKind::tm;
  std::optional<double> auc;        // TM only
  std::optional<double> avg_score;  // FM only
  std::size_t samples = 0;
};

struct DiagnosticsReport {
  std::vector<ClassDiagnostic> classes;

  std::optional<double> mean_tm_auc() const { return mean(MatchKind::tm); }
  std::optional<double> mean_fm_as() const { return mean(MatchKind::fm); }

 private:
  std::optional<double> mean(MatchKind kind) const {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& c : classes) {
      auto v = kind == MatchKind::tm ? c.auc : c.avg_score;
      if (c.kind == kind && v) {
        total += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return total / static_cast<double>(n);
  }
};

struct DiagnosticsConfig {
  std::size_t h = 4;
  std::size_t samples_per_column = 20;
  std::uint64_t seed = 0;
};

// For every modelled class c: if c is a gold class of some candidate column
// (TM), AUC of its model separating synthetic test columns drawn from columns
// whose gold includes c from those drawn from columns whose gold does not. If
// c is a non-gold candidate of some column (FM), the average score its model
// gives to synthetic test columns of those columns.
inline DiagnosticsReport diagnose(const std::vector<Column>& columns, const std::vector<CandidateClassSet>& candidates,
                                  const GoldStandard& gold, const ModelMap& models, const WordVectorTable& wv,
                                  const DiagnosticsConfig& cfg) {
  std::map<std::string, const CandidateClassSet*> cand_by_col;
  for (const auto& c : candidates) cand_by_col[c.column_id] = &c;

  // Same synthetic test columns for every class.
  std::vector<std::vector<SyntheticColumn>> tests(columns.size());
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (usable_cells(columns[i]).empty() || !gold.contains(columns[i].id)) continue;
    tests[i] = sample_test_columns(columns[i], cfg.h, cfg.samples_per_column,
                                   derive_seed(cfg.seed, "diag:" + columns[i].id));
  }

  DiagnosticsReport report;
  for (const auto& [cls, model] : models) {
    std::vector<std::size_t> tm_cols, fm_cols, neg_cols;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (tests[i].empty()) continue;
      const bool is_gold = gold.at(columns[i].id).correct().contains(cls);
      auto cit = cand_by_col.find(columns[i].id);
      const bool is_candidate = cit != cand_by_col.end() && cit->second->has(cls);
      if (!is_gold) neg_cols.push_back(i);
      if (is_candidate && is_gold) tm_cols.push_back(i);
      if (is_candidate && !is_gold) fm_cols.push_back(i);
    }
    if (!tm_cols.empty() && !neg_cols.empty()) {
      std::vector<ScoredSample> scored;
      for (auto i : tm_cols) {
        for (const auto& t : tests[i]) scored.push_back({forward(model, embed(t, model.n, wv)), true});
      }
      for (auto i : neg_cols) {
        for (const auto& t : tests[i]) scored.push_back({forward(model, embed(t, model.n, wv)), false});
      }
      report.classes.push_back({cls, MatchKind::tm, auc(scored), std::nullopt, scored.size()});
    }
    if (!fm_cols.empty()) {
      std::vector<double> scores;
      for (auto i : fm_cols) {
        for (const auto& t : tests[i]) scores.push_back(forward(model, embed(t, model.n, wv)));
      }
      report.classes.push_back({cls, MatchKind::fm, std::nullopt, avg_score(scores), scores.size()});
    }
  }
  return report;
}

inline nlohmann::json to_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

inline nlohmann::json to_json(const DiagnosticsReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : r.classes) {
    nlohmann::json j{{"class", c.cls}, {"kind", c.kind == MatchKind::tm ? "TM" : "FM"}, {"samples", c.samples}};
    if (c.auc) j["auc"] = *c.auc;
    if (c.avg_score) j["as"] = *c.avg_score;
    classes.push_back(std::move(j));
  }
  auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"classes", classes}, {"mean_tm_auc", opt(r.mean_tm_auc())}, {"mean_fm_as", opt(r.mean_fm_as())}};
}

}  // namespace colnet
