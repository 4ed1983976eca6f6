#pragma once
// Column scoring: average CNN score over N sampled synthetic columns, the
// vote/prediction ensemble rule, and the thresholded annotation decision.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "colnet/cnn.hpp"
#include "colnet/embedding.hpp"
#include "colnet/lookup.hpp"
#include "colnet/random.hpp"

namespace colnet {

enum class Mode { colnet, colnet_ensemble, lookup_vote };

inline std::string to_string(Mode m) {
  switch (m) {
    case Mode::colnet: return "colnet";
    case Mode::colnet_ensemble: return "colnet_ensemble";
    case Mode::lookup_vote: return "lookup_vote";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(const std::string& s) {
  if (s == "colnet") return Mode::colnet;
  if (s == "colnet_ensemble") return Mode::colnet_ensemble;
  if (s == "lookup_vote") return Mode::lookup_vote;
  return std::nullopt;
}

// Default decision thresholds per mode.
inline double default_alpha(Mode m) {
  switch (m) {
    case Mode::colnet: return 0.55;
    case Mode::colnet_ensemble: return 0.45;
    case Mode::lookup_vote: return 0.2;
  }
  return 0.5;
}

struct EnsembleConfig {
  double sigma1 = 0.5;
  double sigma2 = 0.08;

  void validate() const {
    if (sigma1 < 0.0 || sigma1 > 1.0 || sigma2 < 0.0 || sigma2 > 1.0 || sigma1 < sigma2) {
      throw PreconditionError("ensemble thresholds need 0 <= sigma2 <= sigma1 <= 1");
    }
  }
};

// Trust the vote when it is decisive either way, the CNN otherwise.
inline double ensemble_score(double p, double v, const EnsembleConfig& cfg) {
  if (v >= cfg.sigma1 || v < cfg.sigma2) return v;
  return p;
}

// Non-empty cells, trimmed, in table order.
inline std::vector<std::string> usable_cells(const Column& column) {
  std::vector<std::string> out;
  for (const auto& c : column.cells) {
    auto t = trim(c);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

// Exactly N synthetic columns: sliding windows of size h first (evenly
// spaced when there are more than N of them), then seeded random ordered
// h-subsets, duplicates allowed. Columns shorter than h yield a single window
// filled by cycling the cells.
inline std::vector<SyntheticColumn> sample_test_columns(const Column& column, std::size_t h, std::size_t n_samples,
                                                        std::uint64_t seed) {
  if (h == 0 || n_samples == 0) throw PreconditionError("sample_test_columns: h and N must be >= 1");
  const auto cells = usable_cells(column);
  if (cells.empty()) throw PreconditionError("sample_test_columns: column '" + column.id + "' has no cells");
  const std::size_t len = cells.size();

  std::vector<SyntheticColumn> out;
  out.reserve(n_samples);
  if (len >= h) {
    const std::size_t windows = len - h + 1;
    const std::size_t take = std::min(windows, n_samples);
    for (std::size_t w = 0; w < take; ++w) {
      const std::size_t start = take == windows ? w : (take == 1 ? 0 : w * (windows - 1) / (take - 1));
      out.push_back({std::vector<std::string>(cells.begin() + start, cells.begin() + start + h)});
    }
  } else {
    SyntheticColumn padded;
    for (std::size_t i = 0; i < h; ++i) padded.items.push_back(cells[i % len]);
    out.push_back(std::move(padded));
  }

  Rng rng(seed);
  while (out.size() < n_samples) {
    SyntheticColumn col;
    if (len >= h) {
      std::vector<char> used(len, 0);
      while (col.items.size() < h) {
        auto i = static_cast<std::size_t>(uniform_index(rng, len));
        if (used[i]) continue;
        used[i] = 1;
        col.items.push_back(cells[i]);
      }
    } else {
      for (std::size_t k = 0; k < h; ++k) col.items.push_back(cells[uniform_index(rng, len)]);
    }
    out.push_back(std::move(col));
  }
  return out;
}

inline double mean_score(const CnnModel& model, const std::vector<SyntheticColumn>& samples,
                         const WordVectorTable& wv) {
  if (samples.empty()) throw PreconditionError("mean_score: no samples");
  double total = 0.0;
  for (const auto& s : samples) total += forward(model, embed(s, model.n, wv));
  return total / static_cast<double>(samples.size());
}

// p^c: mean model score over the column's N sampled synthetic columns.
inline double predict_score(const Column& column, const CnnModel& model, const WordVectorTable& wv, std::size_t h,
                            std::size_t n_samples, std::uint64_t seed) {
  return mean_score(model, sample_test_columns(column, h, n_samples, seed), wv);
}

struct AnnotateConfig {
  Mode mode = Mode::colnet_ensemble;
  EnsembleConfig ensemble;
  std::optional<double> alpha;  // defaults per mode
  std::size_t h = 4;
  std::size_t n_samples = 50;
  std::uint64_t seed = 0;

  double threshold() const { return alpha.value_or(default_alpha(mode)); }
};

struct ClassAnnotation {
  ClassId cls;
  double v = 0.0;
  std::optional<double> p;
  double s = 0.0;
  bool accepted = false;
  bool model_missing = false;
};

struct AnnotationResult {
  std::string column_id;
  std::vector<ClassAnnotation> classes;

  std::set<ClassId> accepted() const {
    std::set<ClassId> out;
    for (const auto& c : classes) {
      if (c.accepted) out.insert(c.cls);
    }
    return out;
  }
};

using ModelMap = std::map<ClassId, CnnModel>;

// Scores every refined candidate of the column with the mode's score and
// accepts those at or above alpha. In the CNN modes a class without a model
// falls back to its vote score and is flagged.
inline AnnotationResult annotate(const Column& column, const CandidateClassSet& candidates, const ModelMap& models,
                                 const WordVectorTable& wv, const AnnotateConfig& cfg) {
  cfg.ensemble.validate();
  const double alpha = cfg.threshold();
  if (alpha < 0.0 || alpha > 1.0) throw PreconditionError("alpha must lie in [0,1]");

  AnnotationResult result;
  result.column_id = column.id;
  if (candidates.candidates.empty()) return result;

  std::vector<SyntheticColumn> tests;
  if (cfg.mode != Mode::lookup_vote && !usable_cells(column).empty()) {
    tests = sample_test_columns(column, cfg.h, cfg.n_samples, derive_seed(cfg.seed, "test:" + column.id));
  }
  for (const auto& [cls, _] : candidates.candidates) {
    ClassAnnotation a;
    a.cls = cls;
    a.v = vote_score(candidates, column, cls);
    if (cfg.mode == Mode::lookup_vote) {
      a.s = a.v;
    } else {
      auto it = models.find(cls);
      if (it != models.end() && !tests.empty()) a.p = mean_score(it->second, tests, wv);
      if (!a.p) {
        a.model_missing = true;
        a.s = a.v;
      } else {
        a.s = cfg.mode == Mode::colnet ? *a.p : ensemble_score(*a.p, a.v, cfg.ensemble);
      }
    }
    a.accepted = a.s >= alpha;
    result.classes.push_back(std::move(a));
  }
  return result;
}

// Re-applies a different threshold to already scored results.
inline AnnotationResult rethreshold(AnnotationResult r, double alpha) {
  for (auto& c : r.classes) c.accepted = c.s >= alpha;
  return r;
}

inline nlohmann::json annotation_record(const AnnotationResult& r) {
  nlohmann::json anns = nlohmann::json::array();
  for (const auto& c : r.classes) {
    anns.push_back({{"class", c.cls},
                    {"v", c.v},
                    {"p", c.p ? nlohmann::json(*c.p) : nlohmann::json(nullptr)},
                    {"s", c.s},
                    {"accepted", c.accepted}});
  }
  return {{"column", r.column_id}, {"annotations", anns}};
}

inline AnnotationResult annotation_from_record(const nlohmann::json& j) {
  AnnotationResult r;
  j.at("column").get_to(r.column_id);
  for (const auto& a : j.at("annotations")) {
    ClassAnnotation c;
    a.at("class").get_to(c.cls);
    a.at("v").get_to(c.v);
    if (!a.at("p").is_null()) c.p = a.at("p").get<double>();
    a.at("s").get_to(c.s);
    a.at("accepted").get_to(c.accepted);
    r.classes.push_back(std::move(c));
  }
  return r;
}

}  // namespace colnet
