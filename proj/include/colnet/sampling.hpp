#pragma once
// Training-sample construction per candidate class: synthetic columns of h
// entity labels, positives from the class's instances and negatives from
// instances of co-occurring ("neighboring") candidate classes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "colnet/kb.hpp"
#include "colnet/lookup.hpp"
#include "colnet/random.hpp"

namespace colnet {

struct SyntheticColumn {
  std::vector<std::string> items;

  friend bool operator==(const SyntheticColumn&, const SyntheticColumn&) = default;
  friend auto operator<=>(const SyntheticColumn&, const SyntheticColumn&) = default;
};

enum class Origin { particular, general };

struct TrainingSample {
  SyntheticColumn column;
  ClassId cls;
  bool positive = false;
  Origin origin = Origin::particular;
  std::vector<EntityId> sources;  // entity behind each item, same order
};

struct SampleSets {
  ClassId cls;
  std::vector<TrainingSample> particular;  // S_p
  std::vector<TrainingSample> general;     // S_g
  bool particular_missing_positives = false;
  bool general_missing_positives = false;
  bool used_negative_fallback = false;
};

struct SamplingConfig {
  std::size_t h = 4;
  std::size_t max_per_bucket = 100;
  // Fraction of particular entities kept, for knowledge-gap simulation.
  double particular_ratio = 1.0;
};

namespace detail {

// n!/(n-h)! or n^h, saturating.
inline std::uint64_t tuple_space(std::size_t n, std::size_t h, bool distinct) {
  constexpr auto cap = std::numeric_limits<std::uint64_t>::max() / 4;
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < h; ++i) {
    std::uint64_t f = distinct ? n - i : n;
    if (f != 0 && total > cap / f) return cap;
    total *= f;
  }
  return total;
}

inline void enumerate_tuples(std::size_t n, std::size_t h, bool distinct, std::vector<std::size_t>& cur,
                             std::vector<char>& used, std::vector<std::vector<std::size_t>>& out) {
  if (cur.size() == h) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (distinct && used[i]) continue;
    used[i] = 1;
    cur.push_back(i);
    enumerate_tuples(n, h, distinct, cur, used, out);
    cur.pop_back();
    used[i] = 0;
  }
}

}  // namespace detail

// Up to max_count distinct ordered h-tuples of indices into a pool of size
// n. Indices within a tuple are distinct whenever n >= h; smaller pools fall
// back to tuples drawn with replacement.
inline std::vector<std::vector<std::size_t>> sample_tuples(std::size_t n, std::size_t h, std::size_t max_count,
                                                           Rng& rng) {
  if (n == 0) throw PreconditionError("sample_tuples: empty pool");
  if (h == 0) throw PreconditionError("sample_tuples: h must be >= 1");
  if (max_count == 0) throw PreconditionError("sample_tuples: max_count must be >= 1");
  const bool distinct = n >= h;
  const std::uint64_t total = detail::tuple_space(n, h, distinct);
  const std::size_t target = static_cast<std::size_t>(std::min<std::uint64_t>(max_count, total));

  std::vector<std::vector<std::size_t>> out;
  if (total <= 4 * static_cast<std::uint64_t>(target) + 256) {
    std::vector<std::size_t> cur;
    std::vector<char> used(n, 0);
    detail::enumerate_tuples(n, h, distinct, cur, used, out);
    shuffle(out, rng);
    out.resize(target);
    return out;
  }
  std::set<std::vector<std::size_t>> seen;
  while (out.size() < target) {
    std::vector<std::size_t> t;
    t.reserve(h);
    if (distinct) {
      std::vector<char> used(n, 0);
      while (t.size() < h) {
        auto i = static_cast<std::size_t>(uniform_index(rng, n));
        if (used[i]) continue;
        used[i] = 1;
        t.push_back(i);
      }
    } else {
      for (std::size_t k = 0; k < h; ++k) t.push_back(static_cast<std::size_t>(uniform_index(rng, n)));
    }
    if (seen.insert(t).second) out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<SyntheticColumn> synthesize(const std::vector<std::string>& entity_labels, std::size_t h,
                                               std::size_t max_count, std::uint64_t seed) {
  if (entity_labels.empty()) throw PreconditionError("synthesize: empty entity list");
  Rng rng(seed);
  std::vector<SyntheticColumn> out;
  for (const auto& t : sample_tuples(entity_labels.size(), h, max_count, rng)) {
    SyntheticColumn col;
    for (auto i : t) col.items.push_back(entity_labels[i]);
    out.push_back(std::move(col));
  }
  return out;
}

// Every other class that shares a column's candidate set with c.
inline std::set<ClassId> neighboring_classes(const std::vector<CandidateClassSet>& all_candidates, const ClassId& c) {
  std::set<ClassId> out;
  for (const auto& s : all_candidates) {
    if (!s.has(c)) continue;
    for (const auto& [other, _] : s.candidates) out.insert(other);
  }
  out.erase(c);
  return out;
}

// Instances of some neighbor that are not instances of c.
inline std::set<EntityId> negative_entities(const KnowledgeBase& kb, const ClassId& c,
                                            const std::set<ClassId>& neighbors) {
  std::set<EntityId> out;
  for (const auto& n : neighbors) {
    for (auto& e : kb.entities_of(n)) {
      if (!kb.is_instance(e, c)) out.insert(e);
    }
  }
  return out;
}

namespace detail {

inline void add_bucket(const KnowledgeBase& kb, const ClassId& c, const std::set<EntityId>& pool, bool positive,
                       Origin origin, const SamplingConfig& cfg, std::uint64_t seed,
                       std::vector<TrainingSample>& out) {
  if (pool.empty()) return;
  const std::vector<EntityId> ids(pool.begin(), pool.end());
  Rng rng(seed);
  for (const auto& t : sample_tuples(ids.size(), cfg.h, cfg.max_per_bucket, rng)) {
    TrainingSample s;
    s.cls = c;
    s.positive = positive;
    s.origin = origin;
    for (auto i : t) {
      s.sources.push_back(ids[i]);
      s.column.items.push_back(kb.entity(ids[i]).label);
    }
    out.push_back(std::move(s));
  }
}

template <typename Set>
Set random_subset(const Set& s, double ratio, std::uint64_t seed) {
  if (ratio >= 1.0) return s;
  std::vector<typename Set::value_type> v(s.begin(), s.end());
  Rng rng(seed);
  shuffle(v, rng);
  auto keep = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(v.size()) - 1e-12));
  v.resize(std::min(v.size(), keep));
  return Set(v.begin(), v.end());
}

}  // namespace detail

// S_p and S_g for class c. Particular entities are those matched by any
// column in `context`; general entities are the remaining KB entities. When
// the neighbors offer no negatives, every non-instance of c is used instead.
inline SampleSets build_sample_sets(const KnowledgeBase& kb, const ClassId& c,
                                    const std::vector<CandidateClassSet>& context, const SamplingConfig& cfg,
                                    std::uint64_t seed) {
  if (!kb.has_class(c)) throw PreconditionError("build_sample_sets: unknown class '" + c + "'");
  if (cfg.particular_ratio <= 0.0 || cfg.particular_ratio > 1.0) {
    throw PreconditionError("build_sample_sets: particular_ratio must lie in (0,1]");
  }
  SampleSets out;
  out.cls = c;

  std::set<EntityId> matched;
  for (const auto& s : context) {
    auto all = s.all_particular();
    matched.insert(all.begin(), all.end());
  }
  const auto kept = detail::random_subset(matched, cfg.particular_ratio, derive_seed(seed, "ratio:" + c));

  auto negatives = negative_entities(kb, c, neighboring_classes(context, c));
  if (negatives.empty()) {
    out.used_negative_fallback = true;
    for (const auto& e : kb.entities()) {
      if (!kb.is_instance(e.id, c)) negatives.insert(e.id);
    }
  }

  std::set<EntityId> pos_p, neg_p, pos_g, neg_g;
  for (auto& e : kb.entities_of(c)) {
    if (kept.contains(e)) {
      pos_p.insert(e);
    } else if (!matched.contains(e)) {
      pos_g.insert(e);
    }
  }
  for (const auto& e : negatives) {
    if (kept.contains(e)) {
      neg_p.insert(e);
    } else if (!matched.contains(e)) {
      neg_g.insert(e);
    }
  }

  out.particular_missing_positives = pos_p.empty();
  out.general_missing_positives = pos_g.empty();
  if (!pos_p.empty()) {
    detail::add_bucket(kb, c, pos_p, true, Origin::particular, cfg, derive_seed(seed, "p+:" + c), out.particular);
    detail::add_bucket(kb, c, neg_p, false, Origin::particular, cfg, derive_seed(seed, "p-:" + c), out.particular);
  }
  if (!pos_g.empty()) {
    detail::add_bucket(kb, c, pos_g, true, Origin::general, cfg, derive_seed(seed, "g+:" + c), out.general);
    detail::add_bucket(kb, c, neg_g, false, Origin::general, cfg, derive_seed(seed, "g-:" + c), out.general);
  }
  return out;
}

// One JSON-lines record per sample.
inline nlohmann::json sample_record(const TrainingSample& s) {
  return {{"class", s.cls},
          {"label", s.positive ? "pos" : "neg"},
          {"origin", s.origin == Origin::particular ? "p" : "g"},
          {"items", s.column.items}};
}

inline TrainingSample sample_from_record(const nlohmann::json& j) {
  TrainingSample s;
  j.at("class").get_to(s.cls);
  const auto label = j.at("label").get<std::string>();
  const auto origin = j.at("origin").get<std::string>();
  if (label != "pos" && label != "neg") throw DataError("sample label must be pos|neg, got '" + label + "'");
  if (origin != "p" && origin != "g") throw DataError("sample origin must be p|g, got '" + origin + "'");
  s.positive = label == "pos";
  s.origin = origin == "p" ? Origin::particular : Origin::general;
  j.at("items").get_to(s.column.items);
  return s;
}

}  // namespace colnet
