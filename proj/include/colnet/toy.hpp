#pragma once
// Deterministic synthetic corpus for demos and trend tests: a small class
// hierarchy, pseudo-word entity labels, entity columns with a share of cells
// rewritten into words the lexical index has never seen, best/okay gold
// classes, and word vectors in which every class has its own direction.
//
//   dbo:Person <- dbo:Athlete, dbo:Artist
//   dbo:Place  <- dbo:City
//   dbo:Organisation
//
// Leaf classes own a pool of indexed words (used in labels) and a pool of
// variant words (only used by perturbed cells). A shared pool of generic
// words appears in labels of every class and creates cross-class lookup noise.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "colnet/embedding.hpp"
#include "colnet/evaluation.hpp"
#include "colnet/kb.hpp"
#include "colnet/lookup.hpp"
#include "colnet/random.hpp"

namespace colnet {

struct ToyConfig {
  std::size_t entities_per_class = 75;
  std::size_t visible_per_class = 30;  // entities that may appear in tables
  std::size_t columns = 40;
  std::size_t min_rows = 10;
  std::size_t max_rows = 30;
  double perturb_rate = 0.4;
  double generic_word_rate = 0.5;
  std::size_t indexed_words = 50;
  std::size_t variant_words = 40;
  std::size_t generic_words = 10;
  std::size_t dimension = 24;
  double topic_noise = 0.9;
};

struct ToyCorpus {
  KnowledgeBase kb;
  std::vector<Column> columns;
  GoldStandard gold;
  WordVectorTable vectors;
  std::map<std::string, std::vector<bool>> perturbed;  // column id -> per cell
};

namespace detail {

struct ToyLeaf {
  ClassId cls;
  ClassId parent;  // empty for roots
};

inline std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view consonants = "bcdfghjklmnprstvz";
  static constexpr std::string_view vowels = "aeiou";
  std::string w;
  const auto syllables = 2 + uniform_index(rng, 2);
  for (std::uint64_t s = 0; s < syllables; ++s) {
    w.push_back(consonants[uniform_index(rng, consonants.size())]);
    w.push_back(vowels[uniform_index(rng, vowels.size())]);
  }
  if (uniform_index(rng, 2) == 0) w.push_back(consonants[uniform_index(rng, consonants.size())]);
  return w;
}

inline std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

inline std::vector<double> random_unit(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  double norm = 0.0;
  for (auto& x : v) {
    x = uniform_real(rng, -1.0, 1.0);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

}  // namespace detail

inline ToyCorpus make_toy_corpus(const ToyConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "toy"));
  const std::vector<detail::ToyLeaf> leaves{{"dbo:Athlete", "dbo:Person"},
                                            {"dbo:Artist", "dbo:Person"},
                                            {"dbo:City", "dbo:Place"},
                                            {"dbo:Organisation", ""}};
  const std::vector<ClassId> classes{"dbo:Person", "dbo:Athlete", "dbo:Artist",
                                     "dbo:Place",  "dbo:City",    "dbo:Organisation"};

  ToyCorpus corpus;
  corpus.vectors = WordVectorTable(cfg.dimension);
  std::map<ClassId, std::vector<double>> topic;
  for (const auto& c : classes) topic[c] = detail::random_unit(rng, cfg.dimension);

  std::set<std::string> taken;
  auto fresh_word = [&] {
    for (;;) {
      auto w = detail::pseudo_word(rng);
      if (taken.insert(w).second) return w;
    }
  };
  auto word_vector = [&](const detail::ToyLeaf* leaf) {
    auto v = detail::random_unit(rng, cfg.dimension);
    for (auto& x : v) x *= leaf ? cfg.topic_noise : 1.0;
    if (leaf) {
      const auto& t = topic[leaf->cls];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += t[i];
      if (!leaf->parent.empty()) {
        const auto& p = topic[leaf->parent];
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.8 * p[i];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
  };

  std::vector<std::string> generic;
  for (std::size_t i = 0; i < cfg.generic_words; ++i) {
    generic.push_back(fresh_word());
    corpus.vectors.insert(generic.back(), word_vector(nullptr));
  }
  std::map<ClassId, std::vector<std::string>> indexed, variant;
  for (const auto& leaf : leaves) {
    for (std::size_t i = 0; i < cfg.indexed_words; ++i) {
      indexed[leaf.cls].push_back(fresh_word());
      corpus.vectors.insert(indexed[leaf.cls].back(), word_vector(&leaf));
    }
    for (std::size_t i = 0; i < cfg.variant_words; ++i) {
      variant[leaf.cls].push_back(fresh_word());
      corpus.vectors.insert(variant[leaf.cls].back(), word_vector(&leaf));
    }
  }

  KnowledgeBase::Builder kb;
  for (const auto& c : classes) kb.add_class(c);
  for (const auto& leaf : leaves) {
    if (!leaf.parent.empty()) kb.add_subclass(leaf.cls, leaf.parent);
  }

  std::map<ClassId, std::vector<std::string>> labels;
  std::set<std::string> used_labels;
  for (const auto& leaf : leaves) {
    const auto& pool = indexed[leaf.cls];
    while (labels[leaf.cls].size() < cfg.entities_per_class) {
      const bool with_generic = uniform_unit(rng) < cfg.generic_word_rate;
      std::string first = with_generic ? generic[uniform_index(rng, generic.size())] : pool[uniform_index(rng, pool.size())];
      std::string second = pool[uniform_index(rng, pool.size())];
      if (first == second) continue;
      std::string label = detail::capitalize(first) + " " + detail::capitalize(second);
      if (!used_labels.insert(label).second) continue;
      Entity e;
      e.id = "dbr:" + label;
      std::replace(e.id.begin(), e.id.end(), ' ', '_');
      e.label = label;
      if (with_generic) e.anchor_texts.push_back(detail::capitalize(second));
      e.asserted_classes.insert(leaf.cls);
      kb.add_entity(std::move(e));
      labels[leaf.cls].push_back(label);
    }
  }
  corpus.kb = kb.build();

  for (std::size_t c = 0; c < cfg.columns; ++c) {
    const auto& leaf = leaves[c % leaves.size()];
    Column col;
    char name[16];
    std::snprintf(name, sizeof name, "t%02zu", c);
    col.id = std::string(name) + ":0";
    const auto rows = cfg.min_rows + uniform_index(rng, cfg.max_rows - cfg.min_rows + 1);
    std::vector<std::size_t> visible(std::min(cfg.visible_per_class, labels[leaf.cls].size()));
    for (std::size_t i = 0; i < visible.size(); ++i) visible[i] = i;
    shuffle(visible, rng);
    std::vector<bool> flags;
    for (std::size_t r = 0; r < rows; ++r) {
      const auto& label = labels[leaf.cls][visible[r % visible.size()]];
      if (uniform_unit(rng) < cfg.perturb_rate) {
        const auto& pool = variant[leaf.cls];
        auto a = pool[uniform_index(rng, pool.size())];
        auto b = pool[uniform_index(rng, pool.size())];
        col.cells.push_back(detail::capitalize(a) + " " + detail::capitalize(b));
        flags.push_back(true);
      } else {
        col.cells.push_back(label);
        flags.push_back(false);
      }
    }
    GoldEntry g{leaf.cls, {}};
    if (!leaf.parent.empty()) g.okay.insert(leaf.parent);
    corpus.gold[col.id] = g;
    corpus.perturbed[col.id] = std::move(flags);
    corpus.columns.push_back(std::move(col));
  }
  return corpus;
}

// Writes kb.jsonl, tables/<name>.csv (one single-column table per column,
// no header), gold.csv and vectors.txt into dir.
inline void write_toy_corpus(const ToyCorpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "tables");
  {
    std::ofstream out(dir / "kb.jsonl", std::ios::binary);
    out << dump_kb(corpus.kb);
  }
  for (const auto& col : corpus.columns) {
    const auto table = col.id.substr(0, col.id.find(':'));
    std::ofstream out(dir / "tables" / (table + ".csv"), std::ios::binary);
    for (const auto& cell : col.cells) out << cell << '\n';
  }
  {
    std::ofstream out(dir / "gold.csv", std::ios::binary);
    out << "column_id,best_class,okay_classes\n";
    for (const auto& [col, g] : corpus.gold) {
      std::string okay;
      for (const auto& o : g.okay) okay += (okay.empty() ? "" : ";") + o;
      out << col << ',' << g.best << ',' << okay << '\n';
    }
  }
  std::ofstream out(dir / "vectors.txt", std::ios::binary);
  save_word_vectors(corpus.vectors, out);
}

}  // namespace colnet
