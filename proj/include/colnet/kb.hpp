#pragma once
// In-memory knowledge base: classes, subclass edges, typed entities and a
// token index over entity labels and anchor texts.
//
// Subclass reasoning is plain reachability over parent edges, so cycles are
// tolerated. Closures are computed once when the KB is built; after that the
// object is immutable and safe to query from any number of threads.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "colnet/text.hpp"

namespace colnet {

using ClassId = std::string;
using EntityId = std::string;

struct Entity {
  EntityId id;
  std::string label;
  std::vector<std::string> anchor_texts;
  std::set<ClassId> asserted_classes;
};

struct LookupMatch {
  EntityId entity;
  double score = 0.0;

  friend bool operator==(const LookupMatch&, const LookupMatch&) = default;
};

class KnowledgeBase {
 public:
  // Accumulates records in any order; build() resolves references.
  class Builder {
   public:
    Builder& add_class(ClassId id) {
      classes_.push_back(std::move(id));
      return *this;
    }
    Builder& add_subclass(ClassId child, ClassId parent) {
      edges_.emplace_back(std::move(child), std::move(parent));
      return *this;
    }
    Builder& add_entity(Entity e) {
      entities_.push_back(std::move(e));
      return *this;
    }
    KnowledgeBase build() const { return KnowledgeBase(*this); }

   private:
    friend class KnowledgeBase;
    std::vector<ClassId> classes_;
    std::vector<std::pair<ClassId, ClassId>> edges_;
    std::vector<Entity> entities_;
  };

  KnowledgeBase() = default;

  std::size_t class_count() const { return class_ids_.size(); }
  std::size_t entity_count() const { return entities_.size(); }
  const std::vector<ClassId>& classes() const { return class_ids_; }
  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<std::pair<ClassId, ClassId>>& subclass_edges() const { return edges_; }

  bool has_class(const ClassId& c) const { return class_index_.contains(c); }
  bool has_entity(const EntityId& e) const { return entity_index_.contains(e); }

  const Entity& entity(const EntityId& e) const { return entities_[entity_slot(e)]; }

  // Transitive parents of c, excluding c itself even when c sits on a cycle.
  std::set<ClassId> superclasses_of(const ClassId& c) const {
    std::set<ClassId> out;
    for (int a : ancestors_[class_slot(c)]) out.insert(class_ids_[a]);
    return out;
  }

  // Asserted classes plus all of their superclasses.
  std::set<ClassId> types_of(const EntityId& e) const {
    std::set<ClassId> out;
    for (int c : entity_types_[entity_slot(e)]) out.insert(class_ids_[c]);
    return out;
  }

  bool is_instance(const EntityId& e, const ClassId& c) const {
    auto cit = class_index_.find(c);
    if (cit == class_index_.end()) return false;
    const auto& types = entity_types_[entity_slot(e)];
    return std::binary_search(types.begin(), types.end(), cit->second);
  }

  std::set<EntityId> entities_of(const ClassId& c) const {
    std::set<EntityId> out;
    for (int e : instances_[class_slot(c)]) out.insert(entities_[e].id);
    return out;
  }

  // Ranked by token-set Jaccard against the label and every anchor text (best
  // of them), descending; ties by entity id. Zero-score entities are omitted.
  std::vector<LookupMatch> lexical_lookup(std::string_view phrase, std::size_t limit) const {
    if (limit == 0) throw PreconditionError("lexical_lookup: limit must be >= 1");
    const auto query = token_set(phrase);
    if (query.empty()) return {};

    std::set<int> pool;
    for (const auto& tok : query) {
      auto it = lexical_index_.find(tok);
      if (it != lexical_index_.end()) pool.insert(it->second.begin(), it->second.end());
    }

    std::vector<LookupMatch> out;
    out.reserve(pool.size());
    for (int e : pool) {
      double best = 0.0;
      for (const auto& text : entity_texts_[e]) best = std::max(best, jaccard(query, text));
      if (best > 0.0) out.push_back({entities_[e].id, best});
    }
    std::sort(out.begin(), out.end(), [](const LookupMatch& a, const LookupMatch& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.entity < b.entity;
    });
    if (out.size() > limit) out.resize(limit);
    return out;
  }

  // Number of entities indexed under a token; exposed for index checks.
  std::size_t index_postings(const std::string& token) const {
    auto it = lexical_index_.find(token);
    return it == lexical_index_.end() ? 0 : it->second.size();
  }

 private:
  explicit KnowledgeBase(const Builder& b) {
    for (const auto& c : b.classes_) {
      if (c.empty()) throw DataError("class id must be non-empty");
      if (class_index_.emplace(c, static_cast<int>(class_ids_.size())).second) {
        class_ids_.push_back(c);
      }
    }
    std::vector<std::vector<int>> parents(class_ids_.size());
    std::set<std::pair<ClassId, ClassId>> seen_edges;
    for (const auto& [child, parent] : b.edges_) {
      if (!has_class(child)) throw DataError("subclass edge references unknown class '" + child + "'");
      if (!has_class(parent)) throw DataError("subclass edge references unknown class '" + parent + "'");
      if (!seen_edges.emplace(child, parent).second) continue;
      edges_.emplace_back(child, parent);
      parents[class_index_.at(child)].push_back(class_index_.at(parent));
    }

    ancestors_.resize(class_ids_.size());
    for (std::size_t c = 0; c < class_ids_.size(); ++c) {
      std::vector<char> seen(class_ids_.size(), 0);
      std::vector<int> stack(parents[c].begin(), parents[c].end());
      while (!stack.empty()) {
        int p = stack.back();
        stack.pop_back();
        if (seen[p]) continue;
        seen[p] = 1;
        for (int q : parents[p]) stack.push_back(q);
      }
      seen[c] = 0;
      for (std::size_t a = 0; a < seen.size(); ++a) {
        if (seen[a]) ancestors_[c].push_back(static_cast<int>(a));
      }
    }

    instances_.resize(class_ids_.size());
    for (const auto& e : b.entities_) {
      if (e.id.empty()) throw DataError("entity id must be non-empty");
      if (entity_index_.contains(e.id)) throw DataError("duplicate entity id '" + e.id + "'");
      Entity ent = e;
      if (trim(ent.label).empty()) ent.label = label_from_id(ent.id);
      if (trim(ent.label).empty()) throw DataError("entity '" + e.id + "' has an empty label");

      std::set<int> types;
      for (const auto& c : ent.asserted_classes) {
        auto it = class_index_.find(c);
        if (it == class_index_.end()) {
          throw DataError("entity '" + e.id + "' asserts unknown class '" + c + "'");
        }
        types.insert(it->second);
        types.insert(ancestors_[it->second].begin(), ancestors_[it->second].end());
      }
      const int slot = static_cast<int>(entities_.size());
      entity_index_.emplace(ent.id, slot);
      for (int c : types) instances_[c].push_back(slot);
      entity_types_.emplace_back(types.begin(), types.end());

      std::vector<std::set<std::string>> texts;
      texts.push_back(token_set(ent.label));
      for (const auto& a : ent.anchor_texts) texts.push_back(token_set(a));
      for (const auto& t : texts) {
        for (const auto& tok : t) {
          auto& posting = lexical_index_[tok];
          if (posting.empty() || posting.back() != slot) posting.push_back(slot);
        }
      }
      entity_texts_.push_back(std::move(texts));
      entities_.push_back(std::move(ent));
    }
  }

  int class_slot(const ClassId& c) const {
    auto it = class_index_.find(c);
    if (it == class_index_.end()) throw PreconditionError("unknown class '" + c + "'");
    return it->second;
  }
  int entity_slot(const EntityId& e) const {
    auto it = entity_index_.find(e);
    if (it == entity_index_.end()) throw PreconditionError("unknown entity '" + e + "'");
    return it->second;
  }

  std::vector<ClassId> class_ids_;
  std::unordered_map<ClassId, int> class_index_;
  std::vector<std::pair<ClassId, ClassId>> edges_;
  std::vector<std::vector<int>> ancestors_;  // sorted
  std::vector<std::vector<int>> instances_;  // sorted

  std::vector<Entity> entities_;
  std::unordered_map<EntityId, int> entity_index_;
  std::vector<std::vector<int>> entity_types_;  // sorted, closed upward
  std::vector<std::vector<std::set<std::string>>> entity_texts_;
  std::unordered_map<std::string, std::vector<int>> lexical_index_;
};

// Parses the line-oriented JSON KB format. Every non-blank line is one record:
//   {"kind":"class","id":...}
//   {"kind":"subclass","child":...,"parent":...}
//   {"kind":"entity","id":...,"label":...,"anchors":[...],"classes":[...]}
// Records may reference classes declared later in the stream.
inline KnowledgeBase load_kb(std::istream& in, const std::string& source = "<stream>") {
  KnowledgeBase::Builder builder;
  std::string line;
  std::size_t line_no = 0;
  std::map<EntityId, std::size_t> entity_lines;
  auto fail = [&](const std::string& what) {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object() || !rec.contains("kind") || !rec["kind"].is_string()) {
      fail("record without a string \"kind\"");
    }
    try {
      const auto kind = rec["kind"].get<std::string>();
      if (kind == "class") {
        builder.add_class(rec.at("id").get<std::string>());
      } else if (kind == "subclass") {
        builder.add_subclass(rec.at("child").get<std::string>(), rec.at("parent").get<std::string>());
      } else if (kind == "entity") {
        Entity e;
        e.id = rec.at("id").get<std::string>();
        e.label = rec.value("label", std::string());
        if (rec.contains("anchors")) e.anchor_texts = rec["anchors"].get<std::vector<std::string>>();
        if (rec.contains("classes")) {
          for (const auto& c : rec["classes"]) e.asserted_classes.insert(c.get<std::string>());
        }
        if (!entity_lines.emplace(e.id, line_no).second) {
          fail("duplicate entity id '" + e.id + "' (first defined on line " +
               std::to_string(entity_lines[e.id]) + ")");
        }
        builder.add_entity(std::move(e));
      } else {
        fail("unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(std::string("malformed record: ") + e.what());
    }
  }
  try {
    return builder.build();
  } catch (const DataError& e) {
    throw DataError(source + ": " + e.what());
  }
}

inline KnowledgeBase load_kb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open knowledge base file '" + path.string() + "'");
  return load_kb(in, path.string());
}

// Inverse of load_kb; one record per line, classes first.
inline std::string dump_kb(const KnowledgeBase& kb) {
  std::ostringstream out;
  for (const auto& c : kb.classes()) out << nlohmann::json{{"kind", "class"}, {"id", c}}.dump() << '\n';
  for (const auto& [child, parent] : kb.subclass_edges()) {
    out << nlohmann::json{{"kind", "subclass"}, {"child", child}, {"parent", parent}}.dump() << '\n';
  }
  for (const auto& e : kb.entities()) {
    nlohmann::json rec{{"kind", "entity"}, {"id", e.id}, {"label", e.label}, {"anchors", e.anchor_texts}};
    rec["classes"] = std::vector<std::string>(e.asserted_classes.begin(), e.asserted_classes.end());
    out << rec.dump() << '\n';
  }
  return out.str();
}

}  // namespace colnet
