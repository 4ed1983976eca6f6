#pragma once
// Candidate-class extraction for entity columns: a first lookup round over
// every cell, a refinement round constrained by the first round's
// well-supported classes, and the Lookup-Vote score.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "colnet/kb.hpp"
#include "colnet/text.hpp"

namespace colnet {

struct Column {
  std::string id;
  std::vector<std::string> cells;
};

struct LookupConfig {
  std::size_t per_cell_limit = 3;
  double min_support_fraction = 0.1;
};

struct CandidateClassSet {
  std::string column_id;
  std::size_t cell_count = 0;
  // class -> number of cells with at least one matched entity of that class
  std::map<ClassId, std::size_t> candidates;
  std::map<ClassId, std::set<EntityId>> particular_entities;
  // cell index -> ranked matched entities; unmatched cells are absent
  std::map<std::size_t, std::vector<EntityId>> cell_matches;

  bool has(const ClassId& c) const { return candidates.contains(c); }
  std::set<ClassId> classes() const {
    std::set<ClassId> out;
    for (const auto& [c, _] : candidates) out.insert(c);
    return out;
  }
  std::set<EntityId> all_particular() const {
    std::set<EntityId> out;
    for (const auto& [_, ids] : cell_matches) out.insert(ids.begin(), ids.end());
    return out;
  }
};

namespace detail {

inline CandidateClassSet collect(const KnowledgeBase& kb, const Column& column,
                                 std::map<std::size_t, std::vector<EntityId>> matches) {
  CandidateClassSet out;
  out.column_id = column.id;
  out.cell_count = column.cells.size();
  for (const auto& [cell, ids] : matches) {
    std::set<ClassId> cell_classes;
    for (const auto& e : ids) {
      for (const auto& c : kb.types_of(e)) {
        cell_classes.insert(c);
        out.particular_entities[c].insert(e);
      }
    }
    for (const auto& c : cell_classes) ++out.candidates[c];
  }
  out.cell_matches = std::move(matches);
  return out;
}

inline std::size_t support_threshold(double fraction, std::size_t cells) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(cells) - 1e-12));
}

}  // namespace detail

// Matches every cell against the lexical index. Support counts cells, not
// entities: one cell matching two entities of class c adds 1 to c.
inline CandidateClassSet first_round(const KnowledgeBase& kb, const Column& column,
                                     std::size_t per_cell_limit) {
  if (per_cell_limit == 0) throw PreconditionError("first_round: per_cell_limit must be >= 1");
  std::map<std::size_t, std::vector<EntityId>> matches;
  for (std::size_t i = 0; i < column.cells.size(); ++i) {
    auto cell = trim(column.cells[i]);
    if (cell.empty()) continue;
    auto hits = kb.lexical_lookup(cell, per_cell_limit);
    if (hits.empty()) continue;
    auto& ids = matches[i];
    for (auto& h : hits) ids.push_back(std::move(h.entity));
  }
  return detail::collect(kb, column, std::move(matches));
}

// Second lookup round. Entities survive only if one of their types is a
// first-round candidate that already clears the support threshold; supports
// are then recounted and classes below ceil(fraction * |cells|) dropped.
inline CandidateClassSet refine(const KnowledgeBase& kb, const Column& column, const CandidateClassSet& first,
                                std::size_t per_cell_limit, double min_support_fraction) {
  if (per_cell_limit == 0) throw PreconditionError("refine: per_cell_limit must be >= 1");
  if (min_support_fraction < 0.0 || min_support_fraction > 1.0) {
    throw PreconditionError("refine: min_support_fraction must lie in [0,1]");
  }
  const std::size_t threshold = detail::support_threshold(min_support_fraction, column.cells.size());
  std::set<ClassId> allowed;
  for (const auto& [c, support] : first.candidates) {
    if (support >= threshold) allowed.insert(c);
  }

  std::map<std::size_t, std::vector<EntityId>> matches;
  for (std::size_t i = 0; i < column.cells.size(); ++i) {
    auto cell = trim(column.cells[i]);
    if (cell.empty()) continue;
    std::vector<EntityId> kept;
    for (auto& h : kb.lexical_lookup(cell, per_cell_limit)) {
      const auto types = kb.types_of(h.entity);
      bool ok = std::any_of(types.begin(), types.end(), [&](const ClassId& c) { return allowed.contains(c); });
      if (ok) kept.push_back(std::move(h.entity));
    }
    if (!kept.empty()) matches[i] = std::move(kept);
  }

  auto out = detail::collect(kb, column, std::move(matches));
  for (auto it = out.candidates.begin(); it != out.candidates.end();) {
    if (it->second < threshold || !first.candidates.contains(it->first)) {
      out.particular_entities.erase(it->first);
      it = out.candidates.erase(it);
    } else {
      ++it;
    }
  }
  return out;
}

inline CandidateClassSet lookup_column(const KnowledgeBase& kb, const Column& column, const LookupConfig& cfg = {}) {
  return refine(kb, column, first_round(kb, column, cfg.per_cell_limit), cfg.per_cell_limit,
                cfg.min_support_fraction);
}

// Instances of c that no cell matched.
inline std::set<EntityId> general_entities(const KnowledgeBase& kb, const ClassId& c,
                                           const std::set<EntityId>& particular) {
  std::set<EntityId> out;
  for (auto& e : kb.entities_of(c)) {
    if (!particular.contains(e)) out.insert(e);
  }
  return out;
}

// Fraction of the column's cells (empty cells included in the denominator)
// that matched at least one entity of class c.
inline double vote_score(const CandidateClassSet& refined, const Column& column, const ClassId& c) {
  if (column.cells.empty() || !refined.has(c)) return 0.0;
  auto pit = refined.particular_entities.find(c);
  if (pit == refined.particular_entities.end()) return 0.0;
  std::size_t hit = 0;
  for (const auto& [cell, ids] : refined.cell_matches) {
    if (std::any_of(ids.begin(), ids.end(), [&](const EntityId& e) { return pit->second.contains(e); })) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(column.cells.size());
}

// --- CSV tables -------------------------------------------------------------

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
inline std::vector<std::vector<std::string>> read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char ch;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      end_field();
    } else if (ch == '\n') {
      end_row();
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get(ch);
      end_row();
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

// Each CSV column becomes one Column with id "<table>:<index>".
inline std::vector<Column> table_columns(const std::vector<std::vector<std::string>>& rows,
                                         const std::string& table, bool has_header) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.size());
  std::vector<Column> cols(width);
  for (std::size_t j = 0; j < width; ++j) cols[j].id = table + ":" + std::to_string(j);
  for (std::size_t i = has_header ? 1 : 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) cols[j].cells.push_back(j < rows[i].size() ? rows[i][j] : "");
  }
  std::erase_if(cols, [](const Column& c) { return c.cells.empty(); });
  return cols;
}

// A single CSV file, or every *.csv in a directory (sorted by name).
inline std::vector<Column> load_tables(const std::filesystem::path& path, bool has_header) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<Column> out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw DataError("cannot open table file '" + f.string() + "'");
    std::vector<std::vector<std::string>> rows;
    try {
      rows = read_csv(in);
    } catch (const DataError& e) {
      throw DataError(f.string() + ": " + e.what());
    }
    auto cols = table_columns(rows, f.stem().string(), has_header);
    out.insert(out.end(), std::make_move_iterator(cols.begin()), std::make_move_iterator(cols.end()));
  }
  return out;
}

// --- JSON -------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Column& c) { j = {{"id", c.id}, {"cells", c.cells}}; }
inline void from_json(const nlohmann::json& j, Column& c) {
  j.at("id").get_to(c.id);
  j.at("cells").get_to(c.cells);
}

inline void to_json(nlohmann::json& j, const CandidateClassSet& s) {
  nlohmann::json matches = nlohmann::json::object();
  for (const auto& [cell, ids] : s.cell_matches) matches[std::to_string(cell)] = ids;
  j = {{"column", s.column_id},
       {"cells", s.cell_count},
       {"candidates", s.candidates},
       {"particular", s.particular_entities},
       {"cell_matches", matches}};
}

inline void from_json(const nlohmann::json& j, CandidateClassSet& s) {
  j.at("column").get_to(s.column_id);
  j.at("cells").get_to(s.cell_count);
  j.at("candidates").get_to(s.candidates);
  j.at("particular").get_to(s.particular_entities);
  s.cell_matches.clear();
  for (const auto& [k, v] : j.at("cell_matches").items()) {
    s.cell_matches[std::stoul(k)] = v.get<std::vector<EntityId>>();
  }
}

}  // namespace colnet
