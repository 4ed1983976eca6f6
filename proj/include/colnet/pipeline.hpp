#pragma once
// End-to-end stages over an in-memory corpus (lookup -> sample/train ->
// annotate -> evaluate/diagnose) and their file-backed counterparts used by
// the command-line tool. Work directory layout:
//
//   <workdir>/candidates/{columns,candidates,general}.jsonl + manifest.json
//   <workdir>/samples/<class>.jsonl
//   <workdir>/models/<class>.json + manifest.json
//   <workdir>/annotations/<mode>.jsonl + <mode>.manifest.json
//   <workdir>/reports/...

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "colnet/annotator.hpp"
#include "colnet/cnn.hpp"
#include "colnet/embedding.hpp"
#include "colnet/evaluation.hpp"
#include "colnet/kb.hpp"
#include "colnet/lookup.hpp"
#include "colnet/sampling.hpp"

namespace colnet {

// Runs fn(i) for i in [0, count) on up to `workers` threads. Each call must
// only write its own output slot.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// --- in-memory stages ------------------------------------------------------------

inline std::vector<CandidateClassSet> lookup_all(const KnowledgeBase& kb, const std::vector<Column>& columns,
                                                 const LookupConfig& cfg, std::size_t workers = 1) {
  std::vector<CandidateClassSet> out(columns.size());
  parallel_for(columns.size(), workers, [&](std::size_t i) { out[i] = lookup_column(kb, columns[i], cfg); });
  return out;
}

struct FleetConfig {
  SamplingConfig sampling;
  TrainConfig train;
  std::vector<std::size_t> heights{2, 3, 4};
  std::size_t filters_per_height = 32;
  Activation dense_activation = Activation::identity;
  double length_percentile = 0.95;
  bool transfer = true;  // pre-train on S_g before fine-tuning on S_p
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

enum class ModelStatus { trained, general_only, particular_only, skipped };

inline std::string to_string(ModelStatus s) {
  switch (s) {
    case ModelStatus::trained: return "trained";
    case ModelStatus::general_only: return "general-only";
    case ModelStatus::particular_only: return "particular-only";
    case ModelStatus::skipped: return "skipped";
  }
  return "?";
}

struct ClassTrainingInfo {
  ModelStatus status = ModelStatus::skipped;
  std::size_t particular_samples = 0;
  std::size_t general_samples = 0;
  std::size_t finetune_epochs = 0;
  bool negative_fallback = false;
};

struct Fleet {
  std::size_t n = 0;  // sequence length shared by all models
  ModelMap models;
  std::map<ClassId, SampleSets> samples;
  std::map<ClassId, ClassTrainingInfo> info;
};

inline std::vector<ClassId> candidate_union(const std::vector<CandidateClassSet>& candidates) {
  std::set<ClassId> all;
  for (const auto& s : candidates) {
    for (const auto& [c, _] : s.candidates) all.insert(c);
  }
  return {all.begin(), all.end()};
}

inline std::vector<Example> embed_samples(const std::vector<TrainingSample>& samples, std::size_t n,
                                          const WordVectorTable& wv) {
  std::vector<Example> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({embed(s.column, n, wv), s.positive});
  return out;
}

// One binary CNN per candidate class. The sequence length n is chosen once
// over every class's synthetic columns so all models share an input shape.
inline Fleet train_fleet(const KnowledgeBase& kb, const std::vector<CandidateClassSet>& candidates,
                         const WordVectorTable& wv, const FleetConfig& cfg) {
  Fleet fleet;
  const auto classes = candidate_union(candidates);
  std::vector<SampleSets> sets(classes.size());
  parallel_for(classes.size(), cfg.workers, [&](std::size_t i) {
    sets[i] = build_sample_sets(kb, classes[i], candidates, cfg.sampling, derive_seed(cfg.seed, "samples"));
  });

  std::vector<SyntheticColumn> corpus;
  for (const auto& s : sets) {
    for (const auto* part : {&s.particular, &s.general}) {
      for (const auto& t : *part) corpus.push_back(t.column);
    }
  }
  const std::size_t max_height = *std::max_element(cfg.heights.begin(), cfg.heights.end());
  fleet.n = corpus.empty() ? max_height
                           : std::max(max_height, choose_sequence_length(corpus, cfg.length_percentile));

  ModelShape shape{fleet.n, wv.dimension(), cfg.heights, cfg.filters_per_height, cfg.dense_activation};
  std::vector<std::optional<CnnModel>> trained(classes.size());
  std::vector<ClassTrainingInfo> infos(classes.size());
  parallel_for(classes.size(), cfg.workers, [&](std::size_t i) {
    const auto& s = sets[i];
    auto general = cfg.transfer ? embed_samples(s.general, fleet.n, wv) : std::vector<Example>{};
    auto particular = embed_samples(s.particular, fleet.n, wv);
    auto& info = infos[i];
    info.particular_samples = particular.size();
    info.general_samples = general.size();
    info.negative_fallback = s.used_negative_fallback;
    if (general.empty() && particular.empty()) return;
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "model:" + classes[i]);
    TrainHistory history;
    trained[i] = train(shape, general, particular, tc, &history);
    info.finetune_epochs = history.finetune_epochs;
    info.status = particular.empty() ? ModelStatus::general_only
                  : general.empty()  ? ModelStatus::particular_only
                                     : ModelStatus::trained;
  });
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (trained[i]) fleet.models.emplace(classes[i], std::move(*trained[i]));
    fleet.info[classes[i]] = infos[i];
    fleet.samples.emplace(classes[i], std::move(sets[i]));
  }
  return fleet;
}

inline std::vector<AnnotationResult> annotate_all(const std::vector<Column>& columns,
                                                  const std::vector<CandidateClassSet>& candidates,
                                                  const ModelMap& models, const WordVectorTable& wv,
                                                  const AnnotateConfig& cfg, std::size_t workers = 1) {
  std::vector<AnnotationResult> out(columns.size());
  parallel_for(columns.size(), workers,
               [&](std::size_t i) { out[i] = annotate(columns[i], candidates[i], models, wv, cfg); });
  return out;
}

// Knowledge-gap ablation: retrain the fleet keeping a seeded `ratio` of the
// particular entities, with or without S_g pre-training, and report TM-AUC
// and FM-AS of the resulting models.
inline DiagnosticsReport gap_ablation(const KnowledgeBase& kb, const std::vector<Column>& columns,
                                      const std::vector<CandidateClassSet>& candidates, const GoldStandard& gold,
                                      const WordVectorTable& wv, FleetConfig cfg, double ratio, bool transfer,
                                      std::size_t samples_per_column = 20) {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw PreconditionError("gap_ablation: ratio must lie in (0,1]");
  cfg.sampling.particular_ratio = ratio;
  cfg.transfer = transfer;
  const auto fleet = train_fleet(kb, candidates, wv, cfg);
  return diagnose(columns, candidates, gold, fleet.models, wv,
                  {cfg.sampling.h, samples_per_column, derive_seed(cfg.seed, "diagnostics")});
}

// --- configuration -----------------------------------------------------------------

struct PipelineConfig {
  std::string kb_path;
  std::string tables_path;
  std::string gold_path;
  std::string vectors_path;
  std::string workdir = "work";
  bool header = false;
  std::size_t h = 4;
  std::size_t n_samples = 50;
  double sigma1 = 0.5;
  double sigma2 = 0.08;
  std::optional<double> alpha;
  std::size_t per_cell_limit = 3;
  double min_support_fraction = 0.1;
  std::size_t max_per_bucket = 100;
  double length_percentile = 0.95;
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t pretrain_epochs = 10;
  std::size_t finetune_budget = 2000;
  std::size_t filters_per_height = 32;
  std::vector<std::size_t> filter_heights{2, 3, 4};
  std::string dense_activation = "identity";
  std::size_t hashed_dimension = 50;
  std::uint64_t seed = 42;
  std::string mode = "colnet_ensemble";
  std::size_t workers = 1;

  LookupConfig lookup() const { return {per_cell_limit, min_support_fraction}; }

  FleetConfig fleet() const {
    FleetConfig f;
    f.sampling = {h, max_per_bucket, 1.0};
    f.train.learning_rate = learning_rate;
    f.train.batch_size = batch_size;
    f.train.pretrain_epochs = pretrain_epochs;
    f.train.finetune_budget = finetune_budget;
    f.heights = filter_heights;
    f.filters_per_height = filters_per_height;
    f.dense_activation = parse_activation(dense_activation);
    f.length_percentile = length_percentile;
    f.seed = seed;
    f.workers = workers;
    return f;
  }

  Mode parsed_mode() const {
    auto m = parse_mode(mode);
    if (!m) throw PreconditionError("unknown mode '" + mode + "' (expected colnet, colnet_ensemble or lookup_vote)");
    return *m;
  }

  AnnotateConfig annotate() const {
    AnnotateConfig a;
    a.mode = parsed_mode();
    a.ensemble = {sigma1, sigma2};
    a.alpha = alpha;
    a.h = h;
    a.n_samples = n_samples;
    a.seed = seed;
    return a;
  }

  void validate() const {
    if (h == 0 || n_samples == 0 || per_cell_limit == 0 || max_per_bucket == 0) {
      throw PreconditionError("h, N, per_cell_limit and max_per_bucket must be >= 1");
    }
    if (min_support_fraction < 0.0 || min_support_fraction > 1.0) {
      throw PreconditionError("min_support_fraction must lie in [0,1]");
    }
    if (!(length_percentile > 0.0 && length_percentile <= 1.0)) {
      throw PreconditionError("length_percentile must lie in (0,1]");
    }
    if (alpha && (*alpha < 0.0 || *alpha > 1.0)) throw PreconditionError("alpha must lie in [0,1]");
    EnsembleConfig{sigma1, sigma2}.validate();
    fleet().train.validate();
    parsed_mode();
  }

  // Settings that determine candidates, samples and models.
  nlohmann::json upstream_json() const {
    return {{"kb_path", kb_path},
            {"tables_path", tables_path},
            {"vectors_path", vectors_path},
            {"header", header},
            {"h", h},
            {"per_cell_limit", per_cell_limit},
            {"min_support_fraction", min_support_fraction},
            {"max_per_bucket", max_per_bucket},
            {"length_percentile", length_percentile},
            {"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"pretrain_epochs", pretrain_epochs},
            {"finetune_budget", finetune_budget},
            {"filters_per_height", filters_per_height},
            {"filter_heights", filter_heights},
            {"dense_activation", dense_activation},
            {"hashed_dimension", hashed_dimension},
            {"seed", seed}};
  }

  std::string fingerprint() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(upstream_json().dump())));
    return buf;
  }
};

// Fills fields present in a JSON config document; unknown keys are errors.
inline void apply_config_json(PipelineConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) throw DataError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "kb_path") v.get_to(c.kb_path);
      else if (key == "tables_path") v.get_to(c.tables_path);
      else if (key == "gold_path") v.get_to(c.gold_path);
      else if (key == "vectors_path") v.get_to(c.vectors_path);
      else if (key == "workdir") v.get_to(c.workdir);
      else if (key == "header") v.get_to(c.header);
      else if (key == "h") v.get_to(c.h);
      else if (key == "N") v.get_to(c.n_samples);
      else if (key == "sigma1") v.get_to(c.sigma1);
      else if (key == "sigma2") v.get_to(c.sigma2);
      else if (key == "alpha") c.alpha = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "per_cell_limit") v.get_to(c.per_cell_limit);
      else if (key == "min_support_fraction") v.get_to(c.min_support_fraction);
      else if (key == "max_per_bucket") v.get_to(c.max_per_bucket);
      else if (key == "length_percentile") v.get_to(c.length_percentile);
      else if (key == "learning_rate") v.get_to(c.learning_rate);
      else if (key == "batch_size") v.get_to(c.batch_size);
      else if (key == "pretrain_epochs") v.get_to(c.pretrain_epochs);
      else if (key == "finetune_budget") v.get_to(c.finetune_budget);
      else if (key == "filters_per_height") v.get_to(c.filters_per_height);
      else if (key == "filter_heights") v.get_to(c.filter_heights);
      else if (key == "dense_activation") v.get_to(c.dense_activation);
      else if (key == "hashed_dimension") v.get_to(c.hashed_dimension);
      else if (key == "seed") v.get_to(c.seed);
      else if (key == "mode") v.get_to(c.mode);
      else if (key == "workers") v.get_to(c.workers);
      else throw DataError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad config value: ") + e.what());
  }
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path.string() + "'");
  PipelineConfig c;
  try {
    apply_config_json(c, nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return c;
}

// --- file helpers ----------------------------------------------------------------

// Write-then-rename so readers never observe a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw DataError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<nlohmann::json> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Class id -> file stem, e.g. "dbo:City" -> "dbo_City-3f2a9c1d".
inline std::string class_file_stem(const ClassId& c) {
  std::string stem;
  for (char ch : c) stem.push_back(std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_');
  char suffix[10];
  std::snprintf(suffix, sizeof suffix, "-%08x", static_cast<unsigned>(fnv1a(c) & 0xffffffffu));
  return stem + suffix;
}

inline WordVectorTable load_vectors(const PipelineConfig& cfg) {
  if (cfg.vectors_path.empty()) {
    return WordVectorTable::hashed(cfg.hashed_dimension, derive_seed(cfg.seed, "hashed-vectors"));
  }
  return load_word_vectors(std::filesystem::path(cfg.vectors_path));
}

struct WorkDir {
  std::filesystem::path root;

  std::filesystem::path candidates() const { return root / "candidates"; }
  std::filesystem::path samples() const { return root / "samples"; }
  std::filesystem::path models() const { return root / "models"; }
  std::filesystem::path annotations() const { return root / "annotations"; }
  std::filesystem::path reports() const { return root / "reports"; }
};

struct CandidateFiles {
  std::vector<Column> columns;
  std::vector<CandidateClassSet> candidates;
  std::string fingerprint;
};

inline CandidateFiles read_candidates(const WorkDir& wd) {
  CandidateFiles out;
  const auto manifest = nlohmann::json::parse(read_file(wd.candidates() / "manifest.json"));
  out.fingerprint = manifest.at("fingerprint").get<std::string>();
  for (const auto& j : read_jsonl(wd.candidates() / "columns.jsonl")) out.columns.push_back(j.get<Column>());
  for (const auto& j : read_jsonl(wd.candidates() / "candidates.jsonl")) {
    out.candidates.push_back(j.get<CandidateClassSet>());
  }
  if (out.columns.size() != out.candidates.size()) throw DataError("candidates and columns files disagree");
  return out;
}

struct ModelFiles {
  ModelMap models;
  std::string fingerprint;
  std::size_t h = 0;
};

inline ModelFiles read_models(const WorkDir& wd) {
  ModelFiles out;
  const auto manifest = nlohmann::json::parse(read_file(wd.models() / "manifest.json"));
  out.fingerprint = manifest.at("fingerprint").get<std::string>();
  out.h = manifest.at("h").get<std::size_t>();
  for (const auto& entry : manifest.at("classes")) {
    if (entry.at("file").is_null()) continue;
    const auto doc = nlohmann::json::parse(read_file(wd.models() / entry.at("file").get<std::string>()));
    out.models.emplace(entry.at("class").get<std::string>(), model_from_json(doc.at("model")));
  }
  return out;
}

// --- commands ----------------------------------------------------------------------

// Candidate sets for every table column, plus particular/general entity lists.
inline void cmd_lookup(const PipelineConfig& cfg) {
  cfg.validate();
  const WorkDir wd{cfg.workdir};
  const auto kb = load_kb(std::filesystem::path(cfg.kb_path));
  if (!std::filesystem::exists(cfg.tables_path)) throw DataError("cannot open tables path '" + cfg.tables_path + "'");
  const auto columns = load_tables(cfg.tables_path, cfg.header);
  const auto candidates = lookup_all(kb, columns, cfg.lookup(), cfg.workers);

  std::string cols_out, cand_out, general_out;
  for (const auto& c : columns) cols_out += nlohmann::json(c).dump() + "\n";
  for (const auto& c : candidates) cand_out += nlohmann::json(c).dump() + "\n";
  std::set<EntityId> matched;
  for (const auto& c : candidates) {
    auto all = c.all_particular();
    matched.insert(all.begin(), all.end());
  }
  for (const auto& cls : candidate_union(candidates)) {
    auto general = general_entities(kb, cls, matched);
    general_out += nlohmann::json{{"class", cls}, {"entities", general}}.dump() + "\n";
  }
  write_atomic(wd.candidates() / "columns.jsonl", cols_out);
  write_atomic(wd.candidates() / "candidates.jsonl", cand_out);
  write_atomic(wd.candidates() / "general.jsonl", general_out);
  nlohmann::json manifest{{"fingerprint", cfg.fingerprint()},
                          {"config", cfg.upstream_json()},
                          {"columns", columns.size()},
                          {"created_at", now_utc()}};
  write_atomic(wd.candidates() / "manifest.json", manifest.dump(2) + "\n");
}

// Sample sets and one model per candidate class. Returns the number of
// classes that were skipped for lack of samples.
inline std::size_t cmd_train(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  const WorkDir wd{cfg.workdir};
  const auto kb = load_kb(std::filesystem::path(cfg.kb_path));
  const auto cand = read_candidates(wd);
  if (cand.fingerprint != cfg.fingerprint()) {
    throw DataError("candidates in '" + wd.candidates().string() + "' were produced with a different configuration");
  }
  const auto wv = load_vectors(cfg);
  const auto fleet = train_fleet(kb, cand.candidates, wv, cfg.fleet());

  std::size_t skipped = 0;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [cls, info] : fleet.info) {
    const auto stem = class_file_stem(cls);
    std::string samples_out;
    const auto& sets = fleet.samples.at(cls);
    for (const auto* part : {&sets.particular, &sets.general}) {
      for (const auto& s : *part) samples_out += sample_record(s).dump() + "\n";
    }
    write_atomic(wd.samples() / (stem + ".jsonl"), samples_out);

    nlohmann::json entry{{"class", cls},
                         {"status", to_string(info.status)},
                         {"particular_samples", info.particular_samples},
                         {"general_samples", info.general_samples},
                         {"finetune_epochs", info.finetune_epochs},
                         {"negative_fallback", info.negative_fallback}};
    auto it = fleet.models.find(cls);
    if (it == fleet.models.end()) {
      ++skipped;
      entry["file"] = nullptr;
      log << "warning: class " << cls << " has no training samples; skipped\n";
    } else {
      nlohmann::json doc{{"class", cls}, {"h", cfg.h}, {"fingerprint", cfg.fingerprint()},
                         {"model", model_to_json(it->second)}};
      entry["file"] = stem + ".json";
      write_atomic(wd.models() / (stem + ".json"), doc.dump() + "\n");
    }
    classes.push_back(std::move(entry));
  }
  nlohmann::json manifest{{"fingerprint", cfg.fingerprint()}, {"h", cfg.h},           {"n", fleet.n},
                          {"classes", classes},               {"created_at", now_utc()}};
  write_atomic(wd.models() / "manifest.json", manifest.dump(2) + "\n");
  return skipped;
}

inline std::vector<AnnotationResult> read_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationResult> out;
  for (const auto& j : read_jsonl(path)) {
    try {
      out.push_back(annotation_from_record(j));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ": malformed annotation record: " + e.what());
    }
  }
  return out;
}

// Annotation JSON lines for the configured mode. Returns the number of
// (column, class) pairs that fell back to the vote score for lack of a model.
inline std::size_t cmd_annotate(const PipelineConfig& cfg, std::ostream& log = std::cerr) {
  cfg.validate();
  const WorkDir wd{cfg.workdir};
  const auto acfg = cfg.annotate();
  const auto cand = read_candidates(wd);
  if (cand.fingerprint != cfg.fingerprint()) {
    throw DataError("candidates in '" + wd.candidates().string() + "' were produced with a different configuration");
  }
  ModelFiles models;
  WordVectorTable wv;
  if (acfg.mode != Mode::lookup_vote) {
    models = read_models(wd);
    if (models.fingerprint != cfg.fingerprint()) {
      throw DataError("models in '" + wd.models().string() + "' were produced with a different configuration");
    }
    wv = load_vectors(cfg);
  }
  const auto results = annotate_all(cand.columns, cand.candidates, models.models, wv, acfg, cfg.workers);

  std::size_t missing = 0;
  std::string out;
  for (const auto& r : results) {
    for (const auto& c : r.classes) {
      if (c.model_missing) {
        ++missing;
        log << "warning: no model for " << c.cls << " (column " << r.column_id << "); using vote score\n";
      }
    }
    out += annotation_record(r).dump() + "\n";
  }
  const auto mode = to_string(acfg.mode);
  write_atomic(wd.annotations() / (mode + ".jsonl"), out);
  nlohmann::json manifest{{"fingerprint", cfg.fingerprint()},
                          {"mode", mode},
                          {"alpha", acfg.threshold()},
                          {"sigma1", cfg.sigma1},
                          {"sigma2", cfg.sigma2},
                          {"N", cfg.n_samples},
                          {"missing_models", missing},
                          {"created_at", now_utc()}};
  write_atomic(wd.annotations() / (mode + ".manifest.json"), manifest.dump(2) + "\n");
  return missing;
}

struct EvaluateOptions {
  std::vector<double> alpha_sweep;
  bool diagnostics = false;
  bool force = false;
  Averaging averaging = Averaging::micro;
};

inline std::string format_prf_row(const std::string& label, const Prf& p) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-22s %9.3f %9.3f %9.3f\n", label.c_str(), p.precision, p.recall, p.f1);
  return buf;
}

// Strict and tolerant P/R/F1 of the configured mode's annotations; optional
// alpha sweep and TM/FM diagnostics. Returns the report document.
inline nlohmann::json cmd_evaluate(const PipelineConfig& cfg, const EvaluateOptions& opt,
                                   std::ostream& out = std::cout) {
  cfg.validate();
  const WorkDir wd{cfg.workdir};
  if (cfg.gold_path.empty()) throw PreconditionError("evaluate needs a gold standard (--gold)");
  for (double a : opt.alpha_sweep) {
    if (!(a >= 0.0 && a <= 1.0)) throw PreconditionError("alpha sweep values must lie in [0,1]");
  }
  const auto gold = load_gold(std::filesystem::path(cfg.gold_path));
  const auto mode = to_string(cfg.parsed_mode());
  const auto results = read_annotations(wd.annotations() / (mode + ".jsonl"));
  const auto ann_manifest = nlohmann::json::parse(read_file(wd.annotations() / (mode + ".manifest.json")));

  std::set<std::string> fingerprints{ann_manifest.at("fingerprint").get<std::string>()};
  fingerprints.insert(nlohmann::json::parse(read_file(wd.candidates() / "manifest.json")).at("fingerprint"));
  if (std::filesystem::exists(wd.models() / "manifest.json")) {
    fingerprints.insert(nlohmann::json::parse(read_file(wd.models() / "manifest.json")).at("fingerprint"));
  }
  if (fingerprints.size() > 1 && !opt.force) {
    throw DataError("work directory mixes artifacts from different configurations (use --force to override)");
  }

  std::vector<std::string> missing;
  for (const auto& r : results) {
    if (!gold.contains(r.column_id)) missing.push_back(r.column_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += " " + m;
    throw DataError("columns without gold entries:" + list);
  }

  const auto strict = score_strict(results, gold, opt.averaging);
  const auto tolerant = score_tolerant(results, gold, opt.averaging);
  nlohmann::json report{{"mode", mode},
                        {"alpha", ann_manifest.at("alpha")},
                        {"averaging", opt.averaging == Averaging::micro ? "micro" : "macro"},
                        {"empty_prediction_precision", 0.0},
                        {"tolerant", to_json(tolerant)},
                        {"strict", to_json(strict)}};
  std::string text = "mode " + mode + "\n";
  text += "model                  precision    recall        f1\n";
  text += format_prf_row("tolerant", tolerant);
  text += format_prf_row("strict", strict);

  if (!opt.alpha_sweep.empty()) {
    nlohmann::json sweep = nlohmann::json::array();
    text += "\nalpha   tol-P   tol-R  tol-F1  str-P   str-R  str-F1\n";
    for (double a : opt.alpha_sweep) {
      std::vector<AnnotationResult> re;
      re.reserve(results.size());
      for (const auto& r : results) re.push_back(rethreshold(r, a));
      const auto t = score_tolerant(re, gold, opt.averaging);
      const auto s = score_strict(re, gold, opt.averaging);
      sweep.push_back({{"alpha", a}, {"tolerant", to_json(t)}, {"strict", to_json(s)}});
      char buf[160];
      std::snprintf(buf, sizeof buf, "%5.2f  %6.3f  %6.3f  %6.3f  %6.3f  %6.3f  %6.3f\n", a, t.precision, t.recall,
                    t.f1, s.precision, s.recall, s.f1);
      text += buf;
    }
    report["alpha_sweep"] = sweep;
  }

  if (opt.diagnostics) {
    const auto cand = read_candidates(wd);
    const auto models = read_models(wd);
    const auto wv = load_vectors(cfg);
    const auto diag = diagnose(cand.columns, cand.candidates, gold, models.models, wv,
                               {models.h, 20, derive_seed(cfg.seed, "diagnostics")});
    report["diagnostics"] = to_json(diag);
    text += "\nclass                  kind   AUC      AS\n";
    for (const auto& c : diag.classes) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-22s %-4s %6s %7s\n", c.cls.c_str(), c.kind == MatchKind::tm ? "TM" : "FM",
                    c.auc ? std::to_string(*c.auc).substr(0, 5).c_str() : "-",
                    c.avg_score ? std::to_string(*c.avg_score).substr(0, 5).c_str() : "-");
      text += buf;
    }
  }

  write_atomic(wd.reports() / ("metrics_" + mode + ".json"), report.dump(2) + "\n");
  write_atomic(wd.reports() / ("metrics_" + mode + ".txt"), text);
  out << text;
  return report;
}

// Knowledge-gap sweep: for each ratio, with and without transfer.
inline nlohmann::json cmd_ablate(const PipelineConfig& cfg, const std::vector<double>& ratios,
                                 std::ostream& out = std::cout) {
  cfg.validate();
  const WorkDir wd{cfg.workdir};
  if (cfg.gold_path.empty()) throw PreconditionError("ablate needs a gold standard (--gold)");
  const auto gold = load_gold(std::filesystem::path(cfg.gold_path));
  const auto kb = load_kb(std::filesystem::path(cfg.kb_path));
  const auto cand = read_candidates(wd);
  const auto wv = load_vectors(cfg);

  nlohmann::json rows = nlohmann::json::array();
  std::string text = "transfer  ratio  TM-AUC   FM-AS\n";
  for (bool transfer : {true, false}) {
    for (double r : ratios) {
      const auto rep = gap_ablation(kb, cand.columns, cand.candidates, gold, wv, cfg.fleet(), r, transfer);
      auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
      rows.push_back({{"transfer", transfer}, {"ratio", r}, {"report", to_json(rep)},
                      {"mean_tm_auc", opt(rep.mean_tm_auc())}, {"mean_fm_as", opt(rep.mean_fm_as())}});
      char buf[128];
      std::snprintf(buf, sizeof buf, "%-8s  %5.2f  %6.3f  %6.3f\n", transfer ? "on" : "off", r,
                    rep.mean_tm_auc().value_or(NAN), rep.mean_fm_as().value_or(NAN));
      text += buf;
    }
  }
  nlohmann::json report{{"fingerprint", cfg.fingerprint()}, {"rows", rows}};
  write_atomic(wd.reports() / "ablation.json", report.dump(2) + "\n");
  write_atomic(wd.reports() / "ablation.txt", text);
  out << text;
  return report;
}

}  // namespace colnet
