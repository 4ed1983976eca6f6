// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "colnet/pipeline.hpp"
#include "colnet/toy.hpp"

using namespace colnet;

namespace {

constexpr double kGradTolerance = 1e-4;
constexpr double kGradEpsilon = 1e-6;
constexpr double kGradBudgetSeconds = 60.0;
constexpr std::size_t kGradModels = 24;
constexpr std::size_t kShapeCases = 1000;
constexpr double kSoftmaxTolerance = 1e-9;
constexpr std::size_t kMetricRandomFixtures = 1000;
constexpr std::size_t kAucCases = 1000;
constexpr std::size_t kKbCases = 25;
constexpr std::size_t kTrendSeeds = 5;
constexpr std::size_t kTrendMajority = 4;
constexpr double kTrendBudgetSeconds = 600.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- 1. gradient correctness ---------------------------------------------------------

// Independent forward pass and loss, written directly from the model layout:
// conv (valid, per-position bias) -> ReLU -> max-pool -> dense -> g -> softmax -> CE.
struct OracleForward {
  double loss = 0.0;
  double min_kink_gap = 1e300;  // distance to the nearest ReLU / max-pool kink
};

OracleForward oracle_forward(const CnnModel& m, const Matrix& x, bool positive) {
  OracleForward out;
  std::vector<double> pooled;
  for (const auto& f : m.filters) {
    std::vector<double> z;
    for (std::size_t i = 0; i + f.height <= m.n; ++i) {
      double s = f.bias[i];
      for (std::size_t r = 0; r < f.height; ++r) {
        for (std::size_t c = 0; c < m.d; ++c) s += f.weights[r * m.d + c] * x.data[(i + r) * m.d + c];
      }
      z.push_back(s);
      out.min_kink_gap = std::min(out.min_kink_gap, std::abs(s));
    }
    std::vector<double> sorted = z;
    std::sort(sorted.rbegin(), sorted.rend());
    if (sorted.size() > 1 && sorted[0] > 0.0) out.min_kink_gap = std::min(out.min_kink_gap, sorted[0] - sorted[1]);
    pooled.push_back(sorted[0] > 0.0 ? sorted[0] : 0.0);
  }
  double y[2];
  for (int o = 0; o < 2; ++o) {
    y[o] = m.dense_bias[o];
    for (std::size_t j = 0; j < pooled.size(); ++j) y[o] += pooled[j] * m.dense_weights[j * 2 + o];
    if (m.dense_activation == Activation::relu) {
      out.min_kink_gap = std::min(out.min_kink_gap, std::abs(y[o]));
      y[o] = std::max(0.0, y[o]);
    }
  }
  const double p1 = 1.0 / (1.0 + std::exp(y[0] - y[1]));
  out.loss = positive ? -std::log(p1) : -std::log(1.0 - p1);
  return out;
}

void criterion_gradients() {
  const auto t0 = Clock::now();
  Rng rng(1001);
  std::size_t checked = 0, kink_skips = 0;
  double worst_oracle = 0.0, worst_library = 0.0;
  std::uint64_t seed = 0;
  while (checked < kGradModels) {
    ++seed;
    ModelShape shape;
    shape.n = checked % 2 ? 10 : 6;
    shape.d = (checked / 2) % 2 ? 8 : 4;
    shape.heights = {2, 3};
    shape.filters_per_height = 3;
    shape.dense_activation = (checked / 4) % 3 == 2 ? Activation::relu : Activation::identity;
    const auto model = CnnModel::random(shape, seed, 0.5);
    Example ex{Matrix(shape.n, shape.d), seed % 2 == 0};
    for (auto& v : ex.x.data) v = uniform_real(rng, -1.0, 1.0);

    const auto base = oracle_forward(model, ex.x, ex.positive);
    double library_err = 0.0;
    try {
      library_err = gradient_check(model, ex, kGradEpsilon);
    } catch (const KinkProximityError&) {
      ++kink_skips;
      continue;
    }
    if (base.min_kink_gap < 1e-3) {
      ++kink_skips;
      continue;
    }

    CnnModel analytic = model.zeros_like();
    accumulate_gradient(model, ex.x, ex.positive, analytic);
    CnnModel probe = model;
    auto params = probe.parameter_blocks();
    auto grads = analytic.parameter_blocks();
    double err = 0.0;
    for (std::size_t b = 0; b < params.size(); ++b) {
      for (std::size_t k = 0; k < params[b].size(); ++k) {
        const double saved = params[b][k];
        params[b][k] = saved + kGradEpsilon;
        const double up = oracle_forward(probe, ex.x, ex.positive).loss;
        params[b][k] = saved - kGradEpsilon;
        const double down = oracle_forward(probe, ex.x, ex.positive).loss;
        params[b][k] = saved;
        const double numeric = (up - down) / (2.0 * kGradEpsilon);
        const double denom = std::max({std::abs(grads[b][k]), std::abs(numeric), 1e-8});
        err = std::max(err, std::abs(grads[b][k] - numeric) / denom);
      }
    }
    worst_oracle = std::max(worst_oracle, err);
    worst_library = std::max(worst_library, library_err);
    ++checked;
  }
  const double secs = seconds_since(t0);
  const bool pass = worst_oracle < kGradTolerance && worst_library < kGradTolerance && secs < kGradBudgetSeconds;
  report(1, "gradient correctness", pass,
         std::to_string(checked) + " models (n in {6,10}, d in {4,8}, heights {2,3}), max rel err vs oracle " +
             fmt("%.2e", worst_oracle) + ", gradient_check " + fmt("%.2e", worst_library) + " (< 1e-4), " +
             std::to_string(kink_skips) + " kink draws skipped, " + fmt("%.2f", secs) + " s (< 60 s)");
}

// --- 2. shapes and normalization ---------------------------------------------------

void criterion_shapes() {
  Rng rng(2002);
  std::size_t bad = 0;
  double worst_sum = 0.0;
  for (std::size_t trial = 0; trial < kShapeCases; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 12);
    const std::size_t d = 1 + uniform_index(rng, 10);
    std::vector<std::size_t> heights;
    for (auto k = 1 + uniform_index(rng, 3); k > 0; --k) heights.push_back(1 + uniform_index(rng, n));
    const std::size_t per = 1 + uniform_index(rng, 4);
    const auto model = CnnModel::random({n, d, heights, per, trial % 2 ? Activation::relu : Activation::identity},
                                        trial, uniform_real(rng, 0.01, 1.0));

    auto wv = WordVectorTable::hashed(d, trial);
    SyntheticColumn col;
    for (auto k = uniform_index(rng, 6); k > 0; --k) {
      std::string item;
      for (auto w = uniform_index(rng, 4); w > 0; --w) item += "tok" + std::to_string(uniform_index(rng, 50)) + " ";
      col.items.push_back(item);
    }
    const auto seq = to_word_sequence(col, n);
    const auto x = embed(seq, wv);
    if (x.rows != n || x.cols != d || x.data.size() != n * d) ++bad;
    for (std::size_t r = 0; r < n; ++r) {
      if (seq.tokens[r] != kPadToken) continue;
      for (double v : x.row(r)) bad += v != 0.0;
    }
    for (const auto& f : model.filters) bad += conv_feature(f, x).size() != n - f.height + 1;
    const auto t = forward_trace(model, x);
    bad += t.pooled.size() != heights.size() * per;
    worst_sum = std::max(worst_sum, std::abs(t.probs[0] + t.probs[1] - 1.0));
  }
  report(2, "shape/normalization suite", bad == 0 && worst_sum <= kSoftmaxTolerance,
         std::to_string(kShapeCases) + " random shapes, " + std::to_string(bad) +
             " shape/padding violations, max |sum(softmax) - 1| " + fmt("%.1e", worst_sum) + " (<= 1e-9)");
}

// --- 3. ensemble rule --------------------------------------------------------------

double oracle_ensemble(double p, double v, double s1, double s2) {
  const bool in_band = s2 <= v && v < s1;
  return in_band ? p : v;
}

void criterion_ensemble() {
  const std::vector<std::pair<double, double>> settings{{0.5, 0.08}, {0.5, 0.5}, {1.0, 0.0}, {0.3, 0.1}, {0.9, 0.2}};
  std::size_t cases = 0, mismatches = 0, outside = 0;
  for (const auto& [s1, s2] : settings) {
    for (int i = 0; i <= 100; ++i) {
      for (int j = 0; j <= 100; ++j) {
        const double v = i / 100.0, p = j / 100.0;
        const double s = ensemble_score(p, v, {s1, s2});
        ++cases;
        mismatches += s != oracle_ensemble(p, v, s1, s2);
        outside += s != v && s != p;
      }
    }
  }
  report(3, "ensemble rule oracle", mismatches == 0 && outside == 0,
         std::to_string(cases) + " grid points over 5 (sigma1,sigma2) settings incl. (0.5,0.08), " +
             std::to_string(mismatches) + " mismatches, " + std::to_string(outside) + " outputs outside {v,p}");
}

// --- 4. metrics --------------------------------------------------------------------

struct Fixture {
  std::vector<AnnotationResult> results;
  GoldStandard gold;
};

AnnotationResult accepted(std::string col, std::set<ClassId> classes) {
  AnnotationResult r{std::move(col), {}};
  for (auto& c : classes) r.classes.push_back({c, 1.0, std::nullopt, 1.0, true, false});
  return r;
}

// Pools TP/FP/FN by walking every (column, class) pair.
Prf oracle_prf(const Fixture& fx, bool strict) {
  double tp = 0, fp = 0, fn = 0;
  for (const auto& r : fx.results) {
    const auto& g = fx.gold.at(r.column_id);
    std::set<ClassId> universe = r.accepted();
    universe.insert(g.best);
    universe.insert(g.okay.begin(), g.okay.end());
    const bool voided = strict && !r.accepted().contains(g.best);
    for (const auto& c : universe) {
      const bool is_acc = r.accepted().contains(c);
      const bool is_gold = c == g.best || g.okay.contains(c);
      if (is_acc && is_gold && !voided) ++tp;
      if (is_acc && (!is_gold || voided)) ++fp;
      if (is_gold && !(is_acc && !voided)) ++fn;
    }
  }
  Prf out;
  out.precision = tp + fp == 0 ? 0.0 : tp / (tp + fp);
  out.recall = tp + fn == 0 ? 0.0 : tp / (tp + fn);
  out.f1 = out.precision + out.recall == 0 ? 0.0 : 2 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

bool close(const Prf& a, const Prf& b) {
  return std::abs(a.precision - b.precision) < 1e-12 && std::abs(a.recall - b.recall) < 1e-12 &&
         std::abs(a.f1 - b.f1) < 1e-12;
}

double pair_auc(const std::vector<ScoredSample>& s) {
  double wins = 0, pairs = 0;
  for (const auto& a : s) {
    for (const auto& b : s) {
      if (a.positive && !b.positive) {
        pairs += 1;
        wins += a.score > b.score ? 1.0 : a.score == b.score ? 0.5 : 0.0;
      }
    }
  }
  return wins / pairs;
}

void criterion_metrics() {
  std::vector<Fixture> hand;
  hand.push_back({{accepted("a", {"B"}), accepted("b", {"C"})}, {{"a", {"B", {}}}, {"b", {"C", {}}}}});
  hand.push_back({{accepted("a", {}), accepted("b", {})}, {{"a", {"B", {}}}, {"b", {"C", {}}}}});
  hand.push_back({{accepted("a", {"B", "X"})}, {{"a", {"B", {"O"}}}}});
  hand.push_back({{accepted("a", {"O"})}, {{"a", {"B", {"O"}}}}});
  hand.push_back({{accepted("a", {"B", "O"})}, {{"a", {"B", {"O"}}}}});
  hand.push_back({{accepted("a", {"O", "X", "Y"})}, {{"a", {"B", {"O", "P"}}}}});
  hand.push_back({{accepted("a", {"B"}), accepted("b", {"X"}), accepted("c", {"C", "D"})},
                  {{"a", {"B", {"A"}}}, {"b", {"C", {}}}, {"c", {"C", {"D", "E"}}}}});
  hand.push_back({{accepted("a", {"X", "Y", "Z"})}, {{"a", {"B", {}}}}});
  hand.push_back({{accepted("a", {"B"}), accepted("b", {"O2"})}, {{"a", {"B", {"O"}}}, {"b", {"B2", {"O2"}}}}});
  hand.push_back({{accepted("a", {"B", "O", "P", "Q"}), accepted("b", {})},
                  {{"a", {"B", {"O", "P", "Q"}}}, {"b", {"C", {"D"}}}}});
  // Hand-computed tolerant precision/recall for each fixture above.
  const std::vector<std::pair<double, double>> expected_tolerant{
      {1.0, 1.0}, {0.0, 0.0}, {0.5, 0.5}, {1.0, 0.5},      {1.0, 1.0},
      {1.0 / 3, 1.0 / 3}, {0.75, 0.5}, {0.0, 0.0}, {1.0, 0.5}, {1.0, 4.0 / 6}};

  std::size_t hand_bad = 0;
  for (std::size_t i = 0; i < hand.size(); ++i) {
    const auto t = score_tolerant(hand[i].results, hand[i].gold);
    const auto s = score_strict(hand[i].results, hand[i].gold);
    hand_bad += !close(t, oracle_prf(hand[i], false)) || !close(s, oracle_prf(hand[i], true));
    hand_bad += std::abs(t.precision - expected_tolerant[i].first) > 1e-12 ||
                std::abs(t.recall - expected_tolerant[i].second) > 1e-12;
  }

  Rng rng(4004);
  const std::vector<ClassId> pool{"A", "B", "C", "D", "E", "F"};
  std::size_t order_bad = 0, oracle_bad = 0;
  for (std::size_t trial = 0; trial < kMetricRandomFixtures; ++trial) {
    Fixture fx;
    for (auto c = 1 + uniform_index(rng, 8); c > 0; --c) {
      const auto id = "col" + std::to_string(c);
      GoldEntry g{pool[uniform_index(rng, pool.size())], {}};
      for (const auto& o : pool) {
        if (o != g.best && uniform_unit(rng) < 0.25) g.okay.insert(o);
      }
      fx.gold[id] = g;
      std::set<ClassId> acc;
      for (const auto& o : pool) {
        if (uniform_unit(rng) < 0.35) acc.insert(o);
      }
      fx.results.push_back(accepted(id, acc));
    }
    const auto t = score_tolerant(fx.results, fx.gold);
    const auto s = score_strict(fx.results, fx.gold);
    order_bad += s.f1 > t.f1;
    oracle_bad += !close(t, oracle_prf(fx, false)) || !close(s, oracle_prf(fx, true));
  }

  std::size_t auc_bad = 0;
  for (std::size_t trial = 0; trial < kAucCases; ++trial) {
    std::vector<ScoredSample> s;
    const auto size = 2 + uniform_index(rng, 49);
    for (std::uint64_t i = 0; i < size; ++i) {
      const bool label = i == 0 ? true : i == 1 ? false : uniform_unit(rng) < 0.5;
      s.push_back({static_cast<double>(uniform_index(rng, 12)) / 11.0, label});
    }
    auc_bad += std::abs(auc(s) - pair_auc(s)) > 1e-12;
  }
  report(4, "metric oracles", hand_bad == 0 && order_bad == 0 && oracle_bad == 0 && auc_bad == 0,
         "10 hand fixtures (" + std::to_string(hand_bad) + " mismatches), " +
             std::to_string(kMetricRandomFixtures) + " random fixtures (" + std::to_string(order_bad) +
             " strict>tolerant, " + std::to_string(oracle_bad) + " oracle mismatches), " +
             std::to_string(kAucCases) + " AUC inputs <= 50 (" + std::to_string(auc_bad) + " mismatches)");
}

// --- 5. KB reasoning -----------------------------------------------------------------

void criterion_kb() {
  Rng rng(5005);
  std::size_t bad = 0, cyclic = 0, max_classes = 0;
  for (std::size_t trial = 0; trial < kKbCases; ++trial) {
    const std::size_t nc = 1 + uniform_index(rng, 200);
    max_classes = std::max(max_classes, nc);
    KnowledgeBase::Builder b;
    std::vector<ClassId> ids;
    for (std::size_t i = 0; i < nc; ++i) {
      ids.push_back("C" + std::to_string(i));
      b.add_class(ids.back());
    }
    // Mostly DAG edges (child index > parent index) plus some back edges.
    std::vector<std::vector<char>> reach(nc, std::vector<char>(nc, 0));
    for (std::size_t e = 0; e < nc * 2; ++e) {
      std::size_t a = uniform_index(rng, nc), p = uniform_index(rng, nc);
      if (uniform_unit(rng) < 0.9 && a < p) std::swap(a, p);
      b.add_subclass(ids[a], ids[p]);
      reach[a][p] = 1;
    }
    for (std::size_t k = 0; k < nc; ++k) {
      for (std::size_t i = 0; i < nc; ++i) {
        if (!reach[i][k]) continue;
        for (std::size_t j = 0; j < nc; ++j) reach[i][j] |= reach[k][j];
      }
    }
    bool has_cycle = false;
    for (std::size_t i = 0; i < nc; ++i) has_cycle |= reach[i][i] != 0;
    cyclic += has_cycle;

    std::vector<std::set<std::size_t>> asserted;
    for (std::size_t e = 0; e < 150; ++e) {
      std::set<std::size_t> cls;
      std::set<ClassId> names;
      for (auto k = uniform_index(rng, 4); k > 0; --k) {
        auto c = uniform_index(rng, nc);
        cls.insert(c);
        names.insert(ids[c]);
      }
      asserted.push_back(cls);
      b.add_entity(Entity{"e" + std::to_string(e), "entity " + std::to_string(e), {}, names});
    }
    const auto kb = b.build();
    for (std::size_t c = 0; c < nc; ++c) {
      std::set<ClassId> expected;
      for (std::size_t j = 0; j < nc; ++j) {
        if (reach[c][j] && j != c) expected.insert(ids[j]);
      }
      bad += kb.superclasses_of(ids[c]) != expected;
    }
    for (std::size_t e = 0; e < asserted.size(); ++e) {
      const auto id = "e" + std::to_string(e);
      std::set<ClassId> expected;
      for (auto c : asserted[e]) {
        expected.insert(ids[c]);
        for (std::size_t j = 0; j < nc; ++j) {
          if (reach[c][j]) expected.insert(ids[j]);
        }
      }
      const auto types = kb.types_of(id);
      bad += types != expected;
      for (const auto& c : types) {
        for (const auto& s : kb.superclasses_of(c)) bad += !types.contains(s);
      }
      for (const auto& c : ids) bad += kb.entities_of(c).contains(id) != types.contains(c);
    }
  }
  report(5, "KB reasoning oracle", bad == 0,
         std::to_string(kKbCases) + " random KBs (up to " + std::to_string(max_classes) + " classes, " +
             std::to_string(cyclic) + " with cycles), " + std::to_string(bad) +
             " disagreements with brute-force reachability / duality / upward closure");
}

// --- 6. toy trends -------------------------------------------------------------------

// Training settings for the toy corpus: the library defaults (lr 0.01, 10
// pre-train epochs, K 2000) leave these small models close to p = 0.5, most
// visibly the particular-only models of the transfer-off ablation.
FleetConfig toy_fleet(std::uint64_t seed) {
  FleetConfig f;
  f.sampling = {4, 100, 1.0};
  f.train.learning_rate = 0.05;
  f.train.pretrain_epochs = 20;
  f.train.finetune_budget = 8000;
  f.seed = seed;
  f.workers = std::max(1u, std::thread::hardware_concurrency());
  return f;
}

void criterion_trends() {
  const auto t0 = Clock::now();
  std::size_t a_ok = 0, b_ok = 0, c_ok = 0;
  std::string rows;
  for (std::uint64_t seed = 1; seed <= kTrendSeeds; ++seed) {
    const auto toy = make_toy_corpus({}, seed);
    const auto cands = lookup_all(toy.kb, toy.columns, {});
    auto cfg = toy_fleet(seed);
    const auto fleet = train_fleet(toy.kb, cands, toy.vectors, cfg);

    AnnotateConfig ens;
    ens.seed = seed;
    AnnotateConfig vote;
    vote.mode = Mode::lookup_vote;
    const auto f_ens = score_tolerant(annotate_all(toy.columns, cands, fleet.models, toy.vectors, ens, cfg.workers),
                                      toy.gold).f1;
    const auto f_vote = score_tolerant(annotate_all(toy.columns, cands, {}, toy.vectors, vote), toy.gold).f1;
    a_ok += f_ens >= f_vote;

    const auto auc4 = diagnose(toy.columns, cands, toy.gold, fleet.models, toy.vectors, {4, 20, seed}).mean_tm_auc();
    const auto auc1 = diagnose(toy.columns, cands, toy.gold, fleet.models, toy.vectors, {1, 20, seed}).mean_tm_auc();
    b_ok += auc4 && auc1 && *auc4 >= *auc1;

    const auto gap_low = gap_ablation(toy.kb, toy.columns, cands, toy.gold, toy.vectors, cfg, 0.1, false);
    const auto gap_full = gap_ablation(toy.kb, toy.columns, cands, toy.gold, toy.vectors, cfg, 1.0, false);
    const auto as_low = gap_low.mean_fm_as(), as_full = gap_full.mean_fm_as();
    c_ok += as_low && as_full && *as_low > *as_full;
    // Same settings as gap_ablation(1.0, transfer on); reported, not gated.
    const auto as_transfer =
        diagnose(toy.columns, cands, toy.gold, fleet.models, toy.vectors, {4, 20, derive_seed(seed, "diagnostics")})
            .mean_fm_as();

    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "    seed %llu: F1 ensemble %.3f vs vote %.3f | TM-AUC h=4 %.4f vs h=1 %.4f | FM-AS r=0.1 %.4f vs "
                  "r=1.0 %.4f (transfer off), r=1.0 on %.4f\n",
                  static_cast<unsigned long long>(seed), f_ens, f_vote, auc4.value_or(NAN), auc1.value_or(NAN),
                  as_low.value_or(NAN), as_full.value_or(NAN), as_transfer.value_or(NAN));
    rows += buf;
  }
  const double secs = seconds_since(t0);
  const bool in_time = secs < kTrendBudgetSeconds;
  const auto tally = [](std::size_t k) { return std::to_string(k) + "/" + std::to_string(kTrendSeeds); };
  report(6, "toy trend (a) ensemble F1 >= lookup-vote F1", a_ok >= kTrendMajority && in_time, tally(a_ok));
  report(6, "toy trend (b) TM AUC h=4 >= h=1", b_ok >= kTrendMajority && in_time, tally(b_ok));
  report(6, "toy trend (c) FM AS ratio 0.1 > ratio 1.0 without transfer", c_ok >= kTrendMajority && in_time,
         tally(c_ok) + ", all trends " + fmt("%.1f", secs) + " s (< 600 s)");
  std::fputs(rows.c_str(), stdout);
}

// --- 7. determinism ------------------------------------------------------------------

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (e.path().filename().string().find("manifest") != std::string::npos) {
      auto j = nlohmann::json::parse(body);
      j.erase("created_at");
      body = j.dump();
    }
    out[std::filesystem::relative(e.path(), dir).string()] = body;
  }
  return out;
}

void criterion_determinism() {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / ("colnet-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const auto toy = make_toy_corpus({.columns = 12}, 9);
  write_toy_corpus(toy, root / "toy");

  auto run = [&](const std::string& name, std::size_t workers) {
    PipelineConfig cfg;
    cfg.kb_path = (root / "toy/kb.jsonl").string();
    cfg.tables_path = (root / "toy/tables").string();
    cfg.vectors_path = (root / "toy/vectors.txt").string();
    cfg.workdir = (root / name).string();
    cfg.pretrain_epochs = 3;
    cfg.filters_per_height = 8;
    cfg.seed = 2024;
    cfg.workers = workers;
    std::ostringstream sink;
    cmd_lookup(cfg);
    cmd_train(cfg, sink);
    cmd_annotate(cfg, sink);
    return std::pair{snapshot(root / name / "models"), snapshot(root / name / "annotations")};
  };
  const auto first = run("a", 1);
  const auto second = run("b", 1);
  const auto threaded = run("c", 4);
  fs::remove_all(root);
  std::size_t model_files = 0;
  for (const auto& [name, _] : first.first) model_files += name.ends_with(".json") && name != "manifest.json";
  const bool pass = !first.first.empty() && first.first == second.first && first.second == second.second &&
                    first == threaded;
  report(7, "determinism", pass,
         std::to_string(model_files) + " model files and " + std::to_string(first.second.size()) +
             " annotation files byte-identical across two single-worker runs" +
             (first == threaded ? " and a 4-worker run" : "; 4-worker run differs"));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> criteria{
      {"1", criterion_gradients}, {"2", criterion_shapes}, {"3", criterion_ensemble}, {"4", criterion_metrics},
      {"5", criterion_kb},        {"6", criterion_trends}, {"7", criterion_determinism}};
  for (const auto& [id, fn] : criteria) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(std::stoi(id), "criterion raised", false, e.what());
    }
  }
  std::printf("%s: %d criterion line(s) failed\n", failures ? "FAILED" : "PASSED", failures);
  return failures ? 1 : 0;
}
