// colnet: command-line front end for the column annotation pipeline.
//
//   colnet lookup   --kb kb.jsonl --tables tables/ --workdir work
//   colnet train    --kb kb.jsonl --tables tables/ --workdir work [--vectors v.txt]
//   colnet annotate --kb kb.jsonl --tables tables/ --workdir work --mode colnet_ensemble
//   colnet evaluate --workdir work --gold gold.csv [--alpha-sweep 0.1,0.2] [--diagnostics]
//   colnet ablate   --workdir work --gold gold.csv --ratios 0.1,0.5,1.0
//   colnet make-toy --out dir [--seed 7]
//
// Exit status: 0 success, 1 usage error, 2 data error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "colnet/pipeline.hpp"
#include "colnet/toy.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct Flags {
  std::string config;
  std::optional<std::string> kb, tables, gold, vectors, workdir, mode, activation;
  std::optional<bool> header;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers, h, n_samples, per_cell_limit, max_per_bucket, pretrain_epochs, batch_size,
      finetune_budget, filters_per_height, hashed_dimension;
  std::optional<double> sigma1, sigma2, alpha, min_support, learning_rate, percentile;
};

void add_shared(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON config file; flags override its values");
  cmd.add_option("--workdir", f.workdir, "Work directory");
  cmd.add_option("--seed", f.seed, "Random seed");
  cmd.add_option("--workers", f.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd.add_option("--mode", f.mode, "colnet | colnet_ensemble | lookup_vote");
  cmd.add_option("--kb", f.kb, "Knowledge base (JSON lines)");
  cmd.add_option("--tables", f.tables, "CSV table file or directory of CSV files");
  cmd.add_option("--header", f.header, "Tables have a header row (true/false)");
  cmd.add_option("--gold", f.gold, "Gold standard CSV");
  cmd.add_option("--vectors", f.vectors, "word2vec text vectors (hashed vectors if omitted)");
  cmd.add_option("--synthetic-size", f.h, "Synthetic column size h");
  cmd.add_option("--samples", f.n_samples, "Synthetic test columns per column (N)");
  cmd.add_option("--sigma1", f.sigma1, "Upper vote threshold");
  cmd.add_option("--sigma2", f.sigma2, "Lower vote threshold");
  cmd.add_option("--alpha", f.alpha, "Decision threshold (mode default if omitted)");
  cmd.add_option("--per-cell-limit", f.per_cell_limit, "Entities kept per cell lookup");
  cmd.add_option("--min-support", f.min_support, "Minimum candidate support fraction");
  cmd.add_option("--max-per-bucket", f.max_per_bucket, "Synthetic columns per sample bucket");
  cmd.add_option("--length-percentile", f.percentile, "Sequence-length percentile");
  cmd.add_option("--learning-rate", f.learning_rate, "SGD learning rate");
  cmd.add_option("--batch-size", f.batch_size, "SGD batch size");
  cmd.add_option("--pretrain-epochs", f.pretrain_epochs, "Epochs on general samples");
  cmd.add_option("--finetune-budget", f.finetune_budget, "Fine-tuning sample budget K");
  cmd.add_option("--filters", f.filters_per_height, "Filters per height");
  cmd.add_option("--dense-activation", f.activation, "identity | relu");
  cmd.add_option("--hashed-dimension", f.hashed_dimension, "Dimension of hashed fallback vectors");
  for (auto* opt : cmd.get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

template <class T>
void set_if(T& dst, const std::optional<T>& src) {
  if (src) dst = *src;
}

colnet::PipelineConfig resolve(const Flags& f) {
  colnet::PipelineConfig c;
  if (!f.config.empty()) c = colnet::load_config(f.config);
  set_if(c.kb_path, f.kb);
  set_if(c.tables_path, f.tables);
  set_if(c.gold_path, f.gold);
  set_if(c.vectors_path, f.vectors);
  set_if(c.workdir, f.workdir);
  set_if(c.mode, f.mode);
  set_if(c.dense_activation, f.activation);
  set_if(c.header, f.header);
  set_if(c.seed, f.seed);
  set_if(c.workers, f.workers);
  set_if(c.h, f.h);
  set_if(c.n_samples, f.n_samples);
  set_if(c.per_cell_limit, f.per_cell_limit);
  set_if(c.max_per_bucket, f.max_per_bucket);
  set_if(c.pretrain_epochs, f.pretrain_epochs);
  set_if(c.batch_size, f.batch_size);
  set_if(c.finetune_budget, f.finetune_budget);
  set_if(c.filters_per_height, f.filters_per_height);
  set_if(c.hashed_dimension, f.hashed_dimension);
  set_if(c.sigma1, f.sigma1);
  set_if(c.sigma2, f.sigma2);
  set_if(c.min_support_fraction, f.min_support);
  set_if(c.learning_rate, f.learning_rate);
  set_if(c.length_percentile, f.percentile);
  if (f.alpha) c.alpha = f.alpha;
  return c;
}

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw colnet::PreconditionError("missing required setting " + flag);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic column type annotation with lookup, synthetic columns and CNN classifiers"};
  app.require_subcommand(1);
  Flags flags;

  auto* lookup = app.add_subcommand("lookup", "Lookup candidate classes for every table column");
  auto* train = app.add_subcommand("train", "Build training samples and train one classifier per class");
  auto* annotate = app.add_subcommand("annotate", "Score and annotate every column");
  auto* evaluate = app.add_subcommand("evaluate", "Strict/tolerant precision, recall and F1");
  auto* ablate = app.add_subcommand("ablate", "Particular-entity ratio sweep with and without transfer");
  auto* toy = app.add_subcommand("make-toy", "Write the synthetic demo corpus");
  for (auto* cmd : {lookup, train, annotate, evaluate, ablate}) add_shared(*cmd, flags);

  std::vector<double> alpha_sweep, ratios, eval_ratios;
  bool diagnostics = false, force = false, macro = false;
  evaluate->add_option("--alpha-sweep", alpha_sweep, "Comma-separated thresholds to re-score")->delimiter(',');
  evaluate->add_flag("--diagnostics", diagnostics, "Per-class TM AUC / FM AS");
  evaluate->add_option("--ablation", eval_ratios, "Also run the ratio sweep with these ratios")->delimiter(',');
  evaluate->add_flag("--force", force, "Accept artifacts from different configurations");
  evaluate->add_flag("--macro", macro, "Macro instead of micro averaging");
  ablate->add_option("--ratios", ratios, "Comma-separated particular-entity ratios")
      ->delimiter(',')
      ->default_val(std::vector<double>{0.1, 0.5, 1.0});

  std::string toy_out;
  std::uint64_t toy_seed = 7;
  toy->add_option("--out", toy_out, "Output directory")->required();
  toy->add_option("--seed", toy_seed, "Corpus seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (toy->parsed()) {
      colnet::write_toy_corpus(colnet::make_toy_corpus({}, toy_seed), toy_out);
      std::cout << "wrote toy corpus to " << toy_out << "\n";
      return 0;
    }
    auto cfg = resolve(flags);
    if (!colnet::parse_mode(cfg.mode)) {
      std::cerr << "error: unknown mode '" << cfg.mode << "' (expected colnet, colnet_ensemble or lookup_vote)\n";
      return kUsageError;
    }
    if (lookup->parsed()) {
      require(cfg.kb_path, "--kb");
      require(cfg.tables_path, "--tables");
      colnet::cmd_lookup(cfg);
    } else if (train->parsed()) {
      require(cfg.kb_path, "--kb");
      const auto skipped = colnet::cmd_train(cfg);
      if (skipped) std::cerr << skipped << " class(es) skipped\n";
    } else if (annotate->parsed()) {
      colnet::cmd_annotate(cfg);
    } else if (evaluate->parsed()) {
      colnet::cmd_evaluate(cfg, {alpha_sweep, diagnostics, force,
                                 macro ? colnet::Averaging::macro : colnet::Averaging::micro});
      if (!eval_ratios.empty()) {
        require(cfg.kb_path, "--kb");
        colnet::cmd_ablate(cfg, eval_ratios);
      }
    } else if (ablate->parsed()) {
      require(cfg.kb_path, "--kb");
      colnet::cmd_ablate(cfg, ratios);
    }
  } catch (const colnet::PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return 0;
}
