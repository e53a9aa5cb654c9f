// horizon: PU-learning pipeline for splitting future-oriented survey text
// into near- and distant-future horizons.
//
// Subcommands: synth (generate a synthetic corpus with hidden labels),
// train (fit a PU classifier: multi-task, pooled, or per-period),
// analyze (score, split, and tabulate assessments with Welch t-tests),
// network (tf-idf / Jaccard co-occurrence graph for one split group).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "horizon/analysis.hpp"
#include "horizon/checkpoint.hpp"
#include "horizon/corpus.hpp"
#include "horizon/errors.hpp"
#include "horizon/mtpu.hpp"
#include "horizon/net.hpp"
#include "horizon/purisk.hpp"
#include "horizon/synth.hpp"
#include "horizon/textmine.hpp"

namespace {

using namespace horizon;

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("failed writing file: " + path.string());
}

struct SynthArgs {
  std::string out;
  std::string truth;
  SynthConfig cfg;
};

int run_synth(const SynthArgs& args) {
  SynthData data = generate(args.cfg);
  write_corpus_jsonl(data.corpus, args.out);
  if (!args.truth.empty()) write_truth_jsonl(data.truth, args.truth);
  std::cout << "wrote " << data.corpus.documents.size() << " documents over "
            << data.corpus.periods() << " periods to " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string corpus_path;
  std::string out;
  std::string mode = "mtpu";
  int min_count = 1;
  double prior = 0.2;
  std::string loss = "logistic";
  std::string estimator = "nn";
  std::string optimizer = "adam";
  std::string schedule = "round-robin";
  int hidden = 500;
  double epsilon = 1e-5;
  int steps_per_task = 1;
  TrainConfig train;
};

LossKind parse_loss(const std::string& name) {
  return name == "sigmoid" ? LossKind::Sigmoid : LossKind::Logistic;
}

std::vector<int> pooled_dims(int input_dim, int hidden) {
  return {input_dim, hidden, hidden, hidden, hidden, 1};
}

int run_train(const TrainArgs& args) {
  PuConfig pu;
  pu.prior = args.prior;
  pu.loss = parse_loss(args.loss);
  pu.nonneg = args.estimator != "unbiased";
  pu.validate();
  args.train.validate();
  if (!(args.epsilon > 0.0 && args.epsilon < 0.5)) {
    throw ValidationError("--epsilon must lie in (0, 0.5)");
  }
  if (args.hidden < 1) throw ValidationError("--hidden must be >= 1");
  if (args.min_count < 1) throw ValidationError("--min-count must be >= 1");
  if (args.steps_per_task < 1) {
    throw ValidationError("--steps-per-task must be >= 1");
  }

  const Corpus corpus = load_corpus(args.corpus_path);
  const Vocabulary vocab = build_vocabulary(corpus, args.min_count);
  const int T = corpus.periods();

  Checkpoint ckpt;
  ckpt.seed = args.train.seed;
  ckpt.epsilon = args.epsilon;
  ckpt.min_count = static_cast<std::uint32_t>(args.min_count);

  if (args.mode == "mtpu") {
    NetConfig net_cfg{args.train.seed, args.epsilon};
    MtpuModel model = build_mtpu(vocab.dim(), T, net_cfg, args.hidden);

    MtpuTrainConfig cfg;
    cfg.prior = args.prior;
    cfg.loss = pu.loss;
    cfg.nonneg = pu.nonneg;
    cfg.train = args.train;
    cfg.steps_per_task = args.steps_per_task;
    cfg.schedule = args.schedule == "summed"
                       ? MtpuTrainConfig::Schedule::Summed
                       : MtpuTrainConfig::Schedule::RoundRobin;

    const MtpuTrainStats stats = mtpu_train(corpus, vocab, model, cfg);
    ckpt = Checkpoint::from_mtpu(model, args.train.seed, args.epsilon,
                                 static_cast<std::uint32_t>(args.min_count));
    std::cout << "mtpu: mean risk " << stats.initial_mean_risk << " -> "
              << stats.final_mean_risk << " over " << stats.steps << " steps ("
              << stats.clamped_steps << " clamped)\n";
  } else if (args.mode == "pu1") {
    std::vector<SparseVec> positives, unlabeled;
    for (const Document& doc : corpus.documents) {
      (doc.kind == DocKind::Current ? positives : unlabeled)
          .push_back(vectorize(doc, vocab));
    }
    Mlp net(pooled_dims(vocab.dim(), args.hidden), false, args.train.seed);
    const TrainStats stats = pu_train(positives, unlabeled, net, pu, args.train);
    ckpt.mode = ModelMode::Single;
    ckpt.periods = 1;
    ckpt.nets.push_back(std::move(net));
    std::cout << "pu1: risk " << stats.initial_risk << " -> "
              << stats.final_risk << " over " << stats.steps << " steps ("
              << stats.clamped_steps << " clamped)\n";
  } else if (args.mode == "pu2") {
    ckpt.mode = ModelMode::PerPeriod;
    ckpt.periods = static_cast<std::uint32_t>(T);
    for (int t = 1; t <= T; ++t) {
      const PeriodSlice slice = period_slice(corpus, t);
      std::vector<SparseVec> positives, unlabeled;
      for (std::size_t i : slice.positives) {
        positives.push_back(vectorize(corpus.documents[i], vocab));
      }
      for (std::size_t i : slice.unlabeled) {
        unlabeled.push_back(vectorize(corpus.documents[i], vocab));
      }
      Mlp net(pooled_dims(vocab.dim(), args.hidden), false,
              args.train.seed + static_cast<std::uint64_t>(t));
      TrainConfig per_task = args.train;
      per_task.seed = args.train.seed + static_cast<std::uint64_t>(t);
      const TrainStats stats = pu_train(positives, unlabeled, net, pu, per_task);
      std::cout << "pu2 period " << corpus.period_labels[t - 1] << ": risk "
                << stats.initial_risk << " -> " << stats.final_risk << "\n";
      ckpt.nets.push_back(std::move(net));
    }
  } else {
    throw ValidationError("unknown training mode: " + args.mode);
  }

  save_checkpoint(ckpt, args.out);
  std::cout << "checkpoint written to " << args.out << "\n";
  return 0;
}

PeriodScores score_unlabeled(const Checkpoint& ckpt, const Corpus& corpus,
                             const Vocabulary& vocab) {
  const int T = corpus.periods();
  if (ckpt.mode != ModelMode::Single &&
      ckpt.periods != static_cast<std::uint32_t>(T)) {
    throw ValidationError("checkpoint covers " + std::to_string(ckpt.periods) +
                          " periods but the corpus has " + std::to_string(T));
  }
  std::optional<MtpuModel> mtpu;
  if (ckpt.mode == ModelMode::Mtpu) mtpu = ckpt.to_mtpu();

  PeriodScores scores(static_cast<std::size_t>(T));
  for (int t = 1; t <= T; ++t) {
    const PeriodSlice slice = period_slice(corpus, t);
    std::vector<SparseVec> vecs;
    std::vector<const SparseVec*> ptrs;
    vecs.reserve(slice.unlabeled.size());
    for (std::size_t i : slice.unlabeled) {
      vecs.push_back(vectorize(corpus.documents[i], vocab));
    }
    for (const SparseVec& v : vecs) ptrs.push_back(&v);

    Eigen::VectorXd out;
    if (ckpt.mode == ModelMode::Mtpu) {
      out = mtpu_score_batch(*mtpu, t, ptrs);
    } else {
      const Mlp& net = ckpt.mode == ModelMode::Single
                           ? ckpt.nets.front()
                           : ckpt.nets[static_cast<std::size_t>(t - 1)];
      BatchCache cache;
      out = forward_batch(net, ptrs, cache).col(0);
    }

    auto& period_scores = scores[static_cast<std::size_t>(t - 1)];
    period_scores.reserve(slice.unlabeled.size());
    for (std::size_t j = 0; j < slice.unlabeled.size(); ++j) {
      period_scores.emplace_back(corpus.documents[slice.unlabeled[j]].id,
                                 out(static_cast<Eigen::Index>(j)));
    }
  }
  return scores;
}

std::string splits_json(const Corpus& corpus,
                        std::span<const SplitResult> splits, double fraction) {
  nlohmann::ordered_json doc;
  doc["fraction"] = fraction;
  doc["periods"] = nlohmann::ordered_json::array();
  for (const SplitResult& split : splits) {
    nlohmann::ordered_json entry;
    entry["period"] =
        corpus.period_labels[static_cast<std::size_t>(split.period - 1)];
    entry["near"] = split.near_ids;
    entry["distant"] = split.distant_ids;
    entry["middle"] = split.middle_ids;
    doc["periods"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

std::vector<SplitResult> load_splits_json(const std::filesystem::path& path,
                                          const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open splits file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": JSON parse failure: " + e.what());
  }
  std::vector<SplitResult> splits;
  const double fraction = doc.at("fraction").get<double>();
  for (const auto& entry : doc.at("periods")) {
    SplitResult split;
    split.fraction = fraction;
    const std::string label = entry.at("period").get<std::string>();
    bool found = false;
    for (int t = 1; t <= corpus.periods(); ++t) {
      if (corpus.period_labels[static_cast<std::size_t>(t - 1)] == label) {
        split.period = t;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ValidationError(path.string() + ": period '" + label +
                            "' is not in the corpus");
    }
    split.near_ids = entry.at("near").get<std::vector<std::string>>();
    split.distant_ids = entry.at("distant").get<std::vector<std::string>>();
    if (entry.contains("middle")) {
      split.middle_ids = entry.at("middle").get<std::vector<std::string>>();
    }
    splits.push_back(std::move(split));
  }
  return splits;
}

struct AnalyzeArgs {
  std::string corpus_path;
  std::string checkpoint_path;
  std::string pu1_path;
  std::string pu2_path;
  std::string out_table;
  std::string out_timeseries;
  std::string out_splits;
  double fraction = 0.2;
};

int run_analyze(const AnalyzeArgs& args) {
  if (!(args.fraction > 0.0 && args.fraction <= 0.5)) {
    throw ValidationError("--fraction must lie in (0, 0.5]");
  }
  const Corpus corpus = load_corpus(args.corpus_path);
  const Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  const Vocabulary vocab =
      build_vocabulary(corpus, static_cast<int>(ckpt.min_count));
  if (ckpt.nets.front().input_dim() != vocab.dim()) {
    throw ValidationError(
        "checkpoint input dim does not match the corpus vocabulary (" +
        std::to_string(ckpt.nets.front().input_dim()) + " vs " +
        std::to_string(vocab.dim()) + ")");
  }

  const PeriodScores primary = score_unlabeled(ckpt, corpus, vocab);

  std::optional<PeriodScores> pu1, pu2;
  if (!args.pu1_path.empty()) {
    const Checkpoint extra = load_checkpoint(args.pu1_path);
    const Vocabulary extra_vocab =
        build_vocabulary(corpus, static_cast<int>(extra.min_count));
    pu1 = score_unlabeled(extra, corpus, extra_vocab);
  }
  if (!args.pu2_path.empty()) {
    const Checkpoint extra = load_checkpoint(args.pu2_path);
    const Vocabulary extra_vocab =
        build_vocabulary(corpus, static_cast<int>(extra.min_count));
    pu2 = score_unlabeled(extra, corpus, extra_vocab);
  }

  const AnalysisResult result = assessment_table(
      corpus, primary, pu1 ? &*pu1 : nullptr, pu2 ? &*pu2 : nullptr,
      args.fraction);

  write_text_file(args.out_table, assessment_table_csv(result.rows));
  write_text_file(args.out_timeseries, timeseries_csv(result.rows));
  if (!args.out_splits.empty()) {
    write_text_file(args.out_splits,
                    splits_json(corpus, result.splits, args.fraction));
  }

  for (const AssessmentRow& row : result.rows) {
    if (!row.note.empty()) {
      std::cerr << "warning: period " << row.period_label << ": " << row.note
                << "\n";
    }
  }
  std::cout << "wrote " << result.rows.size() << " period rows to "
            << args.out_table << "\n";
  return 0;
}

struct NetworkArgs {
  std::string corpus_path;
  std::string splits_path;
  std::string period;
  std::string horizon = "near";
  int k = 50;
  double edge_threshold = -1.0;  // negative: keep the strongest edge_cap
  int edge_cap = 60;
  std::string out_dot;
  std::string out_json;
};

int run_network(const NetworkArgs& args) {
  if (args.k < 1) throw ValidationError("--k must be >= 1");
  if (args.edge_cap < 0) throw ValidationError("--edge-cap must be >= 0");
  const Corpus corpus = load_corpus(args.corpus_path);
  const std::vector<SplitResult> splits =
      load_splits_json(args.splits_path, corpus);
  const std::vector<Group> groups = groups_from_splits(splits, corpus);

  const HorizonKind horizon =
      args.horizon == "distant" ? HorizonKind::Distant : HorizonKind::Near;
  const Group* target = nullptr;
  for (const Group& g : groups) {
    if (g.period_label == args.period && g.horizon == horizon) {
      target = &g;
      break;
    }
  }
  if (!target) {
    throw ValidationError("no " + args.horizon + " group for period '" +
                          args.period + "' in the splits file");
  }

  std::optional<double> threshold;
  if (args.edge_threshold >= 0.0) threshold = args.edge_threshold;
  const CooccurrenceNetwork network =
      build_network(*target, groups, corpus, args.k, threshold, args.edge_cap);

  if (!args.out_dot.empty()) {
    write_text_file(args.out_dot, export_network_dot(network));
  }
  if (!args.out_json.empty()) {
    write_text_file(args.out_json, export_network_json(network));
  }
  std::cout << "network for " << target->label() << ": "
            << network.nodes.size() << " nodes, " << network.edges.size()
            << " edges\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "PU-learning toolkit: split future-oriented survey text into near- and "
      "distant-future horizons, tabulate assessments, and mine co-occurrence "
      "networks"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "Read defaults from a TOML file (flags take precedence)");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic corpus with hidden future labels");
  synth_cmd->add_option("--out", synth_args.out, "Corpus JSONL output path")
      ->required();
  synth_cmd->add_option("--truth", synth_args.truth,
                        "Hidden-label JSONL output path");
  synth_cmd->add_option("--periods", synth_args.cfg.periods, "Number of periods")
      ->capture_default_str();
  synth_cmd->add_option("--pos", synth_args.cfg.docs_positive,
                        "Current documents per period")
      ->capture_default_str();
  synth_cmd->add_option("--unl", synth_args.cfg.docs_unlabeled,
                        "Future documents per period")
      ->capture_default_str();
  synth_cmd->add_option("--vocab", synth_args.cfg.vocab_size, "Vocabulary size")
      ->capture_default_str();
  synth_cmd->add_option("--prior", synth_args.cfg.prior,
                        "Hidden positive fraction among future documents")
      ->capture_default_str();
  synth_cmd
      ->add_option("--overlap", synth_args.cfg.topic_overlap,
                   "Topic overlap in [0, 0.5]; 0 = separable")
      ->capture_default_str();
  synth_cmd->add_option("--len-min", synth_args.cfg.doc_len_min,
                        "Minimum document length")
      ->capture_default_str();
  synth_cmd->add_option("--len-max", synth_args.cfg.doc_len_max,
                        "Maximum document length")
      ->capture_default_str();
  synth_cmd->add_option("--first-month", synth_args.cfg.first_month,
                        "Label of the first period (YYYY-MM)")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_args.cfg.seed, "Random seed")
      ->capture_default_str();

  TrainArgs train_args;
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train a PU classifier on a corpus");
  train_cmd->add_option("--corpus", train_args.corpus_path, "Corpus JSONL path")
      ->required();
  train_cmd->add_option("--out", train_args.out, "Checkpoint output path")
      ->required();
  train_cmd
      ->add_option("--mode", train_args.mode,
                   "mtpu (shared trunk + per-period heads), pu1 (one pooled "
                   "model), pu2 (one model per period)")
      ->check(CLI::IsMember({"mtpu", "pu1", "pu2"}))
      ->capture_default_str();
  train_cmd
      ->add_option("--min-count", train_args.min_count,
                   "Vocabulary occurrence threshold")
      ->capture_default_str();
  train_cmd->add_option("--prior", train_args.prior, "Class prior p(y=+1)")
      ->capture_default_str();
  train_cmd->add_option("--loss", train_args.loss, "Surrogate loss")
      ->check(CLI::IsMember({"logistic", "sigmoid"}))
      ->capture_default_str();
  train_cmd
      ->add_option("--estimator", train_args.estimator,
                   "nn (non-negative correction) or unbiased")
      ->check(CLI::IsMember({"nn", "unbiased"}))
      ->capture_default_str();
  train_cmd->add_option("--epochs", train_args.train.epochs, "Training epochs")
      ->capture_default_str();
  train_cmd
      ->add_option("--lr", train_args.train.optim.learning_rate, "Learning rate")
      ->capture_default_str();
  train_cmd
      ->add_option("--batch-pos", train_args.train.batch_pos,
                   "Positive samples per minibatch")
      ->capture_default_str();
  train_cmd
      ->add_option("--batch-unl", train_args.train.batch_unl,
                   "Unlabeled samples per minibatch")
      ->capture_default_str();
  train_cmd
      ->add_option("--weight-decay", train_args.train.optim.weight_decay,
                   "L2 coefficient added to gradients")
      ->capture_default_str();
  train_cmd->add_option("--optimizer", train_args.optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  train_cmd->add_option("--hidden", train_args.hidden, "Hidden layer width")
      ->capture_default_str();
  train_cmd
      ->add_option("--epsilon", train_args.epsilon,
                   "Probability clamp in (0, 0.5) for reported probabilities")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_args.train.seed, "Random seed")
      ->capture_default_str();
  train_cmd
      ->add_option("--schedule", train_args.schedule,
                   "mtpu task schedule: round-robin or summed")
      ->check(CLI::IsMember({"round-robin", "summed"}))
      ->capture_default_str();
  train_cmd
      ->add_option("--steps-per-task", train_args.steps_per_task,
                   "Minibatch steps per task per cycle (mtpu)")
      ->capture_default_str();

  AnalyzeArgs analyze_args;
  CLI::App* analyze_cmd = app.add_subcommand(
      "analyze",
      "Score unlabeled documents, split by quantile, and tabulate "
      "assessments with Welch t-tests");
  analyze_cmd
      ->add_option("--corpus", analyze_args.corpus_path, "Corpus JSONL path")
      ->required();
  analyze_cmd
      ->add_option("--checkpoint", analyze_args.checkpoint_path,
                   "Primary model checkpoint")
      ->required();
  analyze_cmd
      ->add_option("--pu1", analyze_args.pu1_path,
                   "Optional pooled-model checkpoint for comparison columns");
  analyze_cmd
      ->add_option("--pu2", analyze_args.pu2_path,
                   "Optional per-period checkpoint for comparison columns");
  analyze_cmd
      ->add_option("--out-table", analyze_args.out_table,
                   "Assessment table CSV output path")
      ->required();
  analyze_cmd
      ->add_option("--out-timeseries", analyze_args.out_timeseries,
                   "Tidy time-series CSV output path")
      ->required();
  analyze_cmd
      ->add_option("--out-splits", analyze_args.out_splits,
                   "Split-membership JSON output path (input of `network`)");
  analyze_cmd
      ->add_option("--fraction", analyze_args.fraction,
                   "Quantile fraction for the near/distant split")
      ->capture_default_str();

  NetworkArgs network_args;
  CLI::App* network_cmd = app.add_subcommand(
      "network", "Export the co-occurrence network of one split group");
  network_cmd
      ->add_option("--corpus", network_args.corpus_path, "Corpus JSONL path")
      ->required();
  network_cmd
      ->add_option("--splits", network_args.splits_path,
                   "Split-membership JSON from `analyze`")
      ->required();
  network_cmd->add_option("--period", network_args.period, "Period label (YYYY-MM)")
      ->required();
  network_cmd->add_option("--horizon", network_args.horizon, "near or distant")
      ->check(CLI::IsMember({"near", "distant"}))
      ->capture_default_str();
  network_cmd
      ->add_option("--k", network_args.k, "Number of top tf-idf words to keep")
      ->capture_default_str();
  network_cmd->add_option("--edge-threshold", network_args.edge_threshold,
                          "Keep edges with Jaccard >= threshold; when unset, "
                          "keep the strongest --edge-cap edges");
  network_cmd->add_option("--edge-cap", network_args.edge_cap,
                          "Edge budget when no threshold is given")
      ->capture_default_str();
  network_cmd->add_option("--out-dot", network_args.out_dot, "DOT output path");
  network_cmd->add_option("--out-json", network_args.out_json, "JSON output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth_args);
    if (train_cmd->parsed()) {
      train_args.train.optim.kind =
          train_args.optimizer == "sgd" ? OptimKind::Sgd : OptimKind::Adam;
      return run_train(train_args);
    }
    if (analyze_cmd->parsed()) return run_analyze(analyze_args);
    if (network_cmd->parsed()) return run_network(network_args);
  } catch (const horizon::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
