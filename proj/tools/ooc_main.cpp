// Command-line front end: dataset ingestion, synthetic data, scoring,
// clustering reports, training, evaluation, SRS grid search, the z-test, and
// heatmap export. Config precedence is defaults < --config file < flags; the
// effective configuration is echoed at the end of every report.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ooc/clustering.hpp"
#include "ooc/config.hpp"
#include "ooc/dataset.hpp"
#include "ooc/model.hpp"
#include "ooc/rng.hpp"
#include "ooc/srs.hpp"
#include "ooc/stats.hpp"

namespace {

// Per-subcommand configuration flags. Only flags the user actually passed
// override the config file, so each override checks its option's count.
struct ConfigFlags {
  std::string config_path;
  std::vector<std::string> ablate;
  std::string fusion;
  std::string stance;
  std::string visual_stance;
  double train_fraction = 1.0;
  double val_fraction = 0.2;
  std::uint64_t seed = 17;
  std::size_t epochs = 60;
  std::size_t batch_size = 64;

  CLI::Option* o_fusion = nullptr;
  CLI::Option* o_stance = nullptr;
  CLI::Option* o_visual_stance = nullptr;
  CLI::Option* o_train_fraction = nullptr;
  CLI::Option* o_val_fraction = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_epochs = nullptr;
  CLI::Option* o_batch_size = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file applied over the defaults");
    cmd->add_option("--ablate", ablate,
                    "ablation switch (repeatable): wo-srs|binary-nei|wo-vi-sen|wo-te-sen|"
                    "wo-sens|wo-suc|wo-rec|wo-coc|wo-suc-rec");
    o_fusion = cmd->add_option("--fusion", fusion,
                               "fusion strategy: concat|max_pool|avg_pool|elementwise_mul|"
                               "all_with_fc");
    o_stance = cmd->add_option("--stance", stance,
                               "textual stance head: sen|memory|signed|arith");
    o_visual_stance =
        cmd->add_option("--visual-stance", visual_stance, "visual stance head: sen|memory");
    o_train_fraction = cmd->add_option("--train-fraction", train_fraction,
                                       "fraction of the training pool to use");
    o_val_fraction = cmd->add_option("--val-fraction", val_fraction,
                                     "fraction of the dataset held out for validation");
    o_seed = cmd->add_option("--seed", seed, "random seed");
    o_epochs = cmd->add_option("--epochs", epochs, "training epochs");
    o_batch_size = cmd->add_option("--batch-size", batch_size, "minibatch size");
  }

  ooc::RunConfig resolve(const ooc::RunConfig& defaults = {}) const {
    ooc::RunConfig cfg = defaults;
    if (!config_path.empty()) cfg = ooc::load_config(config_path, cfg);
    for (const std::string& token : ablate) apply_ablation(cfg.ablation, token);
    if (o_fusion->count()) cfg.ablation.fusion = ooc::fusion_from_string(fusion);
    if (o_stance->count()) cfg.ablation.textual_head = ooc::head_kind_from_string(stance);
    if (o_visual_stance->count())
      cfg.ablation.visual_head = ooc::head_kind_from_string(visual_stance);
    if (o_train_fraction->count()) cfg.train_fraction = train_fraction;
    if (o_val_fraction->count()) cfg.val_fraction = val_fraction;
    if (o_seed->count()) cfg.seed = seed;
    if (o_epochs->count()) cfg.epochs = epochs;
    if (o_batch_size->count()) cfg.batch_size = batch_size;
    ooc::validate(cfg);
    return cfg;
  }

  static void apply_ablation(ooc::AblationConfig& ab, const std::string& token) {
    if (token == "wo-srs") {
      ab.use_srs = false;
    } else if (token == "binary-nei") {
      ab.binary_nei = true;
    } else if (token == "wo-vi-sen") {
      ab.use_visual_heads = false;
    } else if (token == "wo-te-sen") {
      ab.use_textual_head = false;
    } else if (token == "wo-sens") {
      ab.use_visual_heads = false;
      ab.use_textual_head = false;
    } else if (token == "wo-suc") {
      ab.drop_clusters.insert(ooc::ClusterRole::kSupporting);
    } else if (token == "wo-rec") {
      ab.drop_clusters.insert(ooc::ClusterRole::kRepresentative);
    } else if (token == "wo-coc") {
      ab.drop_clusters.insert(ooc::ClusterRole::kComplementary);
    } else if (token == "wo-suc-rec") {
      ab.drop_clusters.insert(ooc::ClusterRole::kSupporting);
      ab.drop_clusters.insert(ooc::ClusterRole::kRepresentative);
    } else {
      throw std::invalid_argument("unknown ablation '" + token + "'");
    }
  }
};

// The score/heatmap/ztest commands honor the binary-nei ablation too.
ooc::SrsConfig scoring_config(const ooc::RunConfig& cfg) {
  ooc::SrsConfig srs = cfg.srs;
  if (cfg.ablation.binary_nei) srs.variant = ooc::SrsVariant::kBinaryNei;
  return srs;
}

// Data sink: --out writes a file, otherwise standard output.
struct Sink {
  std::ofstream file;
  std::ostream* out = &std::cout;

  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw std::runtime_error("cannot write output file: " + path);
    out = &file;
  }
  std::ostream& stream() { return *out; }
};

void echo_config(const ooc::RunConfig& cfg) {
  std::cout << "config:\n" << ooc::config_json(cfg) << '\n';
}

std::vector<double> instance_srs(const ooc::ClaimInstance& inst, const ooc::SrsConfig& srs) {
  std::vector<ooc::EntitySet> docs;
  docs.reserve(inst.textual_evidence.size());
  for (const ooc::TextualEvidence& t : inst.textual_evidence) docs.push_back(t.entities);
  return ooc::srs_vector(docs, inst.caption_entities, srs);
}

void print_members(std::ostream& out, const char* tag, const std::vector<std::size_t>& members) {
  out << ' ' << tag << "=[";
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) out << ' ';
    out << members[i];
  }
  out << ']';
}

void print_assignment(std::ostream& out, const std::string& id, const char* space,
                      const ooc::ClusterAssignment& assignment) {
  out << id << ' ' << space;
  print_members(out, "SuC", assignment.supporting);
  print_members(out, "ReC", assignment.representative);
  print_members(out, "CoC", assignment.complementary);
  out << '\n';
}

double best_accuracy(const ooc::TrainHistory& history) {
  return history.epochs.at(history.best_epoch - 1).val_accuracy;
}

void cmd_score(const std::string& dataset_path, const std::string& out_path,
               const ConfigFlags& flags) {
  const ooc::RunConfig cfg = flags.resolve();
  const ooc::SrsConfig srs = scoring_config(cfg);
  const std::vector<ooc::ClaimInstance> instances =
      ooc::ingest(dataset_path, cfg.max_visual_evidence);
  Sink sink(out_path);
  sink.stream() << std::setprecision(17);
  for (const ooc::ClaimInstance& inst : instances) {
    sink.stream() << inst.id << '\t';
    const std::vector<double> scores = instance_srs(inst, srs);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (i) sink.stream() << ' ';
      sink.stream() << scores[i];
    }
    sink.stream() << '\n';
  }
  echo_config(cfg);
}

void cmd_cluster(const std::string& dataset_path, const std::string& out_path,
                 const ConfigFlags& flags) {
  const ooc::RunConfig cfg = flags.resolve();
  const std::vector<ooc::ClaimInstance> instances =
      ooc::ingest(dataset_path, cfg.max_visual_evidence);
  Sink sink(out_path);
  for (const ooc::ClaimInstance& inst : instances) {
    std::vector<ooc::Vec> text_points;
    for (const ooc::TextualEvidence& t : inst.textual_evidence)
      text_points.push_back(t.embedding);
    print_assignment(sink.stream(), inst.id, "textual",
                     ooc::assign_clusters(inst.caption_embedding, text_points, cfg.text_tau_s,
                                          cfg.text_tau_r));
    for (std::size_t space = 0; space < 2; ++space) {
      std::vector<ooc::Vec> points;
      for (const auto& item : inst.visual_evidence) points.push_back(item[space]);
      print_assignment(sink.stream(), inst.id, space == 0 ? "visual_a" : "visual_b",
                       ooc::assign_clusters(inst.image_embeddings[space], points,
                                            cfg.image_tau_s, cfg.image_tau_r));
    }
  }
  echo_config(cfg);
}

void cmd_train(const std::string& dataset_path, const std::string& checkpoint_path,
               const std::string& history_path, const ConfigFlags& flags) {
  const ooc::RunConfig cfg = flags.resolve();
  const std::vector<ooc::ClaimInstance> instances =
      ooc::ingest(dataset_path, cfg.max_visual_evidence);
  ooc::TrainResult result = ooc::train(instances, cfg);
  ooc::save_checkpoint(result.model, cfg, checkpoint_path);

  std::ostringstream history;
  history << std::fixed << std::setprecision(6);
  for (const ooc::EpochStats& e : result.history.epochs)
    history << "epoch " << e.epoch << " train_loss " << e.train_loss << " val_accuracy "
            << e.val_accuracy << '\n';
  history << "best_epoch " << result.history.best_epoch << '\n';
  history << "best_val_accuracy " << best_accuracy(result.history) << '\n';
  history << "train_count " << result.history.train_count << '\n';
  history << "val_count " << result.history.val_count << '\n';
  if (!history_path.empty()) {
    std::ofstream out(history_path);
    if (!out) throw std::runtime_error("cannot write history file: " + history_path);
    out << history.str();
  }
  std::cout << history.str() << "checkpoint " << checkpoint_path << '\n';
  echo_config(cfg);
}

void cmd_eval(const std::string& dataset_path, const std::string& checkpoint_path,
              const ConfigFlags& flags) {
  ooc::Checkpoint ckpt = ooc::load_checkpoint(checkpoint_path);
  const ooc::RunConfig cfg = flags.resolve(ckpt.config);
  const std::vector<ooc::ClaimInstance> instances =
      ooc::ingest(dataset_path, cfg.max_visual_evidence);
  const ooc::Metrics metrics = ooc::evaluate(ckpt.model, cfg, instances);
  std::cout << ooc::metrics_report(metrics, cfg);
}

void cmd_gridsearch(const std::string& dataset_path, const ConfigFlags& flags) {
  const ooc::RunConfig base = flags.resolve();
  const std::vector<ooc::ClaimInstance> instances =
      ooc::ingest(dataset_path, base.max_visual_evidence);

  auto cell = [&instances](const ooc::RunConfig& cfg) {
    return best_accuracy(ooc::train(instances, cfg).history);
  };
  std::cout << std::fixed << std::setprecision(6);

  const double scales[5] = {0.25, 0.5, 1.0, 2.0, 4.0};
  for (double alpha : scales) {
    ooc::RunConfig cfg = base;
    cfg.srs.zeta_mode = ooc::ZetaMode::kProportion;
    cfg.srs.alpha = alpha;
    std::cout << "alpha " << alpha << " accuracy " << cell(cfg) << '\n';
  }
  for (double beta : scales) {
    ooc::RunConfig cfg = base;
    cfg.srs.zeta_mode = ooc::ZetaMode::kBinarization;
    cfg.srs.beta = beta;
    std::cout << "beta " << beta << " accuracy " << cell(cfg) << '\n';
  }
  const double g_as[5] = {0.0, 1.0, 2.0, 4.0, 8.0};
  for (double a : g_as)
    for (std::size_t b : {std::size_t{1}, std::size_t{2}}) {
      ooc::RunConfig cfg = base;
      cfg.srs.g_a = a;
      cfg.srs.g_b = b;
      std::cout << "a " << a << " b " << b << " accuracy " << cell(cfg) << '\n';
    }
  echo_config(base);
}

void cmd_ztest(const std::string& dataset_path, double gamma, std::size_t sample_size,
               const ConfigFlags& flags) {
  const ooc::RunConfig cfg = flags.resolve();
  const ooc::SrsConfig srs = scoring_config(cfg);
  const std::vector<ooc::ClaimInstance> instances =
      ooc::ingest(dataset_path, cfg.max_visual_evidence);

  std::vector<double> pristine;
  std::vector<double> falsified;
  for (const ooc::ClaimInstance& inst : instances) {
    if (inst.textual_evidence.empty()) continue;
    const std::vector<double> scores = instance_srs(inst, srs);
    double sum = 0.0;
    for (double s : scores) sum += s;
    (inst.label == ooc::Label::kPristine ? pristine : falsified)
        .push_back(sum / static_cast<double>(scores.size()));
  }
  if (sample_size > pristine.size() || sample_size > falsified.size())
    throw std::invalid_argument("ztest: sample size " + std::to_string(sample_size) +
                                " exceeds available instances (" +
                                std::to_string(pristine.size()) + " pristine, " +
                                std::to_string(falsified.size()) + " falsified)");
  ooc::Rng rng(cfg.seed);
  rng.shuffle(pristine);
  rng.shuffle(falsified);
  pristine.resize(sample_size);
  falsified.resize(sample_size);

  const ooc::ZTestResult result = ooc::ztest(pristine, falsified, gamma);
  std::cout << std::setprecision(6);
  std::cout << "z " << result.z << '\n';
  std::cout << "p " << result.p << '\n';
  std::cout << "gamma " << result.gamma << '\n';
  std::cout << "n_pristine " << result.n_pristine << '\n';
  std::cout << "n_falsified " << result.n_falsified << '\n';
  echo_config(cfg);
}

void cmd_heatmap(const std::string& dataset_path, const std::string& out_path,
                 const ConfigFlags& flags) {
  const ooc::RunConfig cfg = flags.resolve();
  const std::vector<ooc::ClaimInstance> instances =
      ooc::ingest(dataset_path, cfg.max_visual_evidence);
  const ooc::SrsSummary summary = ooc::summarize_srs(instances, scoring_config(cfg));
  ooc::export_heatmap(summary, out_path);
  std::cout << "wrote " << out_path << '\n';
  std::cout << "skipped_no_textual " << summary.skipped_no_textual << '\n';
  echo_config(cfg);
}

void cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_path,
               const ooc::SynthProfile& profile) {
  const std::vector<ooc::ClaimInstance> instances = ooc::synth_generate(n, seed, profile);
  ooc::emit(instances, out_path);
  std::cout << "wrote " << out_path << " (" << instances.size() << " instances)\n";
  std::cout << "seed " << seed << '\n';
  std::cout << "profile text_dim " << profile.text_dim << " visual_dim " << profile.visual_dim
            << " topics " << profile.topics << " entities_per_topic "
            << profile.entities_per_topic << " ambiguous_fraction "
            << profile.ambiguous_fraction << " noise " << profile.noise << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Out-of-context image-caption detection experiments"};
  app.require_subcommand(1);

  std::string dataset_path, out_path, checkpoint_path, history_path;
  double gamma = 0.7;
  std::size_t sample_size = 0;
  std::size_t synth_n = 0;
  std::uint64_t synth_seed = 17;
  ooc::SynthProfile profile;
  ConfigFlags flags[7];

  CLI::App* score = app.add_subcommand("score", "per-instance SRS vectors");
  score->add_option("dataset", dataset_path, "dataset file")->required();
  score->add_option("--out", out_path, "write scores to a file instead of stdout");
  flags[0].attach(score);
  score->callback([&] { cmd_score(dataset_path, out_path, flags[0]); });

  CLI::App* cluster = app.add_subcommand("cluster", "per-instance cluster assignments");
  cluster->add_option("dataset", dataset_path, "dataset file")->required();
  cluster->add_option("--out", out_path, "write the report to a file instead of stdout");
  flags[1].attach(cluster);
  cluster->callback([&] { cmd_cluster(dataset_path, out_path, flags[1]); });

  CLI::App* train = app.add_subcommand("train", "train a detector");
  train->add_option("dataset", dataset_path, "dataset file")->required();
  train->add_option("--out", checkpoint_path, "checkpoint output path")->required();
  train->add_option("--history", history_path, "also write per-epoch history to a file");
  flags[2].attach(train);
  train->callback([&] { cmd_train(dataset_path, checkpoint_path, history_path, flags[2]); });

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("dataset", dataset_path, "dataset file")->required();
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint to evaluate")->required();
  flags[3].attach(eval);
  eval->callback([&] { cmd_eval(dataset_path, checkpoint_path, flags[3]); });

  CLI::App* grid = app.add_subcommand(
      "gridsearch-srs", "validation accuracy over the alpha, beta, and g(x) grids");
  grid->add_option("dataset", dataset_path, "dataset file")->required();
  flags[4].attach(grid);
  grid->callback([&] { cmd_gridsearch(dataset_path, flags[4]); });

  CLI::App* ztest = app.add_subcommand("ztest", "two-sample one-tail z-test on mean SRS");
  ztest->add_option("dataset", dataset_path, "dataset file")->required();
  ztest->add_option("--gamma", gamma, "margin under the null hypothesis")->required();
  ztest->add_option("--sample-size", sample_size, "instances sampled per label")->required();
  flags[5].attach(ztest);
  ztest->callback([&] { cmd_ztest(dataset_path, gamma, sample_size, flags[5]); });

  CLI::App* heatmap = app.add_subcommand("heatmap", "SRS distribution heatmap data");
  heatmap->add_option("dataset", dataset_path, "dataset file")->required();
  heatmap->add_option("--out", out_path, "heatmap data file")->required();
  flags[6].attach(heatmap);
  heatmap->callback([&] { cmd_heatmap(dataset_path, out_path, flags[6]); });

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--n", synth_n, "instance count")->required();
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--out", out_path, "dataset output path")->required();
  synth->add_option("--text-dim", profile.text_dim, "textual embedding width");
  synth->add_option("--visual-dim", profile.visual_dim, "visual embedding width");
  synth->add_option("--topics", profile.topics, "latent topic count");
  synth->add_option("--entities-per-topic", profile.entities_per_topic,
                    "entity pool size per topic");
  synth->add_option("--ambiguous-fraction", profile.ambiguous_fraction,
                    "fraction of instances with label-uninformative embeddings");
  synth->add_option("--noise", profile.noise, "embedding jitter scale");
  synth->callback([&] { cmd_synth(synth_n, synth_seed, out_path, profile); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
