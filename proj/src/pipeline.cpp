#include "rlkge/pipeline.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "rlkge/checkpoint.hpp"
#include "rlkge/clustering.hpp"
#include "rlkge/errors.hpp"
#include "rlkge/evaluation.hpp"
#include "rlkge/trainer.hpp"

namespace rlkge {

KnowledgeGraph make_synthetic_graph(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.entities < 2 || spec.relations < 1 || spec.types < 1 || spec.latent_dim < 1 ||
      spec.domain_types < 1 || spec.range_types < 1 || spec.domain_types > spec.types ||
      spec.range_types > spec.types || spec.entities < spec.types) {
    throw UsageError("inconsistent synthetic graph spec");
  }
  if (!(spec.valid_fraction >= 0 && spec.test_fraction >= 0 &&
        spec.valid_fraction + spec.test_fraction < 1)) {
    throw UsageError("split fractions must be non-negative and sum below 1");
  }
  Rng rng(seed);
  const std::size_t n = spec.entities;
  Matrix latent(n, spec.latent_dim);
  for (auto& x : latent.data()) x = rng.uniform(-1.0, 1.0);
  const auto type_of = [&](std::size_t e) { return e * spec.types / n; };

  Vocabulary entities;
  Vocabulary relations;
  for (std::size_t e = 0; e < n; ++e) entities.intern(fmt::format("e{:04}", e));
  for (std::size_t r = 0; r < spec.relations; ++r) relations.intern(fmt::format("r{:03}", r));

  std::vector<Triple> all;
  std::vector<std::size_t> types(spec.types);
  std::vector<double> shift(spec.latent_dim);
  for (std::size_t r = 0; r < spec.relations; ++r) {
    std::iota(types.begin(), types.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(types));
    std::vector<bool> in_domain(spec.types, false), in_range(spec.types, false);
    for (std::size_t i = 0; i < spec.domain_types; ++i) in_domain[types[i]] = true;
    rng.shuffle(std::span<std::size_t>(types));
    for (std::size_t i = 0; i < spec.range_types; ++i) in_range[types[i]] = true;
    for (auto& s : shift) s = rng.uniform(-1.0, 1.0);

    for (std::size_t h = 0; h < n; ++h) {
      if (!in_domain[type_of(h)]) continue;
      std::size_t best = n;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < n; ++t) {
        if (t == h || !in_range[type_of(t)]) continue;
        double d = 0.0;
        for (std::size_t j = 0; j < spec.latent_dim; ++j) {
          const double diff = latent(h, j) + shift[j] - latent(t, j);
          d += diff * diff;
        }
        if (d < best_d) {
          best_d = d;
          best = t;
        }
      }
      if (best < n) {
        all.push_back({static_cast<EntityId>(h), static_cast<RelationId>(r),
                       static_cast<EntityId>(best)});
      }
    }
  }

  rng.shuffle(std::span<Triple>(all));
  const auto n_test = static_cast<std::size_t>(spec.test_fraction * static_cast<double>(all.size()));
  const auto n_valid =
      static_cast<std::size_t>(spec.valid_fraction * static_cast<double>(all.size()));
  std::vector<Triple> test(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<Triple> valid(all.begin() + static_cast<std::ptrdiff_t>(n_test),
                            all.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid));
  std::vector<Triple> train(all.begin() + static_cast<std::ptrdiff_t>(n_test + n_valid), all.end());
  return KnowledgeGraph(std::move(entities), std::move(relations), std::move(train),
                        std::move(valid), std::move(test));
}

TrainMode parse_train_mode(std::string_view name) {
  if (name == "plain") return TrainMode::Plain;
  if (name == "strl") return TrainMode::STRL;
  if (name == "mtrl") return TrainMode::MTRL;
  if (name == "xscore") return TrainMode::XScore;
  throw UsageError("unknown mode '" + std::string(name) + "' (plain|strl|mtrl|xscore)");
}

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Plain: return "plain";
    case TrainMode::STRL: return "strl";
    case TrainMode::MTRL: return "mtrl";
    case TrainMode::XScore: return "xscore";
  }
  return "unknown";
}

namespace {

void write_mask(const std::filesystem::path& path, std::span<const std::uint8_t> mask) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (auto m : mask) out << (m ? '1' : '0') << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::uint8_t> read_mask(const std::filesystem::path& path) {
  // Same 0/1-per-line layout as noise labels.
  return read_noise_labels(path).is_noise;
}

class CurveWriter {
 public:
  explicit CurveWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
    if (!out_) throw DataError("cannot write " + path.string());
    out_ << "phase,step,loss,kept,mean_reward\n";
  }
  void epochs(std::string_view phase, std::span<const double> losses, std::size_t kept) {
    for (std::size_t i = 0; i < losses.size(); ++i) {
      out_ << phase << ',' << i + 1 << ',' << fmt::format("{}", losses[i]) << ',' << kept << ",\n";
    }
  }
  void episodes(std::span<const EpisodeStats> stats) {
    for (const auto& s : stats) {
      out_ << "joint," << s.episode << ',' << fmt::format("{}", s.last_loss) << ',' << s.kept
           << ',' << fmt::format("{}", s.mean_reward) << '\n';
    }
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> names_of(const Vocabulary& v) {
  return {v.names().begin(), v.names().end()};
}

}  // namespace

TrainSummary train_to_dir(const KnowledgeGraph& graph, TrainMode mode, const TrainConfig& cfg,
                          const std::filesystem::path& out_dir,
                          const std::optional<std::filesystem::path>& clusters_file) {
  cfg.validate();
  std::filesystem::create_directories(out_dir);
  write_config_file(out_dir / "config.effective", cfg);
  const auto ent_names = names_of(graph.entities());
  const auto rel_names = names_of(graph.relations());
  CurveWriter curve(out_dir / "curve.csv");
  TrainSummary summary;
  summary.train_size = graph.train().size();

  // Stale outputs of an earlier mode must not survive a rerun.
  std::filesystem::remove(out_dir / "policy.ckpt");
  std::filesystem::remove(out_dir / "clusters.tsv");

  switch (mode) {
    case TrainMode::Plain: {
      const auto pre = pretrain_kge(graph, cfg);
      save_model(out_dir / "model.ckpt", pre.store, ent_names, rel_names);
      std::vector<std::uint8_t> mask(graph.train().size(), 1);
      write_mask(out_dir / "mask.txt", mask);
      curve.epochs("pretrain", pre.loss_curve, mask.size());
      summary.kept = mask.size();
      break;
    }
    case TrainMode::XScore: {
      const auto xs = xscore_baseline(graph, cfg.delta, cfg);
      save_model(out_dir / "model.ckpt", xs.store, ent_names, rel_names);
      write_mask(out_dir / "mask.txt", xs.mask);
      summary.kept = static_cast<std::size_t>(std::count(xs.mask.begin(), xs.mask.end(), 1));
      curve.epochs("pretrain", xs.pretrain_curve, xs.mask.size());
      curve.epochs("retrain", xs.retrain_curve, summary.kept);
      break;
    }
    case TrainMode::STRL:
    case TrainMode::MTRL: {
      const auto policy_mode = mode == TrainMode::STRL ? PolicyMode::STRL : PolicyMode::MTRL;
      std::optional<RelationClusters> given;
      if (policy_mode == PolicyMode::MTRL && clusters_file) {
        RelationClusters c;
        c.assignment = read_clusters(*clusters_file, rel_names, &c.k);
        given = std::move(c);
      }
      const auto result = joint_train(graph, policy_mode, cfg, given ? &*given : nullptr);
      save_model(out_dir / "model.ckpt", result.store, ent_names, rel_names);
      save_policy(out_dir / "policy.ckpt", result.policy, result.cluster_of, result.store.dim);
      if (policy_mode == PolicyMode::MTRL) {
        RelationClusters c;
        c.k = result.policy.shared.rows();
        c.assignment = result.cluster_of;
        write_clusters(out_dir / "clusters.tsv", c, rel_names);
      }
      write_mask(out_dir / "mask.txt", result.mask);
      summary.kept =
          static_cast<std::size_t>(std::count(result.mask.begin(), result.mask.end(), 1));
      curve.epochs("pretrain", result.pretrain_curve, result.mask.size());
      curve.episodes(result.episodes);
      break;
    }
  }
  return summary;
}

namespace {

struct ClassificationData {
  std::vector<ClassificationTriple> valid;
  std::vector<ClassificationTriple> test;
};

nlohmann::ordered_json model_metrics(const EmbeddingStore& store, const KnowledgeGraph& graph,
                                     const ClassificationData* cls, std::size_t threads) {
  const auto scorer = store_scorer(store);
  const auto rk = link_prediction(scorer, graph, threads);
  nlohmann::ordered_json m = {{"mrr", rk.mrr},
                              {"hits@1", rk.hits1},
                              {"hits@3", rk.hits3},
                              {"hits@10", rk.hits10}};
  if (cls && !cls->valid.empty() && !cls->test.empty()) {
    m["classification_accuracy"] =
        triple_classification(scorer, graph.num_relations(), cls->valid, cls->test).accuracy;
  }
  return m;
}

std::size_t count_kept(std::span<const std::uint8_t> mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
}

struct RunOutcome {
  nlohmann::ordered_json doc;
  double strl_f1 = 0.0;
  double xscore_f1_matched = 0.0;
  double plain_mrr = 0.0;
  double strl_mrr = 0.0;
  double mtrl_mrr = 0.0;
};

RunOutcome run_models(const KnowledgeGraph& graph, const NoiseLabels* labels,
                      const ClassificationData* cls, const TrainConfig& cfg) {
  RunOutcome out;
  auto& doc = out.doc;
  const std::size_t threads = cfg.threads;

  const auto plain = pretrain_kge(graph, cfg);
  const auto xs = xscore_baseline(graph, cfg.delta, cfg);
  const auto strl = joint_train(graph, PolicyMode::STRL, cfg);
  const auto mtrl = joint_train(graph, PolicyMode::MTRL, cfg);

  doc["models"]["plain"] = model_metrics(plain.store, graph, cls, threads);
  doc["models"]["xscore"] = model_metrics(xs.store, graph, cls, threads);
  doc["models"]["strl"] = model_metrics(strl.store, graph, cls, threads);
  doc["models"]["mtrl"] = model_metrics(mtrl.store, graph, cls, threads);
  out.plain_mrr = doc["models"]["plain"]["mrr"].get<double>();
  out.strl_mrr = doc["models"]["strl"]["mrr"].get<double>();
  out.mtrl_mrr = doc["models"]["mtrl"]["mrr"].get<double>();

  doc["kept"] = {{"train", graph.train().size()},
                 {"xscore", count_kept(xs.mask)},
                 {"strl", count_kept(strl.mask)},
                 {"mtrl", count_kept(mtrl.mask)}};

  if (labels && labels->noise_count() > 0) {
    const auto& y = labels->is_noise;
    const std::vector<std::uint8_t> all(y.size(), 1);
    const std::size_t strl_dropped = y.size() - count_kept(strl.mask);
    out.strl_f1 = noise_detection_f1(strl.mask, y);
    out.xscore_f1_matched = noise_detection_f1_at_count(xs.pretrain_scores, y, strl_dropped);
    doc["noise_detection"] = {
        {"select_all_f1", noise_detection_f1(all, y)},
        {"plain_score_max_f1", noise_detection_max_f1(xs.pretrain_scores, y)},
        {"xscore_mask_f1", noise_detection_f1(xs.mask, y)},
        {"xscore_f1_at_strl_count", out.xscore_f1_matched},
        {"strl_mask_f1", out.strl_f1},
        {"mtrl_mask_f1", noise_detection_f1(mtrl.mask, y)}};
  }
  return out;
}

double mean_of(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

nlohmann::ordered_json evaluate_checkpoint(const EvaluateInputs& inputs) {
  const auto ck = load_model(inputs.checkpoint);
  const auto graph = load_graph_dir(inputs.graph_dir);
  if (ck.entity_names.size() != graph.num_entities() ||
      ck.relation_names.size() != graph.num_relations()) {
    throw DataError("checkpoint vocabulary does not match the graph");
  }
  for (std::size_t i = 0; i < ck.entity_names.size(); ++i) {
    if (ck.entity_names[i] != graph.entities().name(static_cast<EntityId>(i))) {
      throw DataError("checkpoint entity ids do not match the graph");
    }
  }
  for (std::size_t i = 0; i < ck.relation_names.size(); ++i) {
    if (ck.relation_names[i] != graph.relations().name(static_cast<RelationId>(i))) {
      throw DataError("checkpoint relation ids do not match the graph");
    }
  }

  EvalReport report;
  const auto scorer = store_scorer(ck.store);
  if (!graph.test().empty()) {
    report.ranking = link_prediction(scorer, graph, inputs.threads);
    report.has_ranking = true;
  }
  if (inputs.labels) {
    const auto labels = read_noise_labels(*inputs.labels);
    if (labels.is_noise.size() != graph.train().size()) {
      throw DataError("label file length does not match the train split");
    }
    if (labels.noise_count() > 0) {
      if (inputs.mask) {
        const auto mask = read_mask(*inputs.mask);
        if (mask.size() != labels.is_noise.size()) {
          throw DataError("mask length does not match the train split");
        }
        report.noise_f1 = noise_detection_f1(mask, labels.is_noise);
        report.noise_f1_source = "mask";
      } else {
        std::vector<double> scores;
        scores.reserve(graph.train().size());
        for (const auto& t : graph.train()) scores.push_back(scorer(t));
        report.noise_f1 = noise_detection_max_f1(scores, labels.is_noise);
        report.noise_f1_source = "score-sweep";
      }
      report.has_noise_f1 = true;
    }
  }
  const auto valid_cls = inputs.graph_dir / "valid_classification.tsv";
  const auto test_cls = inputs.graph_dir / "test_classification.tsv";
  if (std::filesystem::exists(valid_cls) && std::filesystem::exists(test_cls)) {
    const auto valid = read_classification(valid_cls, graph);
    const auto test = read_classification(test_cls, graph);
    if (!valid.empty() && !test.empty()) {
      report.classification_accuracy =
          triple_classification(scorer, graph.num_relations(), valid, test).accuracy;
      report.has_classification = true;
    }
  }
  return to_json(report, graph);
}

nlohmann::ordered_json run_synthetic_experiment(const TrainConfig& base_cfg, std::uint64_t seed,
                                                std::size_t repeats) {
  nlohmann::ordered_json report;
  if (repeats < 1) throw UsageError("repeats must be at least 1");
  const SyntheticSpec spec;
  constexpr double kNoiseRate = 0.10;
  report["dataset"] = {{"entities", spec.entities},
                       {"relations", spec.relations},
                       {"noise_rate", kNoiseRate}};
  std::vector<double> strl_f1, xs_f1, plain_mrr, strl_mrr, mtrl_mrr;
  bool strl_beats_select_all = true;
  auto runs = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto run_seed = derive_seed(seed, "repeat", i);
    const auto clean = make_synthetic_graph(spec, derive_seed(run_seed, "synthetic"));
    const auto noisy = inject_noise(clean, kNoiseRate, derive_seed(run_seed, "noise"));
    const auto cls_sets =
        make_classification_negatives(noisy.graph, derive_seed(run_seed, "classification"));
    const ClassificationData cls{cls_sets.valid, cls_sets.test};
    TrainConfig cfg = base_cfg;
    cfg.seed = derive_seed(run_seed, "train");

    auto outcome = run_models(noisy.graph, &noisy.labels, &cls, cfg);
    nlohmann::ordered_json run_doc{{"run", i},
                                   {"clean_triples",
                                    clean.train().size() + clean.valid().size() + clean.test().size()},
                                   {"train", noisy.graph.train().size()},
                                   {"injected", noisy.injected},
                                   {"valid", noisy.graph.valid().size()},
                                   {"test", noisy.graph.test().size()}};
    run_doc.update(outcome.doc);
    outcome.doc = std::move(run_doc);
    strl_f1.push_back(outcome.strl_f1);
    xs_f1.push_back(outcome.xscore_f1_matched);
    plain_mrr.push_back(outcome.plain_mrr);
    strl_mrr.push_back(outcome.strl_mrr);
    mtrl_mrr.push_back(outcome.mtrl_mrr);
    strl_beats_select_all = strl_beats_select_all && outcome.strl_f1 > 0.0;
    runs.push_back(std::move(outcome.doc));
  }
  report["runs"] = std::move(runs);
  const double mean_plain = mean_of(plain_mrr);
  const double mean_strl = mean_of(strl_mrr);
  report["summary"] = {
      {"mean_strl_mask_f1", mean_of(strl_f1)},
      {"mean_xscore_f1_at_strl_count", mean_of(xs_f1)},
      {"mean_plain_mrr", mean_plain},
      {"mean_strl_mrr", mean_strl},
      {"mean_mtrl_mrr", mean_of(mtrl_mrr)},
      {"strl_f1_above_select_all", strl_beats_select_all},
      {"strl_f1_at_least_xscore", mean_of(strl_f1) >= mean_of(xs_f1)},
      {"strl_mrr_margin", mean_strl - mean_plain},
      {"strl_mrr_beats_plain_by_0.005", mean_strl >= mean_plain + 0.005}};
  return report;
}

nlohmann::ordered_json run_experiment(std::string_view preset, std::uint64_t seed,
                                      std::size_t threads,
                                      const std::optional<std::filesystem::path>& graph_dir,
                                      std::size_t repeats) {
  TrainConfig base = preset_config(preset);
  base.threads = threads;
  nlohmann::ordered_json report;
  report["preset"] = std::string(preset);
  report["seed"] = seed;
  report["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : base.entries()) {
    if (k != "seed" && k != "threads") report["config"][k] = v;
  }

  if (preset == "synthetic-n1") {
    auto synthetic = run_synthetic_experiment(base, seed, repeats);
    report["dataset"] = std::move(synthetic["dataset"]);
    report["runs"] = std::move(synthetic["runs"]);
    report["summary"] = std::move(synthetic["summary"]);
    return report;
  }

  if (!graph_dir) throw UsageError("preset '" + std::string(preset) + "' needs --graph DIR");
  const auto graph = load_graph_dir(*graph_dir);
  std::optional<NoiseLabels> labels;
  if (std::filesystem::exists(*graph_dir / "train_noise_labels.txt")) {
    labels = read_noise_labels(*graph_dir / "train_noise_labels.txt");
    if (labels->is_noise.size() != graph.train().size()) {
      throw DataError("label file length does not match the train split");
    }
  }
  std::optional<ClassificationData> cls;
  if (std::filesystem::exists(*graph_dir / "valid_classification.tsv") &&
      std::filesystem::exists(*graph_dir / "test_classification.tsv")) {
    cls = ClassificationData{read_classification(*graph_dir / "valid_classification.tsv", graph),
                             read_classification(*graph_dir / "test_classification.tsv", graph)};
  }
  TrainConfig cfg = base;
  cfg.seed = derive_seed(seed, "train");
  auto outcome = run_models(graph, labels ? &*labels : nullptr, cls ? &*cls : nullptr, cfg);
  report["runs"] = nlohmann::ordered_json::array({std::move(outcome.doc)});
  return report;
}

}  // namespace rlkge
