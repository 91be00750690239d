// Command-line front end. Talks to the library only through rlkge.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rlkge/rlkge.h"

namespace {

struct Failure {
  int code;
};

void check(rlkge_status st) {
  if (st != RLKGE_OK) {
    std::cerr << "error: " << rlkge_last_error() << "\n";
    throw Failure{st == RLKGE_ERR_INTERNAL ? 2 : static_cast<int>(st)};
  }
}

struct CString {
  char* p = nullptr;
  ~CString() { rlkge_string_free(p); }
};

using GraphPtr = std::unique_ptr<rlkge_graph, decltype(&rlkge_graph_free)>;
using ConfigPtr = std::unique_ptr<rlkge_config, decltype(&rlkge_config_free)>;

void write_text(const std::string& out, const char* text) {
  if (out.empty() || out == "-") {
    std::fputs(text, stdout);
    return;
  }
  std::ofstream f(out, std::ios::trunc | std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot write " << out << "\n";
    throw Failure{RLKGE_ERR_DATA};
  }
  f << text;
  if (!f) {
    std::cerr << "error: write failed: " << out << "\n";
    throw Failure{RLKGE_ERR_DATA};
  }
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-graph embeddings trained on noisy triples with RL triple selection"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
      ->capture_default_str();

  std::size_t threads = 1;
  const auto add_threads = [&](CLI::App* sub) {
    sub->add_option("--threads", threads, "Worker thread cap")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  // make-synthetic
  auto* synth = app.add_subcommand("make-synthetic", "Write the rule-generated synthetic graph");
  std::uint64_t synth_seed = 7;
  std::string synth_out;
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--out", synth_out, "Output graph directory")->required();
  add_threads(synth);

  // inject-noise
  auto* inject = app.add_subcommand("inject-noise", "Inject slot-compatible noise into train");
  double rate = 0.1;
  std::uint64_t inject_seed = 0;
  std::string inject_in, inject_out;
  inject->add_option("--rate", rate, "Noise rate")->required();
  inject->add_option("--seed", inject_seed)->required();
  inject->add_option("--in", inject_in, "Clean graph directory")->required();
  inject->add_option("--out", inject_out, "Output graph directory")->required();
  add_threads(inject);

  // cluster
  auto* cluster = app.add_subcommand("cluster", "k-means over TransE relation vectors");
  std::string cluster_ckpt, cluster_out;
  std::size_t cluster_k = 0, cluster_iters = 100;
  std::uint64_t cluster_seed = 0;
  cluster->add_option("--checkpoint", cluster_ckpt, "TransE model checkpoint")->required();
  cluster->add_option("--k", cluster_k, "Number of clusters")->required();
  cluster->add_option("--seed", cluster_seed)->required();
  cluster->add_option("--max-iters", cluster_iters)->capture_default_str();
  cluster->add_option("--out", cluster_out, "Clusters file")->required();
  add_threads(cluster);

  // train
  auto* train = app.add_subcommand("train", "Train a KGE model, optionally with triple selection");
  std::string train_graph, train_model, train_mode = "plain", train_config, train_preset,
                                        train_out, train_clusters;
  std::optional<std::uint64_t> train_seed;
  train->add_option("--graph", train_graph, "Graph directory")->required();
  train->add_option("--model", train_model, "transe|distmult|rotate");
  train->add_option("--mode", train_mode, "plain|strl|mtrl|xscore")
      ->capture_default_str()
      ->check(CLI::IsMember({"plain", "strl", "mtrl", "xscore"}));
  train->add_option("--preset", train_preset, "Start from a named preset");
  train->add_option("--config", train_config, "key = value config file");
  train->add_option("--clusters", train_clusters, "Clusters file for mtrl");
  train->add_option("--seed", train_seed);
  train->add_option("--out", train_out, "Output directory")->required();
  add_threads(train);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Link prediction, noise F1, classification");
  std::string eval_ckpt, eval_graph, eval_labels, eval_mask, eval_out;
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--graph", eval_graph, "Graph directory")->required();
  eval->add_option("--labels", eval_labels, "Train noise labels (0/1 per line)");
  eval->add_option("--mask", eval_mask, "Selection mask (0/1 per line)");
  eval->add_option("--out", eval_out, "Report JSON path (default stdout)");
  add_threads(eval);

  // experiment
  auto* exp = app.add_subcommand("experiment", "End-to-end preset run");
  std::string exp_preset, exp_graph, exp_out;
  std::uint64_t exp_seed = 7;
  exp->add_option("--preset", exp_preset)->required();
  exp->add_option("--seed", exp_seed)->capture_default_str();
  exp->add_option("--graph", exp_graph, "Graph directory (dataset presets)");
  exp->add_option("--out", exp_out, "Report JSON path (default stdout)");
  add_threads(exp);

  auto* presets = app.add_subcommand("presets", "List preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    check(rlkge_set_log_level(log_level.c_str()));

    if (*synth) {
      check(rlkge_make_synthetic_dir(synth_out.c_str(), synth_seed));
    } else if (*inject) {
      rlkge_noise_stats stats{};
      check(rlkge_inject_noise_dir(inject_in.c_str(), inject_out.c_str(), rate, inject_seed, &stats));
      std::cerr << "injected " << stats.injected << " of " << stats.target << " (skipped "
                << stats.skipped << ")\n";
    } else if (*cluster) {
      double wcss = 0.0;
      check(rlkge_cluster_checkpoint(cluster_ckpt.c_str(), cluster_k, cluster_seed, cluster_iters,
                                     cluster_out.c_str(), &wcss));
      std::cerr << "wcss " << wcss << "\n";
    } else if (*train) {
      rlkge_config* raw_cfg = nullptr;
      check(rlkge_config_new(opt(train_preset), &raw_cfg));
      ConfigPtr cfg(raw_cfg, rlkge_config_free);
      if (!train_config.empty()) check(rlkge_config_apply_file(cfg.get(), train_config.c_str()));
      if (!train_model.empty()) check(rlkge_config_set(cfg.get(), "model", train_model.c_str()));
      if (train_seed) check(rlkge_config_set(cfg.get(), "seed", std::to_string(*train_seed).c_str()));
      check(rlkge_config_set(cfg.get(), "threads", std::to_string(threads).c_str()));
      rlkge_graph* raw_graph = nullptr;
      check(rlkge_graph_load(train_graph.c_str(), &raw_graph));
      GraphPtr graph(raw_graph, rlkge_graph_free);
      std::size_t kept = 0;
      check(rlkge_train_dir(graph.get(), train_mode.c_str(), cfg.get(), train_out.c_str(),
                            opt(train_clusters), &kept));
      std::cerr << "kept " << kept << " train triples\n";
    } else if (*eval) {
      CString json;
      check(rlkge_evaluate(eval_ckpt.c_str(), eval_graph.c_str(), opt(eval_labels), opt(eval_mask),
                           threads, &json.p));
      write_text(eval_out, json.p);
    } else if (*exp) {
      CString json;
      check(rlkge_experiment(exp_preset.c_str(), exp_seed, threads, opt(exp_graph), &json.p));
      write_text(exp_out, json.p);
    } else if (*presets) {
      CString names;
      check(rlkge_preset_names(&names.p));
      std::fputs(names.p, stdout);
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
