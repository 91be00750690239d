#include "rlkge/rlkge.h"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <memory>
#include <optional>
#include <string>

#include "rlkge/checkpoint.hpp"
#include "rlkge/clustering.hpp"
#include "rlkge/config.hpp"
#include "rlkge/errors.hpp"
#include "rlkge/graph.hpp"
#include "rlkge/noise.hpp"
#include "rlkge/pipeline.hpp"

struct rlkge_graph {
  rlkge::KnowledgeGraph graph;
};

struct rlkge_config {
  rlkge::TrainConfig cfg;
};

struct rlkge_model {
  rlkge::ModelCheckpoint ck;
  rlkge::Vocabulary entities;
  rlkge::Vocabulary relations;
};

namespace {

thread_local std::string g_last_error;

void ensure_logger() {
  static const bool once = [] {
    auto logger = spdlog::stderr_color_mt("rlkge");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    return true;
  }();
  (void)once;
}

template <typename F>
rlkge_status guarded(F&& f) {
  g_last_error.clear();
  try {
    ensure_logger();
    f();
    return RLKGE_OK;
  } catch (const rlkge::UsageError& e) {
    g_last_error = e.what();
    return RLKGE_ERR_USAGE;
  } catch (const rlkge::NumericError& e) {
    g_last_error = e.what();
    return RLKGE_ERR_NUMERIC;
  } catch (const rlkge::DataError& e) {
    g_last_error = e.what();
    return RLKGE_ERR_DATA;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return RLKGE_ERR_DATA;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RLKGE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RLKGE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RLKGE_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw rlkge::UsageError(std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<std::filesystem::path> opt_path(const char* p) {
  if (!p || !*p) return std::nullopt;
  return std::filesystem::path(p);
}

}  // namespace

extern "C" {

const char* rlkge_last_error(void) { return g_last_error.c_str(); }

const char* rlkge_version(void) { return "0.1.0"; }

rlkge_status rlkge_set_log_level(const char* level) {
  return guarded([&] {
    require(level, "level");
    const auto lv = spdlog::level::from_str(level);
    if (lv == spdlog::level::off && std::strcmp(level, "off") != 0) {
      throw rlkge::UsageError(std::string("unknown log level '") + level + "'");
    }
    spdlog::set_level(lv);
  });
}

void rlkge_string_free(char* s) { std::free(s); }

rlkge_status rlkge_graph_load(const char* dir, rlkge_graph** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = nullptr;
    *out = new rlkge_graph{rlkge::load_graph_dir(dir)};
  });
}

rlkge_status rlkge_graph_save(const rlkge_graph* graph, const char* dir) {
  return guarded([&] {
    require(graph, "graph");
    require(dir, "dir");
    rlkge::write_graph_dir(dir, graph->graph);
  });
}

rlkge_status rlkge_graph_counts(const rlkge_graph* graph, size_t* entities, size_t* relations,
                                size_t* train, size_t* valid, size_t* test) {
  return guarded([&] {
    require(graph, "graph");
    const auto& g = graph->graph;
    if (entities) *entities = g.num_entities();
    if (relations) *relations = g.num_relations();
    if (train) *train = g.train().size();
    if (valid) *valid = g.valid().size();
    if (test) *test = g.test().size();
  });
}

void rlkge_graph_free(rlkge_graph* graph) { delete graph; }

rlkge_status rlkge_config_new(const char* preset, rlkge_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto cfg = preset && *preset ? rlkge::preset_config(preset) : rlkge::TrainConfig{};
    *out = new rlkge_config{cfg};
  });
}

rlkge_status rlkge_config_set(rlkge_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

rlkge_status rlkge_config_apply_file(rlkge_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg, "cfg");
    require(path, "path");
    rlkge::apply_config_file(cfg->cfg, path);
  });
}

rlkge_status rlkge_config_to_text(const rlkge_config* cfg, char** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = dup_string(cfg->cfg.to_text());
  });
}

void rlkge_config_free(rlkge_config* cfg) { delete cfg; }

rlkge_status rlkge_preset_names(char** out) {
  return guarded([&] {
    require(out, "out");
    std::string text;
    for (const auto& n : rlkge::preset_names()) text += n + "\n";
    *out = dup_string(text);
  });
}

rlkge_status rlkge_inject_noise_dir(const char* in_dir, const char* out_dir, double rate,
                                    uint64_t seed, rlkge_noise_stats* stats) {
  return guarded([&] {
    require(in_dir, "in_dir");
    require(out_dir, "out_dir");
    const auto clean = rlkge::load_graph_dir(in_dir);
    const auto noisy = rlkge::inject_noise(clean, rate, rlkge::derive_seed(seed, "noise"));
    const auto cls = rlkge::make_classification_negatives(
        noisy.graph, rlkge::derive_seed(seed, "classification"));
    const std::filesystem::path out(out_dir);
    rlkge::write_graph_dir(out, noisy.graph);
    rlkge::write_noise_labels(out / "train_noise_labels.txt", noisy.labels);
    rlkge::write_classification(out / "valid_classification.tsv", cls.valid, noisy.graph);
    rlkge::write_classification(out / "test_classification.tsv", cls.test, noisy.graph);
    if (stats) {
      stats->target = noisy.target;
      stats->injected = noisy.injected;
      stats->skipped = noisy.skipped;
      stats->classification_skipped = cls.skipped;
    }
  });
}

rlkge_status rlkge_make_synthetic_dir(const char* out_dir, uint64_t seed) {
  return guarded([&] {
    require(out_dir, "out_dir");
    rlkge::write_graph_dir(out_dir, rlkge::make_synthetic_graph(rlkge::SyntheticSpec{}, seed));
  });
}

rlkge_status rlkge_train_dir(const rlkge_graph* graph, const char* mode, const rlkge_config* cfg,
                             const char* out_dir, const char* clusters_file, size_t* kept) {
  return guarded([&] {
    require(graph, "graph");
    require(mode, "mode");
    require(cfg, "cfg");
    require(out_dir, "out_dir");
    const auto summary = rlkge::train_to_dir(graph->graph, rlkge::parse_train_mode(mode), cfg->cfg,
                                             out_dir, opt_path(clusters_file));
    if (kept) *kept = summary.kept;
  });
}

rlkge_status rlkge_cluster_checkpoint(const char* checkpoint, size_t k, uint64_t seed,
                                      size_t max_iters, const char* out_path, double* wcss) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(out_path, "out_path");
    const auto ck = rlkge::load_model(checkpoint);
    if (ck.store.model.kind != rlkge::ModelKind::TransE) {
      throw rlkge::UsageError("clustering needs a TransE checkpoint");
    }
    const auto clusters = rlkge::kmeans(ck.store.relations, k, seed, max_iters);
    rlkge::write_clusters(out_path, clusters, ck.relation_names);
    if (wcss) *wcss = clusters.wcss();
  });
}

rlkge_status rlkge_model_load(const char* path, rlkge_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<rlkge_model>();
    m->ck = rlkge::load_model(path);
    for (const auto& n : m->ck.entity_names) m->entities.intern(n);
    for (const auto& n : m->ck.relation_names) m->relations.intern(n);
    *out = m.release();
  });
}

rlkge_status rlkge_model_score(const rlkge_model* model, const char* head, const char* relation,
                               const char* tail, double* out) {
  return guarded([&] {
    require(model, "model");
    require(head, "head");
    require(relation, "relation");
    require(tail, "tail");
    require(out, "out");
    const auto h = model->entities.find(head);
    const auto r = model->relations.find(relation);
    const auto t = model->entities.find(tail);
    if (!h || !t) throw rlkge::UsageError("unknown entity");
    if (!r) throw rlkge::UsageError("unknown relation");
    *out = rlkge::score(model->ck.store, {*h, *r, *t});
  });
}

void rlkge_model_free(rlkge_model* model) { delete model; }

rlkge_status rlkge_evaluate(const char* checkpoint, const char* graph_dir, const char* labels,
                            const char* mask, size_t threads, char** json_out) {
  return guarded([&] {
    require(checkpoint, "checkpoint");
    require(graph_dir, "graph_dir");
    require(json_out, "json_out");
    if (threads < 1) throw rlkge::UsageError("threads must be at least 1");
    rlkge::EvaluateInputs in;
    in.checkpoint = checkpoint;
    in.graph_dir = graph_dir;
    in.labels = opt_path(labels);
    in.mask = opt_path(mask);
    in.threads = threads;
    *json_out = dup_string(rlkge::evaluate_checkpoint(in).dump(2) + "\n");
  });
}

rlkge_status rlkge_experiment(const char* preset, uint64_t seed, size_t threads,
                              const char* graph_dir, char** json_out) {
  return guarded([&] {
    require(preset, "preset");
    require(json_out, "json_out");
    if (threads < 1) throw rlkge::UsageError("threads must be at least 1");
    const auto report = rlkge::run_experiment(preset, seed, threads, opt_path(graph_dir));
    *json_out = dup_string(report.dump(2) + "\n");
  });
}

}  // extern "C"
