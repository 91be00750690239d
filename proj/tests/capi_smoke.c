#define _POSIX_C_SOURCE 200809L

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "rlkge/rlkge.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

static void join(char* out, size_t n, const char* dir, const char* name) {
  snprintf(out, n, "%s/%s", dir, name);
}

int main(void) {
  char tmpl[] = "/tmp/rlkge-capi-XXXXXX";
  const char* root = mkdtemp(tmpl);
  if (!root) return 1;
  char clean[512], noisy[512], run[512], clusters[512];
  char ckpt[1024], labels[1024], mask[1024];
  join(clean, sizeof clean, root, "clean");
  join(noisy, sizeof noisy, root, "noisy");
  join(run, sizeof run, root, "run");
  join(ckpt, sizeof ckpt, run, "model.ckpt");
  join(labels, sizeof labels, noisy, "train_noise_labels.txt");
  join(mask, sizeof mask, run, "mask.txt");
  join(clusters, sizeof clusters, root, "clusters.tsv");

  rlkge_set_log_level("off");
  EXPECT(strlen(rlkge_version()) > 0);

  EXPECT(rlkge_make_synthetic_dir(clean, 3) == RLKGE_OK);
  rlkge_noise_stats stats;
  EXPECT(rlkge_inject_noise_dir(clean, noisy, 0.1, 3, &stats) == RLKGE_OK);
  EXPECT(stats.target == 288);
  EXPECT(stats.injected + stats.skipped == stats.target);

  rlkge_graph* graph = NULL;
  EXPECT(rlkge_graph_load(noisy, &graph) == RLKGE_OK);
  size_t ne = 0, nr = 0, ntrain = 0, nvalid = 0, ntest = 0;
  EXPECT(rlkge_graph_counts(graph, &ne, &nr, &ntrain, &nvalid, &ntest) == RLKGE_OK);
  EXPECT(ne == 200);
  EXPECT(nr == 20);
  EXPECT(ntrain == 2880 + stats.injected);

  rlkge_config* cfg = NULL;
  EXPECT(rlkge_config_new("synthetic-n1", &cfg) == RLKGE_OK);
  EXPECT(rlkge_config_set(cfg, "dim", "4") == RLKGE_OK);
  EXPECT(rlkge_config_set(cfg, "pretrain_epochs", "2") == RLKGE_OK);
  EXPECT(rlkge_config_set(cfg, "episodes", "1") == RLKGE_OK);
  EXPECT(rlkge_config_set(cfg, "agent_warmup_episodes", "1") == RLKGE_OK);
  EXPECT(rlkge_config_set(cfg, "no_such_key", "1") == RLKGE_ERR_USAGE);
  EXPECT(strstr(rlkge_last_error(), "no_such_key") != NULL);
  char* text = NULL;
  EXPECT(rlkge_config_to_text(cfg, &text) == RLKGE_OK);
  EXPECT(text && strstr(text, "dim = 4") != NULL);
  rlkge_string_free(text);

  size_t kept = 0;
  EXPECT(rlkge_train_dir(graph, "strl", cfg, run, NULL, &kept) == RLKGE_OK);
  EXPECT(kept > 0 && kept <= ntrain);
  EXPECT(rlkge_train_dir(graph, "dqn", cfg, run, NULL, NULL) == RLKGE_ERR_USAGE);
  EXPECT(rlkge_train_dir(graph, "plain", cfg, run, NULL, &kept) == RLKGE_OK);
  EXPECT(kept == ntrain);

  double wcss = -1.0;
  EXPECT(rlkge_cluster_checkpoint(ckpt, 4, 1, 100, clusters, &wcss) == RLKGE_OK);
  EXPECT(wcss >= 0.0);
  EXPECT(rlkge_cluster_checkpoint(ckpt, 21, 1, 100, clusters, NULL) == RLKGE_ERR_USAGE);

  rlkge_model* model = NULL;
  EXPECT(rlkge_model_load(ckpt, &model) == RLKGE_OK);
  double s = 1.0;
  EXPECT(rlkge_model_score(model, "e0000", "r000", "e0001", &s) == RLKGE_OK);
  EXPECT(isfinite(s) && s <= 0.0);
  EXPECT(rlkge_model_score(model, "nobody", "r000", "e0001", &s) == RLKGE_ERR_USAGE);
  rlkge_model_free(model);

  char* json = NULL;
  EXPECT(rlkge_evaluate(ckpt, noisy, labels, mask, 1, &json) == RLKGE_OK);
  EXPECT(json && strstr(json, "\"mrr\"") != NULL);
  EXPECT(json && strstr(json, "\"triple_classification\"") != NULL);
  rlkge_string_free(json);

  rlkge_graph* missing = NULL;
  EXPECT(rlkge_graph_load("/nonexistent/rlkge", &missing) == RLKGE_ERR_DATA);
  EXPECT(missing == NULL);
  rlkge_config* bad = NULL;
  EXPECT(rlkge_config_new("no-such-preset", &bad) == RLKGE_ERR_USAGE);
  EXPECT(bad == NULL);

  rlkge_config_free(cfg);
  rlkge_graph_free(graph);
  char cmd[600];
  snprintf(cmd, sizeof cmd, "rm -rf '%s'", root);
  if (system(cmd) != 0) fprintf(stderr, "cleanup failed\n");
  if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
  return failures ? 1 : 0;
}
