#include <algorithm>

#include "doctest.h"
#include "helpers.hpp"
#include "rlkge/config.hpp"
#include "rlkge/errors.hpp"

using namespace rlkge;

TEST_CASE("config: set parses values and rejects unknown keys") {
  TrainConfig cfg;
  cfg.set("dim", "64");
  cfg.set("model", "rotate");
  cfg.set("alpha", "0.3");
  cfg.set("norm", "2");
  CHECK(cfg.dim == 64);
  CHECK(cfg.model.kind == ModelKind::RotatE);
  CHECK(cfg.alpha == 0.3);
  CHECK(cfg.model.norm == Norm::L2);
  CHECK_THROWS_AS(cfg.set("dimension", "3"), UsageError);
  CHECK_THROWS_AS(cfg.set("dim", "three"), UsageError);
  CHECK_THROWS_AS(cfg.set("norm", "3"), UsageError);
  CHECK_THROWS_AS(cfg.set("model", "conve"), UsageError);
}

TEST_CASE("config: text form round-trips every key") {
  TrainConfig cfg = preset_config("wn18rr-n3-distmult");
  cfg.seed = 99;
  cfg.policy_lr = 0.0123;
  TrainConfig back;
  apply_config_text(back, cfg.to_text());
  CHECK(back.entries() == cfg.entries());
}

TEST_CASE("config: file with comments and blank lines") {
  testutil::TempDir dir;
  testutil::write_file(dir / "c.cfg", "# header\n\n dim = 12  # trailing\nepisodes=3\n");
  TrainConfig cfg;
  apply_config_file(cfg, dir / "c.cfg");
  CHECK(cfg.dim == 12);
  CHECK(cfg.episodes == 3);
  testutil::write_file(dir / "bad.cfg", "dim 12\n");
  CHECK_THROWS_AS(apply_config_file(cfg, dir / "bad.cfg"), UsageError);
  CHECK_THROWS_AS(apply_config_file(cfg, dir / "missing.cfg"), DataError);
}

TEST_CASE("config: validation rejects out-of-range values") {
  TrainConfig cfg;
  cfg.delta = 1.5;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  cfg = TrainConfig{};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("presets carry the published hyperparameters") {
  const auto names = preset_names();
  CHECK(names.size() == 28);
  CHECK(std::ranges::find(names, "synthetic-n1") != names.end());

  const auto transe = preset_config("fb15k-237-n1-transe");
  CHECK(transe.model.kind == ModelKind::TransE);
  CHECK(transe.model.norm == Norm::L1);
  CHECK(transe.model.margin == 1.0);
  CHECK(transe.alpha == 0.05);
  CHECK(transe.lambda1 == 0.001);
  CHECK(transe.lambda2 == 0.01);
  CHECK(transe.episodes == 15);
  CHECK(transe.batch_size == 1024);
  CHECK(transe.adam.lr == 0.001);
  CHECK(transe.lr_extended == 0.0005);
  CHECK(transe.clusters_k == 120);
  CHECK(transe.delta == 0.10);

  CHECK(preset_config("fb15k-n2-rotate").alpha == 0.02);
  CHECK(preset_config("fb15k-n2-rotate").model.eta == 5.0);
  CHECK(preset_config("fb15k-n2-rotate").clusters_k == 300);
  CHECK(preset_config("wn18rr-n1-transe").clusters_k == 10);
  CHECK(preset_config("wn18rr-n1-distmult").alpha == 0.3);
  CHECK(preset_config("fb15k-n2-distmult").alpha == 0.2);
  CHECK(preset_config("fb15k-237-n3-distmult").alpha == 0.1);
  CHECK(preset_config("fb15k-237-n2-transe").delta == 0.15);
  CHECK(preset_config("fb15k-237-n3-transe").delta == 0.25);
  CHECK(preset_config("fb15k-237-n3-rotate").delta == 0.25);
  CHECK(preset_config("fb15k-237-n3-distmult").delta == 0.30);

  for (const auto& n : names) CHECK_NOTHROW(preset_config(n).validate());
  CHECK_THROWS_AS(preset_config("fb15k-n4-transe"), UsageError);
}
