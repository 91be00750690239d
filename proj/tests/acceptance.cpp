// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Usage: rlkge_acceptance <path to the rlkge CLI> <scratch dir>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "helpers.hpp"
#include "oracles.hpp"
#include "rlkge/agent.hpp"
#include "rlkge/noise.hpp"
#include "rlkge/pipeline.hpp"
#include "rlkge/trainer.hpp"

using namespace rlkge;
namespace fs = std::filesystem;

namespace {

int failed = 0;
std::map<std::string, std::string> lines;  // printed in criterion order at the end

void report(const std::string& id, bool pass, const std::string& detail) {
  lines[id] = "criterion " + id + ": " + (pass ? "PASS" : "FAIL") + "  " + detail;
  std::cerr << lines[id] << std::endl;
  if (!pass) ++failed;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EmbeddingStore manual_store(ModelKind kind, std::size_t ne, std::size_t nr, std::size_t dim) {
  ModelConfig mc;
  mc.kind = kind;
  auto s = init_embeddings(ne, nr, dim, mc, 1);
  for (auto& x : s.entities.data()) x = 0.0;
  for (auto& x : s.relations.data()) x = 0.0;
  return s;
}

void set_row(Matrix& m, std::size_t r, std::initializer_list<double> v) {
  std::size_t j = 0;
  for (double x : v) m(r, j++) = x;
}

void criterion_gradients() {
  struct Case {
    const char* name;
    ModelConfig model;
  };
  ModelConfig l1, l2, dm, ro;
  l2.norm = Norm::L2;
  dm.kind = ModelKind::DistMult;
  dm.l2 = 0.01;
  dm.negatives = 3;
  ro.kind = ModelKind::RotatE;
  ro.negatives = 3;
  const Case cases[] = {{"transe-l1", l1}, {"transe-l2", l2}, {"distmult", dm}, {"rotate", ro}};
  bool ok = true;
  double worst = 0.0;
  std::size_t coords = 0;
  std::uint64_t seed = 1000;
  for (std::size_t d : {4, 8}) {
    for (const auto& c : cases) {
      const auto r = oracle::check_loss_gradients(c.model, d, 20, seed++);
      ok = ok && r.failures == 0 && r.instances == 20;
      worst = std::max(worst, r.max_rel_error);
      coords += r.coordinates;
    }
    const auto p = oracle::check_policy_gradients(d, 20, seed++, 0.001, 0.01);
    ok = ok && p.failures == 0;
    worst = std::max(worst, p.max_rel_error);
    coords += p.coordinates;
  }
  report("1", ok, fmt::format("{} coordinates, max relative error {:.2e} (< 1e-4)", coords, worst));
}

void criterion_ranking() {
  Rng gen(2024);
  bool ok = true;
  std::size_t queries = 0;
  double h1 = 0, h3 = 0, h10 = 0;
  for (int trial = 0; trial < 5; ++trial) {
    // 50 entities, 160 + 20 + 20 = 200 triples.
    const auto g = testutil::random_graph(gen, 50, 4, 200, 20, 20);
    TrainConfig cfg;
    cfg.dim = 8;
    cfg.batch_size = 32;
    cfg.adam.lr = 0.01;
    cfg.pretrain_epochs = 20;
    cfg.seed = gen.next();
    const auto pre = pretrain_kge(g, cfg);
    const auto scorer = store_scorer(pre.store);
    const auto res = link_prediction(scorer, g);
    const auto expect = oracle::brute_force_ranks(scorer, g, true);
    ok = ok && res.ranks == expect;
    ok = ok && res.hits1 <= res.hits3 && res.hits3 <= res.hits10;
    queries += res.ranks.size();
    h1 += res.hits1 / 5;
    h3 += res.hits3 / 5;
    h10 += res.hits10 / 5;
  }
  report("2", ok,
         fmt::format("{} filtered queries match brute force; mean hits@1/3/10 = {:.3f}/{:.3f}/{:.3f}",
                     queries, h1, h3, h10));
}

void criterion_exact_values() {
  bool ok = true;
  std::string bad;
  const auto expect = [&](bool cond, const char* what) {
    if (!cond) {
      ok = false;
      bad += std::string(" ") + what;
    }
  };
  {
    auto s = manual_store(ModelKind::TransE, 4, 1, 1);
    set_row(s.entities, 1, {1});
    set_row(s.entities, 2, {3});
    set_row(s.entities, 3, {4});
    const std::vector<Triple> full = {{0, 0, 1}, {0, 0, 2}, {0, 0, 3}, {1, 0, 3}};
    const std::vector<Triple> sel = {{0, 0, 1}, {0, 0, 2}};
    expect(std::abs(compute_reward(s, sel, full, 0.05) - (-1.975)) < 1e-12, "reward");
  }
  {
    auto p = make_policy(PolicyMode::STRL, 1, 1, 1);
    p.specific(0, 0) = std::log(3.0);
    const std::vector<double> st = {1.0};
    expect(std::abs(policy_prob(p, {}, 0, st) - 0.75) < 1e-15, "sigmoid");
  }
  {
    auto s = manual_store(ModelKind::TransE, 2, 1, 2);
    set_row(s.entities, 0, {1, 2});
    expect(score(s, {0, 0, 1}) == -3.0, "transe");
  }
  {
    auto s = manual_store(ModelKind::DistMult, 2, 1, 2);
    set_row(s.entities, 0, {1, 2});
    set_row(s.entities, 1, {5, 6});
    set_row(s.relations, 0, {3, 4});
    expect(score(s, {0, 0, 1}) == 63.0, "distmult");
  }
  {
    auto s = manual_store(ModelKind::RotatE, 2, 1, 2);
    set_row(s.entities, 0, {1, 0, 0, 1});
    set_row(s.entities, 1, {0, -1, 1, 0});
    set_row(s.relations, 0, {std::numbers::pi / 2, std::numbers::pi / 2});
    expect(std::abs(score(s, {0, 0, 1})) < 1e-12, "rotate");
  }
  {
    auto s = manual_store(ModelKind::TransE, 3, 1, 1);
    set_row(s.entities, 1, {1});
    set_row(s.entities, 2, {5});
    const std::vector<TrainingSample> samples = {{{0, 0, 1}, {{0, 0, 2}}}};
    auto grads = Gradients::for_store(s);
    const double loss = batch_loss(s, samples, &grads);
    bool zero = true;
    for (std::size_t i = 0; i < grads.entities.size(); ++i) {
      for (double g : grads.entities.values_at(i)) zero = zero && g == 0.0;
    }
    expect(loss == 0.0 && zero, "hinge");
  }
  report("3", ok,
         ok ? std::string("reward -1.975, sigmoid(ln 3) = 0.75, scores -3 / 63 / 0, inactive hinge")
            : "mismatch:" + bad);
}

void criterion_invariance_and_reduction() {
  // (a) reparameterization invariance.
  Rng gen(606);
  double worst = 0.0;
  const std::vector<std::uint32_t> cl = {0, 1, 0, 2, 1, 2};
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t w = 20;
    auto p = make_policy(PolicyMode::MTRL, 3, cl.size(), w);
    for (auto& x : p.shared.data()) x = gen.uniform(-1, 1);
    for (auto& x : p.specific.data()) x = gen.uniform(-1, 1);
    auto q = p;
    const auto c = static_cast<std::uint32_t>(gen.below(3));
    for (std::size_t i = 0; i < w; ++i) {
      const double delta = gen.uniform(-1, 1);
      q.shared(c, i) += delta;
      for (std::size_t r = 0; r < cl.size(); ++r) {
        if (cl[r] == c) q.specific(r, i) -= delta;
      }
    }
    std::vector<double> st(w);
    for (auto& x : st) x = gen.uniform(-1, 1);
    for (RelationId r = 0; r < cl.size(); ++r) {
      worst = std::max(worst, std::abs(policy_prob(q, cl, r, st) - policy_prob(p, cl, r, st)));
    }
  }
  const bool a = worst < 1e-12;

  // (b) MTRL with one cluster per relation and lambda1 = 0 against STRL.
  SyntheticSpec spec;
  spec.entities = 60;
  spec.relations = 5;
  spec.types = 5;
  spec.domain_types = 4;
  spec.range_types = 1;
  const auto noisy = inject_noise(make_synthetic_graph(spec, 31), 0.1, 32).graph;
  TrainConfig cfg = preset_config("synthetic-n1");
  cfg.dim = 8;
  cfg.pretrain_epochs = 5;
  cfg.agent_warmup_episodes = 2;
  cfg.episodes = 3;
  cfg.lambda1 = 0.0;
  cfg.seed = 33;
  RelationClusters identity;
  identity.k = noisy.num_relations();
  for (RelationId r = 0; r < noisy.num_relations(); ++r) identity.assignment.push_back(r);
  const auto strl = joint_train(noisy, PolicyMode::STRL, cfg);
  const auto mtrl = joint_train(noisy, PolicyMode::MTRL, cfg, &identity);
  bool same_weights = true;
  for (RelationId r = 0; r < noisy.num_relations(); ++r) {
    for (std::size_t i = 0; i < strl.policy.state_width(); ++i) {
      same_weights = same_weights &&
                     strl.policy.specific(r, i) == mtrl.policy.shared(r, i) + mtrl.policy.specific(r, i);
    }
  }
  const bool b = strl.mask == mtrl.mask && strl.store.entities == mtrl.store.entities && same_weights;
  std::size_t mask_diff = 0;
  for (std::size_t i = 0; i < strl.mask.size(); ++i) mask_diff += strl.mask[i] != mtrl.mask[i];

  report("6", a && b,
         fmt::format("(a) {} max |dP| = {:.1e}; (b) {} mask differs at {} of {} triples, "
                     "weights {}",
                     a ? "PASS" : "FAIL", worst, b ? "PASS" : "FAIL", mask_diff, strl.mask.size(),
                     same_weights ? "identical" : "differ"));
}

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = "'" + cli + "' " + args;
  const int status = std::system(cmd.c_str());
  return status;
}

void criteria_experiment(const std::string& cli, const fs::path& scratch) {
  const auto first = scratch / "report1.json";
  const auto second = scratch / "report2.json";
  const int s1 = run_cli(cli, "experiment --preset synthetic-n1 --seed 7 --out '" +
                                  first.string() + "'");
  const int s2 = run_cli(cli, "experiment --preset synthetic-n1 --seed 7 --out '" +
                                  second.string() + "'");
  const auto a = slurp(first);
  const auto b = slurp(second);
  if (s1 != 0 || s2 != 0 || a.empty()) {
    for (const char* id : {"4", "5", "7"}) report(id, false, "experiment command failed");
    return;
  }

  const auto doc = nlohmann::json::parse(a);
  const auto& runs = doc.at("runs");
  const double n = static_cast<double>(runs.size());
  double strl_f1 = 0, xs_f1 = 0, plain_mrr = 0, strl_mrr = 0;
  bool above_select_all = runs.size() == 3;
  std::string per_run;
  for (const auto& r : runs) {
    const auto& nd = r.at("noise_detection");
    const double f = nd.at("strl_mask_f1").get<double>();
    const double x = nd.at("xscore_f1_at_strl_count").get<double>();
    above_select_all = above_select_all && f > nd.at("select_all_f1").get<double>();
    strl_f1 += f / n;
    xs_f1 += x / n;
    plain_mrr += r.at("models").at("plain").at("mrr").get<double>() / n;
    strl_mrr += r.at("models").at("strl").at("mrr").get<double>() / n;
    per_run += fmt::format(" {:.3f}/{:.3f}", f, x);
  }
  const bool c4a = above_select_all;
  const bool c4b = strl_f1 >= xs_f1;
  report("4", c4a && c4b,
         fmt::format("(a) {} STRL F1 > select-all F1 = 0 in every run; (b) {} mean STRL F1 {:.4f} "
                     "vs X-Score at matched count {:.4f} (per run STRL/X-Score:{})",
                     c4a ? "PASS" : "FAIL", c4b ? "PASS" : "FAIL", strl_f1, xs_f1, per_run));
  report("5", strl_mrr >= plain_mrr + 0.005,
         fmt::format("mean MRR STRL {:.4f} vs plain {:.4f}, margin {:+.4f} (need >= 0.005)",
                     strl_mrr, plain_mrr, strl_mrr - plain_mrr));
  report("7", a == b,
         fmt::format("two reports of {} bytes are {}", a.size(), a == b ? "identical" : "different"));
}

void criterion_full_scale(const std::string& cli, const fs::path& scratch) {
  const char* dir = std::getenv("RLKGE_FB15K237_N1_DIR");
  if (!dir) {
    lines["8"] = "criterion 8: SKIP  set RLKGE_FB15K237_N1_DIR to a noisy FB15k-237-N1 graph "
                 "directory to run (hours)";
    return;
  }
  const auto out = scratch / "fb15k237.json";
  if (run_cli(cli, "experiment --preset fb15k-237-n1-transe --seed 7 --graph '" +
                       std::string(dir) + "' --out '" + out.string() + "'") != 0) {
    report("8", false, "experiment command failed");
    return;
  }
  const auto doc = nlohmann::json::parse(slurp(out));
  const auto& models = doc.at("runs").at(0).at("models");
  const double plain = models.at("plain").at("mrr").get<double>();
  const double mtrl = models.at("mtrl").at("mrr").get<double>();
  report("8", std::abs(plain - 0.221) <= 0.02 && mtrl > plain,
         fmt::format("plain TransE MRR {:.4f} (target 0.221 +- 0.02), MTRL {:.4f}", plain, mtrl));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: rlkge_acceptance <rlkge cli> <scratch dir>\n";
    return 2;
  }
  spdlog::set_level(spdlog::level::err);
  const std::string cli = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);

  criterion_gradients();
  criterion_ranking();
  criterion_exact_values();
  criteria_experiment(cli, scratch);
  criterion_invariance_and_reduction();
  criterion_full_scale(cli, scratch);

  for (const auto& [id, line] : lines) std::cout << line << "\n";
  std::cout << (failed ? fmt::format("{} criterion check(s) failed", failed)
                       : std::string("all criteria passed"))
            << std::endl;
  return failed ? 1 : 0;
}
