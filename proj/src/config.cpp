#include "rlkge/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "rlkge/errors.hpp"

namespace rlkge {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw UsageError("bad value '" + std::string(text) + "' for key '" + std::string(key) + "'");
  }
  return value;
}

std::string fmt_double(double x) { return fmt::format("{}", x); }

struct Field {
  std::function<void(TrainConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const TrainConfig&)> get;
};

template <typename T>
Field number_field(T TrainConfig::*member) {
  return {[member](TrainConfig& c, std::string_view k, std::string_view v) {
            c.*member = parse_number<T>(k, v);
          },
          [member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

template <typename Sub, typename T>
Field nested_field(Sub TrainConfig::*outer, T Sub::*member) {
  return {[outer, member](TrainConfig& c, std::string_view k, std::string_view v) {
            (c.*outer).*member = parse_number<T>(k, v);
          },
          [outer, member](const TrainConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double((c.*outer).*member);
            } else {
              return std::to_string((c.*outer).*member);
            }
          }};
}

// Documented keys, in echo order.
const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"model",
       {[](TrainConfig& c, std::string_view, std::string_view v) {
          c.model.kind = parse_model_kind(v);
        },
        [](const TrainConfig& c) { return std::string(to_string(c.model.kind)); }}},
      {"dim", number_field(&TrainConfig::dim)},
      {"norm",
       {[](TrainConfig& c, std::string_view k, std::string_view v) {
          const auto n = parse_number<int>(k, v);
          if (n != 1 && n != 2) throw UsageError("norm must be 1 or 2");
          c.model.norm = n == 1 ? Norm::L1 : Norm::L2;
        },
        [](const TrainConfig& c) { return std::string(c.model.norm == Norm::L1 ? "1" : "2"); }}},
      {"gamma", nested_field(&TrainConfig::model, &ModelConfig::margin)},
      {"eta", nested_field(&TrainConfig::model, &ModelConfig::eta)},
      {"k_negatives", nested_field(&TrainConfig::model, &ModelConfig::negatives)},
      {"l2", nested_field(&TrainConfig::model, &ModelConfig::l2)},
      {"lr", nested_field(&TrainConfig::adam, &AdamConfig::lr)},
      {"adam_beta1", nested_field(&TrainConfig::adam, &AdamConfig::beta1)},
      {"adam_beta2", nested_field(&TrainConfig::adam, &AdamConfig::beta2)},
      {"adam_eps", nested_field(&TrainConfig::adam, &AdamConfig::eps)},
      {"lr_extended", number_field(&TrainConfig::lr_extended)},
      {"batch_size", number_field(&TrainConfig::batch_size)},
      {"pretrain_epochs", number_field(&TrainConfig::pretrain_epochs)},
      {"alpha", number_field(&TrainConfig::alpha)},
      {"lambda1", number_field(&TrainConfig::lambda1)},
      {"lambda2", number_field(&TrainConfig::lambda2)},
      {"policy_lr", number_field(&TrainConfig::policy_lr)},
      {"agent_warmup_episodes", number_field(&TrainConfig::agent_warmup_episodes)},
      {"episodes", number_field(&TrainConfig::episodes)},
      {"subsample_cap", number_field(&TrainConfig::subsample_cap)},
      {"joint_epochs_per_visit", number_field(&TrainConfig::joint_epochs_per_visit)},
      {"clusters_k", number_field(&TrainConfig::clusters_k)},
      {"kmeans_max_iters", number_field(&TrainConfig::kmeans_max_iters)},
      {"delta", number_field(&TrainConfig::delta)},
      {"seed", number_field(&TrainConfig::seed)},
      {"threads", number_field(&TrainConfig::threads)},
  };
  return table;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  adam.validate();
  if (dim < 1) throw UsageError("dim must be at least 1");
  if (!(lr_extended > 0)) throw UsageError("lr_extended must be positive");
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (!(alpha >= 0)) throw UsageError("alpha must be non-negative");
  if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw UsageError("lambda1/lambda2 must be non-negative");
  if (!(policy_lr > 0)) throw UsageError("policy_lr must be positive");
  if (subsample_cap < 1) throw UsageError("subsample_cap must be at least 1");
  if (clusters_k < 1) throw UsageError("clusters_k must be at least 1");
  if (kmeans_max_iters < 1) throw UsageError("kmeans_max_iters must be at least 1");
  if (!(delta >= 0 && delta <= 1)) throw UsageError("delta must lie in [0, 1]");
  if (threads < 1) throw UsageError("threads must be at least 1");
}

void TrainConfig::set(std::string_view key, std::string_view value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(*this, key, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> TrainConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(*this));
  return out;
}

std::string TrainConfig::to_text() const {
  std::string text;
  for (const auto& [k, v] : entries()) text += k + " = " + v + "\n";
  return text;
}

void apply_config_text(TrainConfig& cfg, std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw UsageError(std::string(origin) + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      cfg.set(trim(std::string_view(body).substr(0, eq)),
              trim(std::string_view(body).substr(eq + 1)));
    } catch (const UsageError& e) {
      throw UsageError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(TrainConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  apply_config_text(cfg, buf.str(), path.string());
}

void write_config_file(const std::filesystem::path& path, const TrainConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << cfg.to_text();
  if (!out) throw DataError("write failed: " + path.string());
}

namespace {

struct Family {
  std::string dataset;
  std::size_t clusters;
};

const std::vector<Family>& families() {
  static const std::vector<Family> f = {{"fb15k", 300}, {"fb15k-237", 120}, {"wn18rr", 10}};
  return f;
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> m = {"transe", "distmult", "rotate"};
  return m;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& fam : families()) {
    for (int level = 1; level <= 3; ++level) {
      for (const auto& m : model_names()) {
        names.push_back(fam.dataset + "-n" + std::to_string(level) + "-" + m);
      }
    }
  }
  names.emplace_back("synthetic-n1");
  return names;
}

TrainConfig preset_config(std::string_view name) {
  TrainConfig cfg;
  if (name == "synthetic-n1") {
    cfg.model.kind = ModelKind::TransE;
    cfg.model.norm = Norm::L1;
    cfg.model.margin = 1.0;
    cfg.dim = 32;
    cfg.batch_size = 256;
    cfg.adam.lr = 0.01;
    cfg.lr_extended = 0.005;
    cfg.pretrain_epochs = 100;
    cfg.alpha = 0.05;
    cfg.policy_lr = 0.001;
    cfg.agent_warmup_episodes = 5;
    cfg.episodes = 15;
    cfg.clusters_k = 5;
    cfg.delta = 0.1;
    return cfg;
  }
  for (const auto& fam : families()) {
    for (int level = 1; level <= 3; ++level) {
      for (const auto& m : model_names()) {
        if (name != fam.dataset + "-n" + std::to_string(level) + "-" + m) continue;
        cfg.model.kind = parse_model_kind(m);
        cfg.clusters_k = fam.clusters;
        switch (cfg.model.kind) {
          case ModelKind::TransE:
            cfg.alpha = 0.05;
            cfg.delta = level == 1 ? 0.10 : level == 2 ? 0.15 : 0.25;
            break;
          case ModelKind::DistMult:
            cfg.alpha = level == 1 ? 0.3 : level == 2 ? 0.2 : 0.1;
            cfg.delta = level == 1 ? 0.10 : level == 2 ? 0.15 : 0.30;
            break;
          case ModelKind::RotatE:
            cfg.alpha = 0.02;
            cfg.delta = level == 1 ? 0.10 : level == 2 ? 0.15 : 0.25;
            break;
        }
        return cfg;
      }
    }
  }
  throw UsageError("unknown preset '" + std::string(name) + "'");
}

}  // namespace rlkge
