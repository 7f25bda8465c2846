#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "evoplace/error.hpp"
#include "evoplace/harness.hpp"

namespace evoplace::harness {

namespace {

namespace pt = boost::property_tree;

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, key + ": expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<long long>(d))) throw Error(ErrorCode::InvalidConfig, key + ": expected an integer");
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorCode::InvalidConfig, key + ": expected true or false");
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"run.seed", [](ExperimentConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_int("run.seed", v)); }},
      {"run.workers", [](ExperimentConfig& c, const std::string& v) { c.workers = static_cast<int>(to_int("run.workers", v)); }},

      {"backend.mode",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "mock") c.backend.mode = llm::Mode::Mock;
         else if (v == "remote") c.backend.mode = llm::Mode::Remote;
         else throw Error(ErrorCode::InvalidConfig, "backend.mode must be mock or remote");
       }},
      {"backend.endpoint", [](ExperimentConfig& c, const std::string& v) { c.backend.endpoint = v; }},
      {"backend.model", [](ExperimentConfig& c, const std::string& v) { c.backend.model = v; }},
      {"backend.embedding_model", [](ExperimentConfig& c, const std::string& v) { c.backend.embedding_model = v; }},
      {"backend.temperature", [](ExperimentConfig& c, const std::string& v) { c.backend.temperature = to_double("backend.temperature", v); }},
      {"backend.reflection_temperature",
       [](ExperimentConfig& c, const std::string& v) { c.backend.reflection_temperature = to_double("backend.reflection_temperature", v); }},
      {"backend.timeout", [](ExperimentConfig& c, const std::string& v) { c.backend.timeout = to_double("backend.timeout", v); }},
      {"backend.max_tries", [](ExperimentConfig& c, const std::string& v) { c.backend.retry.max_tries = static_cast<int>(to_int("backend.max_tries", v)); }},
      {"backend.base_delay", [](ExperimentConfig& c, const std::string& v) { c.backend.retry.base_delay = to_double("backend.base_delay", v); }},
      {"backend.backoff_factor", [](ExperimentConfig& c, const std::string& v) { c.backend.retry.factor = to_double("backend.backoff_factor", v); }},
      {"backend.api_key_env", [](ExperimentConfig& c, const std::string& v) { c.backend.api_key_env = v; }},
      {"backend.max_in_flight", [](ExperimentConfig& c, const std::string& v) { c.backend.max_in_flight = static_cast<int>(to_int("backend.max_in_flight", v)); }},
      {"backend.embedding_dim", [](ExperimentConfig& c, const std::string& v) { c.backend.embedding_dim = static_cast<int>(to_int("backend.embedding_dim", v)); }},
      {"backend.mock_seed", [](ExperimentConfig& c, const std::string& v) { c.backend.seed = static_cast<std::uint64_t>(to_int("backend.mock_seed", v)); }},
      {"backend.mock_unfenced_rate", [](ExperimentConfig& c, const std::string& v) { c.backend.mock_unfenced_rate = to_double("backend.mock_unfenced_rate", v); }},
      {"backend.templates_dir", [](ExperimentConfig& c, const std::string& v) { c.templates_dir = v; }},

      {"engine.max_iters", [](ExperimentConfig& c, const std::string& v) { c.engine.max_iters = static_cast<int>(to_int("engine.max_iters", v)); }},
      {"engine.stop_overflow", [](ExperimentConfig& c, const std::string& v) { c.engine.stop_overflow = to_double("engine.stop_overflow", v); }},
      {"engine.divergence_factor", [](ExperimentConfig& c, const std::string& v) { c.engine.divergence_factor = to_double("engine.divergence_factor", v); }},
      {"engine.gamma_start", [](ExperimentConfig& c, const std::string& v) { c.engine.gamma_start = to_double("engine.gamma_start", v); }},
      {"engine.gamma_end", [](ExperimentConfig& c, const std::string& v) { c.engine.gamma_end = to_double("engine.gamma_end", v); }},
      {"engine.target_density", [](ExperimentConfig& c, const std::string& v) { c.engine.target_density = to_double("engine.target_density", v); }},
      {"engine.density_stretch", [](ExperimentConfig& c, const std::string& v) { c.engine.density_stretch = to_double("engine.density_stretch", v); }},
      {"engine.warmup_iters", [](ExperimentConfig& c, const std::string& v) { c.engine.warmup_iters = static_cast<int>(to_int("engine.warmup_iters", v)); }},
      {"engine.lambda_growth", [](ExperimentConfig& c, const std::string& v) { c.engine.lambda_growth = to_double("engine.lambda_growth", v); }},
      {"engine.initial_step", [](ExperimentConfig& c, const std::string& v) { c.engine.initial_step = to_double("engine.initial_step", v); }},
      {"engine.momentum_restart", [](ExperimentConfig& c, const std::string& v) { c.engine.momentum_restart = to_bool("engine.momentum_restart", v); }},
      {"engine.max_move", [](ExperimentConfig& c, const std::string& v) { c.engine.max_move = to_double("engine.max_move", v); }},
      {"engine.plateau_window", [](ExperimentConfig& c, const std::string& v) { c.engine.plateau_window = static_cast<int>(to_int("engine.plateau_window", v)); }},
      {"engine.plateau_tolerance", [](ExperimentConfig& c, const std::string& v) { c.engine.plateau_tolerance = to_double("engine.plateau_tolerance", v); }},
      {"engine.plateau_noise", [](ExperimentConfig& c, const std::string& v) { c.engine.plateau_noise = to_double("engine.plateau_noise", v); }},
      {"engine.init_noise", [](ExperimentConfig& c, const std::string& v) { c.engine.init_noise = to_double("engine.init_noise", v); }},

      {"select.m", [](ExperimentConfig& c, const std::string& v) { c.select.m = static_cast<std::size_t>(to_int("select.m", v)); }},
      {"select.k", [](ExperimentConfig& c, const std::string& v) { c.select.k = static_cast<std::size_t>(to_int("select.k", v)); }},
      {"select.alpha", [](ExperimentConfig& c, const std::string& v) { c.select.alpha = to_double("select.alpha", v); }},
      {"select.beta", [](ExperimentConfig& c, const std::string& v) { c.select.beta = to_double("select.beta", v); }},

      {"evolve.m", [](ExperimentConfig& c, const std::string& v) { c.evolve.m = static_cast<std::size_t>(to_int("evolve.m", v)); }},
      {"evolve.trials", [](ExperimentConfig& c, const std::string& v) { c.evolve.trials = static_cast<int>(to_int("evolve.trials", v)); }},
      {"evolve.lambda", [](ExperimentConfig& c, const std::string& v) { c.evolve.lambda = to_double("evolve.lambda", v); }},
      {"evolve.fanout", [](ExperimentConfig& c, const std::string& v) { c.evolve.fanout = static_cast<int>(to_int("evolve.fanout", v)); }},
      {"evolve.pool_size", [](ExperimentConfig& c, const std::string& v) { c.pool_size = static_cast<std::size_t>(to_int("evolve.pool_size", v)); }},

      {"dse.budget", [](ExperimentConfig& c, const std::string& v) { c.dse_budget = static_cast<std::size_t>(to_int("dse.budget", v)); }},
      {"dse.init_count", [](ExperimentConfig& c, const std::string& v) { c.dse.init_count = static_cast<std::size_t>(to_int("dse.init_count", v)); }},
      {"dse.xi", [](ExperimentConfig& c, const std::string& v) { c.dse.xi = to_double("dse.xi", v); }},
      {"dse.noise_var", [](ExperimentConfig& c, const std::string& v) { c.dse.noise_var = to_double("dse.noise_var", v); }},
      {"dse.mode",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "residual") c.dse.mode = dse::FusionMode::Residual;
         else if (v == "raw") c.dse.mode = dse::FusionMode::Raw;
         else throw Error(ErrorCode::InvalidConfig, "dse.mode must be residual or raw");
       }},
      {"dse.surrogate", [](ExperimentConfig& c, const std::string& v) { c.surrogate_path = v; }},

      {"surrogate.hidden_a", [](ExperimentConfig& c, const std::string& v) { c.surrogate.hidden_a = static_cast<int>(to_int("surrogate.hidden_a", v)); }},
      {"surrogate.out_a", [](ExperimentConfig& c, const std::string& v) { c.surrogate.out_a = static_cast<int>(to_int("surrogate.out_a", v)); }},
      {"surrogate.hidden_b", [](ExperimentConfig& c, const std::string& v) { c.surrogate.hidden_b = static_cast<int>(to_int("surrogate.hidden_b", v)); }},
      {"surrogate.learning_rate", [](ExperimentConfig& c, const std::string& v) { c.surrogate.learning_rate = to_double("surrogate.learning_rate", v); }},
      {"surrogate.epochs", [](ExperimentConfig& c, const std::string& v) { c.surrogate.epochs = static_cast<int>(to_int("surrogate.epochs", v)); }},
      {"surrogate.batch_size", [](ExperimentConfig& c, const std::string& v) { c.surrogate.batch_size = static_cast<int>(to_int("surrogate.batch_size", v)); }},
  };
  return table;
}

}  // namespace

void apply_config_text(ExperimentConfig& cfg, const std::string& ini_text) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what(), static_cast<int>(e.line()));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw Error(ErrorCode::InvalidConfig, "config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = setters().find(full);
      if (it == setters().end()) throw Error(ErrorCode::InvalidConfig, "config: unknown key '" + full + "'");
      it->second(cfg, value.get_value<std::string>());
    }
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg;
  apply_config_text(cfg, ss.str());
  return cfg;
}

}  // namespace evoplace::harness
