#include "sciml/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "sciml/csv.hpp"

namespace sciml {

Budget budget_from_string(std::string_view name) {
  if (name == "desk") return Budget::Desk;
  if (name == "paper") return Budget::Paper;
  throw std::invalid_argument("unknown budget: " + std::string(name));
}

std::string_view to_string(Budget b) { return b == Budget::Desk ? "desk" : "paper"; }

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_scalar(const std::string& v);

template <>
double parse_scalar<double>(const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad numeric value '" + v + "'");
  }
}

template <>
int parse_scalar<int>(const std::string& v) {
  int out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::invalid_argument("bad integer value '" + v + "'");
  return out;
}

template <>
long parse_scalar<long>(const std::string& v) {
  long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::invalid_argument("bad integer value '" + v + "'");
  return out;
}

template <>
std::uint64_t parse_scalar<std::uint64_t>(const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw std::invalid_argument("bad unsigned value '" + v + "'");
  return out;
}

template <>
std::string parse_scalar<std::string>(const std::string& v) {
  return v;
}

template <typename T>
std::vector<T> parse_list(const std::string& v) {
  std::vector<T> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty list element in '" + v + "'");
    out.push_back(parse_scalar<T>(item));
  }
  if (out.empty()) throw std::invalid_argument("empty list value");
  return out;
}

template <typename T>
std::string show_scalar(const T& v) {
  if constexpr (std::is_same_v<T, double>)
    return format_double(v);
  else if constexpr (std::is_same_v<T, std::string>)
    return v;
  else
    return std::to_string(v);
}

template <typename T>
std::string show_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += show_scalar(v[i]);
  }
  return out;
}

struct Entry {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Entry scalar_entry(const char* key, T RunConfig::* member) {
  return {key,
          [member](const RunConfig& c) { return show_scalar(c.*member); },
          [member](RunConfig& c, const std::string& v) { c.*member = parse_scalar<T>(v); }};
}

template <typename T>
Entry list_entry(const char* key, std::vector<T> RunConfig::* member) {
  return {key,
          [member](const RunConfig& c) { return show_list(c.*member); },
          [member](RunConfig& c, const std::string& v) { c.*member = parse_list<T>(v); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      scalar_entry("lv.alpha", &RunConfig::lv_alpha),
      scalar_entry("lv.beta", &RunConfig::lv_beta),
      scalar_entry("lv.gamma", &RunConfig::lv_gamma),
      scalar_entry("lv.delta", &RunConfig::lv_delta),
      scalar_entry("data.t0", &RunConfig::data_t0),
      scalar_entry("data.t1", &RunConfig::data_t1),
      scalar_entry("data.points", &RunConfig::data_points),
      scalar_entry("data.x0", &RunConfig::data_x0),
      scalar_entry("data.y0", &RunConfig::data_y0),
      scalar_entry("data.sigma", &RunConfig::data_sigma),
      scalar_entry("data.noise_seed", &RunConfig::data_noise_seed),
      scalar_entry("tol.reltol", &RunConfig::tol_reltol),
      scalar_entry("tol.abstol", &RunConfig::tol_abstol),
      scalar_entry("tol.dt_init", &RunConfig::tol_dt_init),
      scalar_entry("tol.dt_min", &RunConfig::tol_dt_min),
      scalar_entry("tol.max_steps", &RunConfig::tol_max_steps),
      scalar_entry("train.substeps", &RunConfig::train_substeps),
      scalar_entry("train.seed", &RunConfig::train_seed),
      scalar_entry("train.log_every", &RunConfig::train_log_every),
      list_entry("node.widths", &RunConfig::node_widths),
      scalar_entry("node.activation", &RunConfig::node_activation),
      list_entry("ude.widths", &RunConfig::ude_widths),
      scalar_entry("ude.activation", &RunConfig::ude_activation),
      scalar_entry("node.adam_iters", &RunConfig::node_adam_iters),
      scalar_entry("node.adam_lr", &RunConfig::node_adam_lr),
      scalar_entry("node.lbfgs_iters", &RunConfig::node_lbfgs_iters),
      scalar_entry("ude.adam_iters", &RunConfig::ude_adam_iters),
      scalar_entry("ude.adam_lr", &RunConfig::ude_adam_lr),
      scalar_entry("ude.rmsprop_iters", &RunConfig::ude_rmsprop_iters),
      scalar_entry("ude.rmsprop_lr", &RunConfig::ude_rmsprop_lr),
      scalar_entry("ude.rmsprop_rho", &RunConfig::ude_rmsprop_rho),
      scalar_entry("ude.rmsprop_eps", &RunConfig::ude_rmsprop_eps),
      scalar_entry("node.desk_adam_iters", &RunConfig::node_desk_adam_iters),
      scalar_entry("node.desk_lbfgs_iters", &RunConfig::node_desk_lbfgs_iters),
      scalar_entry("ude.desk_adam_iters", &RunConfig::ude_desk_adam_iters),
      scalar_entry("ude.desk_rmsprop_iters", &RunConfig::ude_desk_rmsprop_iters),
      list_entry("sweep.fractions", &RunConfig::sweep_fractions),
      scalar_entry("sweep.threshold", &RunConfig::sweep_threshold),
      list_entry("sweep.seeds", &RunConfig::sweep_seeds),
      list_entry("sweep.sigmas", &RunConfig::sweep_sigmas),
      scalar_entry("sweep.noise_split", &RunConfig::sweep_noise_split),
      list_entry("sweep.hidden_units", &RunConfig::sweep_hidden_units),
      list_entry("sweep.activations", &RunConfig::sweep_activations),
      list_entry("sweep.step_sizes", &RunConfig::sweep_step_sizes),
      scalar_entry("sweep.jobs", &RunConfig::sweep_jobs),
      scalar_entry("forecast.t_end", &RunConfig::forecast_t_end),
      scalar_entry("out.dir", &RunConfig::out_dir),
  };
  return table;
}

}  // namespace

void apply_config_line(RunConfig& cfg, const std::string& raw) {
  std::string line = raw;
  if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
  line = trim(line);
  if (line.empty()) return;

  const auto eq = line.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("config: expected 'key = value', got '" + raw + "'");
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));

  for (const Entry& e : entries()) {
    if (key == e.key) {
      e.set(cfg, value);
      return;
    }
  }
  throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) apply_config_line(cfg, line);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open config: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const Entry& e : entries()) {
    out += e.key;
    out += " = ";
    out += e.get(cfg);
    out += '\n';
  }
  return out;
}

LvParams lv_params(const RunConfig& cfg) {
  LvParams p{cfg.lv_alpha, cfg.lv_beta, cfg.lv_gamma, cfg.lv_delta};
  validate(p);
  return p;
}

StateVec initial_state(const RunConfig& cfg) { return {cfg.data_x0, cfg.data_y0}; }

ToleranceSpec tolerance(const RunConfig& cfg) {
  return {cfg.tol_reltol, cfg.tol_abstol, cfg.tol_dt_init, cfg.tol_dt_min,
          cfg.tol_max_steps};
}

DiffModel build_model(const RunConfig& cfg, ModelKind kind) {
  if (kind == ModelKind::NeuralOde)
    return make_neural_ode(cfg.node_widths, activation_from_string(cfg.node_activation));
  return make_ude(cfg.ude_widths, activation_from_string(cfg.ude_activation),
                  cfg.lv_alpha, cfg.lv_delta);
}

TrainSchedule build_schedule(const RunConfig& cfg, ModelKind kind, Budget budget) {
  TrainSchedule sched;
  sched.log_every = cfg.train_log_every;
  const bool desk = budget == Budget::Desk;
  if (kind == ModelKind::NeuralOde) {
    Phase adam;
    adam.kind = PhaseKind::Adam;
    adam.iters = desk ? cfg.node_desk_adam_iters : cfg.node_adam_iters;
    adam.lr = cfg.node_adam_lr;
    Phase lbfgs;
    lbfgs.kind = PhaseKind::Lbfgs;
    lbfgs.iters = desk ? cfg.node_desk_lbfgs_iters : cfg.node_lbfgs_iters;
    sched.phases = {adam, lbfgs};
  } else {
    Phase adam;
    adam.kind = PhaseKind::Adam;
    adam.iters = desk ? cfg.ude_desk_adam_iters : cfg.ude_adam_iters;
    adam.lr = cfg.ude_adam_lr;
    Phase rms;
    rms.kind = PhaseKind::RmsProp;
    rms.iters = desk ? cfg.ude_desk_rmsprop_iters : cfg.ude_rmsprop_iters;
    rms.lr = cfg.ude_rmsprop_lr;
    rms.rho = cfg.ude_rmsprop_rho;
    rms.eps = cfg.ude_rmsprop_eps;
    sched.phases = {adam, rms};
  }
  validate(sched);
  return sched;
}

}  // namespace sciml
