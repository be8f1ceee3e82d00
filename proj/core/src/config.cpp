#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "csv_util.hpp"
#include "hoope/harness.hpp"

namespace hoope {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Nohoope: return "nohoope";
    case Variant::Pso: return "pso";
    case Variant::Rtc: return "rtc";
  }
  return "nohoope";
}

Variant variant_from_string(const std::string& s) {
  if (s == "nohoope") return Variant::Nohoope;
  if (s == "pso") return Variant::Pso;
  if (s == "rtc") return Variant::Rtc;
  throw ConfigError("unknown variant: " + s);
}

ExperimentConfig ExperimentConfig::desk() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::paper() {
  ExperimentConfig cfg;
  cfg.run_length_mtu = 7200.0;
  cfg.spinup_mtu = 2500.0;
  cfg.offline_run_mtu = 28800.0;
  cfg.index_window_mtu = 2000.0;
  cfg.bootstrap_subset_mtu = 500.0;
  return cfg;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + value);
  }
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + value);
  }
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad seed value for " + key + ": " + value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad boolean value for " + key + ": " + value);
}

// 1-based comma-separated grid list, e.g. "1,2,5,6".
std::vector<int> parse_grids(const std::string& key, const std::string& value) {
  std::vector<int> grids;
  for (const auto& cell : csv::split(value)) {
    const long g = parse_long(key, trim(cell));
    if (g < 1) throw ConfigError("grid indices are 1-based in " + key);
    grids.push_back(static_cast<int>(g - 1));
  }
  return grids;
}

}  // namespace

void ExperimentConfig::apply_key(const std::string& key,
                                 const std::string& value) {
  if (key == "variant") variant = variant_from_string(value);
  else if (key == "ensemble_size") ensemble_size = static_cast<int>(parse_long(key, value));
  else if (key == "run_length_mtu") run_length_mtu = parse_double(key, value);
  else if (key == "spinup_mtu") spinup_mtu = parse_double(key, value);
  else if (key == "nature_spinup_mtu") nature_spinup_mtu = parse_double(key, value);
  else if (key == "offline_run_mtu") offline_run_mtu = parse_double(key, value);
  else if (key == "index_window_mtu") index_window_mtu = parse_double(key, value);
  else if (key == "bootstrap_subset_mtu") bootstrap_subset_mtu = parse_double(key, value);
  else if (key == "n_bootstrap") n_bootstrap = static_cast<int>(parse_long(key, value));
  else if (key == "param_grid_count") param_grid_count = static_cast<int>(parse_long(key, value));
  else if (key == "param_min") param_min = parse_double(key, value);
  else if (key == "param_max") param_max = parse_double(key, value);
  else if (key == "mcmc_total") mcmc_total = parse_long(key, value);
  else if (key == "mcmc_burnin") mcmc_burnin = parse_long(key, value);
  else if (key == "mcmc_proposal_std") mcmc_proposal_std = parse_double(key, value);
  else if (key == "observed_grids") observed_grids = parse_grids(key, value);
  else if (key == "obs_noise_std") obs_noise_std = parse_double(key, value);
  else if (key == "inflation_mode") {
    if (value == "fixed") inflation.mode = InflationMode::Fixed;
    else if (value == "adaptive") inflation.mode = InflationMode::Adaptive;
    else throw ConfigError("inflation_mode must be fixed or adaptive");
  }
  else if (key == "rho_x") inflation.rho_x = parse_double(key, value);
  else if (key == "rho_theta") inflation.rho_theta = parse_double(key, value);
  else if (key == "adaptive_prior_variance") inflation.adaptive.prior_variance = parse_double(key, value);
  else if (key == "adaptive_rho_init") inflation.adaptive.rho_init = parse_double(key, value);
  else if (key == "adaptive_rho_min") inflation.adaptive.rho_min = parse_double(key, value);
  else if (key == "adaptive_rho_max") inflation.adaptive.rho_max = parse_double(key, value);
  else if (key == "localization_sigma") localization.sigma = parse_double(key, value);
  else if (key == "n_x") model.n_x = static_cast<int>(parse_long(key, value));
  else if (key == "n_z") model.n_z = static_cast<int>(parse_long(key, value));
  else if (key == "forcing") model.forcing = parse_double(key, value);
  else if (key == "timescale") model.timescale = parse_double(key, value);
  else if (key == "coupling_hx") model.coupling_hx = parse_double(key, value);
  else if (key == "coupling_hz") model.coupling_hz = parse_double(key, value);
  else if (key == "dt") model.dt = parse_double(key, value);
  else if (key == "seed_nature") seed_nature = parse_seed(key, value);
  else if (key == "seed_obs") seed_obs = parse_seed(key, value);
  else if (key == "seed_init") seed_init = parse_seed(key, value);
  else if (key == "seed_mcmc") seed_mcmc = parse_seed(key, value);
  else if (key == "prior_path") prior_path = value;
  else if (key == "nature_file") nature_file = value;
  else if (key == "observation_file") observation_file = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "write_artifacts") write_artifacts = parse_bool(key, value);
  else throw ConfigError("unknown config key: " + key);
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);

  // First pass picks up the preset so later keys overlay it.
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string preset = "desk";
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "preset") preset = value;
    else pairs.emplace_back(key, value);
  }

  ExperimentConfig cfg;
  if (preset == "desk") cfg = desk();
  else if (preset == "paper") cfg = paper();
  else throw ConfigError("unknown preset: " + preset);
  for (const auto& [key, value] : pairs) cfg.apply_key(key, value);
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  try {
    model.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (ensemble_size < 2) throw ConfigError("ensemble_size must be >= 2");
  if (!(run_length_mtu > 0.0)) throw ConfigError("run_length_mtu must be positive");
  if (!(spinup_mtu < run_length_mtu))
    throw ConfigError("spinup_mtu must be smaller than run_length_mtu");
  if (!(obs_noise_std > 0.0)) throw ConfigError("obs_noise_std must be positive");
  if (observed_grids.empty()) throw ConfigError("observed_grids must be nonempty");
  for (int g : observed_grids)
    if (g < 0 || g >= model.n_x)
      throw ConfigError("observed grid out of range");
  if (!(param_min < param_max)) throw ConfigError("param bounds inverted");
  if (param_grid_count < 3) throw ConfigError("param_grid_count must be >= 3");
  if (mcmc_burnin < 0 || mcmc_burnin >= mcmc_total)
    throw ConfigError("mcmc_burnin must lie inside mcmc_total");
  if (!(mcmc_proposal_std > 0.0))
    throw ConfigError("mcmc_proposal_std must be positive");
  if (inflation.mode == InflationMode::Fixed &&
      (inflation.rho_x < 1.0 || inflation.rho_theta < 1.0))
    throw ConfigError("fixed inflation factors must be >= 1");
  if (!(localization.sigma > 0.0))
    throw ConfigError("localization_sigma must be positive");
  if (!(index_window_mtu > 0.0) || index_window_mtu > offline_run_mtu)
    throw ConfigError("index_window_mtu must fit inside offline_run_mtu");
  if (!(bootstrap_subset_mtu > 0.0))
    throw ConfigError("bootstrap_subset_mtu must be positive");
  // Whether the bootstrap window fits the observed series is checked by the
  // offline stage; it depends on the observation file actually loaded.
}

std::vector<double> linear_grid(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("grid count must be positive");
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  for (int i = 0; i < count; ++i)
    grid[i] = lo + (hi - lo) * i / (count - 1);
  return grid;
}

}  // namespace hoope
