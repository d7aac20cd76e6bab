// firmnet command-line front end: synthetic panel generation, descriptive
// tables, posterior estimation, counterfactual replays, and the
// measurement-error experiment.  Every run writes a manifest.json recording
// the command, configuration echo, seed, and output files.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "firmnet/firmnet.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool plot_data = false;
};

json load_config(const CommonOpts& opts) {
  if (opts.config.empty()) throw firmnet::ConfigError("--config is required");
  fs::path p(opts.config);
  if (!fs::exists(p)) throw firmnet::DataError("config file not found: " + p.string());
  std::ifstream in(p);
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw firmnet::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

// Relative input paths resolve against the config file's directory.
fs::path resolve_input(const CommonOpts& opts, const std::string& rel) {
  fs::path p(rel);
  if (p.is_absolute()) return p;
  return fs::path(opts.config).parent_path() / p;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& what) {
  if (!j.is_object()) throw firmnet::ConfigError(what + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw firmnet::ConfigError(what + ": unknown key '" + it.key() + "'");
  }
}

double need_number(const json& j, const char* key, const std::string& what) {
  if (!j.contains(key)) throw firmnet::ConfigError(what + ": missing key '" + key + "'");
  if (!j[key].is_number()) throw firmnet::ConfigError(what + ": '" + key + "' must be numeric");
  return j[key].get<double>();
}

firmnet::StructuralParams parse_params(const json& j, const std::string& what) {
  check_keys(j, {"beta_G", "beta_H", "beta_LG", "beta_LH", "gamma", "mu0", "sigma0"}, what);
  std::array<double, 7> a{};
  for (std::size_t k = 0; k < 7; ++k)
    a[k] = need_number(j, std::string(firmnet::StructuralParams::names[k]).c_str(), what);
  auto p = firmnet::StructuralParams::from_array(a);
  p.validate();
  return p;
}

firmnet::GeneratorConfig parse_generator(const json& j, const CommonOpts& opts) {
  check_keys(j,
             {"firm_count", "year_count", "first_year", "nomination_cap", "edge_density",
              "params", "p_sever_on_negative", "p_form_on_positive", "noise_sd", "seed",
              "neumann_terms"},
             "generator");
  firmnet::GeneratorConfig cfg;
  cfg.firm_count = static_cast<firmnet::FirmIndex>(need_number(j, "firm_count", "generator"));
  cfg.year_count = static_cast<int>(need_number(j, "year_count", "generator"));
  cfg.first_year = static_cast<int>(j.value("first_year", 2003));
  cfg.nomination_cap = static_cast<int>(j.value("nomination_cap", 5));
  cfg.edge_density = need_number(j, "edge_density", "generator");
  if (!j.contains("params")) throw firmnet::ConfigError("generator: missing 'params'");
  cfg.params = parse_params(j["params"], "generator.params");
  cfg.p_sever_on_negative = j.value("p_sever_on_negative", 0.5);
  cfg.p_form_on_positive = j.value("p_form_on_positive", 0.3);
  cfg.noise_sd = j.value("noise_sd", 0.0);
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.neumann_terms = j.value("neumann_terms", 30);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

firmnet::PriorSpec parse_priors(const json& root) {
  firmnet::PriorSpec spec;
  if (!root.contains("priors")) return spec;
  const json& j = root["priors"];
  check_keys(j, {"beta_G", "beta_H", "beta_LG", "beta_LH", "gamma", "mu0", "sigma0_sq"},
             "priors");
  firmnet::NormalPrior* locs[6] = {&spec.beta_G, &spec.beta_H, &spec.beta_LG,
                                   &spec.beta_LH, &spec.gamma,  &spec.mu0};
  for (std::size_t k = 0; k < 6; ++k) {
    std::string key(firmnet::StructuralParams::names[k]);
    if (!j.contains(key)) continue;
    check_keys(j[key], {"mean", "var"}, "priors." + key);
    locs[k]->mean = j[key].value("mean", locs[k]->mean);
    locs[k]->var = j[key].value("var", locs[k]->var);
  }
  if (j.contains("sigma0_sq")) {
    check_keys(j["sigma0_sq"], {"shape", "scale"}, "priors.sigma0_sq");
    spec.sigma0_sq.shape = j["sigma0_sq"].value("shape", spec.sigma0_sq.shape);
    spec.sigma0_sq.scale = j["sigma0_sq"].value("scale", spec.sigma0_sq.scale);
  }
  spec.validate();
  return spec;
}

firmnet::ChainConfig parse_chain(const json& root, const CommonOpts& opts) {
  firmnet::ChainConfig cfg;
  if (root.contains("chain")) {
    const json& j = root["chain"];
    check_keys(j,
               {"iterations", "burn_in", "thinning", "step_beta", "step_lag", "adapt",
                "seed", "neumann_terms", "logdet"},
               "chain");
    cfg.iterations = j.value("iterations", cfg.iterations);
    cfg.burn_in = j.value("burn_in", cfg.burn_in);
    cfg.thinning = j.value("thinning", cfg.thinning);
    cfg.step_beta = j.value("step_beta", cfg.step_beta);
    cfg.step_lag = j.value("step_lag", cfg.step_lag);
    cfg.adapt = j.value("adapt", cfg.adapt);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.neumann_terms = j.value("neumann_terms", cfg.neumann_terms);
    if (j.contains("logdet")) {
      const json& l = j["logdet"];
      check_keys(l, {"method", "probes", "terms", "dense_limit"}, "chain.logdet");
      std::string method = l.value("method", std::string("trace"));
      if (method == "dense")
        cfg.logdet.method = firmnet::LogdetMethod::dense;
      else if (method == "trace")
        cfg.logdet.method = firmnet::LogdetMethod::trace_series;
      else
        throw firmnet::ConfigError("chain.logdet.method must be 'dense' or 'trace'");
      cfg.logdet.trace_probes = l.value("probes", cfg.logdet.trace_probes);
      cfg.logdet.trace_terms = l.value("terms", cfg.logdet.trace_terms);
      cfg.logdet.dense_limit = l.value("dense_limit", cfg.logdet.dense_limit);
    }
  }
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

struct Inputs {
  firmnet::FirmRegistry registry;
  firmnet::PanelNetwork panel;
  firmnet::GrowthPanel growth;
  firmnet::io::PanelLoadReport report;
};

Inputs load_inputs(const json& root, const CommonOpts& opts) {
  if (!root.contains("inputs")) throw firmnet::ConfigError("config: missing 'inputs'");
  const json& j = root["inputs"];
  check_keys(j, {"firms", "edges", "growth"}, "inputs");
  for (const char* key : {"firms", "edges", "growth"})
    if (!j.contains(key) || !j[key].is_string())
      throw firmnet::ConfigError(std::string("inputs: missing path '") + key + "'");

  Inputs in{firmnet::io::read_firm_registry(resolve_input(opts, j["firms"])), {}, {}, {}};
  auto loaded = firmnet::io::load_panel(resolve_input(opts, j["edges"]), in.registry);
  in.panel = std::move(loaded.panel);
  in.report = loaded.report;
  in.growth = firmnet::io::read_growth(resolve_input(opts, j["growth"]), in.registry);
  return in;
}

std::ofstream open_out(const CommonOpts& opts, const std::string& name,
                       std::vector<std::string>& outputs) {
  fs::path dir(opts.out);
  fs::create_directories(dir);
  auto out = firmnet::io::detail::open_output(dir / name);
  outputs.push_back(name);
  return out;
}

void write_growth_summary(const firmnet::GrowthPanel& growth, std::ostream& out) {
  out << "year,mean,sd,min,q25,median,q75,max\n";
  for (std::size_t t = 0; t < growth.years().size(); ++t) {
    std::vector<double> v = growth.y_at(t);
    std::sort(v.begin(), v.end());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    auto q = [&](double p) { return firmnet::detail::quantile_r7(v, p); };
    out << growth.years()[t] << ',' << firmnet::io::detail::fmt(mean) << ','
        << firmnet::io::detail::fmt(sd) << ',' << firmnet::io::detail::fmt(v.front())
        << ',' << firmnet::io::detail::fmt(q(0.25)) << ','
        << firmnet::io::detail::fmt(q(0.5)) << ',' << firmnet::io::detail::fmt(q(0.75))
        << ',' << firmnet::io::detail::fmt(v.back()) << "\n";
  }
}

void write_network_summary(const firmnet::PanelNetwork& panel, std::ostream& out) {
  out << "year,edges_G,edges_H,max_out_G,max_out_H,mean_out_G,mean_out_H\n";
  for (std::size_t t = 0; t < panel.year_count(); ++t) {
    const auto& s = panel.snapshot_at(t);
    double n = static_cast<double>(panel.firm_count());
    out << panel.years()[t] << ',' << s.G.nnz() << ',' << s.H.nnz() << ','
        << s.G.max_out_degree() << ',' << s.H.max_out_degree() << ','
        << firmnet::io::detail::fmt(static_cast<double>(s.G.nnz()) / n) << ','
        << firmnet::io::detail::fmt(static_cast<double>(s.H.nnz()) / n) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Subcommands

std::vector<std::string> run_generate(const json& cfg, const CommonOpts& opts) {
  if (!cfg.contains("generator")) throw firmnet::ConfigError("config: missing 'generator'");
  firmnet::GeneratorConfig gen = parse_generator(cfg["generator"], opts);
  firmnet::SyntheticPanel panel = firmnet::generate_panel(gen);

  std::vector<std::string> outputs;
  {
    auto out = open_out(opts, "firms.csv", outputs);
    firmnet::io::write_firm_registry(panel.network.registry(), out);
  }
  {
    auto out = open_out(opts, "edges.csv", outputs);
    firmnet::io::write_edge_list(panel.network, out);
  }
  {
    auto out = open_out(opts, "growth.csv", outputs);
    firmnet::io::write_growth(panel.growth, panel.network.registry(), out);
  }
  {
    auto out = open_out(opts, "latent_growth.csv", outputs);
    firmnet::io::write_growth(panel.growth, panel.network.registry(), out, true);
  }
  {
    auto out = open_out(opts, "true_shocks.csv", outputs);
    firmnet::io::write_shocks(panel.shocks, panel.network.registry(), out);
  }
  {
    auto out = open_out(opts, "true_params.txt", outputs);
    firmnet::io::write_params(gen.params, out);
  }
  {
    fs::path dir(opts.out);
    firmnet::io::save_panel_binary(panel.network, dir / "panel.bin");
    outputs.push_back("panel.bin");
  }
  if (opts.plot_data) {
    auto out = open_out(opts, "growth_summary.csv", outputs);
    write_growth_summary(panel.growth, out);
  }
  return outputs;
}

std::vector<std::string> run_describe(const json& cfg, const CommonOpts& opts) {
  Inputs in = load_inputs(cfg, opts);
  int max_order = 3;
  if (cfg.contains("describe")) {
    check_keys(cfg["describe"], {"max_order"}, "describe");
    max_order = cfg["describe"].value("max_order", 3);
  }

  std::vector<std::string> outputs;
  {
    auto out = open_out(opts, "network_summary.csv", outputs);
    write_network_summary(in.panel, out);
  }
  {
    auto out = open_out(opts, "growth_summary.csv", outputs);
    write_growth_summary(in.growth, out);
  }
  {
    std::vector<firmnet::LinkDiff> diffs;
    std::vector<firmnet::NeighborGrowthStats> stats;
    for (std::size_t t = 1; t < in.panel.year_count(); ++t) {
      int year = in.panel.years()[t];
      diffs.push_back(firmnet::link_diff(in.panel, year));
      if (in.growth.has_year(year)) {
        auto s = firmnet::neighbor_growth_stats(in.panel, in.growth, year, max_order);
        stats.insert(stats.end(), s.begin(), s.end());
      }
    }
    auto out = open_out(opts, "link_diff.csv", outputs);
    firmnet::io::write_link_diff(diffs, in.registry, out);
    auto out2 = open_out(opts, "neighbor_growth.csv", outputs);
    firmnet::io::write_neighbor_growth(stats, out2);
  }
  return outputs;
}

std::vector<std::string> run_estimate(const json& cfg, const CommonOpts& opts, json& extra) {
  Inputs in = load_inputs(cfg, opts);
  firmnet::PriorSpec priors = parse_priors(cfg);
  firmnet::ChainConfig chain_cfg = parse_chain(cfg, opts);

  firmnet::PosteriorChain chain =
      firmnet::gibbs_sample(in.panel, in.growth, priors, chain_cfg);

  std::vector<std::string> outputs;
  {
    auto out = open_out(opts, "chain.csv", outputs);
    firmnet::io::write_chain(chain.samples, out);
  }
  {
    auto out = open_out(opts, "summary.csv", outputs);
    firmnet::io::write_summary(chain.summary, out);
  }
  extra["accept_rate_beta"] = chain.accept_rate_beta;
  extra["accept_rate_lag"] = chain.accept_rate_lag;
  extra["step_beta_final"] = chain.step_beta_final;
  extra["step_lag_final"] = chain.step_lag_final;
  extra["retained_draws"] = chain.samples.size();
  extra["duplicate_edges_dropped"] = in.report.duplicate_edges;
  extra["self_loops_dropped"] = in.report.self_loops;
  return outputs;
}

std::vector<std::string> run_counterfact(const json& cfg, const CommonOpts& opts,
                                         json& extra) {
  Inputs in = load_inputs(cfg, opts);
  if (!cfg.contains("counterfactual"))
    throw firmnet::ConfigError("config: missing 'counterfactual'");
  const json& j = cfg["counterfactual"];
  check_keys(j, {"params", "shock_year", "signs", "base_year", "decomposition"},
             "counterfactual");
  if (!j.contains("params"))
    throw firmnet::ConfigError("counterfactual: missing 'params'");
  firmnet::StructuralParams params = parse_params(j["params"], "counterfactual.params");
  int shock_year = static_cast<int>(need_number(j, "shock_year", "counterfactual"));

  std::vector<std::string> signs = {"all", "positive", "negative"};
  if (j.contains("signs")) signs = j["signs"].get<std::vector<std::string>>();

  std::vector<std::string> outputs;
  for (const std::string& sign : signs) {
    firmnet::ShockSign s;
    if (sign == "all")
      s = firmnet::ShockSign::all;
    else if (sign == "positive")
      s = firmnet::ShockSign::positive;
    else if (sign == "negative")
      s = firmnet::ShockSign::negative;
    else
      throw firmnet::ConfigError("counterfactual: unknown sign '" + sign + "'");
    auto profile = firmnet::propagation_profile(in.panel, in.growth, shock_year, params, s);
    auto out = open_out(opts, "profile_" + sign + ".csv", outputs);
    firmnet::io::write_profile(profile, out);
  }

  if (j.value("decomposition", true)) {
    int base_year = j.contains("base_year")
                        ? static_cast<int>(need_number(j, "base_year", "counterfactual"))
                        : in.panel.years().front();
    auto decomp = firmnet::aggregate_decomposition(in.panel, in.growth, params, base_year);
    auto out = open_out(opts, "decomposition.csv", outputs);
    firmnet::io::write_decomposition(decomp, out);
    extra["base_year"] = decomp.base_year;
    extra["sd_connected"] = decomp.sd_connected;
    extra["sd_shocks"] = decomp.sd_shocks;
    extra["network_share"] = decomp.network_share;
    extra["renewal_uplift"] = decomp.renewal_uplift;
  }
  return outputs;
}

std::vector<std::string> run_experiment(const json& cfg, const CommonOpts& opts,
                                        json& extra) {
  if (!cfg.contains("generator")) throw firmnet::ConfigError("config: missing 'generator'");
  firmnet::GeneratorConfig gen = parse_generator(cfg["generator"], opts);
  double noise_sd = need_number(cfg, "noise_sd", "config");
  firmnet::PriorSpec priors = parse_priors(cfg);
  firmnet::ChainConfig chain_cfg = parse_chain(cfg, opts);

  firmnet::AttenuationReport report =
      firmnet::measurement_error_experiment(gen, noise_sd, priors, chain_cfg);

  std::vector<std::string> outputs;
  {
    auto out = open_out(opts, "summary_clean.csv", outputs);
    firmnet::io::write_summary(report.summary_clean, out);
  }
  {
    auto out = open_out(opts, "summary_apparent.csv", outputs);
    firmnet::io::write_summary(report.summary_apparent, out);
  }
  {
    json r;
    r["noise_sd"] = report.noise_sd;
    r["r_theoretical"] = report.r_theoretical;
    const char* names[5] = {"beta_G", "beta_H", "beta_LG", "beta_LH", "gamma"};
    for (std::size_t k = 0; k < 5; ++k) r["r_empirical"][names[k]] = report.r_empirical[k];
    for (std::size_t k = 0; k < 7; ++k) {
      std::string name(firmnet::StructuralParams::names[k]);
      r["theta_clean"][name] = report.theta_clean.as_array()[k];
      r["theta_apparent"][name] = report.theta_apparent.as_array()[k];
    }
    auto out = open_out(opts, "attenuation.json", outputs);
    out << r.dump(2) << "\n";
  }
  extra["r_theoretical"] = report.r_theoretical;
  return outputs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural firm-network model: generation, estimation, counterfactuals"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "JSON configuration file")->required();
    sub->add_option("--out", opts.out, "output directory (default: current)");
    sub->add_option("--seed", opts.seed, "override the seed in the configuration");
    sub->add_option("--threads", opts.threads, "worker thread count (0 = library default)");
    sub->add_flag("--plot-data", opts.plot_data, "emit extra plain-text series for plotting");
  };
  CLI::App* c_generate = app.add_subcommand("generate", "produce a synthetic panel");
  CLI::App* c_describe = app.add_subcommand("describe", "summary tables for a panel");
  CLI::App* c_estimate = app.add_subcommand("estimate", "run the posterior sampler");
  CLI::App* c_counterfact = app.add_subcommand("counterfact", "counterfactual replays");
  CLI::App* c_experiment =
      app.add_subcommand("experiment", "measurement-error attenuation experiment");
  for (CLI::App* sub : {c_generate, c_describe, c_estimate, c_counterfact, c_experiment})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    std::cerr << "firmnet: " << e.what() << "\n";
    return 1;
  }

#ifdef _OPENMP
  if (opts.threads > 0) omp_set_num_threads(opts.threads);
#endif

  std::string command = app.get_subcommands().front()->get_name();
  auto start = std::chrono::steady_clock::now();
  try {
    json cfg = load_config(opts);
    json extra = json::object();
    std::vector<std::string> outputs;
    if (command == "generate")
      outputs = run_generate(cfg, opts);
    else if (command == "describe")
      outputs = run_describe(cfg, opts);
    else if (command == "estimate")
      outputs = run_estimate(cfg, opts, extra);
    else if (command == "counterfact")
      outputs = run_counterfact(cfg, opts, extra);
    else
      outputs = run_experiment(cfg, opts, extra);

    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest;
    manifest["tool"] = "firmnet";
    manifest["version"] = "0.1.0";
    manifest["command"] = command;
    manifest["config"] = cfg;
    if (opts.seed) manifest["seed_override"] = *opts.seed;
    manifest["threads"] = opts.threads;
    manifest["outputs"] = outputs;
    manifest["elapsed_seconds"] = elapsed;
    if (!extra.empty()) manifest["results"] = extra;
    fs::path dir(opts.out);
    fs::create_directories(dir);
    std::ofstream mout(dir / "manifest.json");
    mout << manifest.dump(2) << "\n";
    return 0;
  } catch (const firmnet::ConfigError& e) {
    std::cerr << "firmnet: configuration error: " << e.what() << "\n";
    return 1;
  } catch (const firmnet::ConvergenceError& e) {
    std::cerr << "firmnet: numerical error: " << e.what() << "\n";
    return 3;
  } catch (const firmnet::DataError& e) {
    std::cerr << "firmnet: data error: " << e.what() << "\n";
    return 2;
  } catch (const firmnet::DimensionError& e) {
    std::cerr << "firmnet: data error: " << e.what() << "\n";
    return 2;
  } catch (const firmnet::Error& e) {
    std::cerr << "firmnet: error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "firmnet: internal error: " << e.what() << "\n";
    return 3;
  }
}
