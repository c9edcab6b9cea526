#include "nss/cli.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>

#include "nss/ellipsoid.hpp"
#include "nss/io.hpp"
#include "nss/metrics.hpp"
#include "nss/nested.hpp"
#include "nss/numeric.hpp"
#include "nss/reflective.hpp"
#include "nss/smc.hpp"
#include "nss/targets.hpp"
#include "nss/tuning.hpp"

namespace nss::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kCommands{"ns-run", "smc-run", "tune-validate", "compare-constrained", "metrics",
                                         "report"};

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  const json& v = j.at(key);
  return v.is_null() ? fallback : v.get<T>();
}

void check_keys(const json& defaults, const json& cfg, const std::string& where) {
  if (!cfg.is_object()) throw InvalidArgument("config " + (where.empty() ? "/" : where) + " must be an object");
  for (const auto& [key, value] : cfg.items()) {
    const std::string path = where + "/" + key;
    if (!defaults.contains(key)) throw InvalidArgument("unknown config key " + path);
    const json& d = defaults.at(key);
    if (d.is_object()) check_keys(d, value, path);
  }
}

json base_results(const std::string& command, const json& cfg) {
  return json{{"command", command},  {"seed", cfg.at("seed")}, {"config", cfg},
              {"eval_count", nullptr}, {"wall_time_s", nullptr}, {"log_z_mean", nullptr},
              {"log_z_std", nullptr},  {"ess", nullptr}};
}

fs::path prepare_out(const json& cfg) {
  const fs::path out = cfg.at("out").get<std::string>();
  fs::create_directories(out);
  return out;
}

std::uint64_t seed_of(const json& cfg) { return cfg.at("seed").get<std::uint64_t>(); }

int cmd_ns_run(const json& cfg) {
  const TargetModel target = make_target(cfg.at("target"));
  const json& s = cfg.at("sampler");
  NsConfig ns;
  ns.m = s.at("m").get<int>();
  ns.k = s.at("k").get<int>();
  ns.inner.steps = get_or<int>(s, "steps", target.dim);
  ns.inner.width = s.at("width").get<double>();
  ns.term_threshold = s.at("threshold").get<double>();
  ns.whiten = s.at("whiten").get<bool>();
  ns.shrink_sims = s.at("shrink_sims").get<int>();
  ns.workers = cfg.at("workers").get<int>();
  ns.validate();
  const std::uint64_t seed = seed_of(cfg);
  const fs::path out = prepare_out(cfg);

  const NsRun run = run_nested(target, ns, seed);
  const int n_post = get_or<int>(cfg, "posterior_samples", ns.m);
  const std::vector<Point> samples = posterior_resample(run.state.dead, run.evidence.weights, n_post, seed);
  write_dead_csv(out / "dead.csv", run.state.dead);
  write_points_csv(out / "samples.csv", samples);

  json r = base_results("ns-run", cfg);
  r["target"] = cfg.at("target").at("id");
  r["dim"] = target.dim;
  r["eval_count"] = run.state.eval_count;
  r["wall_time_s"] = run.wall_time_s;
  r["log_z_mean"] = json_number(run.evidence.log_z_mean);
  r["log_z_std"] = json_number(run.evidence.log_z_std);
  r["ess"] = json_number(run.evidence.ess);
  r["log_z_det"] = json_number(run.state.log_z_det);
  r["exact_log_z"] = target.exact_log_z ? json_number(*target.exact_log_z) : json(nullptr);
  r["iterations"] = run.state.iteration;
  r["null_moves"] = run.state.null_moves;
  r["n_dead"] = run.state.dead.size();
  write_json(out / "results.json", r);
  std::cout << "ns-run " << target.name << " seed " << seed << ": ln Z = " << format_double(run.evidence.log_z_mean)
            << " +/- " << format_double(run.evidence.log_z_std) << " (" << run.state.eval_count << " evals)\n";
  return kExitOk;
}

int cmd_smc_run(const json& cfg) {
  const TargetModel target = make_target(cfg.at("target"));
  const json& s = cfg.at("sampler");
  SmcConfig smc;
  smc.m = s.at("m").get<int>();
  smc.ess_target = s.at("ess_target").get<double>();
  smc.kernel = parse_smc_kernel(s.at("kernel").get<std::string>());
  smc.inner_steps = get_or<int>(s, "steps", 0);
  smc.slice.width = s.at("width").get<double>();
  smc.whiten = s.at("whiten").get<bool>();
  smc.max_stages = s.at("max_stages").get<int>();
  smc.workers = cfg.at("workers").get<int>();
  smc.validate();
  const std::uint64_t seed = seed_of(cfg);
  const fs::path out = prepare_out(cfg);

  const SmcRun run = run_smc(target, smc, seed);
  const SmcState& st = run.state;
  write_points_csv(out / "samples.csv", st.particles);
  std::vector<std::vector<double>> stages;
  for (std::size_t i = 0; i < st.stage_ess.size(); ++i) {
    stages.push_back({static_cast<double>(i + 1), st.betas[i + 1], st.stage_ess[i], st.stage_accept[i]});
  }
  write_csv(out / "stages.csv", {"stage", "beta", "ess", "accept"}, stages);

  json r = base_results("smc-run", cfg);
  r["target"] = cfg.at("target").at("id");
  r["dim"] = target.dim;
  r["kernel"] = to_string(smc.kernel);
  r["eval_count"] = st.eval_count;
  r["wall_time_s"] = run.wall_time_s;
  r["log_z_mean"] = json_number(st.log_z);
  r["ess"] = st.stage_ess.empty() ? json(nullptr) : json_number(st.stage_ess.back());
  r["exact_log_z"] = target.exact_log_z ? json_number(*target.exact_log_z) : json(nullptr);
  r["stages"] = st.stage;
  write_json(out / "results.json", r);
  std::cout << "smc-run " << target.name << " " << to_string(smc.kernel) << " seed " << seed
            << ": ln Z = " << format_double(st.log_z) << " (" << st.stage << " stages)\n";
  return kExitOk;
}

int cmd_tune_validate(const json& cfg) {
  const json& t = cfg.at("tuning");
  const int n = t.at("n").get<int>();
  if (n < 2) throw InvalidArgument("tuning.n must be >= 2");
  const std::uint64_t seed = seed_of(cfg);
  const int workers = cfg.at("workers").get<int>();
  const fs::path out = prepare_out(cfg);
  json r = base_results("tune-validate", cfg);

  std::vector<SweepPoint> sweep;
  std::vector<double> theory;
  const auto start = std::chrono::steady_clock::now();
  if (t.at("ball_dim").is_null()) {
    const double ell = t.at("ell").get<double>();
    if (!(ell > 0.0)) throw InvalidArgument("tuning.ell must be positive");
    std::vector<double> widths = get_or<std::vector<double>>(t, "widths", {});
    if (widths.empty()) {
      for (double f : {2.0, 5.0, 10.0, 13.58, 20.0, 40.0}) widths.push_back(f * (ell / 10.0));
    }
    for (double w : widths) {
      if (!(w > 0.0)) throw InvalidArgument("widths must be positive");
      sweep.push_back({w, interval_cost(ell, w, n, seed, workers)});
      theory.push_back(expected_cost(ell, w));
    }
    r["ell"] = ell;
    r["w_opt_theory"] = optimal_width_fixed(ell);
  } else {
    const EllipsoidSpec ball = EllipsoidSpec::unit_ball(t.at("ball_dim").get<int>());
    const double w_opt = optimal_width_ellipsoid(ball);
    std::vector<double> widths = get_or<std::vector<double>>(t, "widths", {});
    if (widths.empty()) widths = log_grid(0.25 * w_opt, 4.0 * w_opt, 17);
    sweep = cost_sweep(ball, widths, n, seed, workers);
    theory.assign(widths.size(), std::numeric_limits<double>::quiet_NaN());
    r["ball_dim"] = ball.dim;
    r["w_opt_theory"] = w_opt;
    r["kappa_infinity"] = kappa_infinity();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::vector<std::vector<double>> rows;
  double evals = 0.0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    rows.push_back({sweep[i].w, theory[i], sweep[i].cost.mean, sweep[i].cost.std});
    evals += sweep[i].cost.mean * static_cast<double>(sweep[i].cost.n);
  }
  write_csv(out / "curves.csv", {"w", "theory_cost", "mc_cost", "mc_std"}, rows);
  r["w_opt_mc"] = sweep.size() >= 3 ? json_number(sweep_minimum(sweep)) : json(nullptr);
  r["eval_count"] = static_cast<std::int64_t>(std::llround(evals));
  r["wall_time_s"] = wall;
  write_json(out / "results.json", r);
  std::cout << "tune-validate: optimum theory " << format_double(r["w_opt_theory"].get<double>()) << ", MC "
            << (r["w_opt_mc"].is_null() ? std::string("n/a") : format_double(r["w_opt_mc"].get<double>())) << "\n";
  return kExitOk;
}

int cmd_compare(const json& cfg) {
  const json& c = cfg.at("compare");
  ReflectConfig rc;
  rc.eps = c.at("eps").get<double>();
  rc.l_traj = c.at("l_traj").get<int>();
  rc.n_traj = get_or<int>(c, "n_traj", 0);
  rc.validate();
  const int m = c.at("m").get<int>();
  std::vector<ConstrainedSampler> samplers;
  for (const auto& name : c.at("samplers").get<std::vector<std::string>>()) samplers.push_back(parse_sampler(name));
  const auto dims = c.at("dims").get<std::vector<int>>();
  const auto alphas = c.at("alphas").get<std::vector<double>>();
  for (int d : dims) {
    if (d < 1) throw InvalidArgument("compare.dims must be >= 1");
  }
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("compare.alphas must lie in [0, 1]");
  }
  const std::uint64_t seed = seed_of(cfg);
  const int workers = cfg.at("workers").get<int>();
  const fs::path out = prepare_out(cfg);

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::vector<std::string>> rows;
  std::int64_t evals = 0;
  for (ConstrainedSampler s : samplers) {
    for (int d : dims) {
      for (double a : alphas) {
        const EvidenceComparison e = compare_evidence(s, a, d, rc, seed, m, workers);
        const double z = (e.log_z - e.oracle_log_z) / e.geo_std;
        rows.push_back({to_string(s), std::to_string(d), format_double(a), format_double(e.log_z),
                        format_double(e.geo_std), format_double(e.oracle_log_z), format_double(z),
                        std::to_string(e.evals)});
        evals += e.evals;
        std::cout << to_string(s) << " d=" << d << " alpha=" << a << ": ln Z = " << format_double(e.log_z)
                  << " oracle " << format_double(e.oracle_log_z) << " z " << format_double(z) << "\n";
      }
    }
  }
  write_csv(out / "compare.csv",
            {"sampler", "d", "alpha", "log_z", "geo_std", "oracle_log_z", "z_score", "eval_count"}, rows);
  json r = base_results("compare-constrained", cfg);
  r["eval_count"] = evals;
  r["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(out / "results.json", r);
  return kExitOk;
}

int cmd_metrics(const json& cfg) {
  const json& mc = cfg.at("metrics");
  if (mc.at("a").is_null()) throw InvalidArgument("metrics.a (sample file) is required");
  const std::vector<Point> a = read_points_csv(mc.at("a").get<std::string>());
  if (a.empty()) throw InvalidArgument("metrics: sample file has no rows");
  std::vector<Point> b;
  if (!mc.at("b").is_null()) {
    b = read_points_csv(mc.at("b").get<std::string>());
  } else {
    const TargetModel target = make_target(cfg.at("target"));
    if (!target.has_reference()) throw InvalidArgument("metrics: target " + target.name + " has no reference sampler");
    const int n = get_or<int>(mc, "n", static_cast<int>(a.size()));
    RngStream rng(seed_of(cfg), {Phase::kUser, 0, 0});
    for (int i = 0; i < n; ++i) b.push_back(target.reference_sample(rng));
  }
  if (b.empty() || b.front().size() != a.front().size()) throw InvalidArgument("metrics: sample sets differ in dimension");
  const fs::path out = prepare_out(cfg);
  const auto start = std::chrono::steady_clock::now();
  const double m = mmd(a, b);
  const double w2 = sliced_w2(a, b, mc.at("n_proj").get<int>());
  write_csv(out / "metrics.csv", {"mmd", "sliced_w2", "n_a", "n_b"},
            std::vector<std::vector<double>>{{m, w2, static_cast<double>(a.size()), static_cast<double>(b.size())}});
  json r = base_results("metrics", cfg);
  r["mmd"] = json_number(m);
  r["sliced_w2"] = json_number(w2);
  r["eval_count"] = 0;
  r["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(out / "results.json", r);
  std::cout << "mmd " << format_double(m) << " sliced_w2 " << format_double(w2) << "\n";
  return kExitOk;
}

int cmd_report(const json& cfg) {
  const auto inputs = cfg.at("report").at("inputs").get<std::vector<std::string>>();
  if (inputs.empty()) throw InvalidArgument("report.inputs is empty");
  struct Group {
    std::vector<double> log_z, geo_std, evals, wall;
    std::vector<std::uint64_t> seeds;
    json exact;
  };
  std::map<std::string, Group> groups;
  for (const std::string& in : inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) p /= "results.json";
    const json r = read_json(p);
    if (!r.contains("log_z_mean") || r.at("log_z_mean").is_null()) {
      throw InvalidArgument("report: " + p.string() + " has no log_z_mean");
    }
    std::string key = r.value("command", std::string("?")) + ":" + r.value("target", std::string("?"));
    if (r.contains("kernel")) key += ":" + r.at("kernel").get<std::string>();
    Group& g = groups[key];
    g.log_z.push_back(r.at("log_z_mean").get<double>());
    g.geo_std.push_back(r.value("log_z_std", json(nullptr)).is_null() ? std::nan("") : r.at("log_z_std").get<double>());
    g.evals.push_back(r.at("eval_count").get<double>());
    g.wall.push_back(r.at("wall_time_s").get<double>());
    g.seeds.push_back(r.at("seed").get<std::uint64_t>());
    g.exact = r.value("exact_log_z", json(nullptr));
  }

  const fs::path out = prepare_out(cfg);
  std::vector<std::vector<std::string>> rows;
  json r = base_results("report", cfg);
  json jgroups = json::array();
  for (const auto& [key, g] : groups) {
    const auto [mean, sd] = mean_std(g.log_z);
    double geo = 0.0;
    for (double v : g.geo_std) geo += v;
    geo /= static_cast<double>(g.geo_std.size());
    double evals = 0.0;
    for (double v : g.evals) evals += v;
    evals /= static_cast<double>(g.evals.size());
    double wall = 0.0;
    for (double v : g.wall) wall += v;
    wall /= static_cast<double>(g.wall.size());
    const double exact = g.exact.is_null() ? std::nan("") : g.exact.get<double>();
    rows.push_back({key, std::to_string(g.log_z.size()), format_double(mean), format_double(sd), format_double(geo),
                    format_double(exact), format_double(evals)});
    jgroups.push_back({{"group", key},
                       {"n", g.log_z.size()},
                       {"seeds", g.seeds},
                       {"log_z_mean", json_number(mean)},
                       {"log_z_sd", json_number(sd)},
                       {"geo_std_mean", json_number(geo)},
                       {"exact_log_z", g.exact},
                       {"eval_count_mean", evals},
                       {"wall_time_s_mean", wall}});
    std::cout << key << ": ln Z = " << format_double(mean) << " +/- " << format_double(sd) << " (n = " << g.log_z.size()
              << ")\n";
  }
  write_csv(out / "report.csv", {"group", "n", "log_z_mean", "log_z_sd", "geo_std_mean", "exact_log_z", "eval_count_mean"},
            rows);
  r["groups"] = jgroups;
  if (jgroups.size() == 1) {
    r["log_z_mean"] = jgroups[0]["log_z_mean"];
    r["log_z_std"] = jgroups[0]["log_z_sd"];
    r["eval_count"] = jgroups[0]["eval_count_mean"];
    r["wall_time_s"] = jgroups[0]["wall_time_s_mean"];
  }
  write_json(out / "results.json", r);
  return kExitOk;
}

/// Flag values copied into the merged config when the flag was given.
class Overrides {
 public:
  template <class T>
  void bind(CLI::App* app, const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(flag, *value, help);
    apply_.push_back([opt, value, pointer](json& j) {
      if (opt->count() > 0) j[json::json_pointer(pointer)] = *value;
    });
  }

  void bind_flag(CLI::App* app, const std::string& flag, const std::string& pointer, bool value_when_set,
                 const std::string& help) {
    CLI::Option* opt = app->add_flag(flag, help);
    apply_.push_back([opt, pointer, value_when_set](json& j) {
      if (opt->count() > 0) j[json::json_pointer(pointer)] = value_when_set;
    });
  }

  void apply(json& j) const {
    for (const auto& f : apply_) f(j);
  }

 private:
  std::vector<std::function<void(json&)>> apply_;
};

void bind_target(CLI::App* sub, Overrides& ov) {
  ov.bind<std::string>(sub, "--target", "/target/id", "target id");
  ov.bind<int>(sub, "--dim", "/target/dim", "target dimension (alpha, ball, cube, funnel)");
  ov.bind<double>(sub, "--alpha", "/target/alpha", "mixture weight of the alpha likelihood");
}

}  // namespace

std::vector<std::string> target_ids() { return {"mog40", "mog10", "funnel10", "funnel", "alpha", "ball", "cube"}; }

TargetModel make_target(const json& spec) {
  if (!spec.is_object() || !spec.contains("id") || !spec.at("id").is_string()) {
    throw InvalidArgument("target.id is required");
  }
  const std::string id = spec.at("id").get<std::string>();
  const json dim_j = spec.value("dim", json(nullptr));
  auto dim = [&](int fallback) {
    const int d = dim_j.is_null() ? fallback : dim_j.get<int>();
    if (d < 1) throw InvalidArgument("target.dim must be >= 1");
    return d;
  };
  if (id == "mog40") return mog_target(mog40_spec());
  if (id == "mog10") return mog_target(mog10_spec());
  if (id == "funnel10") {
    if (dim(10) != 10) throw InvalidArgument("funnel10 has dimension 10");
    return funnel_target(10);
  }
  if (id == "funnel") return funnel_target(dim(10));
  if (id == "alpha") {
    AlphaLikelihoodSpec a;
    a.d = dim(2);
    const json alpha = spec.value("alpha", json(nullptr));
    if (!alpha.is_null()) a.alpha = alpha.get<double>();
    return alpha_target(a);
  }
  if (id == "ball") return level_set_target(EllipsoidSpec::unit_ball(dim(2)));
  if (id == "cube") return cube_level_set(dim(2), 1.0);
  throw InvalidArgument("unknown target id: " + id);
}

json default_config(const std::string& command) {
  json cfg{{"seed", 1}, {"out", "out"}, {"workers", 1}};
  const json target{{"id", "mog40"}, {"dim", nullptr}, {"alpha", nullptr}};
  if (command == "ns-run") {
    cfg["target"] = target;
    cfg["sampler"] = {{"m", 1000}, {"k", 100},        {"steps", nullptr},   {"width", 1.0},
                      {"threshold", 3.0}, {"whiten", true}, {"shrink_sims", 100}};
    cfg["posterior_samples"] = nullptr;
  } else if (command == "smc-run") {
    cfg["target"] = target;
    cfg["sampler"] = {{"m", 1000},      {"ess_target", 0.9}, {"kernel", "RW"},     {"steps", nullptr},
                      {"width", 1.0}, {"whiten", true},    {"max_stages", 1000}};
  } else if (command == "tune-validate") {
    cfg["tuning"] = {{"ell", 10.0}, {"widths", nullptr}, {"n", 100000}, {"ball_dim", nullptr}};
  } else if (command == "compare-constrained") {
    cfg["compare"] = {{"samplers", {"SS", "GMC", "GMC2019", "RSS"}},
                      {"dims", {2, 4, 10}},
                      {"alphas", {0.0, 0.5, 1.0}},
                      {"m", 1000},
                      {"eps", 0.5},
                      {"l_traj", 8},
                      {"n_traj", nullptr}};
  } else if (command == "metrics") {
    cfg["target"] = target;
    cfg["metrics"] = {{"a", nullptr}, {"b", nullptr}, {"n", nullptr}, {"n_proj", 200}};
  } else if (command == "report") {
    cfg["report"] = {{"inputs", json::array()}};
  } else {
    throw InvalidArgument("unknown subcommand: " + command);
  }
  return cfg;
}

json merge_config(const std::string& command, const json& file_config) {
  const json defaults = default_config(command);
  if (file_config.is_null()) return defaults;
  check_keys(defaults, file_config, "");
  json merged = defaults;
  // Field-wise merge so that explicit nulls keep the key (merge_patch would drop it).
  for (const auto& [key, value] : file_config.items()) {
    if (value.is_object() && merged.at(key).is_object()) {
      for (const auto& [k2, v2] : value.items()) merged[key][k2] = v2;
    } else {
      merged[key] = value;
    }
  }
  return merged;
}

int execute(const std::string& command, const json& cfg) {
  check_keys(default_config(command), cfg, "");
  if (cfg.at("workers").get<int>() < 1) throw InvalidArgument("workers must be >= 1");
  if (command == "ns-run") return cmd_ns_run(cfg);
  if (command == "smc-run") return cmd_smc_run(cfg);
  if (command == "tune-validate") return cmd_tune_validate(cfg);
  if (command == "compare-constrained") return cmd_compare(cfg);
  if (command == "metrics") return cmd_metrics(cfg);
  if (command == "report") return cmd_report(cfg);
  throw InvalidArgument("unknown subcommand: " + command);
}

const std::map<std::string, std::string> kDescriptions{
    {"ns-run", "nested slice sampling on a bundled target"},
    {"smc-run", "adaptive tempered SMC baseline"},
    {"tune-validate", "slice-width cost theory against Monte Carlo"},
    {"compare-constrained", "evidence bias of constrained samplers on the alpha likelihood"},
    {"metrics", "MMD and sliced W2 between sample files or against a reference"},
    {"report", "aggregate log Z over finished runs"},
};

int run(int argc, const char* const* argv) {
  CLI::App app{"Nested slice sampling and baselines"};
  app.require_subcommand(1);
  std::map<std::string, Overrides> overrides;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, CLI::App*> subs;

  for (const std::string& name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, kDescriptions.at(name));
    subs[name] = sub;
    Overrides& ov = overrides[name];
    sub->add_option("--config", config_paths[name], "JSON config file; flags override its values");
    ov.bind<std::uint64_t>(sub, "--seed", "/seed", "master seed");
    ov.bind<std::string>(sub, "--out", "/out", "output directory");
    ov.bind<int>(sub, "--workers", "/workers", "worker threads (results do not depend on it)");
  }
  for (const char* name : {"ns-run", "smc-run", "metrics"}) bind_target(subs[name], overrides[name]);

  CLI::App* ns = subs["ns-run"];
  Overrides& nso = overrides["ns-run"];
  nso.bind<int>(ns, "--m", "/sampler/m", "live points");
  nso.bind<int>(ns, "--k", "/sampler/k", "deaths per iteration");
  nso.bind<int>(ns, "--steps", "/sampler/steps", "slice steps per replacement (default: dimension)");
  nso.bind<double>(ns, "--width", "/sampler/width", "slice width in metric units");
  nso.bind<double>(ns, "--threshold", "/sampler/threshold", "termination threshold on log live-evidence ratio");
  nso.bind<int>(ns, "--shrink-sims", "/sampler/shrink_sims", "volume simulations for the evidence error");
  nso.bind<int>(ns, "--posterior-samples", "/posterior_samples", "rows in samples.csv (default: m)");
  nso.bind_flag(ns, "--no-whiten", "/sampler/whiten", false, "isotropic slice directions");

  CLI::App* smc = subs["smc-run"];
  Overrides& smo = overrides["smc-run"];
  smo.bind<int>(smc, "--m", "/sampler/m", "particles");
  smo.bind<double>(smc, "--ess-target", "/sampler/ess_target", "ESS fraction targeted by adaptive tempering");
  smo.bind<std::string>(smc, "--kernel", "/sampler/kernel", "RW, IRMH or SS");
  smo.bind<int>(smc, "--steps", "/sampler/steps", "mutation steps (default: 5d for RW/IRMH, d for SS)");
  smo.bind<double>(smc, "--width", "/sampler/width", "slice width for the SS kernel");
  smo.bind<int>(smc, "--max-stages", "/sampler/max_stages", "tempering stage limit");
  smo.bind_flag(smc, "--no-whiten", "/sampler/whiten", false, "isotropic SS directions");

  CLI::App* tv = subs["tune-validate"];
  Overrides& tvo = overrides["tune-validate"];
  tvo.bind<double>(tv, "--ell", "/tuning/ell", "length of the fixed uniform slice");
  tvo.bind<std::vector<double>>(tv, "--widths", "/tuning/widths", "width grid");
  tvo.bind<int>(tv, "--n", "/tuning/n", "Monte Carlo steps per width");
  tvo.bind<int>(tv, "--ball-dim", "/tuning/ball_dim", "sweep the unit ball of this dimension instead");

  CLI::App* cc = subs["compare-constrained"];
  Overrides& cco = overrides["compare-constrained"];
  cco.bind<std::vector<std::string>>(cc, "--samplers", "/compare/samplers", "subset of SS, GMC, GMC2019, RSS");
  cco.bind<std::vector<int>>(cc, "--dims", "/compare/dims", "dimensions");
  cco.bind<std::vector<double>>(cc, "--alphas", "/compare/alphas", "alpha values in [0, 1]");
  cco.bind<int>(cc, "--m", "/compare/m", "live points");
  cco.bind<double>(cc, "--eps", "/compare/eps", "initial reflective step size");
  cco.bind<int>(cc, "--l-traj", "/compare/l_traj", "steps per trajectory");
  cco.bind<int>(cc, "--n-traj", "/compare/n_traj", "trajectories per replacement (default: 25 d)");

  CLI::App* mt = subs["metrics"];
  Overrides& mto = overrides["metrics"];
  mto.bind<std::string>(mt, "--a", "/metrics/a", "sample CSV");
  mto.bind<std::string>(mt, "--b", "/metrics/b", "second sample CSV (default: reference draws of --target)");
  mto.bind<int>(mt, "--n", "/metrics/n", "reference draws (default: rows of --a)");
  mto.bind<int>(mt, "--n-proj", "/metrics/n_proj", "projections for sliced W2");

  CLI::App* rp = subs["report"];
  overrides["report"].bind<std::vector<std::string>>(rp, "--inputs", "/report/inputs",
                                                      "run directories or results.json files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  try {
    json file = nullptr;
    if (!config_paths[command].empty()) file = read_json(config_paths[command]);
    json cfg = merge_config(command, file);
    overrides[command].apply(cfg);
    return execute(command, cfg);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"nss"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace nss::cli
