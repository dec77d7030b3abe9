#include "notif/cli.hpp"

#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "notif/eg.hpp"
#include "notif/error.hpp"
#include "notif/io.hpp"
#include "notif/pace.hpp"
#include "notif/sim.hpp"
#include "notif/sp.hpp"

namespace notif {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 unavailable");
  }
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out += hex[md[k] >> 4];
    out += hex[md[k] & 15];
  }
  return out;
}

namespace {

struct Options {
  std::string config;
  std::string solution;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicas;
  std::string out;
  double tol = 1e-4;
  std::vector<std::string> arms;
  double grid = 0.01;
  int refine = 0;
};

// A failed equilibrium check, distinct from usage and numerical errors.
struct VerificationFailed {};

fs::path output_dir(const Options& o, const char* command) {
  if (!o.out.empty()) return o.out;
  const char* root = std::getenv(kOutputRootEnv);
  return fs::path(root != nullptr && *root != '\0' ? root : "out") / command;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string() + ": " +
                             ec.message());
  }
}

void write_json(const fs::path& path, const json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
}

// The instance file and the event log it points to.
std::vector<fs::path> instance_inputs(const fs::path& instance) {
  std::vector<fs::path> files{instance};
  const json doc = read_json(instance);
  if (doc.contains("events") && doc["events"].is_string()) {
    files.push_back(instance.parent_path() / doc["events"].get<std::string>());
  }
  return files;
}

json hashes(const std::vector<fs::path>& files) {
  json out = json::array();
  for (const auto& f : files) out.push_back({{"path", f.string()}, {"sha256", sha256_hex(f)}});
  return out;
}

// Written before any result so an interrupted run still names its inputs.
void write_manifest(const fs::path& dir, const std::string& command,
                    const std::vector<std::string>& args, const Options& o,
                    const std::vector<fs::path>& inputs, json extra = json::object()) {
  json m;
  m["command"] = command;
  m["args"] = args;
  m["config"] = o.config.empty() ? json(nullptr) : json(o.config);
  m["output_dir"] = dir.string();
  m["inputs"] = hashes(inputs);
  for (auto& item : extra.items()) m[item.key()] = item.value();
  write_json(dir / "manifest.json", m);
}

void print_report(std::ostream& out, const CheckReport& report) {
  for (const auto& c : report.checks) {
    out << "  " << (c.passed ? "pass" : "FAIL") << "  " << c.name
        << "  residual " << format_double(c.residual);
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << '\n';
  }
}

int cmd_solve_eg(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const MarketInstance inst = read_instance(o.config);
  const fs::path dir = output_dir(o, "solve-eg");
  prepare_dir(dir);
  write_manifest(dir, "solve-eg", args, o, instance_inputs(o.config),
                 {{"tol", o.tol}});
  const EgSolution sol = solve_eg(inst);
  const CheckReport report = verify_nfppe(sol, inst, o.tol);
  write_json(dir / "solution.json", to_json(sol));
  write_json(dir / "report.json", to_json(report));
  out << "objective " << format_double(sol.objective) << " after " << sol.iterations
      << " iterations, residual " << format_double(sol.residual) << '\n';
  print_report(out, report);
  if (!report.all_passed()) throw VerificationFailed{};
  return kExitOk;
}

int cmd_verify(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const MarketInstance inst = read_instance(o.config);
  const EgSolution sol = eg_solution_from_json(read_json(o.solution));
  const fs::path dir = output_dir(o, "verify");
  prepare_dir(dir);
  auto inputs = instance_inputs(o.config);
  inputs.push_back(o.solution);
  write_manifest(dir, "verify", args, o, inputs, {{"tol", o.tol}});
  const CheckReport report = verify_nfppe(sol, inst, o.tol);
  write_json(dir / "report.json", to_json(report));
  print_report(out, report);
  if (!report.all_passed()) throw VerificationFailed{};
  return kExitOk;
}

ExperimentConfig load_experiment(const Options& o) {
  ExperimentConfig c =
      o.config.empty() ? default_experiment() : experiment_from_json(read_json(o.config));
  if (o.seed) c.stream.seed = *o.seed;
  if (o.replicas) c.replicas = *o.replicas;
  if (!o.arms.empty()) {
    c.arms.clear();
    for (const auto& a : o.arms) c.arms.push_back(parse_arm(a));
  }
  c.finalize();
  return c;
}

std::vector<fs::path> config_inputs(const Options& o) {
  if (o.config.empty()) return {};
  return {o.config};
}

int cmd_gen(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const ExperimentConfig c = load_experiment(o);
  const fs::path dir = output_dir(o, "gen");
  prepare_dir(dir);
  write_manifest(dir, "gen", args, o, config_inputs(o),
                 {{"seed", c.stream.seed}, {"resolved_config", to_json(c)}});

  json inst;
  inst["n"] = c.stream.n;
  inst["m"] = c.stream.m;
  inst["budgets"] = c.budgets;
  inst["platform_budget"] = c.platform_budget;
  if (c.supplies.empty()) {
    inst["supply"] = c.supply;
  } else {
    inst["supplies"] = c.supplies;
  }
  inst["events"] = "events.csv";

  // Events go to disk one at a time; the horizon never sits in memory.
  const StreamGenerator gen(c.stream);
  const fs::path tmp = dir / "events.csv.tmp";
  EventLogWriter w(tmp);
  for (std::int64_t k = 0; k < c.stream.horizon; ++k) w.write(gen.at(k));
  w.close();
  fs::rename(tmp, dir / "events.csv");
  write_json(dir / "instance.json", inst);
  out << "wrote " << c.stream.horizon << " events to " << (dir / "events.csv").string() << '\n';
  return kExitOk;
}

std::string run_stem(const ArmRun& r) {
  return std::string(arm_name(r.arm)) + "_r" + std::to_string(r.replica);
}

int cmd_run(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const ExperimentConfig c = load_experiment(o);
  const fs::path dir = output_dir(o, "run");
  prepare_dir(dir);
  json seeds = json::array();
  for (int r = 0; r < c.replicas; ++r) {
    seeds.push_back(CounterRng::derive(c.stream.seed, static_cast<std::uint64_t>(r)));
  }
  write_manifest(dir, "run", args, o, config_inputs(o),
                 {{"seed", c.stream.seed},
                  {"replica_stream_seeds", seeds},
                  {"resolved_config", to_json(c)}});

  const auto runs = run_experiment(c);
  std::optional<std::int64_t> shift_rel;
  if (c.stream.shift) {
    const std::int64_t rel = c.stream.shift->at_step - c.learning_window;
    if (rel > 0 && rel < c.test_window) shift_rel = rel;
  }
  json stability = json::array();
  for (const ArmRun& r : runs) {
    json doc = to_json(r.metrics);
    doc["arm"] = arm_name(r.arm);
    doc["replica"] = r.replica;
    doc["spend"] = r.spend;
    doc["spend_p"] = r.spend_p;
    doc["max_charge"] = r.max_charge;
    doc["priced_rejections"] = r.priced_rejections;
    doc["utilities"] = r.utilities;
    write_json(dir / ("metrics_" + run_stem(r) + ".json"), doc);
    write_file_atomic(dir / ("trace_" + run_stem(r) + ".csv"), step_csv(r));
    if (shift_rel) {
      const Excursion ex = excursion_of(r, *shift_rel, c.baseline_window);
      stability.push_back({{"arm", arm_name(r.arm)},
                           {"replica", r.replica},
                           {"excursion", ex.excursion},
                           {"stddev", ex.stddev},
                           {"stddev_clipped", ex.stddev_clipped}});
    }
  }
  const std::string table = comparison_table(runs);
  write_file_atomic(dir / "comparison.csv", table);
  if (shift_rel) write_json(dir / "stability.json", stability);
  out << table;
  return kExitOk;
}

// PACE over the instance's own stream with the hindsight user prices.
int cmd_pace(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const MarketInstance inst = read_instance(o.config);
  const fs::path dir = output_dir(o, "pace");
  prepare_dir(dir);
  write_manifest(dir, "pace", args, o, instance_inputs(o.config));
  const EgSolution eg = solve_eg(inst);

  const double t = static_cast<double>(inst.horizon());
  std::vector<double> rate(inst.budgets().begin(), inst.budgets().end());
  for (double& b : rate) b /= t;
  const auto [floors, floor_p] = pace_floors(inst);
  const PaceState state = make_pace_state(rate, inst.platform_budget() / t, floors, floor_p);
  std::vector<double> target = eg.betas;
  target.push_back(eg.beta_p);
  const PaceRun run = run_pace(state, inst.events(), PriceBook(eg.user_prices), target);

  const std::vector<double> x(run.sent.begin(), run.sent.end());
  const UtilityVector u = utilities(inst, x);
  json doc = to_json(compute_metrics(inst, run.sent, run.betas, run.bids));
  doc["utilities"] = u.u;
  doc["utility_p"] = u.u_p;
  doc["hindsight_utilities"] = eg.utils.u;
  doc["hindsight_utility_p"] = eg.utils.u_p;
  doc["final_betas"] = run.final_state.betas;
  doc["final_beta_p"] = run.final_state.beta_p;
  doc["hindsight_betas"] = eg.betas;
  doc["hindsight_beta_p"] = eg.beta_p;
  write_json(dir / "metrics.json", doc);

  ArmRun steps;
  steps.events.assign(inst.events().begin(), inst.events().end());
  steps.sent = run.sent;
  steps.bids = run.bids;
  for (const Event& e : inst.events()) steps.prices.push_back(eg.user_prices[e.user]);
  steps.type_charges = run.type_charges;
  steps.platform_charges = run.platform_charges;
  steps.trace = run.betas;
  write_file_atomic(dir / "trace.csv", step_csv(steps));
  std::ostringstream conv;
  conv << "t,sq_dist\n";
  for (std::size_t k = 0; k < run.sq_dist.size(); ++k) {
    conv << (k + 1) << ',' << format_double(run.sq_dist[k]) << '\n';
  }
  write_file_atomic(dir / "convergence.csv", conv.str());
  for (std::size_t i = 0; i < inst.n(); ++i) {
    out << "type " << (i + 1) << "  beta " << format_double(run.final_state.betas[i])
        << " (hindsight " << format_double(eg.betas[i]) << ")  utility "
        << format_double(u.u[i]) << " (hindsight " << format_double(eg.utils.u[i]) << ")\n";
  }
  return kExitOk;
}

int cmd_sp(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const MarketInstance inst = read_instance(o.config);
  const fs::path dir = output_dir(o, "sp");
  prepare_dir(dir);
  write_manifest(dir, "sp", args, o, instance_inputs(o.config),
                 {{"tol", o.tol}, {"grid", o.grid}, {"refine", o.refine}});
  const NsppeCandidate cand = nsppe_search(inst, o.grid, o.tol, o.refine);
  json doc;
  doc["betas"] = cand.betas;
  doc["beta_p"] = cand.beta_p;
  doc["user_prices"] = cand.user_prices;
  doc["x"] = cand.x;
  doc["residual"] = cand.residual;
  doc["verified"] = cand.verified;
  doc["report"] = to_json(cand.report);
  write_json(dir / "candidate.json", doc);
  out << "best candidate: beta";
  for (double b : cand.betas) out << ' ' << format_double(b);
  out << "  beta_p " << format_double(cand.beta_p) << "  residual "
      << format_double(cand.residual) << '\n';
  print_report(out, cand.report);
  if (!cand.verified) throw VerificationFailed{};
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Notification auction market: equilibria, pacing and simulation", "notifctl"};
  app.require_subcommand(1);

  auto instance_opt = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "instance file (JSON)")->required();
  };
  auto out_opt = [&](CLI::App* sub) {
    sub->add_option("--out", o.out,
                    std::string("output directory (default $") + kOutputRootEnv +
                        "/<command> or out/<command>)");
  };
  auto tol_opt = [&](CLI::App* sub) {
    sub->add_option("--tol", o.tol, "check tolerance")->capture_default_str();
  };

  auto* solve = app.add_subcommand("solve-eg", "solve the hindsight program and check it");
  instance_opt(solve);
  tol_opt(solve);
  out_opt(solve);

  auto* verify = app.add_subcommand("verify", "check a stored solution against an instance");
  instance_opt(verify);
  verify->add_option("--solution", o.solution, "solution file from solve-eg")->required();
  tol_opt(verify);
  out_opt(verify);

  auto experiment_opts = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON); default comparison setup");
    sub->add_option("--seed", o.seed, "stream seed");
    out_opt(sub);
  };
  auto* gen = app.add_subcommand("gen", "write a synthetic event log and instance file");
  experiment_opts(gen);

  auto* run = app.add_subcommand("run", "run the auction arms and write metrics and traces");
  experiment_opts(run);
  run->add_option("--replicas", o.replicas, "replica count")->check(CLI::PositiveNumber);
  run->add_option("--arm", o.arms, "fp_pace, fp_budget_pacing or sp_budget_pacing; repeatable")
      ->delimiter(',');

  auto* pace = app.add_subcommand("pace", "first-price pacing with hindsight user prices");
  instance_opt(pace);
  out_opt(pace);

  auto* sp = app.add_subcommand("sp", "grid search for a second-price pacing equilibrium");
  instance_opt(sp);
  tol_opt(sp);
  sp->add_option("--grid", o.grid, "multiplier grid step")->capture_default_str();
  sp->add_option("--refine", o.refine, "refinement rounds around the best cell")
      ->capture_default_str();
  out_opt(sp);

  std::vector<std::string> argv_store{"notifctl"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve_eg(o, args, out);
    if (*verify) return cmd_verify(o, args, out);
    if (*gen) return cmd_gen(o, args, out);
    if (*run) return cmd_run(o, args, out);
    if (*pace) return cmd_pace(o, args, out);
    if (*sp) return cmd_sp(o, args, out);
  } catch (const VerificationFailed&) {
    err << "verification failed\n";
    return kExitVerification;
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NonConvergence& e) {
    err << "no convergence: " << e.what() << " (residual " << format_double(e.residual())
        << ")\n";
    return kExitNumerical;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidInstance& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CLI::Error& e) {
    err << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace notif
