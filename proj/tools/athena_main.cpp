// The athena command-line tool. Each subcommand parses flags, loads its
// inputs and hands them to the library; all algorithmic work lives in core.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "athena/act_extract.hpp"
#include "athena/background_filter.hpp"
#include "athena/capture_ingest.hpp"
#include "athena/config.hpp"
#include "athena/errors.hpp"
#include "athena/eval_harness.hpp"
#include "athena/io.hpp"
#include "athena/sig_match.hpp"
#include "athena/signature_gen.hpp"
#include "athena/traffic_model.hpp"

namespace fs = std::filesystem;
using namespace athena;

namespace {

// Flags shared by every subcommand, layered over env and config file.
struct CommonFlags {
  std::string config_path;
  bool verbose = false;
  ConfigLayer layer;
};

Config resolve(const CommonFlags& flags) {
  ConfigLayer file;
  if (!flags.config_path.empty()) file = parse_config_file(read_text_file(flags.config_path));
  return resolve_config(file, config_from_env(process_env()), flags.layer);
}

BackgroundRuleSet load_rules(const Config& config) {
  if (config.rules_path.empty()) return default_rules();
  return parse_rules(read_text_file(config.rules_path));
}

NameTable load_names(const Config& config) {
  if (config.names_path.empty()) return {};
  return NameTable::parse(read_text_file(config.names_path));
}

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->set_version_flag("--version", std::string(ATHENA_VERSION));
  sub->add_option("--config", flags.config_path, "Config file of key = value lines");
  sub->add_flag("-v,--verbose", flags.verbose, "Log progress to stderr");
}

void add_r_flags(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--r", flags.layer.r, "Tolerance multiplier r (eps_j = max(r*sigma_j, floor))");
  sub->add_option("--eps-floor-us", flags.layer.eps_floor_us, "Tolerance floor in microseconds");
}

std::string join_indices(const Match& m, char sep) {
  std::string out;
  for (std::size_t k = 0; k < m.indices.size(); ++k) {
    if (k) out += sep;
    out += std::to_string(m.indices[k] + 1);
  }
  return out;
}

void print_report_cells(const ScoreReport& r) {
  std::printf("%.6f\t%.6f\t%.6f\t%zu\t%zu\t%zu\n", r.accuracy, r.precision, r.recall, r.tp, r.fp,
              r.fn);
}

// --- subcommands -----------------------------------------------------------

struct IngestArgs {
  std::string pcap;
  std::string home_prefix;
  bool keep_control = false;
  bool dedup = false;
  bool payload_digest = false;
};

int run_ingest(const IngestArgs& args, const Config& config) {
  IngestOptions options;
  options.drop_tcp_control = !args.keep_control;
  options.dedup_retransmissions = args.dedup;
  options.payload_digest = args.payload_digest;
  const auto result = ingest(read_binary_file(args.pcap), Ipv4Prefix::parse(args.home_prefix),
                             load_names(config), options);
  for (const auto& w : result.warnings) spdlog::warn("{}", w);
  spdlog::info("dropped {} local, {} control, {} retransmitted packets", result.dropped_local,
               result.dropped_control, result.dropped_retransmissions);
  std::fputs(serialize_log(result.log).c_str(), stdout);
  return 0;
}

struct ClusterArgs {
  std::string log;
  std::string out_dir;
};

int run_cluster(const ClusterArgs& args) {
  const auto clusters = cluster_by_device(parse_log(read_text_file(args.log)));
  for (const auto& [device, log] : clusters) {
    if (!args.out_dir.empty()) {
      fs::create_directories(args.out_dir);
      write_text_file(fs::path(args.out_dir) / (device + ".log"), serialize_log(log));
    }
    std::printf("%s\t%zu\n", device.c_str(), log.size());
  }
  return 0;
}

int run_learn_bg(const std::string& silent_path) {
  const auto profile = learn_silent_profile(parse_log(read_text_file(silent_path)));
  for (const auto& w : profile.warnings) spdlog::warn("{}", w);
  std::fputs(serialize_rules(profile.rules).c_str(), stdout);
  return 0;
}

struct FilterArgs {
  std::string log;
  std::string background_out;
};

int run_filter(const FilterArgs& args, const Config& config) {
  const auto result = filter_background(parse_log(read_text_file(args.log)), load_rules(config));
  if (!args.background_out.empty()) {
    write_text_file(args.background_out, serialize_log(result.background));
  }
  spdlog::info("{} foreground, {} background packets", result.foreground.size(),
               result.background.size());
  std::fputs(serialize_log(result.foreground).c_str(), stdout);
  return 0;
}

struct GenSigArgs {
  std::string captures;
  std::string activity;
  double quorum = 0.5;
};

int run_gen_sig(const GenSigArgs& args, const Config& config, bool r_given) {
  std::vector<LabeledCapture> selected;
  for (auto& c : load_captures(args.captures, load_rules(config))) {
    if (c.activity_name == args.activity) selected.push_back(std::move(c));
  }
  SignatureGenOptions options;
  options.quorum = args.quorum;
  const Signature signature = generate_signature(selected, options);
  if (r_given) {
    const auto eps = tolerance_vector(signature, config.r, static_cast<double>(config.eps_floor_us));
    for (std::size_t j = 0; j < eps.size(); ++j) {
      spdlog::info("eps[{}] = {:.3f} us", j + 1, eps.epsilons_us[j]);
    }
  }
  std::fputs(serialize_signature(signature).c_str(), stdout);
  return 0;
}

struct MatchArgs {
  std::string log;
  std::string sig;
  std::optional<std::size_t> enumerate;
  bool earliest = false;
  bool nonoverlap = false;
};

int run_match(const MatchArgs& args, const Config& config) {
  const TrafficLog log = parse_log(read_text_file(args.log));
  const Signature signature = parse_signature(read_text_file(args.sig));
  const auto eps = tolerance_vector(signature, config.r, static_cast<double>(config.eps_floor_us));

  if (args.nonoverlap) {
    for (const auto& m : nonoverlapping_matches(log, signature, eps)) {
      std::printf("%s\n", join_indices(m, ',').c_str());
    }
    return 0;
  }
  const MatchDag dag = sig_match(log, signature, eps);
  spdlog::info("DAG has {} vertices and {} edges", dag.vertex_count(), dag.edge_count());
  if (args.enumerate) {
    const auto list = enumerate_matches(dag, *args.enumerate);
    for (const auto& m : list.matches) std::printf("%s\n", join_indices(m, ',').c_str());
    if (list.truncated) spdlog::warn("more than {} matches; output truncated", *args.enumerate);
    return 0;
  }
  if (const auto m = earliest_match(dag)) std::printf("%s\n", join_indices(*m, ',').c_str());
  return 0;
}

struct ExtractArgs {
  std::string log;
  std::string sigs;
  bool concurrent = false;
  std::size_t jobs = 1;
};

int run_extract(const ExtractArgs& args, const Config& config) {
  const TrafficLog log = parse_log(read_text_file(args.log));
  const SignatureSet all = load_signatures(args.sigs);

  std::map<std::string, std::vector<Signature>> by_device;
  for (const auto& s : all.signatures()) by_device[s.device_label()].push_back(s);
  std::map<std::string, DeviceProfile> profiles;
  for (auto& [device, sigs] : by_device) {
    SignatureSet set(std::move(sigs));
    ToleranceSet tolerances =
        tolerance_set(set, config.r, static_cast<double>(config.eps_floor_us));
    profiles.emplace(device, DeviceProfile{std::move(set), std::move(tolerances)});
  }

  ExtractOptions options;
  options.concurrent = args.concurrent;
  options.jobs = args.jobs;
  const auto result = extract_all_devices(log, profiles, options);
  for (const auto& device : result.unknown_devices) {
    spdlog::warn("no signatures for device '{}'", device);
  }

  std::vector<const ActivityEvent*> events;
  for (const auto& [device, r] : result.devices) {
    for (const auto& e : r.events) events.push_back(&e);
  }
  std::stable_sort(events.begin(), events.end(), [](const auto* a, const auto* b) {
    if (a->end_t != b->end_t) return a->end_t < b->end_t;
    return a->match.first() < b->match.first();
  });
  for (const auto* e : events) {
    std::printf("%lld %s %s %s\n", static_cast<long long>(e->end_t.count()), e->device.c_str(),
                e->activity_name.c_str(), join_indices(e->match, ' ').c_str());
  }
  std::fflush(stdout);
  for (const auto& [device, r] : result.devices) {
    for (const auto& a : r.anomalies) {
      std::string names;
      for (const auto& n : a.signatures) names += (names.empty() ? "" : ",") + n;
      std::fprintf(stderr, "ANOMALY %zu %lld %s %s\n", a.packet_index + 1,
                   static_cast<long long>(log[a.packet_index].t.count()), device.c_str(),
                   names.c_str());
    }
  }
  return 0;
}

struct SweepArgs {
  std::string sigs;
  double r_min = 1.0;
  double r_max = 30.0;
  double r_step = 1.0;
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  std::size_t activities_per_trial = 20;
  std::vector<std::string> activities;
  NoiseModel noise;
  std::size_t jobs = 1;
};

int run_sweep(const SweepArgs& args, const Config& config) {
  if (args.r_step <= 0.0 || args.r_max < args.r_min) {
    throw Error(ErrorCode::InvalidArgument, "need r-min <= r-max and r-step > 0");
  }
  SweepConfig sweep;
  for (double r = args.r_min; r <= args.r_max + 1e-9; r += args.r_step) sweep.r_values.push_back(r);
  sweep.trials = args.trials;
  sweep.seed = args.seed;
  sweep.activities_per_trial = args.activities_per_trial;
  sweep.activities = args.activities;
  sweep.noise = args.noise;
  sweep.eps_floor_us = static_cast<double>(config.eps_floor_us);
  sweep.align_window_s = config.align_window_s;
  sweep.rules = load_rules(config);
  sweep.jobs = args.jobs;

  const auto rows = sensitivity_sweep(load_signatures(args.sigs), sweep);
  std::printf("activity\tr\taccuracy\tprecision\trecall\ttp\tfp\tfn\n");
  for (const auto& row : rows) {
    std::printf("%s\t%g\t", row.activity.c_str(), row.r);
    print_report_cells(row.report);
  }
  return 0;
}

struct XvalArgs {
  std::string captures;
  std::size_t folds = 6;
  std::uint64_t seed = 1;
};

int run_xval(const XvalArgs& args, const Config& config) {
  CrossValidationConfig xval;
  xval.folds = args.folds;
  xval.r = config.r;
  xval.eps_floor_us = static_cast<double>(config.eps_floor_us);
  xval.align_window_s = config.align_window_s;
  xval.seed = args.seed;
  const auto captures = load_captures(args.captures, load_rules(config));
  const auto result = cross_validate(captures, xval);

  std::printf("activity\tfold\ttrain\ttest\taccuracy\tprecision\trecall\ttp\tfp\tfn\n");
  for (const auto& f : result.folds) {
    std::printf("%s\t%zu\t%zu\t%zu\t", f.activity.c_str(), f.fold + 1, f.train_count,
                f.test_count);
    print_report_cells(f.report);
  }
  for (const auto& [activity, report] : result.mean_by_activity) {
    std::printf("%s\tmean\t-\t-\t", activity.c_str());
    print_report_cells(report);
  }
  std::printf("all\tmean\t-\t-\t");
  print_report_cells(result.mean);
  return 0;
}

const CLI::App* deepest_parsed(const CLI::App& app) {
  const CLI::App* at = &app;
  for (bool descended = true; descended;) {
    descended = false;
    for (const CLI::App* sub : at->get_subcommands()) {
      at = sub;
      descended = true;
      break;
    }
  }
  return at;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("athena");
  logger->set_pattern("athena: %l: %v");
  logger->set_level(spdlog::level::warn);
  spdlog::set_default_logger(logger);

  CLI::App app{"IoT activity signatures: generation, matching and extraction"};
  app.set_version_flag("--version", std::string(ATHENA_VERSION));
  // At most one; an unknown name then surfaces as an unexpected argument.
  app.require_subcommand(0, 1);

  CommonFlags common;

  IngestArgs ingest_args;
  auto* ingest_cmd = app.add_subcommand("ingest", "Convert a pcap file to a canonical log");
  add_common(ingest_cmd, common);
  ingest_cmd->add_option("--pcap", ingest_args.pcap, "Capture file")->required();
  ingest_cmd->add_option("--home-prefix", ingest_args.home_prefix, "Home network, e.g. 192.168.1.0/24")
      ->required();
  ingest_cmd->add_option("--names", common.layer.names_path, "Address to name table");
  ingest_cmd->add_flag("--keep-tcp-control", ingest_args.keep_control,
                       "Keep zero-payload TCP segments");
  ingest_cmd->add_flag("--dedup-retransmissions", ingest_args.dedup,
                       "Drop repeated TCP data segments");
  ingest_cmd->add_flag("--payload-digest", ingest_args.payload_digest,
                       "Record a payload digest per packet");

  ClusterArgs cluster_args;
  auto* cluster_cmd = app.add_subcommand("cluster", "Split a log by device");
  add_common(cluster_cmd, common);
  cluster_cmd->add_option("--log", cluster_args.log, "Canonical log")->required();
  cluster_cmd->add_option("--out", cluster_args.out_dir, "Write <device>.log files here");

  std::string silent_path;
  auto* learn_cmd = app.add_subcommand("learn-bg", "Learn background rules from a silent capture");
  add_common(learn_cmd, common);
  learn_cmd->add_option("--silent", silent_path, "Canonical log with no triggered activity")
      ->required();

  FilterArgs filter_args;
  auto* filter_cmd = app.add_subcommand("filter", "Remove background traffic from a log");
  add_common(filter_cmd, common);
  filter_cmd->add_option("--log", filter_args.log, "Canonical log")->required();
  filter_cmd->add_option("--rules", common.layer.rules_path, "Rule file (default: built-in rules)");
  filter_cmd->add_option("--background-out", filter_args.background_out,
                         "Write the removed packets here");

  GenSigArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen-sig", "Build a signature from labeled captures");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--captures", gen_args.captures, "Directory of <activity>.<seq>.log files")
      ->required();
  gen_cmd->add_option("--activity", gen_args.activity, "Activity name")->required();
  gen_cmd->add_option("--rules", common.layer.rules_path, "Rule file (default: built-in rules)");
  gen_cmd->add_option("--quorum", gen_args.quorum, "Modal sequence must exceed this share")
      ->check(CLI::Range(0.0, 1.0));
  add_r_flags(gen_cmd, common);

  MatchArgs match_args;
  auto* match_cmd = app.add_subcommand("match", "Match one signature against a log");
  add_common(match_cmd, common);
  match_cmd->add_option("--log", match_args.log, "Canonical log")->required();
  match_cmd->add_option("--sig", match_args.sig, "Signature file")->required();
  add_r_flags(match_cmd, common);
  auto* enumerate_opt =
      match_cmd->add_option("--enumerate", match_args.enumerate, "Print up to N matches")
          ->check(CLI::PositiveNumber);
  auto* earliest_opt = match_cmd->add_flag("--earliest", match_args.earliest,
                                           "Print the earliest match (default)");
  auto* nonoverlap_opt = match_cmd->add_flag("--nonoverlap", match_args.nonoverlap,
                                             "Print pairwise disjoint matches");
  enumerate_opt->excludes(earliest_opt)->excludes(nonoverlap_opt);
  earliest_opt->excludes(nonoverlap_opt);

  ExtractArgs extract_args;
  auto* extract_cmd = app.add_subcommand("extract", "Extract the activity sequence from a log");
  add_common(extract_cmd, common);
  extract_cmd->add_option("--log", extract_args.log, "Canonical log")->required();
  extract_cmd->add_option("--sigs", extract_args.sigs, "Directory of .sig files")->required();
  add_r_flags(extract_cmd, common);
  extract_cmd->add_flag("--concurrent", extract_args.concurrent,
                        "Report every non-overlapping match per signature");
  extract_cmd->add_option("--jobs", extract_args.jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* eval_cmd = app.add_subcommand("eval", "Synthetic evaluation");
  eval_cmd->set_version_flag("--version", std::string(ATHENA_VERSION));
  eval_cmd->require_subcommand(1);

  SweepArgs sweep_args;
  auto* sweep_cmd = eval_cmd->add_subcommand("sweep", "Accuracy as a function of r");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--sigs", sweep_args.sigs, "Directory of .sig files")->required();
  sweep_cmd->add_option("--r-min", sweep_args.r_min, "Smallest r")->capture_default_str();
  sweep_cmd->add_option("--r-max", sweep_args.r_max, "Largest r")->capture_default_str();
  sweep_cmd->add_option("--r-step", sweep_args.r_step, "Step between r values")
      ->capture_default_str();
  sweep_cmd->add_option("--trials", sweep_args.trials, "Trials per activity (at least 20)")
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_args.seed, "Random seed")->capture_default_str();
  sweep_cmd->add_option("--eps-floor-us", common.layer.eps_floor_us, "Tolerance floor in microseconds");
  sweep_cmd->add_option("--activities-per-trial", sweep_args.activities_per_trial,
                        "Activities per synthetic log")
      ->capture_default_str();
  sweep_cmd->add_option("--activity", sweep_args.activities, "Restrict to these activities");
  sweep_cmd->add_option("--chatter-per-minute", sweep_args.noise.chatter_per_minute,
                        "Well-known-port background packets per minute");
  sweep_cmd->add_option("--confusers", sweep_args.noise.confusers_per_activity,
                        "Expected confuser bursts per activity");
  sweep_cmd->add_option("--confuser-spread", sweep_args.noise.confuser_spread,
                        "Confuser gap spread in units of sigma")
      ->capture_default_str();
  sweep_cmd->add_option("--confuser-shifted-gaps", sweep_args.noise.confuser_shifted_gaps,
                        "Confuser gaps drawn with the wide spread")
      ->capture_default_str();
  sweep_cmd->add_option("--confuser-prefix", sweep_args.noise.confuser_prefix,
                        "Packets copied per confuser (0: all)");
  sweep_cmd->add_option("--rules", common.layer.rules_path, "Rule file (default: built-in rules)");
  sweep_cmd->add_option("--jobs", sweep_args.jobs, "Worker threads")->check(CLI::PositiveNumber);

  XvalArgs xval_args;
  auto* xval_cmd = eval_cmd->add_subcommand("xval", "K-fold cross-validation on labeled captures");
  add_common(xval_cmd, common);
  xval_cmd->add_option("--captures", xval_args.captures, "Directory of <activity>.<seq>.log files")
      ->required();
  xval_cmd->add_option("--folds", xval_args.folds, "Number of folds")->capture_default_str();
  xval_cmd->add_option("--seed", xval_args.seed, "Random seed for splicing gaps")
      ->capture_default_str();
  xval_cmd->add_option("--rules", common.layer.rules_path, "Rule file (default: built-in rules)");
  add_r_flags(xval_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "athena: " << e.what() << "\n\n" << deepest_parsed(app)->help();
    return 1;
  }

  if (app.get_subcommands().empty()) {
    std::cerr << "athena: a subcommand is required\n\n" << app.help();
    return 1;
  }
  if (common.verbose) logger->set_level(spdlog::level::info);
  try {
    const Config config = resolve(common);
    if (*ingest_cmd) return run_ingest(ingest_args, config);
    if (*cluster_cmd) return run_cluster(cluster_args);
    if (*learn_cmd) return run_learn_bg(silent_path);
    if (*filter_cmd) return run_filter(filter_args, config);
    if (*gen_cmd) return run_gen_sig(gen_args, config, common.layer.r.has_value());
    if (*match_cmd) return run_match(match_args, config);
    if (*extract_cmd) return run_extract(extract_args, config);
    if (*sweep_cmd) return run_sweep(sweep_args, config);
    return run_xval(xval_args, config);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
}
