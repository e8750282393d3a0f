/* Copyright 2026 The MetaQNN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// metaqnn: search, sample, validate, params and analyze.
//
// Exit codes:
//   0  success
//   1  validate found violations
//   2  invalid configuration or usage
//   3  oracle unreachable
//   4  missing input or corrupt snapshot / log
//   5  architecture string does not parse

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "metaqnn/analysis.h"
#include "metaqnn/architecture.h"
#include "metaqnn/channel.h"
#include "metaqnn/oracle.h"
#include "metaqnn/qlearning.h"
#include "metaqnn/run_config.h"
#include "metaqnn/search.h"
#include "metaqnn/space.h"
#include "metaqnn/trainer_oracle.h"

namespace fs = std::filesystem;

namespace metaqnn {
namespace {

enum ExitCode {
  kOk = 0,
  kViolations = 1,
  kBadConfig = 2,
  kOracleUnreachable = 3,
  kBadInput = 4,
  kParseFailure = 5,
};

// Missing or unreadable input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Write-then-rename so a crash never leaves a half-written file.
void WriteFileAtomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << contents;
  }
  fs::rename(tmp, path);
}

std::vector<IterationEvent> LoadEvents(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  try {
    return ReadEventLog(in);
  } catch (const std::invalid_argument& e) {
    throw InputError("corrupt event log '" + path.string() + "': " + e.what());
  }
}

QTable LoadQ(const fs::path& path, double q_init) {
  return QTable::FromJson(ReadFile(path), q_init);
}

struct SpaceFlags {
  std::string config;
  std::string preset;
  std::optional<int> input_size;
  std::optional<int> channels;
  std::optional<int> max_depth;

  void Register(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON run config");
    cmd->add_option("--preset", preset, "cifar10, svhn, mnist or default");
    cmd->add_option("--input-size", input_size, "Input side length");
    cmd->add_option("--channels", channels, "Input channels");
    cmd->add_option("--max-depth", max_depth, "Maximum non-terminal layers");
  }

  RunConfig Resolve() const {
    RunConfig c = config.empty() ? RunConfig{} : LoadRunConfig(config);
    if (!preset.empty()) c.space = SpaceConfig::Preset(preset);
    if (input_size) c.space.input_size = *input_size;
    if (channels) c.space.input_channels = *channels;
    if (max_depth) c.space.max_depth = *max_depth;
    c.space.Validate();
    return c;
  }
};

// ---------------------------------------------------------------- search

struct SearchFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string oracle;
  std::string trainer_cmd;
  std::string trainer_addr;
  std::string schedule;
  std::string out;
  std::string preset;
  bool resume = false;
  bool wall_clock = false;
};

std::unique_ptr<RewardOracle> MakeOracle(const RunConfig& c) {
  if (c.oracle.kind == OracleKind::kSurrogate) {
    return std::make_unique<SurrogateOracle>(
        c.oracle.surrogate_seed.value_or(c.qlearning.seed), c.oracle.weights);
  }
  TrainerSettings settings;
  settings.dataset = c.dataset;
  settings.input_size = c.space.input_size;
  settings.input_channels = c.space.input_channels;
  settings.num_classes = c.space.num_classes;
  settings.epochs = c.oracle.epochs;
  settings.timeout = std::chrono::milliseconds(
      static_cast<std::int64_t>(c.oracle.timeout_seconds * 1000.0));
  std::unique_ptr<LineChannel> channel;
  try {
    if (!c.oracle.trainer_command.empty()) {
      channel = std::make_unique<SubprocessChannel>(c.oracle.trainer_command);
    } else {
      channel = ConnectTcp(c.oracle.trainer_address);
    }
  } catch (const std::system_error& e) {
    throw OracleUnavailableError(e.what());
  } catch (const ChannelClosedError& e) {
    throw OracleUnavailableError(e.what());
  }
  return std::make_unique<TrainerOracle>(std::move(channel), settings);
}

void WriteTopModels(const fs::path& path, const ReplayDictionary& dict,
                    const SpaceConfig& space, int k) {
  std::ostringstream out;
  out.precision(17);
  out << "rank,arch,accuracy,params\n";
  int rank = 1;
  for (const auto& m : TopModels(dict, space, static_cast<std::size_t>(k))) {
    out << rank++ << ",\"" << m.arch << "\"," << m.accuracy << ','
        << m.params << '\n';
  }
  WriteFileAtomic(path, out.str());
}

void WriteCheckpoint(const fs::path& dir, const SearchState& state) {
  WriteFileAtomic(dir / "qtable.json", state.q.ToJson());
  WriteFileAtomic(dir / "replay_dictionary.json", state.dictionary.ToJson());
  const nlohmann::json marker = {{"next_iteration", state.next_iteration},
                                 {"unique_models", state.unique_models}};
  WriteFileAtomic(dir / "checkpoint.json", marker.dump() + "\n");
}

// Uses the Q snapshot only when it was taken at the log's last iteration;
// otherwise the updates are replayed from the log.
SearchState Resume(const fs::path& dir, const RunConfig& c,
                   std::vector<IterationEvent>& events) {
  events = LoadEvents(dir / "events.ndjson");
  std::optional<QTable> q;
  if (fs::exists(dir / "checkpoint.json") && fs::exists(dir / "qtable.json")) {
    std::int64_t next = -1;
    try {
      next = nlohmann::json::parse(ReadFile(dir / "checkpoint.json"))
                 .at("next_iteration")
                 .get<std::int64_t>();
    } catch (const nlohmann::json::exception&) {
      next = -1;
    }
    const std::int64_t logged = events.empty() ? 0 : events.back().iteration + 1;
    if (next == logged) q = LoadQ(dir / "qtable.json", c.qlearning.q_init);
  }
  try {
    return ResumeState(events, std::move(q), c.space, c.qlearning);
  } catch (const std::exception& e) {
    throw InputError(std::string("event log does not replay: ") + e.what());
  }
}

int RunSearchCommand(const SearchFlags& f) {
  RunConfig c = f.config.empty() ? RunConfig{} : LoadRunConfig(f.config);
  if (!f.preset.empty()) c.space = SpaceConfig::Preset(f.preset);
  if (f.seed) c.qlearning.seed = *f.seed;
  if (f.workers) c.workers = *f.workers;
  if (!f.oracle.empty()) {
    c.oracle.kind =
        f.oracle == "trainer" ? OracleKind::kTrainer : OracleKind::kSurrogate;
  }
  if (!f.trainer_cmd.empty()) c.oracle.trainer_command = f.trainer_cmd;
  if (!f.trainer_addr.empty()) c.oracle.trainer_address = f.trainer_addr;
  if (!f.schedule.empty()) {
    c.qlearning.schedule = EpsilonSchedule::Parse(f.schedule);
  }
  if (!f.out.empty()) c.output_dir = f.out;
  if (f.wall_clock) c.wall_clock_timestamps = true;
  c.Validate();

  const fs::path dir = c.output_dir;
  fs::create_directories(dir);
  const fs::path log_path = dir / "events.ndjson";

  SearchState initial;
  initial.q = QTable(c.qlearning.q_init);
  if (f.resume && fs::exists(log_path)) {
    std::vector<IterationEvent> events;
    initial = Resume(dir, c, events);
    // Rewrite without any torn final line before appending.
    std::string clean;
    for (const auto& e : events) clean += e.ToJsonLine() + "\n";
    WriteFileAtomic(log_path, clean);
    std::cerr << "resuming at iteration " << initial.next_iteration << " with "
              << initial.unique_models << " unique models\n";
  }
  WriteFileAtomic(dir / "config.json", RunConfigToJson(c) + "\n");

  auto oracle = MakeOracle(c);

  std::ofstream log(log_path,
                    f.resume ? std::ios::app : std::ios::out | std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write '" + log_path.string() + "'");

  SearchOptions options;
  options.workers = c.workers;
  options.max_retries = c.oracle.max_retries;
  options.max_stall_iterations = c.max_stall_iterations;
  options.wall_clock_timestamps = c.wall_clock_timestamps;
  options.checkpoint_every = c.checkpoint_every;
  options.on_event = [&log](const IterationEvent& e) {
    log << e.ToJsonLine() << '\n';
    log.flush();
  };
  options.on_checkpoint = [&dir](const SearchState& s) {
    WriteCheckpoint(dir, s);
  };

  const SearchResult result =
      RunSearch(c.space, c.qlearning, *oracle, options, std::move(initial));
  WriteTopModels(dir / "top_models.csv", result.state.dictionary, c.space,
                 c.top_k);

  std::cerr << "iterations " << result.state.next_iteration << ", unique models "
            << result.state.unique_models << ", oracle calls "
            << result.oracle_invocations
            << (result.stalled ? ", stopped early: no new models" : "") << "\n";
  return kOk;
}

// ---------------------------------------------------------------- sample

int RunSampleCommand(const SpaceFlags& space_flags, const std::string& q_path,
                     double epsilon, int n, std::uint64_t seed) {
  const RunConfig c = space_flags.Resolve();
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw ConfigError("epsilon must lie in [0, 1]");
  }
  if (n < 0) throw ConfigError("n must be >= 0");
  const QTable q = q_path.empty() ? QTable(c.qlearning.q_init)
                                  : LoadQ(q_path, c.qlearning.q_init);
  const ActionSpace actions(c.space);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i) {
    std::cout << Serialize(ToArchitecture(SampleNewNetwork(epsilon, q, rng,
                                                           actions)))
              << '\n';
  }
  return kOk;
}

// ------------------------------------------------------ validate, params

int RunValidateCommand(const SpaceFlags& space_flags, const std::string& text) {
  const RunConfig c = space_flags.Resolve();
  const Architecture arch = Parse(text);
  const auto violations = Validate(arch, c.space);
  if (violations.empty()) {
    std::cout << "OK\n";
    return kOk;
  }
  for (const auto& v : violations) {
    std::cout << "layer " << v.layer_index << " rule " << v.rule << ": "
              << v.message << '\n';
  }
  return kViolations;
}

int RunParamsCommand(const SpaceFlags& space_flags, const std::string& text,
                     const std::string& convention, bool per_layer) {
  const RunConfig c = space_flags.Resolve();
  const ParamCounting counting = convention == "kernels"
                                     ? ParamCounting::kConvKernels
                                     : ParamCounting::kAllTrainable;
  const Architecture arch = Parse(text);
  if (per_layer) {
    const auto counts = LayerParamCounts(arch, c.space, counting);
    for (std::size_t i = 0; i < counts.size(); ++i) {
      std::cout << arch.layers[i].ToString() << '\t' << counts[i] << '\n';
    }
  }
  std::cout << ParamCount(arch, c.space, counting) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeFlags {
  std::string events;
  std::string q;
  std::vector<std::string> which;
  int window = 100;
  double bin_width = 0.05;
  std::string out = ".";
};

void WriteCsv(const fs::path& path,
              const std::function<void(std::ostream&)>& body) {
  std::ostringstream out;
  out.precision(10);
  body(out);
  WriteFileAtomic(path, out.str());
  std::cout << path.string() << '\n';
}

int RunAnalyzeCommand(const AnalyzeFlags& f) {
  std::set<std::string> which(f.which.begin(), f.which.end());
  if (which.empty()) {
    which = {"rolling", "per-eps", "hist"};
    if (!f.q.empty()) which.insert("qsummary");
  }
  const bool needs_events =
      which.count("rolling") || which.count("per-eps") || which.count("hist");
  if (needs_events && f.events.empty()) {
    throw InputError("--events is required for rolling, per-eps and hist");
  }
  if (which.count("qsummary") && f.q.empty()) {
    throw InputError("--q is required for qsummary");
  }
  if (f.window < 1) throw ConfigError("--window must be >= 1");

  std::vector<IterationRecord> records;
  if (needs_events) records = RecordsFromEvents(LoadEvents(f.events));
  std::optional<QTable> q;
  if (which.count("qsummary")) q = LoadQ(f.q, 0.5);

  const fs::path dir = f.out;
  fs::create_directories(dir);
  if (which.count("rolling")) {
    WriteCsv(dir / "rolling.csv", [&](std::ostream& o) {
      WriteRollingCsv(o, records, f.window);
    });
  }
  if (which.count("per-eps")) {
    const auto stats = PerEpsilonStats(records);
    WriteCsv(dir / "per_epsilon.csv",
             [&](std::ostream& o) { WritePerEpsilonCsv(o, stats); });
  }
  if (which.count("hist")) {
    std::vector<Histogram> hists;
    for (const auto& s : PerEpsilonStats(records)) {
      hists.push_back(AccuracyHistogram(records, s.epsilon, f.bin_width));
    }
    WriteCsv(dir / "histogram.csv",
             [&](std::ostream& o) { WriteHistogramCsv(o, hists); });
  }
  if (q) {
    const QSummary summary = SummarizeQ(*q);
    WriteCsv(dir / "qsummary_type.csv", [&](std::ostream& o) {
      WriteQSummaryCsv(o, summary.by_type, "layer_type");
    });
    WriteCsv(dir / "qsummary_field.csv", [&](std::ostream& o) {
      WriteQSummaryCsv(o, summary.by_conv_field, "field");
    });
  }
  return kOk;
}

// Runs `fn`, translating exceptions into exit codes.
template <typename Fn>
int Guard(Fn fn) {
  try {
    return fn();
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParseFailure;
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kBadConfig;
  } catch (const OracleUnavailableError& e) {
    std::cerr << "oracle unreachable: " << e.what() << '\n';
    return kOracleUnreachable;
  } catch (const SnapshotError& e) {
    std::cerr << "corrupt snapshot: " << e.what() << '\n';
    return kBadInput;
  } catch (const InputError& e) {
    std::cerr << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
}

int Main(int argc, char** argv) {
  CLI::App app{"Q-learning search over CNN architectures"};
  app.require_subcommand(1);

  SearchFlags search;
  auto* search_cmd = app.add_subcommand("search", "Run the search");
  search_cmd->add_option("--config", search.config, "JSON run config");
  search_cmd->add_option("--seed", search.seed, "Run seed")
      ->envname("METAQNN_SEED");
  search_cmd->add_option("--workers", search.workers, "Evaluations in flight");
  search_cmd->add_option("--oracle", search.oracle, "surrogate or trainer")
      ->check(CLI::IsMember({"surrogate", "trainer"}));
  search_cmd->add_option("--trainer-cmd", search.trainer_cmd,
                         "Command that starts a trainer worker");
  search_cmd->add_option("--trainer-addr", search.trainer_addr,
                         "host:port of a trainer worker");
  search_cmd->add_option("--schedule", search.schedule,
                         "Epsilon schedule, e.g. 1.0:150,0.1:15");
  search_cmd->add_option("--preset", search.preset,
                         "Space preset: cifar10, svhn, mnist, default");
  search_cmd->add_option("--out", search.out, "Output directory");
  search_cmd->add_flag("--resume", search.resume,
                       "Continue from the log in the output directory");
  search_cmd->add_flag("--wall-clock", search.wall_clock,
                       "Record UTC timestamps in the event log");

  SpaceFlags sample_space;
  std::string sample_q;
  double sample_eps = 0.0;
  int sample_n = 1;
  std::uint64_t sample_seed = 0;
  auto* sample_cmd =
      app.add_subcommand("sample", "Sample architectures from a Q snapshot");
  sample_space.Register(sample_cmd);
  sample_cmd->add_option("--q", sample_q, "Q snapshot (fresh table if absent)");
  sample_cmd->add_option("--epsilon", sample_eps, "Exploration rate");
  sample_cmd->add_option("-n", sample_n, "Number of samples");
  sample_cmd->add_option("--seed", sample_seed, "Sampler seed")
      ->envname("METAQNN_SEED");

  SpaceFlags validate_space;
  std::string validate_arch;
  auto* validate_cmd =
      app.add_subcommand("validate", "Check an architecture string");
  validate_space.Register(validate_cmd);
  validate_cmd->add_option("arch", validate_arch, "Architecture string")
      ->required();

  SpaceFlags params_space;
  std::string params_arch;
  std::string convention = "all";
  bool per_layer = false;
  auto* params_cmd = app.add_subcommand("params", "Count parameters");
  params_space.Register(params_cmd);
  params_cmd->add_option("arch", params_arch, "Architecture string")
      ->required();
  params_cmd->add_option("--convention", convention,
                         "all (weights and biases) or kernels (conv only)")
      ->check(CLI::IsMember({"all", "kernels"}));
  params_cmd->add_flag("--per-layer", per_layer, "Print per-layer counts");

  AnalyzeFlags analyze;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "Export analysis CSVs from a run");
  analyze_cmd->add_option("--events", analyze.events, "Event log");
  analyze_cmd->add_option("--q", analyze.q, "Q snapshot");
  analyze_cmd->add_option("--which", analyze.which,
                          "rolling, per-eps, hist, qsummary")
      ->check(CLI::IsMember({"rolling", "per-eps", "hist", "qsummary"}));
  analyze_cmd->add_option("--window", analyze.window, "Rolling window");
  analyze_cmd->add_option("--bin-width", analyze.bin_width,
                          "Histogram bin width");
  analyze_cmd->add_option("--out", analyze.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadConfig;
  }

  if (*search_cmd) return Guard([&] { return RunSearchCommand(search); });
  if (*sample_cmd) {
    return Guard([&] {
      return RunSampleCommand(sample_space, sample_q, sample_eps, sample_n,
                              sample_seed);
    });
  }
  if (*validate_cmd) {
    return Guard(
        [&] { return RunValidateCommand(validate_space, validate_arch); });
  }
  if (*params_cmd) {
    return Guard([&] {
      return RunParamsCommand(params_space, params_arch, convention,
                              per_layer);
    });
  }
  return Guard([&] { return RunAnalyzeCommand(analyze); });
}

}  // namespace
}  // namespace metaqnn

int main(int argc, char** argv) { return metaqnn::Main(argc, argv); }
