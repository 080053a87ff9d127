#include "rtsac/harness/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <fstream>
#include <regex>
#include <sstream>

#include "rtsac/core/error.hpp"

namespace rtsac::harness {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T field(const std::string& text, const std::filesystem::path& path, std::size_t row) {
  T out{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Io, path.string() + ": bad value '" + text + "' on row " + std::to_string(row));
  }
  return out;
}

// Rows of a CSV with the expected header, split into fields.
std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, std::string_view header) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw Error(ErrorKind::Io, path.string() + ": expected header '" + std::string(header) + "'");
  }
  const std::size_t columns = split_csv_line(std::string(header)).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != columns) {
      throw Error(ErrorKind::Io, path.string() + ": row " + std::to_string(rows.size() + 1) + " has " +
                                     std::to_string(f.size()) + " fields");
    }
    rows.push_back(std::move(f));
  }
  return rows;
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const char* suffix) {
  return prefix.parent_path() / (prefix.filename().string() + suffix);
}

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

RunSummary summarize(const pipeline::RunLog& log, Setting setting, std::uint64_t seed) {
  RunSummary s;
  s.setting = std::string(to_string(setting));
  s.seed = seed;
  s.episode_returns = log.episode_returns;
  s.total_steps = static_cast<std::int64_t>(log.steps.size());
  s.total_updates = static_cast<std::int64_t>(log.updates.size());
  s.mean_cycle_ms = log.mean_realized_cycle_ms();
  s.drops = log.drops;
  s.missed_deadlines = log.missed_deadlines();
  s.failure = log.failure;
  return s;
}

std::unique_ptr<sac::Learner> make_learner(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.learner == LearnerKind::Random) return std::make_unique<sac::RandomLearner>(derive_seed(seed, 2));
  sac::SacHyper hyper = config.hyper;
  hyper.batch_size = config.batch_size;
  return std::make_unique<sac::SacLearner>(config.architecture(), hyper, derive_seed(seed, 2));
}

pipeline::RunLog run_single(const ExperimentConfig& config, std::uint64_t seed) {
  config.validate();
  auto clock = make_clock(config.clock_mode);
  envsim::SimEnv env(config.env_config(), derive_seed(seed, 1), *clock);
  auto learner = make_learner(config, seed);

  pipeline::RunHooks hooks;
  std::int64_t produced = 0;
  std::filesystem::path frames;
  if (config.frame_dump_every > 0) {
    frames = config.output_dir / to_string(config.setting) / ("seed_" + std::to_string(seed) + "_frames");
    std::filesystem::create_directories(frames);
    hooks.on_transition_produced = [&](const Transition& t) {
      if (produced % config.frame_dump_every == 0) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%08lld.ppm", static_cast<long long>(produced));
        envsim::write_ppm(*t.next_obs.image_stack[kStackFrames - 1], frames / name);
      }
      ++produced;
    };
  }
  return pipeline::run(config.run_config(seed), env, *learner, *clock, hooks);
}

std::filesystem::path run_prefix(const std::filesystem::path& dir, std::string_view setting, std::uint64_t seed) {
  return dir / std::string(setting) / ("seed_" + std::to_string(seed));
}

void write_run(const pipeline::RunLog& log, const std::filesystem::path& prefix) {
  std::filesystem::create_directories(prefix.parent_path());
  write_file(with_suffix(prefix, "_steps.csv"), [&](std::ostream& o) { pipeline::write_steps_csv(log, o); });
  write_file(with_suffix(prefix, "_updates.csv"), [&](std::ostream& o) { pipeline::write_updates_csv(log, o); });
  write_file(with_suffix(prefix, "_timing.csv"), [&](std::ostream& o) { pipeline::write_timing_csv(log, o); });
  if (log.failure) {
    write_file(with_suffix(prefix, "_failure.txt"), [&](std::ostream& o) { o << *log.failure << '\n'; });
  }
}

std::vector<RunSummary> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::filesystem::path dir = config.output_dir / to_string(config.setting);
  std::filesystem::create_directories(dir);
  write_file(dir / "config.txt", [&](std::ostream& o) { o << format_config(config); });
  std::vector<RunSummary> out;
  for (std::uint64_t seed : config.seeds) {
    pipeline::RunLog log;
    try {
      log = run_single(config, seed);
    } catch (const std::exception& e) {
      log.failure = e.what();
    }
    write_run(log, run_prefix(config.output_dir, to_string(config.setting), seed));
    out.push_back(summarize(log, config.setting, seed));
  }
  return out;
}

RunSummary read_run(const std::filesystem::path& prefix) {
  RunSummary s;
  s.setting = prefix.parent_path().filename().string();
  const std::string stem = prefix.filename().string();
  if (stem.rfind("seed_", 0) == 0) s.seed = field<std::uint64_t>(stem.substr(5), prefix, 0);

  const auto steps_path = with_suffix(prefix, "_steps.csv");
  const auto rows = read_table(steps_path, pipeline::kStepsHeader);
  std::vector<double> returns;
  std::vector<std::int64_t> lengths;
  double cycle_sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const auto episode = field<std::int64_t>(r[1], steps_path, i + 1);
    if (episode < 0 || static_cast<std::size_t>(episode) > returns.size() ||
        (static_cast<std::size_t>(episode) + 1 < returns.size())) {
      throw Error(ErrorKind::Io, steps_path.string() + ": episodes out of order on row " + std::to_string(i + 1));
    }
    if (static_cast<std::size_t>(episode) == returns.size()) {
      returns.push_back(0.0);
      lengths.push_back(0);
    }
    returns.back() += field<double>(r[3], steps_path, i + 1);
    ++lengths.back();
    cycle_sum += field<double>(r[4], steps_path, i + 1);
    s.missed_deadlines += r[5] == "1" ? 1 : 0;
    s.drops = field<std::uint64_t>(r[7], steps_path, i + 1);
  }
  if (!lengths.empty() && lengths.back() != lengths.front()) returns.pop_back();
  s.episode_returns = std::move(returns);
  s.total_steps = static_cast<std::int64_t>(rows.size());
  s.mean_cycle_ms = rows.empty() ? 0.0 : cycle_sum / static_cast<double>(rows.size());

  s.total_updates = static_cast<std::int64_t>(read_table(with_suffix(prefix, "_updates.csv"), pipeline::kUpdatesHeader).size());
  const auto failure_path = with_suffix(prefix, "_failure.txt");
  if (std::filesystem::exists(failure_path)) {
    std::ifstream in(failure_path);
    std::string text;
    std::getline(in, text);
    s.failure = text;
  }
  return s;
}

std::map<std::string, std::vector<RunSummary>> read_runs(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorKind::Io, "not a directory: " + dir.string());
  static const std::regex steps_name(R"(seed_(\d+)_steps\.csv)");
  std::map<std::string, std::vector<RunSummary>> out;
  std::vector<std::filesystem::path> setting_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory()) setting_dirs.push_back(entry.path());
  }
  std::sort(setting_dirs.begin(), setting_dirs.end());
  for (const auto& sd : setting_dirs) {
    std::vector<std::pair<std::uint64_t, std::filesystem::path>> prefixes;
    for (const auto& entry : std::filesystem::directory_iterator(sd)) {
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (std::regex_match(name, m, steps_name)) {
        prefixes.emplace_back(std::stoull(m[1].str()), sd / ("seed_" + m[1].str()));
      }
    }
    if (prefixes.empty()) continue;
    std::sort(prefixes.begin(), prefixes.end());
    auto& runs = out[sd.filename().string()];
    for (const auto& [seed, prefix] : prefixes) runs.push_back(read_run(prefix));
  }
  return out;
}

ComponentTimes read_component_times(const std::filesystem::path& setting_dir) {
  static const std::regex timing_name(R"(seed_\d+_timing\.csv)");
  ComponentTimes t;
  for (const auto& entry : std::filesystem::directory_iterator(setting_dir)) {
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, timing_name)) continue;
    const auto rows = read_table(entry.path(), pipeline::kTimingHeader);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      t.observe += field<double>(r[1], entry.path(), i + 1);
      t.act += field<double>(r[2], entry.path(), i + 1);
      t.store += field<double>(r[3], entry.path(), i + 1);
      t.sample += field<double>(r[4], entry.path(), i + 1);
      t.grad += field<double>(r[5], entry.path(), i + 1);
      t.cycle += field<double>(r[6], entry.path(), i + 1);
    }
    t.steps += rows.size();
  }
  if (t.steps > 0) {
    const double n = static_cast<double>(t.steps);
    t.observe /= n;
    t.act /= n;
    t.store /= n;
    t.sample /= n;
    t.grad /= n;
    t.cycle /= n;
  }
  return t;
}

}  // namespace rtsac::harness
