#include "rtsac/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "rtsac/core/error.hpp"

namespace rtsac::harness {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorKind::Configuration, message); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    std::string item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    fail("key '" + key + "': expected an integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(out)) {
    fail("key '" + key + "': expected a finite number, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  fail("key '" + key + "': expected true or false, got '" + value + "'");
}

std::string fmt(double v) { return pipeline::format_number(v); }

template <typename T>
std::string join(const T& items) {
  std::ostringstream out;
  bool first = true;
  for (const auto& i : items) {
    if (!first) out << ", ";
    out << i;
    first = false;
  }
  return out.str();
}

struct Entry {
  std::string value;
  int line = 0;
};

using Setter = void (*)(ExperimentConfig&, const std::string&, const std::string&);
using Getter = std::string (*)(const ExperimentConfig&);

struct KeySpec {
  const char* name;
  Setter set;
  Getter get;
};

#define RTSAC_INT_KEY(NAME, FIELD, TYPE)                                                             \
  KeySpec {                                                                                          \
    NAME, [](ExperimentConfig& c, const std::string& k, const std::string& v) {                      \
      c.FIELD = parse_integer<TYPE>(k, v);                                                           \
    },                                                                                               \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                            \
  }
#define RTSAC_DOUBLE_KEY(NAME, FIELD)                                                                \
  KeySpec {                                                                                          \
    NAME, [](ExperimentConfig& c, const std::string& k, const std::string& v) {                      \
      c.FIELD = parse_double(k, v);                                                                  \
    },                                                                                               \
        [](const ExperimentConfig& c) { return fmt(c.FIELD); }                                       \
  }

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"setting", nullptr, [](const ExperimentConfig& c) { return std::string(to_string(c.setting)); }},
      {"preset", nullptr, [](const ExperimentConfig& c) { return std::string(to_string(c.preset)); }},
      RTSAC_INT_KEY("image_width", image_width, int),
      RTSAC_INT_KEY("image_height", image_height, int),
      RTSAC_INT_KEY("batch_size", batch_size, std::size_t),
      RTSAC_INT_KEY("cycle_ms", cycle_ms, Millis),
      RTSAC_INT_KEY("episode_ms", episode_ms, Millis),
      RTSAC_INT_KEY("reset_ms", reset_ms, Millis),
      RTSAC_DOUBLE_KEY("training_minutes", training_minutes),
      {"seeds",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) c.seeds.push_back(parse_integer<std::uint64_t>(k, s));
       },
       [](const ExperimentConfig& c) { return join(c.seeds); }},
      {"clock",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "virtual") {
           c.clock_mode = ClockMode::Virtual;
         } else if (v == "real") {
           c.clock_mode = ClockMode::Real;
         } else {
           fail("key '" + k + "': expected virtual or real, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) { return std::string(c.clock_mode == ClockMode::Virtual ? "virtual" : "real"); }},
      {"learner",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         if (v == "sac") {
           c.learner = LearnerKind::Sac;
         } else if (v == "random") {
           c.learner = LearnerKind::Random;
         } else {
           fail("key '" + k + "': expected sac or random, got '" + v + "'");
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.learner)); }},
      RTSAC_INT_KEY("delay_observe_ms", delays.observe, Millis),
      RTSAC_INT_KEY("delay_act_ms", delays.act, Millis),
      RTSAC_INT_KEY("delay_store_ms", delays.store, Millis),
      RTSAC_INT_KEY("delay_sample_ms", delays.sample, Millis),
      RTSAC_INT_KEY("delay_grad_ms", delays.grad, Millis),
      RTSAC_INT_KEY("sampler_stall_ms", delays.sampler_stall, Millis),
      {"output_dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = v; },
       [](const ExperimentConfig& c) { return c.output_dir.string(); }},
      RTSAC_INT_KEY("buffer_capacity", buffer_capacity, std::size_t),
      RTSAC_INT_KEY("transition_capacity", transition_capacity, std::size_t),
      RTSAC_INT_KEY("batch_capacity", batch_capacity, std::size_t),
      RTSAC_DOUBLE_KEY("gamma", hyper.gamma),
      RTSAC_DOUBLE_KEY("tau", hyper.tau),
      RTSAC_DOUBLE_KEY("lr_actor", hyper.lr_actor),
      RTSAC_DOUBLE_KEY("lr_critic", hyper.lr_critic),
      RTSAC_DOUBLE_KEY("lr_alpha", hyper.lr_alpha),
      RTSAC_DOUBLE_KEY("init_alpha", hyper.init_alpha),
      RTSAC_DOUBLE_KEY("target_entropy", hyper.target_entropy),
      RTSAC_DOUBLE_KEY("velocity_scale_cm_s", env.velocity_scale_cm_s),
      RTSAC_DOUBLE_KEY("focal_scale", env.focal_scale),
      RTSAC_DOUBLE_KEY("target_radius_cm", env.target_radius_cm),
      {"pixel_noise",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.env.pixel_noise = parse_bool(k, v); },
       [](const ExperimentConfig& c) { return std::string(c.env.pixel_noise ? "true" : "false"); }},
      RTSAC_INT_KEY("noise_amplitude", env.noise_amplitude, int),
      {"red_threshold",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto parts = split_list(v);
         if (parts.size() != 3) fail("key '" + k + "': expected r_min, g_max, b_max");
         c.env.threshold.r_min = parse_integer<std::uint8_t>(k, parts[0]);
         c.env.threshold.g_max = parse_integer<std::uint8_t>(k, parts[1]);
         c.env.threshold.b_max = parse_integer<std::uint8_t>(k, parts[2]);
       },
       [](const ExperimentConfig& c) {
         return std::to_string(c.env.threshold.r_min) + ", " + std::to_string(c.env.threshold.g_max) + ", " +
                std::to_string(c.env.threshold.b_max);
       }},
      {"kinematics",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto parts = split_list(v);
         if (parts.size() != 3 * kJoints) fail("key '" + k + "': expected 21 comma-separated numbers (3 rows of 7)");
         for (std::size_t i = 0; i < parts.size(); ++i) c.env.kinematics[i / kJoints][i % kJoints] = parse_double(k, parts[i]);
       },
       [](const ExperimentConfig& c) {
         std::vector<std::string> values;
         for (const auto& row : c.env.kinematics) {
           for (double x : row) values.push_back(fmt(x));
         }
         return join(values);
       }},
      RTSAC_INT_KEY("frame_dump_every", frame_dump_every, std::int64_t),
  };
  return specs;
}

#undef RTSAC_INT_KEY
#undef RTSAC_DOUBLE_KEY

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : key_specs()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

Preset parse_preset(std::string_view v) {
  if (v == "full") return Preset::Full;
  if (v == "desk") return Preset::Desk;
  fail("key 'preset': expected full or desk, got '" + std::string(v) + "'");
}

bool is_delay_key(std::string_view k) {
  return k.rfind("delay_", 0) == 0 || k == "sampler_stall_ms";
}

}  // namespace

std::string_view to_string(Setting s) noexcept {
  switch (s) {
    case Setting::AsyncBaseline:
      return "async-baseline";
    case Setting::SyncBaseline:
      return "sync-baseline";
    case Setting::AsyncHighres:
      return "async-highres";
    case Setting::SyncHighres:
      return "sync-highres";
  }
  return "?";
}

std::string_view to_string(Preset p) noexcept { return p == Preset::Full ? "full" : "desk"; }

std::string_view to_string(LearnerKind k) noexcept { return k == LearnerKind::Sac ? "sac" : "random"; }

Setting parse_setting(std::string_view text) {
  for (Setting s : {Setting::AsyncBaseline, Setting::SyncBaseline, Setting::AsyncHighres, Setting::SyncHighres}) {
    if (text == to_string(s)) return s;
  }
  fail("unknown setting '" + std::string(text) +
       "' (expected async-baseline, sync-baseline, async-highres or sync-highres)");
}

pipeline::Mode mode_of(Setting s) noexcept {
  return s == Setting::SyncBaseline || s == Setting::SyncHighres ? pipeline::Mode::Sync : pipeline::Mode::Async;
}

bool is_highres(Setting s) noexcept { return s == Setting::AsyncHighres || s == Setting::SyncHighres; }

ExperimentConfig defaults_for(Setting setting, Preset preset) {
  ExperimentConfig c;
  c.setting = setting;
  c.preset = preset;
  const bool sync = mode_of(setting) == pipeline::Mode::Sync;
  const bool high = is_highres(setting);
  if (preset == Preset::Full) {
    c.image_width = high ? 320 : 160;
    c.image_height = high ? 180 : 90;
    c.batch_size = high ? 80 : 128;
    c.cycle_ms = sync ? (high ? 80 : 75) : 40;
    c.training_minutes = 72.0;
    c.delays = {10, 5, 1, 14, 30, 0};
  } else {
    c.image_width = high ? 80 : 40;
    c.image_height = high ? 48 : 24;
    c.batch_size = high ? 20 : 32;
    c.cycle_ms = sync ? 120 : 40;
    c.training_minutes = 30.0;
    c.delays = {5, 5, 1, 4, 100, 0};
  }
  return c;
}

Millis ExperimentConfig::training_ms() const { return static_cast<Millis>(std::llround(training_minutes * 60000.0)); }

std::int64_t ExperimentConfig::horizon() const { return horizon_steps(episode_ms, cycle_ms); }

std::int64_t ExperimentConfig::total_steps() const { return training_ms() / cycle_ms; }

std::int64_t ExperimentConfig::episodes() const {
  const std::int64_t h = horizon();
  return (total_steps() + h - 1) / h;
}

std::size_t ExperimentConfig::init_steps() const { return static_cast<std::size_t>(buffer_init_steps(total_steps())); }

envsim::EnvConfig ExperimentConfig::env_config() const {
  envsim::EnvConfig e = env;
  e.image_width = image_width;
  e.image_height = image_height;
  e.cycle_ms = cycle_ms;
  e.episode_ms = episode_ms;
  e.reset_ms = reset_ms;
  return e;
}

nn::Architecture ExperimentConfig::architecture() const {
  nn::Architecture a;
  a.image_h = image_height;
  a.image_w = image_width;
  return a;
}

pipeline::RunConfig ExperimentConfig::run_config(std::uint64_t seed) const {
  pipeline::RunConfig r;
  r.mode = mode_of(setting);
  r.cycle_ms = cycle_ms;
  r.training_ms = training_ms();
  r.batch_size = batch_size;
  r.buffer_capacity = buffer_capacity > 0 ? buffer_capacity : static_cast<std::size_t>(total_steps() + horizon());
  r.init_steps = init_steps();
  r.transition_capacity = transition_capacity;
  r.batch_capacity = batch_capacity;
  r.delays = delays;
  r.seed = derive_seed(seed, 3);
  return r;
}

void ExperimentConfig::validate() const {
  const std::string name(to_string(setting));
  const bool sync = mode_of(setting) == pipeline::Mode::Sync;
  const bool high = is_highres(setting);
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) fail(name + " (" + std::string(to_string(preset)) + " preset) " + what);
  };
  auto got = [](auto v) { return " (got " + std::to_string(v) + ")"; };

  if (preset == Preset::Full) {
    const int w = high ? 320 : 160;
    const int h = high ? 180 : 90;
    const std::size_t b = high ? 80 : 128;
    const Millis cyc = sync ? (high ? 80 : 75) : 40;
    require(image_width == w && image_height == h, "requires a " + std::to_string(w) + "x" + std::to_string(h) +
                                                       " image (got " + std::to_string(image_width) + "x" +
                                                       std::to_string(image_height) + ")");
    require(batch_size == b, "requires batch_size = " + std::to_string(b) + got(batch_size));
    require(cycle_ms == cyc, "requires cycle_ms = " + std::to_string(cyc) + got(cycle_ms));
  } else {
    const int w = high ? 80 : 40;
    const int h = high ? 48 : 24;
    const std::size_t b = high ? 20 : 32;
    require(image_width == w && image_height == h, "requires a " + std::to_string(w) + "x" + std::to_string(h) +
                                                       " image (got " + std::to_string(image_width) + "x" +
                                                       std::to_string(image_height) + ")");
    require(batch_size == b, "requires batch_size = " + std::to_string(b) + got(batch_size));
    if (sync) {
      const Millis full_cycle = high ? 80 : 75;
      require(cycle_ms == full_cycle || cycle_ms == 120,
              "requires cycle_ms = " + std::to_string(full_cycle) + " or 120" + got(cycle_ms));
    } else {
      require(cycle_ms == 40, "requires cycle_ms = 40" + got(cycle_ms));
    }
  }
  if (episode_ms != 6000) fail("episode_ms must be 6000" + got(episode_ms));
  if (reset_ms < 0) fail("reset_ms must be non-negative" + got(reset_ms));
  if (!(training_minutes > 0.0)) fail("training_minutes must be positive");
  if (total_steps() < horizon()) fail("training_minutes is shorter than one episode");
  if (seeds.empty()) fail("seeds must list at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) fail("seeds must be distinct");
  if (transition_capacity == 0) fail("transition_capacity must be positive");
  if (batch_capacity == 0) fail("batch_capacity must be positive");
  if (frame_dump_every < 0) fail("frame_dump_every must be non-negative");
  if (delays.observe < 0 || delays.act < 0 || delays.store < 0 || delays.sample < 0 || delays.grad < 0 ||
      delays.sampler_stall < 0) {
    fail("delays must be non-negative");
  }
  if (!sync && clock_mode == ClockMode::Virtual && delays.sample + delays.grad == 0) {
    fail("asynchronous virtual runs need delay_sample_ms + delay_grad_ms > 0");
  }
  hyper.validate();
  env_config().validate();
  architecture().validate();
}

ExperimentConfig parse_config(std::string_view text, std::span<const std::string> overrides) {
  std::map<std::string, Entry> entries;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) fail("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (!find_key(key)) fail("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (entries.count(key)) fail("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    entries[key] = {value, line_no};
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) fail("override '" + o + "': expected key=value");
    const std::string key = trim(std::string_view(o).substr(0, eq));
    if (!find_key(key)) fail("override: unknown key '" + key + "'");
    entries[key] = {trim(std::string_view(o).substr(eq + 1)), 0};
  }

  if (!entries.count("setting")) fail("missing required key 'setting'");
  const Setting setting = parse_setting(entries["setting"].value);
  const Preset preset = entries.count("preset") ? parse_preset(entries["preset"].value) : Preset::Desk;
  ExperimentConfig c = defaults_for(setting, preset);

  // Applied in documentation order so the result does not depend on line order.
  bool any_delay = false;
  for (const auto& spec : key_specs()) {
    const auto it = entries.find(spec.name);
    if (it == entries.end() || !spec.set) continue;
    any_delay = any_delay || is_delay_key(spec.name);
    if (it->second.value.empty()) fail("key '" + it->first + "' has an empty value");
    spec.set(c, it->first, it->second.value);
  }
  if (c.clock_mode == ClockMode::Real && !any_delay) c.delays = {};
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) fail("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

std::string format_config(const ExperimentConfig& config) {
  std::ostringstream out;
  for (const auto& spec : key_specs()) out << spec.name << " = " << spec.get(config) << '\n';
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& spec : key_specs()) out.emplace_back(spec.name);
  return out;
}

}  // namespace rtsac::harness
