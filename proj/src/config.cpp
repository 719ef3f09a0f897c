#include "noisyst/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "noisyst/errors.hpp"

namespace noisyst {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = value.find(',', start);
    out.push_back(trim(value.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

// Keys that never change results and stay out of the config hash.
const std::set<std::string>& unhashed_keys() {
  static const std::set<std::string> keys = {"run.output_dir", "run.threads",
                                             "run.write_checkpoints"};
  return keys;
}

void add_schedule_defaults(std::map<std::string, std::string>& d, const std::string& section,
                           const std::string& max_updates, const std::string& peak_lr,
                           const std::string& eval_interval, const std::string& inverse_sqrt) {
  d[section + ".max_updates"] = max_updates;
  d[section + ".batch_size"] = "32";
  d[section + ".patience"] = "0";
  d[section + ".eval_interval"] = eval_interval;
  d[section + ".peak_lr"] = peak_lr;
  d[section + ".warmup_steps"] = "400";
  d[section + ".inverse_sqrt"] = inverse_sqrt;
  d[section + ".clip_norm"] = "5.0";
}

class Resolver {
 public:
  Resolver(const std::map<std::string, std::string>& values, const std::string& origin)
      : values_(values), origin_(origin) {}

  const std::string& raw(const std::string& key) const { return values_.at(key); }

  std::string text(const std::string& key) const { return raw(key); }

  std::size_t count(const std::string& key) const {
    const std::string& v = raw(key);
    try {
      std::size_t used = 0;
      const long long n = std::stoll(v, &used);
      if (used == v.size() && n >= 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    fail(key, "expected a non-negative integer, got '" + v + "'");
  }

  double real(const std::string& key) const {
    const std::string& v = raw(key);
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    fail(key, "expected a number, got '" + v + "'");
  }

  bool flag(const std::string& key) const {
    const std::string& v = raw(key);
    if (v == "true" || v == "on" || v == "1") return true;
    if (v == "false" || v == "off" || v == "0") return false;
    fail(key, "expected true/false, got '" + v + "'");
  }

  template <typename E>
  E choice(const std::string& key, const std::vector<std::pair<std::string, E>>& options) const {
    const std::string& v = raw(key);
    for (const auto& [name, value] : options) {
      if (name == v) return value;
    }
    std::string allowed;
    for (const auto& o : options) allowed += (allowed.empty() ? "" : "|") + o.first;
    fail(key, "expected one of " + allowed + ", got '" + v + "'");
  }

  TrainSchedule schedule(const std::string& section) const {
    TrainSchedule s;
    s.max_updates = count(section + ".max_updates");
    s.batch_size = count(section + ".batch_size");
    s.patience = count(section + ".patience");
    s.eval_interval = count(section + ".eval_interval");
    s.lr.peak_lr = real(section + ".peak_lr");
    s.lr.warmup_steps = count(section + ".warmup_steps");
    s.lr.inverse_sqrt = flag(section + ".inverse_sqrt");
    s.clip_norm = real(section + ".clip_norm");
    if (s.batch_size == 0) fail(section + ".batch_size", "must be positive");
    if (s.eval_interval == 0) fail(section + ".eval_interval", "must be positive");
    if (!(s.lr.peak_lr > 0.0)) fail(section + ".peak_lr", "must be positive");
    return s;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(origin_ + ": " + key + ": " + why);
  }

 private:
  const std::map<std::string, std::string>& values_;
  std::string origin_;
};

RunConfig resolve(const std::map<std::string, std::string>& values, const std::string& origin) {
  Resolver r(values, origin);
  RunConfig cfg;
  cfg.values = values;
  cfg.run_name = r.text("run_name");
  if (cfg.run_name.empty()) throw ConfigError(origin + ": run_name is required");
  if (cfg.run_name.find_first_of("/\\") != std::string::npos) {
    r.fail("run_name", "must not contain path separators");
  }

  cfg.mode = r.choice<RunMode>("run.mode", {{"baseline", RunMode::kBaseline},
                                            {"selftrain", RunMode::kSelfTrain}});
  cfg.output_dir = r.text("run.output_dir");
  cfg.write_checkpoints = r.flag("run.write_checkpoints");

  ExperimentPlan& plan = cfg.plan;
  plan.master_seed = r.count("run.master_seed");
  plan.threads = std::max<std::size_t>(1, r.count("run.threads"));

  TaskSpec& task = cfg.task;
  task.kind = r.choice<TaskKind>("task.kind", {{"toy", TaskKind::kToy}, {"corpus", TaskKind::kCorpus}});
  task.toy_seed = r.text("task.toy_seed") == "auto" ? plan.master_seed : r.count("task.toy_seed");
  task.unlabeled_size = r.count("task.unlabeled_size");
  task.train = r.text("task.train");
  task.valid = r.text("task.valid");
  task.test = r.text("task.test");
  task.unlabeled = r.text("task.unlabeled");
  if (task.kind == TaskKind::kCorpus && (task.train.empty() || task.valid.empty())) {
    r.fail("task.train", "corpus tasks need task.train and task.valid");
  }

  ModelConfig& m = plan.model;
  m.embed_dim = r.count("model.embed_dim");
  m.hidden_dim = r.count("model.hidden_dim");
  m.dropout_rate = r.real("model.dropout_rate");
  m.label_smoothing = r.real("model.label_smoothing");
  m.max_decode_len = r.count("model.max_decode_len");

  plan.iterations = r.count("selftrain.iterations");
  plan.init_mode = r.choice<InitMode>("selftrain.init_mode", {{"scratch", InitMode::kScratch},
                                                              {"baseline", InitMode::kBaseline}});
  plan.pt_dropout = r.flag("selftrain.pt_dropout");
  plan.selection.kind = r.choice<Selection::Kind>(
      "selftrain.selection", {{"all", Selection::Kind::kAll},
                              {"top_fraction", Selection::Kind::kTopFraction},
                              {"schedule", Selection::Kind::kSchedule}});
  plan.selection.fraction = r.real("selftrain.top_fraction");
  {
    std::istringstream in(r.text("selftrain.selection_counts"));
    std::string tok;
    while (in >> tok) {
      try {
        plan.selection.counts.push_back(static_cast<std::size_t>(std::stoull(tok)));
      } catch (const std::exception&) {
        r.fail("selftrain.selection_counts", "expected space-separated counts");
      }
    }
  }
  plan.regime = r.choice<Regime>("selftrain.regime", {{"separate", Regime::kSeparate},
                                                      {"joint", Regime::kJoint}});
  plan.upsample_ratio = r.real("selftrain.upsample_ratio");
  plan.pt_target = r.choice<PtTarget>("selftrain.pt_target", {{"fake", PtTarget::kFake},
                                                              {"real", PtTarget::kReal}});
  plan.pt_data = r.choice<PtData>("selftrain.pt_data", {{"unlabeled", PtData::kUnlabeled},
                                                        {"parallel", PtData::kParallel}});
  plan.normalize_confidence = r.flag("selftrain.normalize_confidence");

  DecodeSpec& d = plan.decode;
  d.mode = r.choice<DecodeMode>("decode.mode", {{"beam", DecodeMode::kBeam},
                                                {"sample", DecodeMode::kSample},
                                                {"greedy", DecodeMode::kGreedy}});
  d.beam_size = r.count("decode.beam_size");
  d.max_len = r.count("decode.max_len");
  d.length_normalize = r.flag("decode.length_normalize");
  d.temperature = r.real("decode.temperature");
  d.seed = r.count("decode.seed");

  NoiseSpec& n = plan.noise;
  n.kind = r.choice<NoiseKind>("noise.kind", {{"none", NoiseKind::kNone},
                                              {"synthetic", NoiseKind::kSynthetic},
                                              {"operand_swap", NoiseKind::kOperandSwap}});
  n.drop_prob = r.real("noise.drop_prob");
  n.blank_prob = r.real("noise.blank_prob");
  n.shuffle_window = r.real("noise.shuffle_window");
  n.swap_prob = r.real("noise.swap_prob");
  n.seed_stream = r.count("noise.seed");

  plan.baseline_schedule = r.schedule("baseline");
  plan.pt_schedule = r.schedule("pt");
  plan.ft_schedule = r.schedule("ft");

  // vocab_size is only known once the data is loaded; validate the rest.
  ExperimentPlan check = plan;
  check.model.vocab_size = 16;
  try {
    check.validate();
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

}  // namespace

const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> defaults = [] {
    std::map<std::string, std::string> d;
    d["run_name"] = "";
    d["run.mode"] = "selftrain";
    d["run.master_seed"] = "1";
    d["run.output_dir"] = "runs";
    d["run.threads"] = "1";
    d["run.write_checkpoints"] = "true";
    d["task.kind"] = "toy";
    d["task.toy_seed"] = "auto";
    d["task.unlabeled_size"] = "4000";
    d["task.train"] = "";
    d["task.valid"] = "";
    d["task.test"] = "";
    d["task.unlabeled"] = "";
    d["model.embed_dim"] = "32";
    d["model.hidden_dim"] = "32";
    d["model.dropout_rate"] = "0.3";
    d["model.label_smoothing"] = "0.1";
    d["model.max_decode_len"] = "8";
    d["selftrain.iterations"] = "1";
    d["selftrain.init_mode"] = "baseline";
    d["selftrain.pt_dropout"] = "true";
    d["selftrain.selection"] = "all";
    d["selftrain.top_fraction"] = "1.0";
    d["selftrain.selection_counts"] = "";
    d["selftrain.regime"] = "separate";
    d["selftrain.upsample_ratio"] = "1";
    d["selftrain.pt_target"] = "fake";
    d["selftrain.pt_data"] = "unlabeled";
    d["selftrain.normalize_confidence"] = "true";
    d["decode.mode"] = "beam";
    d["decode.beam_size"] = "5";
    d["decode.max_len"] = "8";
    d["decode.length_normalize"] = "true";
    d["decode.temperature"] = "1.0";
    d["decode.seed"] = "0";
    d["noise.kind"] = "none";
    d["noise.drop_prob"] = "0.1";
    d["noise.blank_prob"] = "0.2";
    d["noise.shuffle_window"] = "3";
    d["noise.swap_prob"] = "0.5";
    d["noise.seed"] = "0";
    add_schedule_defaults(d, "baseline", "4000", "3e-3", "100", "true");
    add_schedule_defaults(d, "pt", "10000", "2e-3", "10000", "false");
    add_schedule_defaults(d, "ft", "3000", "3e-4", "100", "false");
    return d;
  }();
  return defaults;
}

ConfigDocument parse_config_text(const std::string& text, const std::string& origin) {
  ConfigDocument doc;
  doc.origin = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t number = 0;
  std::set<std::string> seen;
  auto fail = [&](const std::string& why) {
    throw ConfigError(origin + ":" + std::to_string(number) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) fail("missing key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!config_defaults().count(full)) fail("unknown key '" + full + "'");
    if (!seen.insert(full).second) fail("duplicate key '" + full + "'");
    doc.entries.push_back({full, trim(line.substr(eq + 1)), number});
  }
  return doc;
}

ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::vector<RunConfig> expand_config(const ConfigDocument& doc) {
  std::map<std::string, std::string> base = config_defaults();
  std::vector<std::pair<std::string, std::vector<std::string>>> sweeps;
  for (const auto& e : doc.entries) {
    if (!config_defaults().count(e.key)) {
      throw ConfigError(doc.origin + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
    auto values = split_list(e.value);
    if (values.size() > 1) {
      for (const auto& v : values) {
        if (v.empty()) {
          throw ConfigError(doc.origin + ":" + std::to_string(e.line) + ": empty list item");
        }
      }
      sweeps.emplace_back(e.key, std::move(values));
    } else {
      base[e.key] = e.value;
    }
  }

  std::vector<RunConfig> runs;
  std::vector<std::size_t> cursor(sweeps.size(), 0);
  while (true) {
    auto values = base;
    std::string suffix;
    for (std::size_t i = 0; i < sweeps.size(); ++i) {
      const auto& [key, options] = sweeps[i];
      values[key] = options[cursor[i]];
      if (key != "run.master_seed") suffix += "@" + key + "=" + options[cursor[i]];
    }
    values["run_name"] += suffix;
    runs.push_back(resolve(values, doc.origin));

    // Odometer over the sweep lists; the last key varies fastest.
    std::size_t k = 0;
    for (; k < sweeps.size(); ++k) {
      const std::size_t i = sweeps.size() - 1 - k;
      if (++cursor[i] < sweeps[i].second.size()) break;
      cursor[i] = 0;
    }
    if (k == sweeps.size()) return runs;
  }
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [key, value] : values) {
    if (unhashed_keys().count(key)) continue;
    out += key + "=" + value + "\n";
  }
  return out;
}

std::string RunConfig::config_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::filesystem::path RunConfig::run_dir() const {
  return output_dir / run_name / ("seed" + std::to_string(plan.master_seed));
}

}  // namespace noisyst
