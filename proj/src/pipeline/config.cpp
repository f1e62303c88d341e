#include "scenmine/pipeline/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "scenmine/metrics/scores.hpp"

namespace scenmine::pipeline {

namespace pt = boost::property_tree;

PipelineConfig::PipelineConfig() : alphas(metrics::default_alphas()) {}

PipelineConfig PipelineConfig::resolved(const std::filesystem::path& base) const {
  PipelineConfig out = *this;
  auto anchor = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  anchor(out.paths.logs);
  anchor(out.paths.embeddings);
  anchor(out.paths.kb);
  anchor(out.paths.checkpoint);
  anchor(out.paths.lexicons);
  anchor(out.paths.audit_log);
  anchor(out.synth.script);
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  const auto r = std::from_chars(text.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + text + "'");
}

std::string fmt_alphas(const std::vector<double>& a) {
  std::string out;
  for (std::size_t i = 0; i < a.size(); ++i) out += (i ? ", " : "") + fmt(a[i]);
  return out;
}

std::vector<double> parse_alphas(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("config key '" + key + "': empty list item");
    out.push_back(parse_number<double>(key, item.substr(b, e - b + 1)));
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

// Every configurable value, in file order. Bound to `c` by reference.
std::vector<Field> fields(PipelineConfig& c) {
  std::vector<Field> f;
  auto path = [&](const char* key, std::filesystem::path& p) {
    f.push_back({"paths", key, [&p] { return p.string(); },
                 [&p](const std::string& v) { p = v; }});
  };
  auto str = [&](const char* sec, const char* key, std::string& s) {
    f.push_back({sec, key, [&s] { return s; }, [&s](const std::string& v) { s = v; }});
  };
  auto num = [&](const char* sec, const char* key, double& d) {
    const std::string full = std::string(sec) + "." + key;
    f.push_back({sec, key, [&d] { return fmt(d); },
                 [&d, full](const std::string& v) { d = parse_number<double>(full, v); }});
  };
  auto integer = [&](const char* sec, const char* key, auto& i) {
    using T = std::remove_reference_t<decltype(i)>;
    const std::string full = std::string(sec) + "." + key;
    f.push_back({sec, key, [&i] { return std::to_string(i); },
                 [&i, full](const std::string& v) { i = parse_number<T>(full, v); }});
  };
  auto flag = [&](const char* sec, const char* key, bool& b) {
    const std::string full = std::string(sec) + "." + key;
    f.push_back({sec, key, [&b] { return std::string(b ? "true" : "false"); },
                 [&b, full](const std::string& v) { b = parse_bool(full, v); }});
  };

  path("logs", c.paths.logs);
  path("embeddings", c.paths.embeddings);
  path("kb", c.paths.kb);
  path("checkpoint", c.paths.checkpoint);
  path("lexicons", c.paths.lexicons);
  path("audit_log", c.paths.audit_log);

  flag("coarse", "enabled", c.coarse.enabled);
  num("coarse", "window_s", c.coarse.params.window_s);
  num("coarse", "stride_s", c.coarse.params.stride_s);
  integer("coarse", "frames_per_view", c.coarse.params.frames_per_view);
  integer("coarse", "top_k", c.coarse.params.top_k);
  num("coarse", "merge_slack_s", c.coarse.params.merge_slack_s);
  f.push_back({"coarse", "query_embedding",
               [&c] {
                 return std::string(c.coarse.query_embedding == coarse::QueryEmbeddingMode::Terms
                                        ? "terms"
                                        : "raw");
               },
               [&c](const std::string& v) {
                 if (v == "terms") {
                   c.coarse.query_embedding = coarse::QueryEmbeddingMode::Terms;
                 } else if (v == "raw") {
                   c.coarse.query_embedding = coarse::QueryEmbeddingMode::Raw;
                 } else {
                   throw ConfigError("config key 'coarse.query_embedding': expected terms or raw");
                 }
               }});

  integer("synth", "max_attempts", c.synth.max_attempts);
  integer("synth", "exemplars", c.synth.exemplars);
  num("synth", "temperature", c.synth.temperature);
  integer("synth", "max_tokens", c.synth.max_tokens);
  str("synth", "client", c.synth.client);
  str("synth", "endpoint", c.synth.endpoint);
  str("synth", "model", c.synth.model);
  str("synth", "command", c.synth.command);
  f.push_back({"synth", "script", [&c] { return c.synth.script.string(); },
               [&c](const std::string& v) { c.synth.script = v; }});
  num("synth", "timeout_s", c.synth.timeout_s);

  auto& m = c.matcher.model;
  flag("matcher", "enabled", c.matcher.enabled);
  integer("matcher", "patch_len", m.patch.patch_len);
  integer("matcher", "patch_stride", m.patch.patch_stride);
  integer("matcher", "token_dim", m.patch.token_dim);
  integer("matcher", "layers", m.patch.layers);
  integer("matcher", "heads", m.patch.heads);
  integer("matcher", "d_model", m.patch.d_model);
  integer("matcher", "text_dim", m.text_dim);
  integer("matcher", "d_k", m.d_k);
  integer("matcher", "embed_dim", m.embed_dim);
  integer("matcher", "ff_dim", m.ff_dim);
  f.push_back({"matcher", "evidence", [&m] { return matcher::to_string(m.evidence); },
               [&m](const std::string& v) {
                 try {
                   m.evidence = matcher::evidence_pooling_from_string(v);
                 } catch (const Error& e) {
                   throw ConfigError(std::string("config key 'matcher.evidence': ") + e.what());
                 }
               }});
  num("matcher", "evidence_temperature", m.evidence_temperature);
  num("matcher", "gamma", m.gamma);
  num("matcher", "tau", m.tau);
  num("matcher", "lambda_mil", m.lambda_mil);
  num("matcher", "lambda_global", m.lambda_global);
  num("matcher", "alpha", m.alpha);
  f.push_back({"matcher", "min_score",
               [&c] { return c.matcher.min_score ? fmt(*c.matcher.min_score) : std::string(); },
               [&c](const std::string& v) {
                 if (v.empty()) {
                   c.matcher.min_score.reset();
                 } else {
                   c.matcher.min_score = parse_number<double>("matcher.min_score", v);
                 }
               }});

  auto& t = c.matcher.train;
  integer("train", "epochs", t.epochs);
  integer("train", "batch_size", t.batch_size);
  num("train", "learning_rate", t.learning_rate);
  num("train", "weight_decay", t.weight_decay);
  integer("train", "warmup_epochs", t.warmup_epochs);
  integer("train", "max_steps", t.max_steps);
  num("train", "adam_beta1", t.adam_beta1);
  num("train", "adam_beta2", t.adam_beta2);
  num("train", "adam_eps", t.adam_eps);
  integer("train", "seed", t.seed);

  f.push_back({"metrics", "alphas", [&c] { return fmt_alphas(c.alphas); },
               [&c](const std::string& v) { c.alphas = parse_alphas("metrics.alphas", v); }});
  integer("run", "threads", c.threads);
  return f;
}

}  // namespace

void validate(const PipelineConfig& c) {
  auto need = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(std::string("config key '") + key + "': " + what);
  };
  const auto& p = c.coarse.params;
  need(p.window_s > 0, "coarse.window_s", "must be positive");
  need(p.stride_s > 0, "coarse.stride_s", "must be positive");
  need(p.frames_per_view >= 1, "coarse.frames_per_view", "must be at least 1");
  need(p.top_k >= 1, "coarse.top_k", "must be at least 1");
  need(p.merge_slack_s >= 0, "coarse.merge_slack_s", "must be non-negative");
  need(c.synth.max_attempts >= 1, "synth.max_attempts", "must be at least 1");
  need(c.synth.exemplars >= 1, "synth.exemplars", "must be at least 1");
  need(c.synth.temperature >= 0, "synth.temperature", "must be non-negative");
  need(c.synth.max_tokens >= 1, "synth.max_tokens", "must be at least 1");
  need(c.synth.timeout_s > 0, "synth.timeout_s", "must be positive");
  static const std::set<std::string> kClients{"none", "http", "process", "scripted"};
  need(kClients.count(c.synth.client) > 0, "synth.client",
       "must be one of none, http, process, scripted");
  need(c.synth.client != "http" || !c.synth.endpoint.empty(), "synth.endpoint",
       "required for the http client");
  need(c.synth.client != "process" || !c.synth.command.empty(), "synth.command",
       "required for the process client");
  need(c.synth.client != "scripted" || !c.synth.script.empty(), "synth.script",
       "required for the scripted client");
  need(!c.alphas.empty(), "metrics.alphas", "must list at least one threshold");
  for (double a : c.alphas) need(a > 0 && a <= 1, "metrics.alphas", "thresholds must lie in (0, 1]");
  need(c.threads >= 1, "run.threads", "must be at least 1");
  try {
    matcher::validate(c.matcher.model);
    matcher::validate(c.matcher.train);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("matcher/train section: ") + e.what());
  }
}

PipelineConfig config_from_text(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  PipelineConfig cfg;
  auto table = fields(cfg);
  for (const auto& [section, body] : tree) {
    const bool known = std::any_of(table.begin(), table.end(),
                                   [&](const Field& f) { return f.section == section; });
    if (!body.data().empty() || !known) {
      throw ConfigError("unknown config section or key '" + section + "'");
    }
    for (const auto& [key, value] : body) {
      auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) {
        return f.section == section && f.key == key;
      });
      if (it == table.end()) throw ConfigError("unknown config key '" + section + "." + key + "'");
      it->set(value.get_value<std::string>());
    }
  }
  validate(cfg);
  return cfg;
}

std::string config_to_text(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  std::ostringstream out;
  std::string current;
  for (const auto& f : fields(copy)) {
    if (f.section != current) {
      out << (current.empty() ? "" : "\n") << "[" << f.section << "]\n";
      current = f.section;
    }
    const std::string value = f.get();
    out << f.key << (value.empty() ? " =" : " = ") << value << "\n";
  }
  return out.str();
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

void save_config(const std::filesystem::path& path, const PipelineConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << config_to_text(cfg);
}

}  // namespace scenmine::pipeline
