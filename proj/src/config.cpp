#include "mltm/config.hpp"

#include <algorithm>
#include <fstream>

namespace mltm {

const std::vector<ConfigEntry>& RunConfig::registry() {
  static const std::vector<ConfigEntry> entries = {
      {"seed", "12345", "base seed for all derived RNG streams"},
      {"threads", "0", "worker threads; 0 = MLTM_THREADS or 1"},
      {"variant", "dependency", "model variant: flat | prior | dependency"},
      {"format", "tsv", "corpus file format tag"},

      {"corpus", "", "input corpus path"},
      {"train", "", "training corpus path (eval)"},
      {"test", "", "test corpus path"},
      {"model", "", "model file path"},
      {"scores", "", "scores file path (eval)"},
      {"out", "", "output path"},
      {"stopwords", "", "newline-separated stopword file (ingest)"},
      {"min_count", "20", "drop words seen fewer times than this (ingest)"},

      {"eta", "auto", "total observed-label prior weight; train 50, infer 150"},
      {"alpha_sum", "auto", "flat label smoothing total; train 0 (forced), infer 30"},
      {"beta_w", "0.01", "word smoothing inside each label"},
      {"beta_c", "auto", "label smoothing inside each topic; default sizes total "
                         "pseudocounts to a tenth of the label tokens"},
      {"gamma_sum", "auto", "topic smoothing total; train 0.1*T, infer 150"},
      {"T", "auto", "topic count; default 200 when C > 500, else C"},

      {"chains", "8", "label-word training chains"},
      {"burn_in", "100", "label-word training burn-in sweeps"},
      {"samples", "1", "label-word snapshots per chain"},
      {"lag", "5", "sweeps between extra snapshots"},
      {"topic_chains", "10", "topic-label training chains (one stored set each)"},
      {"topic_burn_in", "500", "topic-label training burn-in sweeps"},
      {"topic_samples", "1", "topic-label snapshots per chain"},
      {"topic_lag", "5", "sweeps between extra topic snapshots"},

      {"infer_mode", "fast", "test-time sampler: fast | exact"},
      {"infer_chains", "60", "test-time chains per document"},
      {"infer_burn_in", "50", "test-time burn-in cycles"},
      {"infer_samples", "15", "samples per test-time chain"},
      {"infer_lag", "5", "cycles between test-time samples"},
      {"exact_m", "100", "label tokens per document in exact mode"},
      {"top_k", "0", "labels kept per scores line; 0 = all"},

      {"policy", "restrict", "evaluated-label policy: restrict | keep-all"},
      {"pivot", "document", "evaluation pivot: document | label | both"},
      {"cutoffs", "proportional,calibrated,bep", "cutoff methods to report"},
      {"avg_prec_exclusive", "false", "exclude the item itself from its precision term"},

      {"gen_docs", "100", "synthetic documents"},
      {"gen_labels", "10", "synthetic label count"},
      {"gen_vocab", "50", "synthetic vocabulary size"},
      {"gen_topics", "1", "synthetic topic count"},
      {"gen_words_per_doc", "50", "words per synthetic document"},
      {"gen_words_dist", "fixed", "word count draw: fixed | poisson"},
      {"gen_labels_per_doc", "3", "label tokens per synthetic document"},
      {"gen_labels_dist", "fixed", "label token draw: fixed | poisson"},
      {"gen_beta_w", "0.1", "concentration of synthetic word distributions"},
      {"gen_beta_c", "0.1", "concentration of synthetic topic-label distributions"},
      {"gen_gamma", "1.0", "concentration of synthetic topic weights"},
      {"gen_eta", "50", "synthetic document prior weight"},
      {"gen_alpha", "0", "synthetic flat label smoothing"},
      {"gen_label_power", "0", "rank-power skew of the synthetic label base measure"},
  };
  return entries;
}

namespace {

const ConfigEntry* find_entry(const std::string& key) {
  for (const auto& e : RunConfig::registry()) {
    if (key == e.key) return &e;
  }
  return nullptr;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!find_entry(key)) throw ConfigError("unknown config key: " + key);
  values_[key] = value;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // strip comments and surrounding blanks
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& err) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + err.what());
    }
  }
}

void RunConfig::apply_override(const std::string& key_eq_value) {
  auto eq = key_eq_value.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got: " + key_eq_value);
  set(key_eq_value.substr(0, eq), key_eq_value.substr(eq + 1));
}

std::string RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const ConfigEntry* entry = find_entry(key);
  if (!entry) throw ConfigError("unknown config key: " + key);
  return entry->default_value;
}

std::int64_t RunConfig::get_int(const std::string& key) const {
  const auto v = get(key);
  try {
    std::size_t used = 0;
    auto out = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto v = get(key);
  try {
    std::size_t used = 0;
    auto out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  const auto v = get(key);
  try {
    std::size_t used = 0;
    auto out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo(
    const std::vector<std::string>& keys) const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(keys.size());
  for (const auto& key : keys) out.emplace_back(key, get(key));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mltm
