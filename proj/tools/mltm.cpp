#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mltm/config.hpp"
#include "mltm/corpus.hpp"
#include "mltm/eval.hpp"
#include "mltm/infer.hpp"
#include "mltm/io.hpp"
#include "mltm/model.hpp"
#include "mltm/train.hpp"

namespace {

using namespace mltm;

struct CommandArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> flags;  // dedicated flags, applied last
};

RunConfig resolve_config(const CommandArgs& args) {
  RunConfig config;
  if (!args.config_path.empty()) config.load_file(args.config_path);
  for (const auto& kv : args.sets) config.apply_override(kv);
  for (const auto& [key, value] : args.flags) config.set(key, value);
  return config;
}

// registers a dedicated flag that funnels into a config key
void add_key_option(CLI::App* cmd, CommandArgs& args, const std::string& flag,
                    const std::string& key, const std::string& doc) {
  cmd->add_option_function<std::string>(
      flag, [&args, key](const std::string& v) { args.flags.emplace_back(key, v); }, doc);
}

void add_common(CLI::App* cmd, CommandArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--set", args.sets, "config override key=value (repeatable)");
  add_key_option(cmd, args, "--seed", "seed", "base RNG seed");
  add_key_option(cmd, args, "--threads", "threads", "worker threads");
}

int resolve_threads(const RunConfig& config) {
  auto threads = config.get_int("threads");
  if (threads <= 0) {
    const char* env = std::getenv("MLTM_THREADS");
    threads = env ? std::atoi(env) : 1;
  }
  return std::max<int>(1, static_cast<int>(threads));
}

Corpus parse_corpus_file(const std::string& path, const RunConfig& config,
                         std::int64_t* dropped = nullptr) {
  if (path.empty()) throw ConfigError("missing corpus path");
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  return parse_corpus(in, corpus_format_from_string(config.get("format")), dropped);
}

std::ofstream open_out(const std::string& path) {
  if (path.empty()) throw ConfigError("missing output path (--out)");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

ArtifactHeader make_header(const std::string& command, const RunConfig& config,
                           const std::vector<std::string>& keys) {
  ArtifactHeader header;
  header.command = command;
  header.seed = config.get_u64("seed");
  header.config = config.echo(keys);
  return header;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- subcommand bodies -----------------------------------------------------

int run_stats(const RunConfig& config) {
  Corpus corpus = parse_corpus_file(config.get("corpus"), config);
  DatasetStats stats = corpus_stats(corpus);
  const auto header = make_header("stats", config, {"corpus", "format"});
  if (config.get("out").empty()) {
    write_header(std::cout, header);
    write_stats(stats, std::cout);
  } else {
    auto out = open_out(config.get("out"));
    write_header(out, header);
    write_stats(stats, out);
  }
  return 0;
}

int run_ingest(const RunConfig& config) {
  std::int64_t dropped_empty = 0;
  Corpus corpus = parse_corpus_file(config.get("corpus"), config, &dropped_empty);

  std::set<std::string> stopwords;
  if (!config.get("stopwords").empty()) {
    std::ifstream in(config.get("stopwords"));
    if (!in) throw DataError("cannot read " + config.get("stopwords"));
    std::string word;
    while (in >> word) stopwords.insert(word);
  }
  const auto min_count = static_cast<int>(config.get_int("min_count"));
  Corpus pruned = prune_vocabulary(corpus, min_count, stopwords, &std::cerr);

  const auto header =
      make_header("ingest", config, {"corpus", "format", "min_count", "stopwords"});
  const std::string out_path = config.get("out");
  {
    auto out = open_out(out_path);
    write_header(out, header);
    write_corpus(pruned, out);
  }
  {
    auto out = open_out(out_path + ".vocab.tsv");
    write_dictionary(pruned.vocab, out);
  }
  {
    auto out = open_out(out_path + ".labels.tsv");
    write_dictionary(pruned.label_dict, out);
  }
  std::cerr << "ingest: " << corpus.D() << " -> " << pruned.D() << " documents, vocabulary "
            << corpus.W() << " -> " << pruned.W() << ", " << dropped_empty
            << " empty lines dropped\n";
  return 0;
}

// resolves "auto" hyperparameters for training and records them back into the
// config copy so headers echo concrete values
Hyperparams resolve_train_hyper(RunConfig& config, const Corpus& corpus, Variant variant) {
  int T = 1;
  if (variant != Variant::dependency) {
    if (config.get("T") != "auto" && config.get_int("T") != 1) {
      std::cerr << "warning: variant " << variant_name(variant) << " fixes T = 1\n";
    }
  } else if (config.get("T") == "auto") {
    T = corpus.C() > 500 ? 200 : std::max<std::int32_t>(1, corpus.C());
  } else {
    T = static_cast<int>(config.get_int("T"));
  }
  Hyperparams h = Hyperparams::training_defaults(T, corpus.C(), corpus.total_label_tokens());
  if (config.get("eta") != "auto") h.eta = config.get_double("eta");
  if (config.get("alpha_sum") != "auto" && config.get_double("alpha_sum") != 0.0) {
    std::cerr << "warning: training forces alpha_sum = 0 (got "
              << config.get("alpha_sum") << ")\n";
  }
  h.alpha_sum = 0.0;
  h.beta_w = config.get_double("beta_w");
  if (config.get("beta_c") != "auto") h.beta_c = config.get_double("beta_c");
  if (config.get("gamma_sum") != "auto") h.gamma_sum = config.get_double("gamma_sum");
  h.validate();
  config.set("T", std::to_string(h.T));
  config.set("eta", format_double(h.eta));
  config.set("alpha_sum", "0");
  config.set("beta_c", format_double(h.beta_c));
  config.set("gamma_sum", format_double(h.gamma_sum));
  return h;
}

int run_train(const RunConfig& config_in) {
  RunConfig config = config_in;
  const auto started = std::chrono::steady_clock::now();
  Corpus corpus = parse_corpus_file(config.get("corpus"), config);
  if (corpus.D() == 0) throw DataError("training corpus is empty");
  for (const auto& doc : corpus.docs) {
    if (doc.labels.empty())
      throw DataError("training document '" + doc.id + "' has no labels");
  }

  const Variant variant = variant_from_string(config.get("variant"));
  Hyperparams hyper = resolve_train_hyper(config, corpus, variant);

  write_stats(corpus_stats(corpus), std::cerr);

  TrainOptions options;
  options.seed = config.get_u64("seed");
  options.threads = resolve_threads(config);
  options.progress = &std::cerr;
  options.schedule.chains = static_cast<int>(config.get_int("chains"));
  options.schedule.burn_in = static_cast<int>(config.get_int("burn_in"));
  options.schedule.samples_per_chain = static_cast<int>(config.get_int("samples"));
  options.schedule.lag = static_cast<int>(config.get_int("lag"));

  TrainedModel model;
  model.variant = variant;
  model.hyper = hyper;
  model.vocab = corpus.vocab;
  model.label_dict = corpus.label_dict;
  model.phi = train_label_word(corpus, hyper, options);

  if (variant != Variant::flat) {
    TrainOptions topic_options = options;
    topic_options.schedule.chains = static_cast<int>(config.get_int("topic_chains"));
    topic_options.schedule.burn_in = static_cast<int>(config.get_int("topic_burn_in"));
    topic_options.schedule.samples_per_chain = static_cast<int>(config.get_int("topic_samples"));
    topic_options.schedule.lag = static_cast<int>(config.get_int("topic_lag"));
    if (variant == Variant::prior) {
      // a single label distribution; every chain would produce the same one
      topic_options.schedule.chains = 1;
    }
    model.phi_prime_sets = train_topic_label(corpus, hyper, topic_options);
  }
  model.validate();

  const auto header = make_header(
      "train", config,
      {"corpus", "variant", "eta", "alpha_sum", "beta_w", "beta_c", "gamma_sum", "T", "chains",
       "burn_in", "samples", "lag", "topic_chains", "topic_burn_in", "topic_samples",
       "topic_lag"});
  save_model_file(model, config.get("out"), header);
  std::cerr << "train: wrote " << config.get("out") << " in " << seconds_since(started)
            << " s\n";
  return 0;
}

Hyperparams resolve_test_hyper(RunConfig& config, const TrainedModel& model) {
  Hyperparams h = Hyperparams::test_defaults(std::max<std::int32_t>(1, model.T()));
  h.beta_w = model.hyper.beta_w;
  h.beta_c = model.hyper.beta_c;
  if (config.get("eta") != "auto") h.eta = config.get_double("eta");
  if (config.get("alpha_sum") != "auto") h.alpha_sum = config.get_double("alpha_sum");
  if (config.get("gamma_sum") != "auto") h.gamma_sum = config.get_double("gamma_sum");
  h.validate();
  config.set("T", std::to_string(h.T));
  config.set("eta", format_double(h.eta));
  config.set("alpha_sum", format_double(h.alpha_sum));
  config.set("gamma_sum", format_double(h.gamma_sum));
  return h;
}

int run_infer(const RunConfig& config_in) {
  RunConfig config = config_in;
  const auto started = std::chrono::steady_clock::now();
  TrainedModel model = load_model_file(config.get("model"));
  Corpus test = parse_corpus_file(config.get("test"), config);
  Hyperparams hyper = resolve_test_hyper(config, model);

  InferOptions options;
  options.mode = infer_mode_from_string(config.get("infer_mode"));
  options.exact_m = static_cast<int>(config.get_int("exact_m"));
  options.seed = config.get_u64("seed");
  options.threads = resolve_threads(config);
  options.schedule.chains = static_cast<int>(config.get_int("infer_chains"));
  options.schedule.burn_in = static_cast<int>(config.get_int("infer_burn_in"));
  options.schedule.samples_per_chain = static_cast<int>(config.get_int("infer_samples"));
  options.schedule.lag = static_cast<int>(config.get_int("infer_lag"));

  // map test documents into the model vocabulary; unknown words are discarded
  // and label ids from the test dictionary are dropped (inference never reads
  // them)
  Corpus mapped;
  mapped.vocab = model.vocab;
  mapped.label_dict = model.label_dict;
  std::int64_t dropped_tokens = 0;
  for (const auto& doc : test.docs) {
    Document remapped = remap_document(doc, test.vocab, model.vocab, &dropped_tokens);
    remapped.labels.clear();
    mapped.docs.push_back(std::move(remapped));
  }

  std::vector<std::int64_t> skipped;
  std::vector<DocumentPosterior> posteriors =
      infer_corpus(mapped, model, hyper, options, &skipped);

  const auto header = make_header(
      "infer", config,
      {"model", "test", "infer_mode", "infer_chains", "infer_burn_in", "infer_samples",
       "infer_lag", "exact_m", "eta", "alpha_sum", "gamma_sum", "T", "top_k"});
  std::vector<std::string> doc_ids;
  doc_ids.reserve(mapped.docs.size());
  for (const auto& doc : mapped.docs) doc_ids.push_back(doc.id);
  {
    auto out = open_out(config.get("out"));
    write_scores(out, header, doc_ids, posteriors, model.label_dict,
                 static_cast<int>(config.get_int("top_k")));
  }
  {
    auto out = open_out(config.get("out") + ".skipped");
    write_header(out, header);
    for (auto d : skipped) out << mapped.docs[d].id << '\n';
  }
  std::cerr << "infer: scored " << (mapped.docs.size() - skipped.size()) << " documents, skipped "
            << skipped.size() << " without in-vocabulary words, dropped " << dropped_tokens
            << " unknown word tokens, " << seconds_since(started) << " s\n";
  return 0;
}

int run_eval(const RunConfig& config) {
  Corpus train = parse_corpus_file(config.get("train"), config);
  Corpus test = parse_corpus_file(config.get("test"), config);
  AlignResult aligned =
      align_test_labels(train, test, label_policy_from_string(config.get("policy")));

  if (config.get("scores").empty()) throw ConfigError("missing scores path (--scores)");
  std::ifstream scores_in(config.get("scores"));
  if (!scores_in) throw DataError("cannot read " + config.get("scores"));
  ScoresFile scores = read_scores(scores_in, aligned.test.label_dict);

  // pair scored rows with aligned test documents by id
  std::map<std::string, std::int64_t> row_of;
  for (std::size_t r = 0; r < scores.doc_ids.size(); ++r) {
    if (!row_of.emplace(scores.doc_ids[r], static_cast<std::int64_t>(r)).second)
      throw DataError("duplicate doc id in scores: " + scores.doc_ids[r]);
  }
  std::vector<std::string> doc_ids;
  std::vector<std::vector<std::int32_t>> truth;
  std::vector<std::int64_t> rows;
  std::int64_t unscored = 0;
  for (const auto& doc : aligned.test.docs) {
    auto it = row_of.find(doc.id);
    if (it == row_of.end()) {
      ++unscored;
      continue;
    }
    doc_ids.push_back(doc.id);
    truth.push_back(doc.labels);
    rows.push_back(it->second);
  }
  if (doc_ids.empty()) throw DataError("no scored documents match the test corpus");
  Eigen::MatrixXd matrix(static_cast<Eigen::Index>(rows.size()), scores.scores.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) matrix.row(i) = scores.scores.row(rows[i]);

  EvalOptions options;
  options.rank.exclusive_avg_prec = config.get_bool("avg_prec_exclusive");
  options.cutoffs.clear();
  {
    std::istringstream list(config.get("cutoffs"));
    std::string name;
    while (std::getline(list, name, ',')) {
      if (!name.empty()) options.cutoffs.push_back(cutoff_from_string(name));
    }
  }
  if (options.cutoffs.empty()) throw ConfigError("no cutoff methods selected");

  CutoffStats train_stats = make_cutoff_stats(train);
  const std::string pivot = config.get("pivot");
  std::vector<Pivot> pivots;
  if (pivot == "both") {
    pivots = {Pivot::document, Pivot::label};
  } else {
    pivots = {pivot_from_string(pivot)};
  }

  const auto header = make_header(
      "eval", config,
      {"scores", "train", "test", "policy", "pivot", "cutoffs", "avg_prec_exclusive"});
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!config.get("out").empty()) {
    file = open_out(config.get("out"));
    out = &file;
  }
  write_header(*out, header);
  *out << "# evaluated_labels " << aligned.evaluated_labels.size() << " of "
       << train.C() << '\n';
  *out << "# scored_docs " << doc_ids.size() << " unscored " << unscored
       << " dropped_empty " << aligned.dropped_docs << '\n';
  for (Pivot p : pivots) {
    options.pivot = p;
    EvalReport report = evaluate(matrix, doc_ids, truth, aligned.evaluated_labels,
                                 aligned.test.label_dict, options, &train_stats);
    write_report(report, *out);
  }
  return 0;
}

int run_synth(const RunConfig& config) {
  GenParams params;
  params.D = static_cast<int>(config.get_int("gen_docs"));
  params.C = static_cast<int>(config.get_int("gen_labels"));
  params.W = static_cast<int>(config.get_int("gen_vocab"));
  params.T = static_cast<int>(config.get_int("gen_topics"));
  const auto words_mean = config.get_double("gen_words_per_doc");
  params.words_per_doc = config.get("gen_words_dist") == "poisson"
                             ? CountSpec::poisson(words_mean)
                             : CountSpec::fixed(static_cast<int>(words_mean));
  const auto labels_mean = config.get_double("gen_labels_per_doc");
  params.labels_per_doc = config.get("gen_labels_dist") == "poisson"
                              ? CountSpec::poisson(labels_mean)
                              : CountSpec::fixed(static_cast<int>(labels_mean));
  params.beta_w = config.get_double("gen_beta_w");
  params.beta_c = config.get_double("gen_beta_c");
  params.gamma = config.get_double("gen_gamma");
  params.eta = config.get_double("gen_eta");
  params.alpha = config.get_double("gen_alpha");
  params.label_base_power = config.get_double("gen_label_power");
  params.seed = config.get_u64("seed");

  SyntheticCorpus synth = generate_corpus(params);

  const std::vector<std::string> keys = {
      "gen_docs", "gen_labels", "gen_vocab", "gen_topics", "gen_words_per_doc",
      "gen_words_dist", "gen_labels_per_doc", "gen_labels_dist", "gen_beta_w", "gen_beta_c",
      "gen_gamma", "gen_eta", "gen_alpha", "gen_label_power"};
  const auto header = make_header("synth", config, keys);
  const std::string base = config.get("out");
  if (base.empty()) throw ConfigError("missing output path (--out)");
  {
    auto out = open_out(base + ".corpus");
    write_header(out, header);
    write_corpus(synth.corpus, out);
  }
  {
    TrainedModel truth;
    truth.variant = params.T == 1 ? Variant::prior : Variant::dependency;
    truth.hyper.eta = params.eta;
    truth.hyper.alpha_sum = params.alpha * params.C;
    truth.hyper.beta_w = params.beta_w;
    truth.hyper.beta_c = params.beta_c;
    truth.hyper.gamma_sum = params.gamma * params.T;
    truth.hyper.T = params.T;
    truth.phi = synth.phi;
    truth.phi_prime_sets = {synth.phi_prime};
    truth.vocab = synth.corpus.vocab;
    truth.label_dict = synth.corpus.label_dict;
    auto out = open_out(base + ".model");
    save_model(truth, out, header);
  }
  {
    auto out = open_out(base + ".theta_prime.tsv");
    write_header(out, header);
    for (int d = 0; d < params.D; ++d) {
      out << synth.corpus.docs[d].id;
      for (int t = 0; t < params.T; ++t) {
        out << (t == 0 ? '\t' : ' ') << t << ':' << format_double(synth.theta_prime(d, t));
      }
      out << '\n';
    }
  }
  std::cerr << "synth: wrote " << base << ".corpus/.model/.theta_prime.tsv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-label topic model toolchain"};
  app.require_subcommand(1);

  std::map<std::string, CommandArgs> args;
  std::map<std::string, std::function<int(const RunConfig&)>> runners = {
      {"stats", run_stats},   {"ingest", run_ingest}, {"train", run_train},
      {"infer", run_infer},   {"eval", run_eval},     {"synth", run_synth},
  };

  auto* stats = app.add_subcommand("stats", "dataset statistics as TSV key/value pairs");
  add_common(stats, args["stats"]);
  add_key_option(stats, args["stats"], "--corpus", "corpus", "corpus file");
  add_key_option(stats, args["stats"], "--out", "out", "output path (default stdout)");

  auto* ingest = app.add_subcommand("ingest", "parse, prune and canonicalize a corpus");
  add_common(ingest, args["ingest"]);
  add_key_option(ingest, args["ingest"], "--corpus", "corpus", "corpus file");
  add_key_option(ingest, args["ingest"], "--out", "out", "output corpus path");
  add_key_option(ingest, args["ingest"], "--min-count", "min_count", "minimum word count");
  add_key_option(ingest, args["ingest"], "--stopwords", "stopwords", "stopword file");

  auto* train = app.add_subcommand("train", "collapsed Gibbs training");
  add_common(train, args["train"]);
  add_key_option(train, args["train"], "--corpus", "corpus", "training corpus");
  add_key_option(train, args["train"], "--out", "out", "model output path");
  add_key_option(train, args["train"], "--variant", "variant", "flat | prior | dependency");
  add_key_option(train, args["train"], "--topics", "T", "topic count (dependency)");

  auto* infer = app.add_subcommand("infer", "score unlabeled documents");
  add_common(infer, args["infer"]);
  add_key_option(infer, args["infer"], "--model", "model", "trained model file");
  add_key_option(infer, args["infer"], "--test", "test", "test corpus");
  add_key_option(infer, args["infer"], "--out", "out", "scores output path");
  add_key_option(infer, args["infer"], "--mode", "infer_mode", "fast | exact");
  add_key_option(infer, args["infer"], "--top-k", "top_k", "labels per line, 0 = all");

  auto* eval = app.add_subcommand("eval", "ranking and binary evaluation");
  add_common(eval, args["eval"]);
  add_key_option(eval, args["eval"], "--scores", "scores", "scores file from infer");
  add_key_option(eval, args["eval"], "--train", "train", "training corpus");
  add_key_option(eval, args["eval"], "--test", "test", "test corpus with ground truth");
  add_key_option(eval, args["eval"], "--out", "out", "report path (default stdout)");
  add_key_option(eval, args["eval"], "--pivot", "pivot", "document | label | both");
  add_key_option(eval, args["eval"], "--policy", "policy", "restrict | keep-all");

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
  add_common(synth, args["synth"]);
  add_key_option(synth, args["synth"], "--out", "out", "output base path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    RunConfig config = resolve_config(args[name]);
    return runners[name](config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
