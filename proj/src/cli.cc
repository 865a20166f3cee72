#include "headpop/cli.h"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "headpop/corpus.h"
#include "headpop/error.h"
#include "headpop/io.h"
#include "headpop/model_io.h"
#include "headpop/recurrent.h"
#include "headpop/rng.h"
#include "headpop/service.h"
#include "headpop/synthetic.h"
#include "headpop/training.h"

namespace headpop::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTestSplitStream = 6;

struct UsageError : Error {
  using Error::Error;
};

// Flag values; each is applied over the config file only when given.
struct TrainFlags {
  std::string config_path;
  std::string model_kind;
  std::size_t hidden = 0;
  std::size_t dim = 0;
  std::string embedding_mode;
  std::string glove_path;
  std::string embedding_label;
  std::size_t batch_size = 0;
  std::size_t max_epochs = 0;
  double learning_rate = 0.0;
  std::size_t plateau_patience = 0;
  double plateau_factor = 0.0;
  std::size_t early_stop_patience = 0;
  double min_delta = 0.0;
  std::uint64_t seed = 0;
  double validation_fraction = 0.0;
  double clip_norm = 0.0;
  std::size_t max_seq_len = 0;
  std::size_t min_count = 0;
  std::size_t vocab_max_size = 0;
  std::size_t cnn_filters = 0;
  std::size_t cnn_width = 0;
  double cnn_dropout = 0.0;
  double cnn_l2 = 0.0;
  double svm_lambda = 0.0;
  std::size_t svm_epochs = 0;
  bool bow_binary = false;
  std::string checkpoint_path;
};

struct Bound {
  CLI::Option* option;
  std::function<void(training::TrainConfig&)> apply;
};

std::vector<Bound> add_train_flags(CLI::App& cmd, TrainFlags& f) {
  std::vector<Bound> b;
  using training::TrainConfig;
  b.push_back({cmd.add_option("--model-kind", f.model_kind, "bow_svm | cnn | lstm | bilstm"),
               [&f](TrainConfig& c) { c.model_kind = parse_model_kind(f.model_kind); }});
  b.push_back({cmd.add_option("--hidden,--h", f.hidden, "Recurrent hidden size H"),
               [&f](TrainConfig& c) { c.hidden = f.hidden; }});
  b.push_back({cmd.add_option("--dim,--d", f.dim, "Embedding dimension d"),
               [&f](TrainConfig& c) { c.dim = f.dim; }});
  b.push_back({cmd.add_option("--embedding-mode", f.embedding_mode, "static | fine_tune"),
               [&f](TrainConfig& c) { c.embedding_mode = training::parse_embedding_mode(f.embedding_mode); }});
  b.push_back({cmd.add_option("--glove", f.glove_path, "GloVe-format text vectors"),
               [&f](TrainConfig& c) { c.glove_path = f.glove_path; }});
  b.push_back({cmd.add_option("--embedding-label", f.embedding_label, "Embedding column label in the results table"),
               [&f](TrainConfig& c) { c.embedding_label = f.embedding_label; }});
  b.push_back({cmd.add_option("--batch-size", f.batch_size), [&f](TrainConfig& c) { c.batch_size = f.batch_size; }});
  b.push_back({cmd.add_option("--epochs", f.max_epochs, "Maximum epochs"),
               [&f](TrainConfig& c) { c.max_epochs = f.max_epochs; }});
  b.push_back({cmd.add_option("--lr", f.learning_rate, "Initial Adam learning rate"),
               [&f](TrainConfig& c) { c.learning_rate = f.learning_rate; }});
  b.push_back({cmd.add_option("--plateau-patience", f.plateau_patience),
               [&f](TrainConfig& c) { c.plateau_patience = f.plateau_patience; }});
  b.push_back({cmd.add_option("--plateau-factor", f.plateau_factor),
               [&f](TrainConfig& c) { c.plateau_factor = f.plateau_factor; }});
  b.push_back({cmd.add_option("--early-stop-patience", f.early_stop_patience),
               [&f](TrainConfig& c) { c.early_stop_patience = f.early_stop_patience; }});
  b.push_back({cmd.add_option("--min-delta", f.min_delta), [&f](TrainConfig& c) { c.min_delta = f.min_delta; }});
  b.push_back({cmd.add_option("--seed", f.seed), [&f](TrainConfig& c) { c.seed = f.seed; }});
  b.push_back({cmd.add_option("--validation-fraction", f.validation_fraction),
               [&f](TrainConfig& c) { c.validation_fraction = f.validation_fraction; }});
  b.push_back({cmd.add_option("--clip-norm", f.clip_norm), [&f](TrainConfig& c) { c.clip_norm = f.clip_norm; }});
  b.push_back({cmd.add_option("--max-seq-len", f.max_seq_len),
               [&f](TrainConfig& c) { c.max_seq_len = f.max_seq_len; }});
  b.push_back({cmd.add_option("--min-count", f.min_count), [&f](TrainConfig& c) { c.min_count = f.min_count; }});
  b.push_back({cmd.add_option("--vocab-max-size", f.vocab_max_size),
               [&f](TrainConfig& c) { c.vocab_max_size = f.vocab_max_size; }});
  b.push_back({cmd.add_option("--cnn-filters", f.cnn_filters),
               [&f](TrainConfig& c) { c.cnn_filters = f.cnn_filters; }});
  b.push_back({cmd.add_option("--cnn-width", f.cnn_width), [&f](TrainConfig& c) { c.cnn_width = f.cnn_width; }});
  b.push_back({cmd.add_option("--cnn-dropout", f.cnn_dropout),
               [&f](TrainConfig& c) { c.cnn_dropout = f.cnn_dropout; }});
  b.push_back({cmd.add_option("--cnn-l2", f.cnn_l2), [&f](TrainConfig& c) { c.cnn_l2 = f.cnn_l2; }});
  b.push_back({cmd.add_option("--svm-lambda", f.svm_lambda), [&f](TrainConfig& c) { c.svm_lambda = f.svm_lambda; }});
  b.push_back({cmd.add_option("--svm-epochs", f.svm_epochs), [&f](TrainConfig& c) { c.svm_epochs = f.svm_epochs; }});
  b.push_back({cmd.add_flag("--bow-binary", f.bow_binary, "Binary bag-of-words features"),
               [&f](TrainConfig& c) { c.bow_binary = f.bow_binary; }});
  b.push_back({cmd.add_option("--checkpoint", f.checkpoint_path, "Write the best model here during training"),
               [&f](TrainConfig& c) { c.checkpoint_path = f.checkpoint_path; }});
  return b;
}

training::TrainConfig resolve_config(const TrainFlags& flags, const std::vector<Bound>& bound) {
  training::TrainConfig config;
  if (!flags.config_path.empty()) {
    json j;
    try {
      j = json::parse(io::read_file(flags.config_path));
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + flags.config_path + ": " + e.what());
    }
    config = training::TrainConfig::from_json(j);
  }
  for (const auto& b : bound) {
    if (b.option->count() > 0) b.apply(config);
  }
  config.validate();
  return config;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void log_epoch(std::ostream& err, const training::EpochRecord& r) {
  err << "epoch " << r.epoch << " train_loss=" << format_double(r.train_loss)
      << " val_loss=" << format_double(r.val_loss) << " val_acc=" << format_double(r.val_accuracy)
      << " lr=" << r.learning_rate << '\n';
}

void emit(std::ostream& out, const std::string& path, const json& j) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    io::write_file_atomic(path, text);
  }
}

int cmd_label(const std::string& in, const std::string& out_path, std::ostream& out) {
  const auto headlines = corpus::load_dataset(in);
  const auto labeled = corpus::label_by_group_median(headlines);
  io::write_file_atomic(out_path, corpus::to_jsonl(labeled));
  std::size_t popular = 0;
  for (const auto& ex : labeled) popular += static_cast<std::size_t>(ex.label);
  out << json{{"written", labeled.size()}, {"popular", popular}, {"out", out_path}}.dump() << '\n';
  return kOk;
}

struct TrainArgs {
  std::string data;
  std::string model_out;
  std::string report;
  std::string table;
  std::size_t kfold = 0;
  bool parallel = false;
  bool quiet = false;
  double test_fraction = 0.2;
};

int cmd_train(const TrainArgs& args, training::TrainConfig config, std::ostream& out, std::ostream& err) {
  const auto data = corpus::load_labeled(args.data);
  if (!args.quiet) config.on_epoch = [&err](const training::EpochRecord& r) { log_epoch(err, r); };

  if (args.kfold > 0) {
    training::KFoldOptions options;
    options.k = args.kfold;
    options.parallel = args.parallel;
    if (options.parallel) config.on_epoch = nullptr;
    const training::KFoldReport report = training::run_kfold(data, config, options);
    json j = report.to_json(false);
    j["config"] = config.to_json();
    emit(out, args.report, j);
    if (!args.table.empty()) io::write_file_atomic(args.table, training::format_table({report.row}));
    return kOk;
  }

  if (!(args.test_fraction > 0.0 && args.test_fraction <= 0.5)) throw ConfigError("--test-fraction must be in (0, 0.5]");
  const auto [train_pos, test_pos] = training::split_validation(data, args.test_fraction, mix_seed(config.seed, kTestSplitStream));
  std::vector<corpus::LabeledExample> train;
  std::vector<corpus::LabeledExample> test;
  for (std::size_t i : train_pos) train.push_back(data[i]);
  for (std::size_t i : test_pos) test.push_back(data[i]);

  training::FitResult result = training::fit(train, config);
  model_io::save_model(*result.model, args.model_out);
  json j = {{"fit", result.report.to_json(false)}, {"config", config.to_json()}};
  if (!test.empty()) j["test"] = training::evaluate(*result.model, test).to_json();
  emit(out, args.report, j);
  if (!args.quiet) err << "wall_time_s=" << result.report.wall_time_s << '\n';
  if (!args.table.empty() && !test.empty()) {
    const double acc = j["test"]["accuracy"].get<double>();
    io::write_file_atomic(args.table, training::format_table({training::table_row(config, acc)}));
  }
  return kOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path, std::ostream& out) {
  const auto model = model_io::load_model(model_path);
  const auto data = corpus::load_labeled(data_path);
  out << training::evaluate(*model, data).to_json().dump() << '\n';
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& title, std::ostream& out) {
  const auto model = model_io::load_model(model_path);
  const json scored = service::score_title(*model, title);
  const double p = scored["probability"].get<double>();
  out << json{{"probability", p}, {"class", p > 0.5 ? 1 : 0}, {"label", scored["label"]}}.dump() << '\n';
  return kOk;
}

int cmd_introspect(const std::string& model_path, const std::string& title, bool json_only, std::ostream& out) {
  const auto model = model_io::load_model(model_path);
  const json scored = service::score_title(*model, title);
  if (!json_only) {
    std::size_t width = 5;
    for (const auto& t : scored["tokens"]) width = std::max(width, t["token"].get_ref<const std::string&>().size());
    for (const auto& t : scored["tokens"]) {
      const std::string& tok = t["token"].get_ref<const std::string&>();
      out << tok << std::string(width - tok.size() + 2, ' ') << format_double(t["contribution"].get<double>()) << '\n';
    }
    out << std::string(width + 8, '-') << '\n';
    out << "score" << std::string(width - 3, ' ') << format_double(scored["probability"].get<double>()) << '\n';
  }
  out << scored.dump() << '\n';
  return kOk;
}

int cmd_serve(const std::string& model_path, const service::ServiceOptions& options, std::ostream& err) {
  service::ScoringService svc(options);
  svc.set_model(model_io::load_model(model_path));
  const int port = svc.bind();
  err << "listening on http://" << options.host << ":" << port << '\n';
  err.flush();
  svc.listen();
  return kOk;
}

struct SynthArgs {
  std::string kind = "marker";
  std::size_t n = 200;
  std::uint64_t seed = 0;
  std::string out;
  std::string vectors_out;
  std::size_t dim = 16;
  std::size_t lexicon_size = 24;
};

std::string glove_text(const std::unordered_map<std::string, std::vector<double>>& vectors) {
  std::vector<std::string> words;
  for (const auto& [w, v] : vectors) words.push_back(w);
  std::sort(words.begin(), words.end());
  std::ostringstream s;
  char buf[32];
  for (const auto& w : words) {
    s << w;
    for (double x : vectors.at(w)) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      s << buf;
    }
    s << '\n';
  }
  return s.str();
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  std::vector<corpus::LabeledExample> data;
  if (a.kind == "marker") {
    data = synthetic::marker_corpus(a.n, a.seed);
  } else if (a.kind == "order") {
    data = synthetic::order_corpus(a.n, a.seed);
  } else if (a.kind == "lexicon") {
    data = synthetic::lexicon_corpus(a.n, a.seed, a.lexicon_size);
  } else {
    throw UsageError("unknown corpus kind '" + a.kind + "' (marker | order | lexicon)");
  }
  io::write_file_atomic(a.out, corpus::to_jsonl(data));
  if (!a.vectors_out.empty()) {
    if (a.kind != "lexicon") throw UsageError("--vectors-out is only meaningful for the lexicon corpus");
    io::write_file_atomic(a.vectors_out, glove_text(synthetic::lexicon_vectors(a.lexicon_size, a.dim, a.seed)));
  }
  out << json{{"written", data.size()}, {"kind", a.kind}, {"out", a.out}}.dump() << '\n';
  return kOk;
}

// A BiLSTM whose head is all zeros: every score and contribution is 0.5.
int cmd_debug_model(const std::string& data_path, std::size_t hidden, std::size_t dim, std::uint64_t seed,
                    const std::string& out_path, std::ostream& out) {
  std::vector<std::vector<std::string>> tokens;
  if (!data_path.empty()) {
    for (const auto& h : corpus::load_dataset(data_path)) tokens.push_back(text::tokenize(h.title));
  }
  const text::Vocabulary vocab = text::build_vocab(tokens);
  recurrent::RecurrentConfig config;
  config.hidden = hidden;
  config.dim = dim;
  auto emb = embeddings::build_matrix(vocab, {}, dim, mix_seed(seed, 1), false);
  auto model = recurrent::RecurrentModel::initialize(config, vocab, std::move(emb), mix_seed(seed, 2));
  model.mutable_params().at("head.w").fill(0.0);
  model.mutable_params().at("head.b").fill(0.0);
  model_io::save_model(model, out_path);
  out << json{{"out", out_path}, {"vocab_size", vocab.size()}}.dump() << '\n';
  return kOk;
}

int report_error(std::ostream& err, int code, std::string_view kind, std::string_view message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Headline popularity prediction", "headpop"};
  app.require_subcommand(1);
  // -h is left free so that --h can name the hidden size.
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::to_string(model_io::kFormatVersion));

  std::string in_path;
  std::string out_path;
  auto* label = app.add_subcommand("label", "Label headlines against their group median");
  label->add_option("--in", in_path, "Raw dataset (.jsonl or .csv)")->required();
  label->add_option("--out", out_path, "Labeled JSONL output")->required();

  TrainFlags flags;
  TrainArgs targs;
  auto* train = app.add_subcommand("train", "Train a model on labeled JSONL");
  train->add_option("--data", targs.data, "Labeled JSONL")->required();
  train->add_option("--config", flags.config_path, "JSON training config; flags override it");
  auto* model_out_opt = train->add_option("--out", targs.model_out, "Model file to write");
  train->add_option("--report", targs.report, "Write the report JSON here instead of stdout");
  train->add_option("--table", targs.table, "Write a results table row here");
  train->add_option("--kfold", targs.kfold, "Run k-fold cross validation instead of one split")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  train->add_flag("--parallel", targs.parallel, "Run k-fold folds concurrently");
  train->add_option("--test-fraction", targs.test_fraction, "Held-out test share for a single split");
  train->add_flag("--quiet", targs.quiet, "No per-epoch log lines");
  const std::vector<Bound> bound = add_train_flags(*train, flags);

  std::string model_path;
  std::string data_path;
  auto* eval = app.add_subcommand("eval", "Evaluate a model on labeled JSONL");
  eval->add_option("--model", model_path)->required();
  eval->add_option("--data", data_path)->required();

  std::string title;
  auto* predict = app.add_subcommand("predict", "Score one headline");
  predict->add_option("--model", model_path)->required();
  predict->add_option("--title", title)->required();

  bool json_only = false;
  auto* introspect = app.add_subcommand("introspect", "Per-word contributions for one headline");
  introspect->add_option("--model", model_path)->required();
  introspect->add_option("--title", title)->required();
  introspect->add_flag("--json", json_only, "Print only the JSON line");

  service::ServiceOptions svc;
  auto* serve = app.add_subcommand("serve", "Run the HTTP scoring service");
  serve->add_option("--model", model_path)->required();
  serve->add_option("--host", svc.host);
  serve->add_option("--port", svc.port)->check(CLI::Range(0, 65535));
  serve->add_option("--cors-origin", svc.cors_origin);

  SynthArgs sargs;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled corpus");
  synth->add_option("--kind", sargs.kind, "marker | order | lexicon");
  synth->add_option("--n", sargs.n)->check(CLI::PositiveNumber);
  synth->add_option("--seed", sargs.seed);
  synth->add_option("--out", sargs.out)->required();
  synth->add_option("--vectors-out", sargs.vectors_out, "Lexicon corpus only: matching GloVe-format vectors");
  synth->add_option("--dim", sargs.dim)->check(CLI::PositiveNumber);
  synth->add_option("--lexicon-size", sargs.lexicon_size)->check(CLI::PositiveNumber);

  std::size_t dbg_hidden = 8;
  std::size_t dbg_dim = 8;
  std::uint64_t dbg_seed = 0;
  auto* debug_model = app.add_subcommand("debug-model", "Write a BiLSTM with a zero head (scores are all 0.5)");
  debug_model->add_option("--data", data_path, "Dataset whose titles form the vocabulary");
  debug_model->add_option("--h", dbg_hidden)->check(CLI::PositiveNumber);
  debug_model->add_option("--d", dbg_dim)->check(CLI::PositiveNumber);
  debug_model->add_option("--seed", dbg_seed);
  debug_model->add_option("--out", out_path)->required();

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << model_io::kFormatVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, kUsage, "usage", e.what());
  }

  try {
    if (*label) return cmd_label(in_path, out_path, out);
    if (*train) {
      if (targs.kfold == 0 && model_out_opt->count() == 0) throw UsageError("train needs --out unless --kfold is given");
      return cmd_train(targs, resolve_config(flags, bound), out, err);
    }
    if (*eval) return cmd_eval(model_path, data_path, out);
    if (*predict) return cmd_predict(model_path, title, out);
    if (*introspect) return cmd_introspect(model_path, title, json_only, out);
    if (*serve) return cmd_serve(model_path, svc, err);
    if (*synth) return cmd_synth(sargs, out);
    if (*debug_model) return cmd_debug_model(data_path, dbg_hidden, dbg_dim, dbg_seed, out_path, out);
  } catch (const UsageError& e) {
    return report_error(err, kUsage, "usage", e.what());
  } catch (const ConfigError& e) {
    return report_error(err, kUsage, "config", e.what());
  } catch (const DivergenceError& e) {
    return report_error(err, kDivergence, "divergence", e.what());
  } catch (const IoError& e) {
    return report_error(err, kIoError, "io", e.what());
  } catch (const DataError& e) {
    return report_error(err, kDataError, "data", e.what());
  } catch (const FormatVersionError& e) {
    return report_error(err, kDataError, "format_version", e.what());
  } catch (const TruncatedFileError& e) {
    return report_error(err, kDataError, "truncated", e.what());
  } catch (const ShapeError& e) {
    return report_error(err, kDataError, "shape", e.what());
  } catch (const NumericError& e) {
    return report_error(err, kDivergence, "numeric", e.what());
  } catch (const std::exception& e) {
    return report_error(err, kFailure, "internal", e.what());
  }
  return report_error(err, kUsage, "usage", "no subcommand");
}

}  // namespace headpop::cli
