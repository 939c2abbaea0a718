// Copyright 2026 The mcprec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mcprec/corpus.hpp"
#include "mcprec/embedding_index.hpp"
#include "mcprec/error.hpp"
#include "mcprec/http_backend.hpp"
#include "mcprec/http_server.hpp"
#include "mcprec/metrics.hpp"
#include "mcprec/recommender.hpp"
#include "mcprec/rerank.hpp"
#include "mcprec/service.hpp"
#include "mcprec/taxonomy.hpp"
#include "mcprec/text.hpp"
#include "mcprec/training.hpp"

namespace mcprec::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVocabFile = "vocab.txt";
constexpr const char* kCheckpointFile = "checkpoint.bin";
constexpr const char* kIndexFile = "index.bin";
constexpr const char* kSplitFile = "split.json";
constexpr const char* kTrainLogFile = "train_log.jsonl";

struct CorpusOptions {
  std::string servers;
  std::string tasks;
  std::string interactions;
  std::string taxonomy;
  std::string theme_rules;
};

struct PipelineOptions {
  std::size_t k = 10;
  std::size_t k1 = 20;
  std::size_t k2 = 50;
  double semantic_weight = 0.9;
  bool no_structural = false;
  std::string reranker = "none";
  std::string endpoint;
  std::string model;
  std::string api_key_env = "MCPREC_API_KEY";
  int timeout_ms = 30000;
  bool debug_rerank = false;
};

void add_corpus_options(CLI::App* cmd, CorpusOptions& o, bool need_tasks) {
  cmd->add_option("--servers", o.servers, "MCP server records (JSONL)")->required();
  auto* tasks = cmd->add_option("--tasks", o.tasks, "Task records (JSONL)");
  auto* interactions = cmd->add_option("--interactions", o.interactions, "Task-server links (JSONL)");
  if (need_tasks) {
    tasks->required();
    interactions->required();
  }
  cmd->add_option("--taxonomy", o.taxonomy, "Category tree (JSON)");
  cmd->add_option("--theme-rules", o.theme_rules, "Theme to system rules (JSON)");
}

void add_pipeline_options(CLI::App* cmd, PipelineOptions& o) {
  cmd->add_option("--k", o.k, "Results per task")->check(CLI::PositiveNumber);
  cmd->add_option("--k1", o.k1, "Anchor count")->check(CLI::PositiveNumber);
  cmd->add_option("--k2", o.k2, "Candidate pool size")->check(CLI::PositiveNumber);
  cmd->add_option("--semantic-weight", o.semantic_weight, "Fusion weight of the semantic score")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--no-structural", o.no_structural, "Rank by the semantic score alone");
  cmd->add_option("--reranker", o.reranker, "Re-ranker backend")
      ->check(CLI::IsMember({"none", "builtin", "external"}));
  cmd->add_option("--endpoint", o.endpoint, "Chat-completions URL for --reranker external");
  cmd->add_option("--model", o.model, "Model name for --reranker external");
  cmd->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key");
  cmd->add_option("--timeout-ms", o.timeout_ms, "Re-ranker timeout")->check(CLI::PositiveNumber);
  cmd->add_flag("--debug-rerank", o.debug_rerank, "Log raw re-ranker prompts and replies");
}

RecommendConfig recommend_config(const PipelineOptions& o) {
  RecommendConfig config;
  config.k = o.k;
  config.k1 = o.k1;
  config.k2 = o.k2;
  config.fusion = o.no_structural ? FusionWeights{1.0, 0.0} : FusionWeights{o.semantic_weight, 1.0 - o.semantic_weight};
  config.validate();
  return config;
}

CallOptions call_options(const PipelineOptions& o) {
  CallOptions options;
  options.timeout = std::chrono::milliseconds(o.timeout_ms);
  return options;
}

std::shared_ptr<const RerankBackend> make_backend(const PipelineOptions& o) {
  if (o.reranker == "builtin") return std::make_shared<const BuiltinHeuristicBackend>();
  if (o.reranker == "external") {
    HttpBackendConfig config;
    config.endpoint = o.endpoint;
    config.model = o.model;
    config.api_key_env = o.api_key_env;
    config.timeout = std::chrono::milliseconds(o.timeout_ms);
    config.debug = o.debug_rerank;
    return std::make_shared<const HttpChatBackend>(config);
  }
  return nullptr;
}

std::optional<Taxonomy> load_taxonomy(const CorpusOptions& o) {
  if (o.taxonomy.empty()) return std::nullopt;
  return Taxonomy::load(o.taxonomy);
}

Dataset load_dataset(const CorpusOptions& o) {
  const auto taxonomy = load_taxonomy(o);
  return load_corpus(o.servers, o.tasks, o.interactions, taxonomy ? &*taxonomy : nullptr);
}

std::vector<std::string> all_texts(const Dataset& dataset) {
  std::vector<std::string> texts;
  texts.reserve(dataset.servers.size() + dataset.tasks.size());
  for (const auto& s : dataset.servers) texts.push_back(concat_text(s));
  for (const auto& t : dataset.tasks) texts.push_back(concat_text(t));
  return texts;
}

void ensure_dir(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--out is required");
  fs::create_directories(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

ArtifactPaths engine_paths(const std::string& artifacts, const CorpusOptions& o) {
  ArtifactPaths paths;
  paths.servers = o.servers;
  paths.taxonomy = o.taxonomy;
  paths.theme_rules = o.theme_rules;
  paths.vocabulary = fs::path(artifacts) / kVocabFile;
  paths.checkpoint = fs::path(artifacts) / kCheckpointFile;
  if (fs::exists(fs::path(artifacts) / kIndexFile)) paths.index = fs::path(artifacts) / kIndexFile;
  return paths;
}

// build-vocab ---------------------------------------------------------------

struct VocabOptions {
  CorpusOptions corpus;
  std::string out;
  std::size_t min_df = 1;
  double max_df_ratio = 1.0;
  std::size_t min_token_length = 2;
  bool no_idf = false;
};

VocabularyConfig vocabulary_config(const VocabOptions& o) {
  VocabularyConfig config;
  config.min_doc_freq = o.min_df;
  config.max_doc_freq_ratio = o.max_df_ratio;
  config.tokenizer.min_token_length = o.min_token_length;
  config.use_idf = !o.no_idf;
  return config;
}

int build_vocab(const VocabOptions& o, std::ostream& out) {
  ensure_dir(o.out);
  const auto dataset = load_dataset(o.corpus);
  const auto vocabulary = Vocabulary::build(all_texts(dataset), vocabulary_config(o));
  vocabulary.save(fs::path(o.out) / kVocabFile);
  out << fmt::format("vocabulary: {} tokens from {} documents -> {}\n", vocabulary.size(),
                     vocabulary.document_count(), (fs::path(o.out) / kVocabFile).string());
  return kOk;
}

// train ---------------------------------------------------------------------

struct TrainOptions {
  VocabOptions vocab;
  std::string vocab_path;
  std::string split_path;
  TrainConfig config;
  std::string loss = "contrastive";
  std::string direction = "symmetric";
  bool no_two_tower = false;
};

int train_cmd(const TrainOptions& o, bool direction_given, std::ostream& out) {
  if (o.loss == "bce" && direction_given) throw ConfigError("--loss-direction only applies to --loss contrastive");
  TrainConfig config = o.config;
  config.loss = o.loss == "bce" ? LossKind::kBce : parse_loss_kind(o.direction);
  config.validate();
  ensure_dir(o.vocab.out);
  const fs::path dir = o.vocab.out;

  const auto dataset = load_dataset(o.vocab.corpus);
  const auto vocabulary = o.vocab_path.empty() ? Vocabulary::build(all_texts(dataset), vocabulary_config(o.vocab))
                                               : Vocabulary::load(o.vocab_path);
  vocabulary.save(dir / kVocabFile);
  if (o.no_two_tower) {
    save_checkpoint(make_identity_encoder(vocabulary), dir / kCheckpointFile);
    out << fmt::format("identity encoder over {} tokens -> {}\n", vocabulary.size(),
                       (dir / kCheckpointFile).string());
    return kOk;
  }

  const auto split = o.split_path.empty() ? split_dataset(labeled_task_ids(dataset), config.seed)
                                          : load_split(o.split_path);
  save_split(split, dir / kSplitFile);

  std::ofstream log(dir / kTrainLogFile, std::ios::binary);
  if (!log) throw DataError("cannot write " + (dir / kTrainLogFile).string());

  const auto result = train(dataset, split, vocabulary, config, [&](const EpochRecord& record) {
    log << record.to_json().dump() << '\n';
    log.flush();
    if (record.valid_recall) {
      spdlog::info("epoch {} loss {:.6f} recall@{} valid {:.4f}", record.epoch, record.loss, record.k,
                   *record.valid_recall);
    } else {
      spdlog::info("epoch {} loss {:.6f}", record.epoch, record.loss);
    }
  });
  save_checkpoint(result.best, dir / kCheckpointFile);
  nlohmann::ordered_json summary;
  summary["best_epoch"] = result.best_epoch;
  summary["best_valid_recall"] =
      result.best_valid_recall ? nlohmann::ordered_json(*result.best_valid_recall) : nlohmann::ordered_json(nullptr);
  summary["epochs_run"] = result.log.size();
  summary["diverged"] = result.diverged;
  summary["loss"] = std::string(to_string(config.loss));
  summary["seed"] = config.seed;
  write_text(dir / "train_summary.json", summary.dump(2) + "\n");
  if (result.diverged) {
    out << fmt::format("training diverged; kept epoch {} -> {}\n", result.best_epoch,
                       (dir / kCheckpointFile).string());
    return kRuntimeFailure;
  }
  out << fmt::format("trained {} epochs, best epoch {} -> {}\n", result.log.size(), result.best_epoch,
                     (dir / kCheckpointFile).string());
  return kOk;
}

// index ---------------------------------------------------------------------

struct IndexOptions {
  std::string artifacts;
  std::string servers;
  std::string out;
};

int index_cmd(const IndexOptions& o, std::ostream& out) {
  const fs::path dir = o.out.empty() ? o.artifacts : o.out;
  ensure_dir(dir.string());
  const auto vocabulary = Vocabulary::load(fs::path(o.artifacts) / kVocabFile);
  const auto encoder = load_checkpoint(fs::path(o.artifacts) / kCheckpointFile, vocabulary);
  const ServerCorpus servers(read_servers(o.servers));
  const auto index = encode_corpus(encoder, servers, vocabulary);
  index.save(dir / kIndexFile);
  out << fmt::format("index: {} servers, dim {}, {} degenerate -> {}\n", index.size(), index.dim(),
                     index.degenerate_count(), (dir / kIndexFile).string());
  return kOk;
}

// recommend -----------------------------------------------------------------

struct RecommendOptions {
  CorpusOptions corpus;
  PipelineOptions pipeline;
  std::string artifacts;
  std::string task_file;
  std::string text;
  std::string language;
  std::string system;
  std::string category;
  std::string subcategory;
  std::string theme;
  std::string out;
  bool json = false;
};

std::vector<TaskQuery> recommend_queries(const RecommendOptions& o) {
  if (o.task_file.empty() == o.text.empty()) throw ConfigError("give exactly one of --task-file and --text");
  std::vector<TaskQuery> queries;
  if (!o.task_file.empty()) {
    for (const auto& task : read_tasks(o.task_file)) queries.push_back(query_from_task(task));
    return queries;
  }
  TaskQuery q;
  q.id = "query";
  q.attributes.language = fold_categorical(o.language);
  q.attributes.category = fold_categorical(o.category);
  q.attributes.subcategory = fold_categorical(o.subcategory);
  q.attributes.theme = fold_categorical(o.theme);
  if (!o.system.empty()) {
    const auto system = parse_system(o.system);
    if (system == System::kAny) throw ConfigError("--system must be linux, windows or ios");
    q.attributes.system = system;
  }
  TaskRecord record;
  record.description = normalize_text(o.text);
  record.language = q.attributes.language;
  record.category = q.attributes.category;
  record.theme = q.attributes.theme;
  q.text = concat_text(record);
  queries.push_back(std::move(q));
  return queries;
}

std::string format_table(const TaskQuery& query, const RankedList& list) {
  std::string out = fmt::format("task {}: {}", query.id, to_string(list.status));
  if (!list.reason.empty()) out += fmt::format(" ({})", list.reason);
  out += "\n";
  out += fmt::format("{:>4}  {:<40} {:<10} {:>9} {:>10} {:>9}\n", "rank", "id", "source", "semantic", "structural",
                     "fused");
  for (const auto& e : list.entries) {
    out += fmt::format("{:>4}  {:<40} {:<10} {:>9.4f} {:>10.4f} {:>9.4f}\n", e.rank, e.id, to_string(e.provenance),
                       e.scores.semantic, e.scores.structural, e.scores.fused);
  }
  return out;
}

int recommend_cmd(const RecommendOptions& o, std::ostream& out) {
  const auto config = recommend_config(o.pipeline);
  const auto queries = recommend_queries(o);
  const auto backend = make_backend(o.pipeline);
  const auto engine = load_engine(engine_paths(o.artifacts, o.corpus));
  std::string records;
  for (const auto& query : queries) {
    const auto result = recommend(*engine, query, config, backend.get(), call_options(o.pipeline));
    auto record = to_json(result.list);
    nlohmann::ordered_json line;
    line["task_id"] = query.id;
    for (auto& [key, value] : record.items()) line[key] = value;
    records += line.dump() + "\n";
    if (o.json) {
      out << line.dump() << '\n';
    } else {
      out << format_table(query, result.list) << '\n';
    }
  }
  if (!o.out.empty()) {
    ensure_dir(o.out);
    write_text(fs::path(o.out) / "recommendations.jsonl", records);
  }
  return kOk;
}

// evaluate ------------------------------------------------------------------

struct EvaluateOptions {
  CorpusOptions corpus;
  PipelineOptions pipeline;
  std::string artifacts;
  std::string split_path;
  std::string subset = "test";
  std::string ks = "5,10";
  std::string ranker = "model";
  std::string out;
  std::string label;
};

std::vector<std::size_t> parse_ks(const std::string& text) {
  std::vector<std::size_t> ks;
  for (const auto& part : CLI::detail::split(text, ',')) {
    const auto trimmed = trim(part);
    std::size_t k = 0;
    try {
      std::size_t used = 0;
      k = std::stoul(trimmed, &used);
      if (used != trimmed.size()) throw std::invalid_argument(trimmed);
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("--ks: '{}' is not a positive integer", trimmed));
    }
    if (k == 0) throw ConfigError("--ks values must be positive");
    ks.push_back(k);
  }
  if (ks.empty()) throw ConfigError("--ks is empty");
  return ks;
}

std::vector<std::string> subset_ids(const EvaluateOptions& o, const Dataset& dataset) {
  if (o.subset == "all") return labeled_task_ids(dataset);
  fs::path split_path = o.split_path;
  if (split_path.empty()) {
    if (o.artifacts.empty()) throw ConfigError("--split or --artifacts is required unless --subset all");
    split_path = fs::path(o.artifacts) / kSplitFile;
  }
  const auto split = load_split(split_path);
  if (o.subset == "train") return split.train;
  if (o.subset == "valid") return split.valid;
  return split.test;
}

int evaluate_cmd(const EvaluateOptions& o, std::ostream& out) {
  const auto ks = parse_ks(o.ks);
  const std::size_t max_k = *std::max_element(ks.begin(), ks.end());
  PipelineOptions pipeline = o.pipeline;
  pipeline.k = max_k;
  pipeline.k2 = std::max(pipeline.k2, max_k);
  pipeline.k1 = std::min(pipeline.k1, pipeline.k2);
  const bool oracle = o.ranker == "oracle";
  const auto config = recommend_config(pipeline);
  if (!oracle && o.artifacts.empty()) throw ConfigError("--artifacts is required for --ranker model");
  const auto backend = oracle ? nullptr : make_backend(pipeline);

  const auto dataset = load_dataset(o.corpus);
  const auto ids = subset_ids(o, dataset);
  Ranker ranker;
  std::shared_ptr<const Engine> engine;
  if (oracle) {
    ranker = [&](const std::string& task_id) {
      auto it = dataset.interactions.find(task_id);
      return it == dataset.interactions.end() ? std::vector<std::string>{} : it->second;
    };
  } else {
    engine = load_engine(engine_paths(o.artifacts, o.corpus));
    ranker = [&](const std::string& task_id) {
      const auto* task = dataset.tasks.find(task_id);
      if (task == nullptr) throw DataError("split names unknown task " + task_id);
      return recommend(*engine, query_from_task(*task), config, backend.get(), call_options(pipeline)).list.ids();
    };
  }
  const auto report = evaluate(ranker, ids, dataset.interactions, ks);
  const auto label = o.label.empty() ? (oracle ? std::string("oracle") : std::string("model")) : o.label;
  const auto table = report.to_table(label);
  out << table;
  if (!o.out.empty()) {
    ensure_dir(o.out);
    write_text(fs::path(o.out) / "report.txt", table);
    write_text(fs::path(o.out) / "report.json", report.to_json().dump(2) + "\n");
  }
  return kOk;
}

// serve ---------------------------------------------------------------------

struct ServeOptions {
  CorpusOptions corpus;
  PipelineOptions pipeline;
  std::string artifacts;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string session_log;
  std::size_t threads = 4;
};

HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int serve_cmd(const ServeOptions& o, std::ostream& out) {
  ServiceConfig config;
  config.top_k = 5;
  config.k1 = o.pipeline.k1;
  config.k2 = o.pipeline.k2;
  PipelineOptions pipeline = o.pipeline;
  pipeline.k = config.top_k;
  const auto rc = recommend_config(pipeline);
  config.fusion = rc.fusion;
  config.call = call_options(o.pipeline);
  config.session_log = o.session_log;
  RecommendationService service(config, make_backend(o.pipeline));
  service.set_engine(load_engine(engine_paths(o.artifacts, o.corpus)));

  HttpServerOptions options;
  options.worker_threads = o.threads;
  HttpServer server(service, options);
  const int port = server.bind(o.host, o.port);
  if (port < 0) throw std::runtime_error(fmt::format("cannot bind {}:{}", o.host, o.port));
  out << fmt::format("listening on http://{}:{}\n", o.host, port) << std::flush;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const bool ok = server.listen();
  g_server = nullptr;
  return ok ? kOk : kRuntimeFailure;
}

void configure_logging(const std::string& level) {
  static const auto logger = spdlog::stderr_color_mt("mcprec");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-to-MCP-server recommender", "mcprec"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  VocabOptions vocab;
  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build the lexical vocabulary over all server and task texts");
  add_corpus_options(vocab_cmd, vocab.corpus, true);
  vocab_cmd->add_option("--out", vocab.out, "Output directory")->required();
  const auto add_vocab_flags = [](CLI::App* cmd, VocabOptions& v) {
    cmd->add_option("--min-df", v.min_df, "Minimum document frequency")->check(CLI::PositiveNumber);
    cmd->add_option("--max-df-ratio", v.max_df_ratio, "Maximum document frequency ratio")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--min-token-length", v.min_token_length, "Shortest token kept")->check(CLI::PositiveNumber);
    cmd->add_flag("--no-idf", v.no_idf, "Raw term counts");
  };
  add_vocab_flags(vocab_cmd, vocab);

  TrainOptions train_opts;
  auto* train_cmd_app = app.add_subcommand("train", "Train the dual encoder");
  add_corpus_options(train_cmd_app, train_opts.vocab.corpus, true);
  train_cmd_app->add_option("--out", train_opts.vocab.out, "Output directory")->required();
  add_vocab_flags(train_cmd_app, train_opts.vocab);
  train_cmd_app->add_option("--vocab", train_opts.vocab_path, "Existing vocabulary file");
  train_cmd_app->add_option("--split", train_opts.split_path, "Existing split file");
  auto& tc = train_opts.config;
  train_cmd_app->add_option("--epochs", tc.epochs)->check(CLI::PositiveNumber);
  train_cmd_app->add_option("--batch-size", tc.batch_size)->check(CLI::PositiveNumber);
  train_cmd_app->add_option("--lr", tc.optimizer.learning_rate);
  train_cmd_app->add_option("--weight-decay", tc.optimizer.weight_decay);
  train_cmd_app->add_option("--temperature", tc.temperature);
  train_cmd_app->add_option("--hidden", tc.tower.hidden_dim)->check(CLI::PositiveNumber);
  train_cmd_app->add_option("--dim", tc.tower.output_dim, "Embedding size")->check(CLI::PositiveNumber);
  train_cmd_app->add_option("--layers", tc.tower.layers)->check(CLI::PositiveNumber);
  train_cmd_app->add_option("--dropout", tc.tower.dropout);
  train_cmd_app->add_option("--seed", tc.seed);
  train_cmd_app->add_option("--eval-every", tc.eval_every)->check(CLI::PositiveNumber);
  train_cmd_app->add_option("--eval-k", tc.eval_k)->check(CLI::PositiveNumber);
  train_cmd_app->add_option("--loss", train_opts.loss)->check(CLI::IsMember({"contrastive", "bce"}));
  auto* direction = train_cmd_app->add_option("--loss-direction", train_opts.direction)
                        ->check(CLI::IsMember({"symmetric", "one_sided"}));
  train_cmd_app->add_flag("--no-two-tower", train_opts.no_two_tower, "Write an identity encoder (sparse cosine)");

  IndexOptions index_opts;
  auto* index_cmd_app = app.add_subcommand("index", "Encode the server corpus into an embedding index");
  index_cmd_app->add_option("--artifacts", index_opts.artifacts, "Directory with vocab.txt and checkpoint.bin")
      ->required();
  index_cmd_app->add_option("--servers", index_opts.servers, "MCP server records (JSONL)")->required();
  index_cmd_app->add_option("--out", index_opts.out, "Output directory (default: --artifacts)");

  RecommendOptions rec;
  auto* rec_cmd = app.add_subcommand("recommend", "Rank servers for one or more tasks");
  add_corpus_options(rec_cmd, rec.corpus, false);
  add_pipeline_options(rec_cmd, rec.pipeline);
  rec_cmd->add_option("--artifacts", rec.artifacts, "Artifact directory")->required();
  rec_cmd->add_option("--task-file", rec.task_file, "Task records (JSONL)");
  rec_cmd->add_option("--text", rec.text, "Task description");
  rec_cmd->add_option("--language", rec.language);
  rec_cmd->add_option("--system", rec.system);
  rec_cmd->add_option("--category", rec.category);
  rec_cmd->add_option("--subcategory", rec.subcategory);
  rec_cmd->add_option("--theme", rec.theme);
  rec_cmd->add_option("--out", rec.out, "Also write recommendations.jsonl here");
  rec_cmd->add_flag("--json", rec.json, "Print JSON lines instead of tables");

  EvaluateOptions ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Macro-averaged retrieval metrics over a split");
  add_corpus_options(ev_cmd, ev.corpus, true);
  add_pipeline_options(ev_cmd, ev.pipeline);
  ev_cmd->add_option("--artifacts", ev.artifacts, "Artifact directory");
  ev_cmd->add_option("--split", ev.split_path, "Split file (default: <artifacts>/split.json)");
  ev_cmd->add_option("--subset", ev.subset)->check(CLI::IsMember({"train", "valid", "test", "all"}));
  ev_cmd->add_option("--ks", ev.ks, "Comma-separated cutoffs");
  ev_cmd->add_option("--ranker", ev.ranker)->check(CLI::IsMember({"model", "oracle"}));
  ev_cmd->add_option("--label", ev.label, "Row label in the report");
  ev_cmd->add_option("--out", ev.out, "Write report.txt and report.json here");

  ServeOptions serve;
  auto* serve_cmd_app = app.add_subcommand("serve", "Run the HTTP recommendation service");
  add_corpus_options(serve_cmd_app, serve.corpus, false);
  add_pipeline_options(serve_cmd_app, serve.pipeline);
  serve_cmd_app->add_option("--artifacts", serve.artifacts, "Artifact directory")->required();
  serve_cmd_app->add_option("--host", serve.host);
  serve_cmd_app->add_option("--port", serve.port)->check(CLI::Range(0, 65535));
  serve_cmd_app->add_option("--session-log", serve.session_log, "Append-only session log (JSONL)");
  serve_cmd_app->add_option("--threads", serve.threads)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    configure_logging(log_level);
    if (*vocab_cmd) return build_vocab(vocab, out);
    if (*train_cmd_app) return train_cmd(train_opts, direction->count() > 0, out);
    if (*index_cmd_app) return index_cmd(index_opts, out);
    if (*rec_cmd) return recommend_cmd(rec, out);
    if (*ev_cmd) return evaluate_cmd(ev, out);
    if (*serve_cmd_app) return serve_cmd(serve, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}

}  // namespace mcprec::cli
