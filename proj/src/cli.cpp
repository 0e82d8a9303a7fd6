#include "mqa/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "mqa/checkpoint.hpp"
#include "mqa/datapipe.hpp"
#include "mqa/errors.hpp"
#include "mqa/evalkit.hpp"
#include "mqa/service.hpp"
#include "mqa/synth.hpp"
#include "mqa/trainer.hpp"

namespace mqa {

namespace {

// Any failure reading or validating user data; maps to kExitData.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_epoch(std::ostream& err, const char* phase, const EpochStats& s) {
  err << phase << " epoch " << s.epoch << " loss " << std::fixed
      << std::setprecision(4) << s.train_loss;
  if (s.dev_acc) err << " dev_acc " << *s.dev_acc;
  err << std::defaultfloat << '\n';
}

TrainConfig load_config(const std::string& path) {
  return path.empty() ? TrainConfig{} : read_train_config_file(path);
}

void write_ranked(std::ostream& out, const std::vector<std::string>& sentences,
                  const ScoreResult& r) {
  std::vector<std::size_t> order(sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i + 1;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r.probs[a] > r.probs[b];
  });
  out << std::fixed << std::setprecision(4);
  out << "no answer  " << r.probs[0] << '\n';
  for (std::size_t i : order) {
    out << std::setw(4) << i << "       " << r.probs[i] << "  "
        << sentences[i - 1] << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Product question answering: data mining, training, "
               "evaluation and serving",
               "mqa"};
  app.require_subcommand(1);
  std::function<void()> run;

  // mine
  auto* mine = app.add_subcommand("mine", "Mine QA examples from chats");
  std::string chats_f, listings_f, out_f;
  std::size_t max_history = 10;
  mine->add_option("--chats", chats_f, "Chat logs (JSONL)")->required();
  mine->add_option("--listings", listings_f, "Listings (JSONL)")->required();
  mine->add_option("--out", out_f, "Output dataset (JSONL)")->required();
  mine->add_option("--max-history", max_history, "Context messages kept");
  mine->callback([&] {
    run = [&] {
      MiningOptions opts;
      opts.max_history = max_history;
      const auto ex = mine_corpus(read_chats_file(chats_f),
                                  read_listings_file(listings_f), opts);
      auto o = open_out(out_f);
      write_dataset(o, ex);
      std::size_t neg = 0;
      for (const auto& e : ex) neg += e.label == 0;
      out << "mined " << ex.size() << " examples (" << neg
          << " without an answer)\n";
    };
  });

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  SynthOptions so;
  std::string out_dir;
  synth->add_option("--seed", so.seed, "Random seed")->required();
  synth->add_option("--listings", so.n_listings, "Number of listings")->required();
  synth->add_option("--out-dir", out_dir, "Output directory")->required();
  synth->add_option("--questions", so.questions_per_listing,
                    "Questions per listing");
  synth->add_option("--negative-fraction", so.negative_fraction,
                    "Share of unanswerable questions")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_flag("--context-sensitive", so.context_sensitive,
                  "Name the attribute only in an earlier message");
  synth->callback([&] {
    run = [&] {
      const auto c = generate_synthetic(so);
      std::filesystem::create_directories(out_dir);
      const std::filesystem::path d(out_dir);
      auto l = open_out((d / "listings.jsonl").string());
      write_listings(l, c.listings);
      auto ch = open_out((d / "chats.jsonl").string());
      write_chats(ch, c.chats);
      auto t = open_out((d / "truth.jsonl").string());
      write_truth(t, c.truth);
      auto p = open_out((d / "pairs.jsonl").string());
      write_pairs(p, extract_reply_pairs(c.chats));
      out << "wrote " << c.listings.size() << " listings and " << c.chats.size()
          << " chats to " << out_dir << '\n';
    };
  });

  // split
  auto* split_cmd = app.add_subcommand("split", "Split a dataset by listing");
  std::string in_f, train_f, test_f;
  double frac = 0.9;
  std::uint64_t split_seed = 0;
  split_cmd->add_option("--in", in_f, "Dataset (JSONL)")->required();
  split_cmd->add_option("--train", train_f, "Train output")->required();
  split_cmd->add_option("--test", test_f, "Test output")->required();
  split_cmd->add_option("--frac", frac, "Train share")
      ->check(CLI::Range(0.0, 1.0));
  split_cmd->add_option("--seed", split_seed, "Hash seed");
  split_cmd->callback([&] {
    run = [&] {
      if (!(frac > 0.0 && frac < 1.0)) throw CLI::ValidationError("--frac", "must lie in (0, 1)");
      const auto [train, test] = split(read_dataset_file(in_f), frac, split_seed);
      write_dataset_file(train_f, train);
      write_dataset_file(test_f, test);
      out << "train " << train.size() << ", test " << test.size() << '\n';
    };
  });

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "Reply-ranking pre-training");
  std::string pairs_f, config_f;
  std::vector<std::string> vocab_extra;
  pre->add_option("--pairs", pairs_f, "Reply pairs (JSONL)")->required();
  pre->add_option("--out", out_f, "Output checkpoint")->required();
  pre->add_option("--config", config_f, "key = value config file");
  pre->add_option("--vocab-data", vocab_extra,
                  "QA datasets whose text also enters the vocabulary");
  pre->callback([&] {
    run = [&] {
      auto cfg = load_config(config_f);
      const auto pairs = read_pairs_file(pairs_f);
      std::vector<QAExample> extra;
      for (const auto& f : vocab_extra) {
        auto part = read_dataset_file(f);
        std::move(part.begin(), part.end(), std::back_inserter(extra));
      }
      const auto r = pretrain(pairs, cfg,
                              vocab_for(extra, pairs, cfg.resolved_model()),
                              [&](const EpochStats& s) { print_epoch(err, "pretrain", s); });
      save_checkpoint(std::filesystem::path(out_f), r.model);
      out << "saved " << out_f << '\n';
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Fine-tune on QA examples");
  std::string data_f, dev_f, init_f, flags;
  bool flags_set = false;
  train_cmd->add_option("--data", data_f, "Training dataset (JSONL)")->required();
  train_cmd->add_option("--dev", dev_f, "Dev dataset for model selection");
  train_cmd->add_option("--init", init_f, "Checkpoint to start from");
  train_cmd->add_option("--flags", flags, "Encoders: lstm,attention,context")
      ->each([&](const std::string&) { flags_set = true; });
  train_cmd->add_option("--out", out_f, "Output checkpoint")->required();
  train_cmd->add_option("--config", config_f, "key = value config file");
  train_cmd->callback([&] {
    run = [&] {
      auto cfg = load_config(config_f);
      if (flags_set) set_flags(cfg.model, flags);
      const auto train = read_dataset_file(data_f);
      const auto dev = dev_f.empty() ? std::vector<QAExample>{}
                                     : read_dataset_file(dev_f);
      std::optional<Model> init;
      if (!init_f.empty()) init = load_checkpoint(std::filesystem::path(init_f));
      const auto r = finetune(train, dev, cfg, init ? &*init : nullptr,
                              std::nullopt,
                              [&](const EpochStats& s) { print_epoch(err, "train", s); });
      save_checkpoint(std::filesystem::path(out_f), r.model);
      out << "saved " << r.model.config.variant() << " model from epoch "
          << r.best_epoch << " to " << out_f << '\n';
    };
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string model_f, report_f;
  eval_cmd->add_option("--model", model_f, "Checkpoint")->required();
  eval_cmd->add_option("--data", data_f, "Dataset (JSONL)")->required();
  eval_cmd->add_option("--report", report_f, "Append the JSON report here");
  eval_cmd->callback([&] {
    run = [&] {
      const auto model = load_checkpoint(std::filesystem::path(model_f));
      const auto r = evaluate(model, read_dataset_file(data_f));
      const auto variant = model.config.variant();
      out << format_report(r, variant);
      if (!report_f.empty()) {
        std::ofstream rep(report_f, std::ios::app);
        if (!rep) throw DataError("cannot write " + report_f);
        rep << report_json(r, variant).dump() << '\n';
      }
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP scoring service");
  ServeOptions sopts;
  auto* port_opt = serve->add_option("--port", sopts.port, "Port (MQA_PORT)");
  auto* host_opt = serve->add_option("--host", sopts.host, "Bind address (MQA_HOST)");
  auto* model_opt = serve->add_option("--model", sopts.model_path, "Checkpoint (MQA_MODEL)");
  auto* fixtures_opt = serve->add_option(
      "--fixtures-dir", sopts.fixtures_dir,
      "Directory of listing JSONL files (MQA_FIXTURES_DIR)");
  auto* cors_opt = serve->add_option("--cors-origin", sopts.cors_origin,
                                     "Allowed browser origin (MQA_CORS_ORIGIN)");
  auto* static_opt = serve->add_option("--static-dir", sopts.static_dir,
                                       "Static files served at / (MQA_STATIC_DIR)");
  int serve_code = 0;
  serve->callback([&] {
    run = [&] {
      // Flags win over MQA_* variables, which win over defaults.
      ServeOptions o;
      apply_env(o, [](const char* k) { return std::getenv(k); });
      if (port_opt->count()) o.port = sopts.port;
      if (host_opt->count()) o.host = sopts.host;
      if (model_opt->count()) o.model_path = sopts.model_path;
      if (fixtures_opt->count()) o.fixtures_dir = sopts.fixtures_dir;
      if (cors_opt->count()) o.cors_origin = sopts.cors_origin;
      if (static_opt->count()) o.static_dir = sopts.static_dir;
      serve_code = run_server(o, err);
    };
  });

  // score
  auto* score_cmd = app.add_subcommand("score", "Rank description sentences for one question");
  std::string question, description, description_f;
  score_cmd->add_option("--model", model_f, "Checkpoint")->required();
  score_cmd->add_option("--question", question, "Buyer question")->required();
  auto* desc_opt = score_cmd->add_option("--description", description,
                                         "Description text");
  auto* desc_file_opt = score_cmd->add_option("--description-file",
                                              description_f, "Description file");
  desc_opt->excludes(desc_file_opt);
  score_cmd->callback([&] {
    run = [&] {
      if (desc_opt->count() + desc_file_opt->count() != 1) {
        throw CLI::RequiredError("--description or --description-file");
      }
      if (!description_f.empty()) description = read_text(description_f);
      const auto model = load_checkpoint(std::filesystem::path(model_f));
      auto sentences = split_sentences(description);
      if (sentences.size() > model.config.max_candidates) {
        sentences.resize(model.config.max_candidates);
      }
      const auto r = score(make_input({}, question, sentences, model.config), model);
      write_ranked(out, sentences, r);
    };
  });

  if (!args.empty() && !args[0].empty() && args[0][0] != '-' &&
      app.get_subcommand_no_throw(args[0]) == nullptr) {
    err << "error: unknown subcommand '" << args[0] << "'\n\n" << app.help();
    return kExitUsage;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    run();
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitData;
  } catch (const FormatError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitData;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return serve_code;
}

}  // namespace mqa
