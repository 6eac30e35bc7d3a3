#include "prooflens/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "prooflens/datagen.hpp"
#include "prooflens/diagnostics.hpp"
#include "prooflens/error.hpp"

namespace prooflens {

namespace {

Grammar resolve_grammar(const std::string& path) {
  return path.empty() ? parse_grammar(default_grammar_text()) : load_grammar_file(path);
}

// PROOFLENS_SEED fills in when --seed was not given on the command line.
std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_flag) {
  if (seed_opt->count() > 0) return seed_flag;
  if (const char* env = std::getenv("PROOFLENS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::CorruptValue, std::string("PROOFLENS_SEED is not an integer: ") + env);
    }
  }
  return seed_flag;
}

std::array<double, 3> parse_ratios(const std::string& text) {
  std::array<double, 3> ratios{};
  std::istringstream in(text);
  std::string token;
  int i = 0;
  while (std::getline(in, token, ',')) {
    if (i >= 3) throw CLI::ValidationError("--ratios", "expected three comma-separated values");
    try {
      ratios[i++] = std::stod(token);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--ratios", "bad number '" + token + "'");
    }
  }
  if (i != 3) throw CLI::ValidationError("--ratios", "expected three comma-separated values");
  return ratios;
}

void write_metrics(const std::vector<EpochMetrics>& metrics, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileMissing, "cannot open " + path + " for writing");
  for (const EpochMetrics& m : metrics)
    out << m.epoch << ',' << format_double(m.mean_loss) << ',' << format_double(m.accuracy) << '\n';
}

void print_metrics(const std::vector<EpochMetrics>& metrics) {
  for (const EpochMetrics& m : metrics)
    std::cout << m.epoch << ',' << format_double(m.mean_loss) << ',' << format_double(m.accuracy)
              << '\n';
}

// Architecture recovery from checkpoint tensor names/shapes, so the eval
// subcommands need no model flags.
struct InferredModel {
  EncoderConfig encoder;
  ProjectionConfig projection;
  DecoderConfig decoder;
  bool has_projection = false;
  bool has_decoder = false;
};

InferredModel infer_model(const ParamStore& store) {
  InferredModel model;
  if (store.has("encoder.layer0.w1")) {
    model.encoder.kind = EncoderKind::gin;
    const Tensor& w1 = store.at("encoder.layer0.w1");
    model.encoder.input_dim = w1.shape()[0];
    model.encoder.hidden = w1.shape()[1];
    int layers = 0;
    while (store.has("encoder.layer" + std::to_string(layers) + ".w1")) ++layers;
    model.encoder.layers = layers;
  } else if (store.has("encoder.wi")) {
    model.encoder.kind = EncoderKind::treelstm;
    const Tensor& wi = store.at("encoder.wi");
    model.encoder.input_dim = wi.shape()[0];
    model.encoder.hidden = wi.shape()[1];
  } else {
    throw Error(ErrorCode::CheckpointMismatch, "checkpoint carries no encoder parameters");
  }
  if (store.has("projection.w2")) {
    model.has_projection = true;
    model.projection.input_dim = store.at("projection.w2").shape()[0];
    model.projection.output_dim = store.at("projection.w2").shape()[1];
  }
  if (store.has("decoder.embed")) {
    model.has_decoder = true;
    model.decoder.num_productions = store.at("decoder.embed").shape()[0];
    model.decoder.action_dim = store.at("decoder.embed").shape()[1];
    model.decoder.state_dim = store.at("decoder.w_state").shape()[0];
    model.decoder.hidden = store.at("decoder.w_premise").shape()[1];
  }
  return model;
}

NodeVocab resolve_vocab(const std::string& vocab_flag, const std::string& ckpt_path) {
  return load_vocab(vocab_flag.empty() ? ckpt_path + ".vocab" : vocab_flag);
}

std::vector<GroupResult> read_group_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileMissing, "cannot open " + path);
  std::vector<GroupResult> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    GroupResult row;
    std::string correct, total;
    if (!std::getline(fields, row.group, ',') || !std::getline(fields, correct, ',') ||
        !std::getline(fields, total))
      throw Error(ErrorCode::MalformedLine,
                  path + ":" + std::to_string(line_no) + ": expected group,correct,total");
    try {
      row.correct = std::stoi(correct);
      row.total = std::stoi(total);
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedLine,
                  path + ":" + std::to_string(line_no) + ": bad counts");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit_report(const std::vector<GroupResult>& rows, const std::string& csv_path) {
  GroupResult total;
  total.group = "Total";
  std::size_t width = 5;  // "group"
  for (const GroupResult& row : rows) {
    total.correct += row.correct;
    total.total += row.total;
    width = std::max(width, row.group.size());
  }

  std::cout << std::left << std::setw(static_cast<int>(width) + 2) << "group" << std::right
            << std::setw(9) << "correct" << std::setw(7) << "total" << '\n';
  auto print_row = [&](const GroupResult& row) {
    std::cout << std::left << std::setw(static_cast<int>(width) + 2) << row.group << std::right
              << std::setw(9) << row.correct << std::setw(7) << row.total << '\n';
  };
  for (const GroupResult& row : rows) print_row(row);
  print_row(total);

  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw Error(ErrorCode::FileMissing, "cannot open " + csv_path + " for writing");
    out << "group,correct,total\n";
    for (const GroupResult& row : rows) out << row.group << ',' << row.correct << ',' << row.total << '\n';
    out << total.group << ',' << total.correct << ',' << total.total << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"prooflens: premise-selection pre-training and grammar-constrained tactic prediction"};
  app.require_subcommand(1);

  try {
    // ---------------- gen-corpus ----------------
    auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic proof corpus");
    CorpusConfig corpus_config;
    std::string gen_out, gen_grammar;
    gen->add_option("--out", gen_out, "Output corpus directory")->required();
    gen->add_option("--files", corpus_config.num_files, "Number of corpus files")
        ->capture_default_str();
    gen->add_option("--statements", corpus_config.statements_per_file, "Statements per file")
        ->capture_default_str();
    gen->add_option("--subtree-depth", corpus_config.subtree_depth, "Planted subtree depth")
        ->capture_default_str();
    gen->add_option("--label-vocab", corpus_config.label_vocab, "Constructor label count")
        ->capture_default_str();
    gen->add_option("--max-depth", corpus_config.max_depth, "Statement tree depth")
        ->capture_default_str();
    auto* gen_seed_opt =
        gen->add_option("--seed", corpus_config.seed, "Generator seed")->capture_default_str();
    gen->add_option("--grammar", gen_grammar, "Grammar file (built-in mini grammar when omitted)");
    gen->callback([&, gen_seed_opt] {
      corpus_config.seed = resolve_seed(gen_seed_opt, corpus_config.seed);
      Grammar grammar = resolve_grammar(gen_grammar);
      SyntheticCorpus corpus = gen_synthetic_corpus(corpus_config, grammar);
      write_corpus_dir(corpus.records, grammar, gen_out);
      DatasetStats stats;
      build_premise_dataset(corpus.records, &stats);
      std::cout << "files," << corpus_config.num_files << "\nrecords," << corpus.records.size()
                << "\npremise_instances," << stats.instances << "\nmean_negatives,"
                << format_double(stats.mean_negatives) << '\n';
    });

    // ---------------- build-dataset ----------------
    auto* build = app.add_subcommand("build-dataset", "Build premise instances from proof records");
    std::string build_in, build_out, build_grammar;
    build->add_option("--in", build_in, "records.jsonl path")->required();
    build->add_option("--out", build_out, "Premise instances output path")->required();
    build->add_option("--grammar", build_grammar, "Grammar file (built-in mini grammar when omitted)");
    build->callback([&] {
      Grammar grammar = resolve_grammar(build_grammar);
      std::vector<ProofRecord> records = load_proof_records(build_in, grammar);
      DatasetStats stats;
      std::vector<PremiseInstance> instances = build_premise_dataset(records, &stats);
      save_premise_instances(instances, build_out);
      std::cout << "instances," << stats.instances << "\nskipped_no_premise,"
                << stats.skipped_no_premise << "\nskipped_no_negatives,"
                << stats.skipped_no_negatives << "\nmean_negatives,"
                << format_double(stats.mean_negatives) << '\n';
    });

    // ---------------- split ----------------
    auto* split = app.add_subcommand("split", "Split proof records into train/valid/test by file");
    std::string split_in, split_prefix, split_ratios = "0.6,0.2,0.2", split_grammar;
    std::uint64_t split_seed = 0;
    split->add_option("--in", split_in, "records.jsonl path")->required();
    split->add_option("--out-prefix", split_prefix, "Output prefix for .train/.valid/.test.jsonl")
        ->required();
    split->add_option("--ratios", split_ratios, "Train,valid,test ratios")->capture_default_str();
    auto* split_seed_opt =
        split->add_option("--seed", split_seed, "Shuffle seed")->capture_default_str();
    split->add_option("--grammar", split_grammar, "Grammar file (built-in mini grammar when omitted)");
    split->callback([&, split_seed_opt] {
      Grammar grammar = resolve_grammar(split_grammar);
      std::vector<ProofRecord> records = load_proof_records(split_in, grammar);
      CorpusSplit result =
          split_corpus(records, parse_ratios(split_ratios), resolve_seed(split_seed_opt, split_seed));
      save_proof_records(result.train, grammar, split_prefix + ".train.jsonl");
      save_proof_records(result.valid, grammar, split_prefix + ".valid.jsonl");
      save_proof_records(result.test, grammar, split_prefix + ".test.jsonl");
      std::cout << "train," << result.train.size() << "\nvalid," << result.valid.size() << "\ntest,"
                << result.test.size() << '\n';
    });

    // ---------------- pretrain ----------------
    auto* pre = app.add_subcommand("pretrain", "Contrastive premise-selection pre-training");
    PretrainConfig pretrain_config;
    std::string pre_in, pre_out, pre_encoder = "gin";
    pre->add_option("--in", pre_in, "Premise instances path")->required();
    pre->add_option("--out", pre_out, "Checkpoint output path")->required();
    pre->add_option("--epochs", pretrain_config.epochs, "Training epochs")->capture_default_str();
    pre->add_option("--lr", pretrain_config.learning_rate, "Adam learning rate")
        ->capture_default_str();
    auto* pre_seed_opt =
        pre->add_option("--seed", pretrain_config.seed, "Init/shuffle seed")->capture_default_str();
    pre->add_option("--layers", pretrain_config.layers, "GNN layers")->capture_default_str();
    pre->add_option("--hidden", pretrain_config.hidden, "Hidden width")->capture_default_str();
    pre->add_option("--proj-dim", pretrain_config.proj_dim, "Projection output width")
        ->capture_default_str();
    pre->add_option("--encoder", pre_encoder, "Encoder: gin or treelstm")->capture_default_str();
    pre->callback([&, pre_seed_opt] {
      pretrain_config.seed = resolve_seed(pre_seed_opt, pretrain_config.seed);
      pretrain_config.encoder = parse_encoder_kind(pre_encoder);
      std::vector<PremiseInstance> dataset = load_premise_instances(pre_in);
      PretrainResult result = pretrain(dataset, pretrain_config);
      save_checkpoint(result.params, pre_out);
      save_vocab(result.vocab, pre_out + ".vocab");
      write_metrics(result.metrics, pre_out + ".metrics.csv");
      print_metrics(result.metrics);
    });

    // ---------------- finetune ----------------
    auto* fine = app.add_subcommand("finetune", "Teacher-forced tactic-prediction fine-tuning");
    FinetuneConfig finetune_config;
    std::string fine_in, fine_out, fine_init, fine_grammar, fine_encoder = "gin", fine_vocab;
    fine->add_option("--in", fine_in, "records.jsonl path")->required();
    fine->add_option("--out", fine_out, "Checkpoint output path")->required();
    fine->add_option("--init-checkpoint", fine_init, "Pre-trained encoder checkpoint");
    fine->add_option("--vocab", fine_vocab, "Vocabulary path (default: <init-checkpoint>.vocab)");
    fine->add_option("--grammar", fine_grammar, "Grammar file (built-in mini grammar when omitted)");
    fine->add_option("--epochs", finetune_config.epochs, "Training epochs")->capture_default_str();
    fine->add_option("--lr", finetune_config.learning_rate, "Adam learning rate")
        ->capture_default_str();
    auto* fine_seed_opt =
        fine->add_option("--seed", finetune_config.seed, "Init/shuffle seed")->capture_default_str();
    fine->add_option("--layers", finetune_config.layers, "GNN layers")->capture_default_str();
    fine->add_option("--hidden", finetune_config.hidden, "Hidden width")->capture_default_str();
    fine->add_option("--action-dim", finetune_config.action_dim, "Action embedding width")
        ->capture_default_str();
    fine->add_option("--state-dim", finetune_config.state_dim, "Controller state width")
        ->capture_default_str();
    fine->add_option("--encoder", fine_encoder, "Encoder: gin or treelstm")->capture_default_str();
    fine->callback([&, fine_seed_opt] {
      finetune_config.seed = resolve_seed(fine_seed_opt, finetune_config.seed);
      finetune_config.encoder = parse_encoder_kind(fine_encoder);
      Grammar grammar = resolve_grammar(fine_grammar);
      std::vector<ProofStep> steps = records_to_steps(load_proof_records(fine_in, grammar), grammar);
      FinetuneResult result;
      if (!fine_init.empty()) {
        ParamStore init = load_checkpoint(fine_init);
        NodeVocab vocab = resolve_vocab(fine_vocab, fine_init);
        result = finetune(steps, grammar, finetune_config, &init, &vocab);
      } else {
        result = finetune(steps, grammar, finetune_config);
      }
      save_checkpoint(result.params, fine_out);
      save_vocab(result.vocab, fine_out + ".vocab");
      write_metrics(result.metrics, fine_out + ".metrics.csv");
      print_metrics(result.metrics);
    });

    // ---------------- eval-premise ----------------
    auto* evalp = app.add_subcommand("eval-premise", "Premise-selection top-1 accuracy");
    std::string evalp_in, evalp_ckpt, evalp_vocab, evalp_out;
    evalp->add_option("--in", evalp_in, "Premise instances path")->required();
    evalp->add_option("--ckpt", evalp_ckpt, "Pre-trained checkpoint")->required();
    evalp->add_option("--vocab", evalp_vocab, "Vocabulary path (default: <ckpt>.vocab)");
    evalp->add_option("--out", evalp_out, "Write correct,total,accuracy to this file");
    evalp->callback([&] {
      std::vector<PremiseInstance> dataset = load_premise_instances(evalp_in);
      ParamStore params = load_checkpoint(evalp_ckpt);
      NodeVocab vocab = resolve_vocab(evalp_vocab, evalp_ckpt);
      InferredModel model = infer_model(params);
      if (!model.has_projection)
        throw Error(ErrorCode::CheckpointMismatch, "checkpoint carries no projection head");
      double accuracy = eval_premise(dataset, params, vocab, model.encoder, model.projection);
      long long correct = std::llround(accuracy * static_cast<double>(dataset.size()));
      std::string line = std::to_string(correct) + "," + std::to_string(dataset.size()) + "," +
                         format_double(accuracy);
      std::cout << line << '\n';
      if (!evalp_out.empty()) {
        std::ofstream out(evalp_out, std::ios::binary);
        if (!out) throw Error(ErrorCode::FileMissing, "cannot open " + evalp_out + " for writing");
        out << line << '\n';
      }
    });

    // ---------------- eval-tactic ----------------
    auto* evalt = app.add_subcommand("eval-tactic", "Exact-match tactic prediction counts");
    std::string evalt_in, evalt_ckpt, evalt_vocab, evalt_out, evalt_grammar;
    evalt->add_option("--in", evalt_in, "records.jsonl path")->required();
    evalt->add_option("--ckpt", evalt_ckpt, "Fine-tuned checkpoint")->required();
    evalt->add_option("--vocab", evalt_vocab, "Vocabulary path (default: <ckpt>.vocab)");
    evalt->add_option("--grammar", evalt_grammar, "Grammar file (built-in mini grammar when omitted)");
    evalt->add_option("--out", evalt_out, "Write group,correct,total rows to this file");
    evalt->callback([&] {
      Grammar grammar = resolve_grammar(evalt_grammar);
      std::vector<ProofStep> steps =
          records_to_steps(load_proof_records(evalt_in, grammar), grammar);
      ParamStore params = load_checkpoint(evalt_ckpt);
      NodeVocab vocab = resolve_vocab(evalt_vocab, evalt_ckpt);
      InferredModel model = infer_model(params);
      if (!model.has_decoder)
        throw Error(ErrorCode::CheckpointMismatch, "checkpoint carries no decoder parameters");
      std::vector<GroupResult> groups =
          eval_tactic(steps, grammar, params, vocab, model.encoder, model.decoder);
      int correct = 0, total = 0;
      for (const GroupResult& g : groups) {
        std::cout << g.group << ',' << g.correct << ',' << g.total << '\n';
        correct += g.correct;
        total += g.total;
      }
      std::cout << "Total," << correct << ',' << total << '\n';
      if (!evalt_out.empty()) {
        std::ofstream out(evalt_out, std::ios::binary);
        if (!out) throw Error(ErrorCode::FileMissing, "cannot open " + evalt_out + " for writing");
        for (const GroupResult& g : groups) out << g.group << ',' << g.correct << ',' << g.total << '\n';
      }
    });

    // ---------------- gradcheck ----------------
    auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient fidelity checks");
    std::uint64_t grad_seed = 7;
    auto* grad_seed_opt =
        grad->add_option("--seed", grad_seed, "Probe seed")->capture_default_str();
    grad->callback([&, grad_seed_opt] {
      GradCheckReport report = run_model_grad_checks(resolve_seed(grad_seed_opt, grad_seed));
      std::cout << "contrastive_max_rel_error," << format_double(report.contrastive_error) << '\n'
                << "decoder_max_rel_error," << format_double(report.decoder_error) << '\n';
      if (report.contrastive_error > 1e-4 || report.decoder_error > 1e-4)
        throw Error(ErrorCode::NonFiniteValue, "gradient check exceeded 1e-4");
    });

    // ---------------- report ----------------
    auto* rep = app.add_subcommand("report", "Format eval output as a per-group table");
    std::string rep_in, rep_out;
    rep->add_option("--in", rep_in, "Eval results file (group,correct,total rows)")->required();
    rep->add_option("--out", rep_out, "CSV output path");
    rep->callback([&] { emit_report(read_group_results(rep_in), rep_out); });

    app.parse(argc, const_cast<char**>(argv));
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace prooflens
