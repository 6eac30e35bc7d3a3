#include "prooflens/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "prooflens/error.hpp"

namespace prooflens {

namespace {

const std::vector<std::string>& constructor_pool() {
  static const std::vector<std::string> pool = {
      "App",  "Lam",  "Prod", "Case",   "Fix",  "Ind",  "Sort",  "Rel",
      "Var",  "Const", "Proj", "Evar",  "Cast", "LetIn", "Construct", "Meta"};
  return pool;
}

const std::vector<std::string>& ident_pool() {
  static const std::vector<std::string> pool = {"x", "y", "z", "f", "g", "h", "n", "m", "p", "q"};
  return pool;
}

struct TreeGen {
  Rng& rng;
  int label_count;

  std::string random_label() { return constructor_pool()[rng.next_below(label_count)]; }
  std::string random_ident() { return ident_pool()[rng.next_below(ident_pool().size())]; }

  SExpr tree(int depth, bool force_internal) {
    if (depth <= 0 || (!force_internal && rng.next_double() < 0.25))
      return SExpr::make_atom(random_ident());
    std::vector<SExpr> items;
    items.push_back(SExpr::make_atom(random_label()));
    int arity = 1 + static_cast<int>(rng.next_below(3));
    for (int i = 0; i < arity; ++i) items.push_back(tree(depth - 1, false));
    return SExpr::make_list(std::move(items));
  }

  // Concept roots carry a corpus-unique marker ident, which keeps subtree
  // containment exact without touching the featurized labels.
  SExpr concept_tree(int depth, const std::string& marker) {
    SExpr root = tree(depth, true);
    root.children.push_back(SExpr::make_atom(marker));
    return root;
  }

  // Grafts the planted subtree over a random child slot of a random
  // internal node.
  SExpr statement_tree(int depth, const SExpr& planted) {
    SExpr root = tree(depth, true);
    std::vector<SExpr*> internal;
    collect_internal(root, internal);
    SExpr* target = internal[rng.next_below(internal.size())];
    std::size_t slot = 1 + rng.next_below(target->children.size() - 1);
    target->children[slot] = planted;
    return root;
  }

  static void collect_internal(SExpr& node, std::vector<SExpr*>& out) {
    if (node.is_atom || node.children.size() < 2) return;
    out.push_back(&node);
    for (std::size_t i = 1; i < node.children.size(); ++i) collect_internal(node.children[i], out);
  }
};

TacticAst single_production_tactic(const Grammar& grammar, int production, int premise_index) {
  TacticAst tactic;
  tactic.root.symbol = grammar.productions[production].lhs;
  tactic.root.production = production;
  for (int rhs_symbol : grammar.productions[production].rhs) {
    TacticAst::Node leaf;
    leaf.symbol = rhs_symbol;
    if (rhs_symbol == grammar.premise_arg) leaf.premise = premise_index;
    tactic.root.children.push_back(leaf);
  }
  return tactic;
}

std::string file_id(int index) {
  std::string digits = std::to_string(index);
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  return "f" + digits;
}

}  // namespace

SyntheticCorpus gen_synthetic_corpus(const CorpusConfig& config, const Grammar& grammar) {
  if (config.num_files < 1 || config.statements_per_file < 1 || config.subtree_depth < 1 ||
      config.label_vocab < 1 || config.max_depth < 1)
    throw Error(ErrorCode::MalformedLine, "corpus config counts must be >= 1");

  int apply_production = -1;
  std::vector<int> leaf_productions;
  for (int p = 0; p < grammar.num_productions(); ++p) {
    bool has_premise = false, has_nonterminal = false;
    for (int s : grammar.productions[p].rhs) {
      has_premise = has_premise || (s == grammar.premise_arg);
      has_nonterminal = has_nonterminal || grammar.is_nonterminal(s);
    }
    if (grammar.productions[p].lhs != grammar.start_symbol) continue;
    if (has_premise && apply_production < 0) apply_production = p;
    if (!has_premise && !has_nonterminal) leaf_productions.push_back(p);
  }
  if (apply_production < 0 || leaf_productions.empty())
    throw Error(ErrorCode::GrammarInvalid,
                "corpus generation needs a premise production and a premise-free production");

  const int label_count =
      std::min<int>(config.label_vocab, static_cast<int>(constructor_pool().size()));

  SyntheticCorpus corpus;
  for (int f = 0; f < config.num_files; ++f) {
    Rng rng(config.seed ^ static_cast<std::uint64_t>(f));
    TreeGen gen{rng, label_count};
    const std::string file = file_id(f);

    std::vector<TermAst> terms;       // statement order
    std::vector<TermAst> concepts;    // planted subtree per statement
    std::vector<int> unused_axioms;   // statements whose concept is still unconsumed

    for (int pos = 0; pos < config.statements_per_file; ++pos) {
      bool make_theorem = !unused_axioms.empty() && rng.next_double() < 0.5;

      ProofRecord record;
      record.file = file;
      record.position = pos;
      for (int i = 0; i < pos; ++i)
        record.context.push_back({"s" + std::to_string(i), i, terms[i]});

      if (make_theorem) {
        std::size_t pick = rng.next_below(unused_axioms.size());
        int axiom_pos = unused_axioms[pick];
        unused_axioms.erase(unused_axioms.begin() + static_cast<std::ptrdiff_t>(pick));
        SExpr planted = ast_to_sexpr(concepts[axiom_pos]);
        record.theorem = sexpr_to_ast(gen.statement_tree(config.max_depth, planted));
        record.gold_tactic = single_production_tactic(grammar, apply_production, axiom_pos);
        concepts.push_back(concepts[axiom_pos]);
      } else {
        std::string marker = "k" + std::to_string(f) + "_" + std::to_string(pos);
        SExpr planted = gen.concept_tree(config.subtree_depth, marker);
        record.theorem = sexpr_to_ast(gen.statement_tree(config.max_depth, planted));
        int tactic = leaf_productions[rng.next_below(leaf_productions.size())];
        record.gold_tactic = single_production_tactic(grammar, tactic, -1);
        concepts.push_back(sexpr_to_ast(planted));
        unused_axioms.push_back(pos);
      }

      terms.push_back(record.theorem);
      corpus.planted.push_back(concepts.back());
      corpus.records.push_back(std::move(record));
    }
  }
  return corpus;
}

std::vector<PremiseInstance> build_premise_dataset(const std::vector<ProofRecord>& records,
                                                   DatasetStats* stats) {
  DatasetStats local;
  std::vector<PremiseInstance> instances;
  long long negative_total = 0;

  for (const ProofRecord& record : records) {
    std::vector<int> used = premise_indices_used(record.gold_tactic);
    if (used.empty()) {
      local.skipped_no_premise += 1;
      continue;
    }
    for (int idx : used) {
      if (idx < 0 || idx >= static_cast<int>(record.context.size()))
        throw Error(ErrorCode::GoldInvalid, "premise index " + std::to_string(idx) +
                                                " outside context of " + record.file + ":" +
                                                std::to_string(record.position));
      // nearest preceding premises first
      std::vector<int> order(record.context.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        return record.context[a].position > record.context[b].position;
      });
      PremiseInstance instance;
      instance.theorem = record.theorem;
      instance.positive = record.context[idx].term;
      for (int candidate : order) {
        if (candidate == idx) continue;
        if (static_cast<int>(instance.negatives.size()) >= 10) break;
        instance.negatives.push_back(record.context[candidate].term);
      }
      if (instance.negatives.empty()) {
        local.skipped_no_negatives += 1;
        continue;
      }
      negative_total += static_cast<long long>(instance.negatives.size());
      instances.push_back(std::move(instance));
    }
  }
  local.instances = static_cast<int>(instances.size());
  local.mean_negatives =
      instances.empty() ? 0.0 : static_cast<double>(negative_total) / local.instances;
  if (stats) *stats = local;
  return instances;
}

CorpusSplit split_corpus(const std::vector<ProofRecord>& records,
                         const std::array<double, 3>& ratios, std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] <= 0 || ratios[1] <= 0 || ratios[2] <= 0 || std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorCode::TooFewFiles, "ratios must be positive and sum to 1");

  std::vector<std::string> files;
  for (const ProofRecord& record : records)
    if (files.empty() || std::find(files.begin(), files.end(), record.file) == files.end())
      files.push_back(record.file);
  std::sort(files.begin(), files.end());
  const int n = static_cast<int>(files.size());
  if (n < 3) throw Error(ErrorCode::TooFewFiles, std::to_string(n) + " files cannot fill 3 partitions");

  Rng rng(seed);
  rng.shuffle(files);

  int n_train = std::max(1, static_cast<int>(std::floor(n * ratios[0])));
  int n_valid = std::max(1, static_cast<int>(std::floor(n * ratios[1])));
  while (n_train + n_valid > n - 1) {
    if (n_train >= n_valid)
      --n_train;
    else
      --n_valid;
  }

  std::set<std::string> train_files(files.begin(), files.begin() + n_train);
  std::set<std::string> valid_files(files.begin() + n_train, files.begin() + n_train + n_valid);

  CorpusSplit split;
  for (const ProofRecord& record : records) {
    if (train_files.count(record.file))
      split.train.push_back(record);
    else if (valid_files.count(record.file))
      split.valid.push_back(record);
    else
      split.test.push_back(record);
  }
  return split;
}

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void malformed(const std::string& path, int line, const std::string& why) {
  throw Error(ErrorCode::MalformedLine, path + ":" + std::to_string(line) + ": " + why);
}

ordered_json parse_line(const std::string& path, int line_no, const std::string& line) {
  try {
    return ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    malformed(path, line_no, e.what());
  }
}

TermAst term_field(const std::string& path, int line_no, const ordered_json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) malformed(path, line_no, std::string("missing ") + field);
  try {
    return parse_term(j[field].get<std::string>());
  } catch (const Error& e) {
    malformed(path, line_no, std::string(field) + ": " + e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileMissing, "cannot open " + path + " for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileMissing, "cannot open " + path);
  return in;
}

}  // namespace

void save_premise_instances(const std::vector<PremiseInstance>& instances, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const PremiseInstance& instance : instances) {
    ordered_json j;
    j["theorem"] = render_term(instance.theorem);
    j["positive"] = render_term(instance.positive);
    ordered_json negatives = ordered_json::array();
    for (const TermAst& n : instance.negatives) negatives.push_back(render_term(n));
    j["negatives"] = std::move(negatives);
    out << j.dump() << '\n';
  }
}

std::vector<PremiseInstance> load_premise_instances(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<PremiseInstance> instances;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j = parse_line(path, line_no, line);
    PremiseInstance instance;
    instance.theorem = term_field(path, line_no, j, "theorem");
    instance.positive = term_field(path, line_no, j, "positive");
    if (!j.contains("negatives") || !j["negatives"].is_array())
      malformed(path, line_no, "missing negatives");
    for (const auto& item : j["negatives"]) {
      if (!item.is_string()) malformed(path, line_no, "negative is not a string");
      try {
        instance.negatives.push_back(parse_term(item.get<std::string>()));
      } catch (const Error& e) {
        malformed(path, line_no, std::string("negative: ") + e.what());
      }
    }
    if (instance.negatives.empty() || instance.negatives.size() > 10)
      malformed(path, line_no,
                "instance must carry 1..10 negatives, found " + std::to_string(instance.negatives.size()));
    instances.push_back(std::move(instance));
  }
  return instances;
}

void save_proof_records(const std::vector<ProofRecord>& records, const Grammar& grammar,
                        const std::string& path) {
  std::ofstream out = open_out(path);
  for (const ProofRecord& record : records) {
    ordered_json j;
    j["file"] = record.file;
    j["position"] = record.position;
    j["goal"] = render_term(record.theorem);
    ordered_json premises = ordered_json::array();
    for (const ProofRecord::ContextEntry& entry : record.context) {
      ordered_json p;
      p["name"] = entry.name;
      p["position"] = entry.position;
      p["term"] = render_term(entry.term);
      premises.push_back(std::move(p));
    }
    j["premises"] = std::move(premises);
    j["gold"] = derivation_sequence(grammar, record.gold_tactic);
    out << j.dump() << '\n';
  }
}

std::vector<ProofRecord> load_proof_records(const std::string& path, const Grammar& grammar) {
  std::ifstream in = open_in(path);
  std::vector<ProofRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j = parse_line(path, line_no, line);
    ProofRecord record;
    if (!j.contains("file") || !j["file"].is_string()) malformed(path, line_no, "missing file");
    if (!j.contains("position") || !j["position"].is_number_integer())
      malformed(path, line_no, "missing position");
    record.file = j["file"].get<std::string>();
    record.position = j["position"].get<int>();
    record.theorem = term_field(path, line_no, j, "goal");
    if (!j.contains("premises") || !j["premises"].is_array())
      malformed(path, line_no, "missing premises");
    for (const auto& item : j["premises"]) {
      if (!item.is_object() || !item.contains("name") || !item.contains("position") ||
          !item.contains("term"))
        malformed(path, line_no, "premise entry needs name/position/term");
      ProofRecord::ContextEntry entry;
      entry.name = item["name"].get<std::string>();
      entry.position = item["position"].get<int>();
      try {
        entry.term = parse_term(item["term"].get<std::string>());
      } catch (const Error& e) {
        malformed(path, line_no, std::string("premise term: ") + e.what());
      }
      record.context.push_back(std::move(entry));
    }
    if (!j.contains("gold") || !j["gold"].is_array()) malformed(path, line_no, "missing gold");
    std::vector<int> gold;
    for (const auto& item : j["gold"]) {
      if (!item.is_number_integer()) malformed(path, line_no, "gold entry is not an integer");
      gold.push_back(item.get<int>());
    }
    try {
      record.gold_tactic = replay_gold(grammar, gold, static_cast<int>(record.context.size()));
    } catch (const Error& e) {
      malformed(path, line_no, std::string("gold: ") + e.what());
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<ProofStep> records_to_steps(const std::vector<ProofRecord>& records,
                                        const Grammar& grammar) {
  std::vector<ProofStep> steps;
  steps.reserve(records.size());
  for (const ProofRecord& record : records) {
    ProofStep step;
    step.file = record.file;
    step.position = record.position;
    step.goal = record.theorem;
    for (const ProofRecord::ContextEntry& entry : record.context) step.premises.push_back(entry.term);
    step.gold = derivation_sequence(grammar, record.gold_tactic);
    steps.push_back(std::move(step));
  }
  return steps;
}

void write_corpus_dir(const std::vector<ProofRecord>& records, const Grammar& grammar,
                      const std::string& dir) {
  std::filesystem::create_directories(dir);

  std::vector<std::string> files;
  std::map<std::string, std::vector<const ProofRecord*>> by_file;
  for (const ProofRecord& record : records) {
    if (by_file.find(record.file) == by_file.end()) files.push_back(record.file);
    by_file[record.file].push_back(&record);
  }
  std::sort(files.begin(), files.end());

  std::ofstream manifest = open_out(dir + "/manifest.txt");
  for (const std::string& file : files) {
    auto& file_records = by_file[file];
    std::sort(file_records.begin(), file_records.end(),
              [](const ProofRecord* a, const ProofRecord* b) { return a->position < b->position; });
    std::ofstream out = open_out(dir + "/" + file + ".sexps");
    for (const ProofRecord* record : file_records) out << render_term(record->theorem) << '\n';
    manifest << file << ' ' << file_records.size() << '\n';
  }
  save_proof_records(records, grammar, dir + "/records.jsonl");
}

}  // namespace prooflens
