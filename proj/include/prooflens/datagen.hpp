#pragma once

#include <array>
#include <cstdint>

#include "prooflens/contrastive.hpp"
#include "prooflens/decoder.hpp"
#include "prooflens/grammar.hpp"

namespace prooflens {

// One proved statement: its term, its gold tactic, and the premises visible
// at that point in the file (name, position, term), ordered by position.
struct ProofRecord {
  struct ContextEntry {
    std::string name;
    int position = 0;
    TermAst term;
  };

  std::string file;
  int position = 0;
  TermAst theorem;
  TacticAst gold_tactic;
  std::vector<ContextEntry> context;
};

struct CorpusConfig {
  int num_files = 10;
  int statements_per_file = 20;
  int subtree_depth = 3;   // depth of the planted shared subtree
  int label_vocab = 10;    // constructor labels in play
  int max_depth = 5;       // depth of the surrounding statement tree
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<ProofRecord> records;
  // Parallel to records: the subtree planted in each statement. Theorem
  // statements share theirs with the referenced premise; every other
  // statement's is unique. Test/stat metadata, not part of any record.
  std::vector<TermAst> planted;
};

// Each file interleaves "axiom" statements (fresh planted subtree, premise-
// free tactic) with "theorem" statements whose term embeds the planted
// subtree of one earlier unconsumed axiom and whose tactic applies it.
// Statement trees share one label pool and one shape distribution, so only
// the planted subtree separates a positive from the hard negatives.
// Deterministic per seed; file f uses the stream seeded with seed xor f.
SyntheticCorpus gen_synthetic_corpus(const CorpusConfig& config, const Grammar& grammar);

struct DatasetStats {
  int instances = 0;
  int skipped_no_premise = 0;
  int skipped_no_negatives = 0;
  double mean_negatives = 0.0;
};

// Positives are the premises the gold tactic applies; negatives are the up to
// 10 nearest preceding context premises by position, excluding the positive.
// Records without premise arguments, or with no negatives available, emit
// nothing and are counted in the stats.
std::vector<PremiseInstance> build_premise_dataset(const std::vector<ProofRecord>& records,
                                                   DatasetStats* stats = nullptr);

struct CorpusSplit {
  std::vector<ProofRecord> train, valid, test;
};

// File-level split: no file spans partitions. Ratios must be positive and
// sum to 1; every partition receives at least one file.
// Errors: TooFewFiles.
CorpusSplit split_corpus(const std::vector<ProofRecord>& records,
                         const std::array<double, 3>& ratios, std::uint64_t seed);

// Line-delimited JSON. Instances: {"theorem","positive","negatives"}.
// Records: {"file","position","goal","premises","gold"} with premises as
// {"name","position","term"} objects and gold as the leftmost derivation
// sequence. Errors: FileMissing, MalformedLine (with the line number).
void save_premise_instances(const std::vector<PremiseInstance>& instances, const std::string& path);
std::vector<PremiseInstance> load_premise_instances(const std::string& path);
void save_proof_records(const std::vector<ProofRecord>& records, const Grammar& grammar,
                        const std::string& path);
std::vector<ProofRecord> load_proof_records(const std::string& path, const Grammar& grammar);

std::vector<ProofStep> records_to_steps(const std::vector<ProofRecord>& records,
                                        const Grammar& grammar);

// Corpus directory: <file_id>.sexps (one term per line, statement order),
// manifest.txt ("file_id statement_count" per line) and records.jsonl.
void write_corpus_dir(const std::vector<ProofRecord>& records, const Grammar& grammar,
                      const std::string& dir);

}  // namespace prooflens
