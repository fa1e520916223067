// Copyright 2026 The maftprep Authors.
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

#include "cli.h"

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "maftprep/corpus.h"
#include "maftprep/error.h"
#include "maftprep/io.h"
#include "maftprep/mlm_data.h"
#include "maftprep/report.h"
#include "maftprep/surgery.h"
#include "maftprep/tokenizer.h"
#include "maftprep/vocab_select.h"

namespace maftprep::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// JSON config files: top-level keys set global options, an object keyed by a
// subcommand name sets that subcommand's options. Command-line flags win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConversionError("config", e.what());
    }
    std::vector<CLI::ConfigItem> items;
    Flatten(j, {}, &items);
    return items;
  }

 private:
  static std::string Scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  }

  static void Flatten(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>* items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto next = parents;
        next.push_back(key);
        Flatten(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(Scalar(v));
      } else {
        item.inputs.push_back(Scalar(value));
      }
      items->push_back(std::move(item));
    }
  }
};

struct Globals {
  std::string out_dir = ".";
  unsigned threads = 0;
};

unsigned Threads(const Globals& g) {
  return g.threads > 0 ? g.threads : io::DefaultThreads();
}

fs::path OutPath(const Globals& g, const std::string& explicit_path,
                 const std::string& default_name) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(g.out_dir) / default_name;
}

std::pair<std::string, std::string> SplitAssignment(const std::string& arg,
                                                    const char* flag) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
    Fail(ErrorKind::kUsage, std::string(flag) + " expects name=value, got '" + arg + "'");
  }
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

tokenizer::UnkMode ParseUnkMode(const std::string& name) {
  if (name == "merge") return tokenizer::UnkMode::kMergeRuns;
  if (name == "per-char") return tokenizer::UnkMode::kPerCharacter;
  Fail(ErrorKind::kUsage, "unk mode must be merge or per-char");
}

void PrintJson(const ordered_json& j) { std::cout << j.dump(2) << std::endl; }

void RequireSameTokenizer(const vocab::VocabSelection& selection,
                          const tokenizer::UnigramModel& model) {
  if (selection.tokenizer_fingerprint != model.fingerprint() ||
      selection.vocab_size != model.size()) {
    Fail(ErrorKind::kMismatch, "selection was made for a different tokenizer");
  }
}

// --- subcommands ----------------------------------------------------------

struct CleanArgs {
  std::vector<std::string> inputs;
  std::string groups;
  int min_tokens = corpus::kDefaultMinTokens;
  std::string manifest;
};

void RunClean(const Globals& g, const CleanArgs& a) {
  std::vector<corpus::ShardInput> inputs;
  for (const auto& arg : a.inputs) {
    auto [language, path] = SplitAssignment(arg, "--input");
    inputs.push_back({language, path});
  }
  const corpus::GroupMap groups = corpus::LoadGroupMap(a.groups);
  corpus::CleanStats stats;
  auto manifest = corpus::CleanShards(inputs, groups, g.out_dir, a.min_tokens,
                                      Threads(g), &stats);
  const fs::path manifest_path = OutPath(g, a.manifest, "corpus_manifest.json");
  // Shard paths are stored relative to the manifest's own directory.
  const fs::path manifest_dir = fs::absolute(manifest_path).parent_path();
  for (auto& shard : manifest.shards) {
    shard.path = (fs::absolute(g.out_dir) / shard.path)
                     .lexically_normal()
                     .lexically_relative(manifest_dir.lexically_normal())
                     .generic_string();
  }
  manifest.Save(manifest_path);
  PrintJson({{"lines_in", stats.lines_in},
             {"lines_kept", stats.lines_kept},
             {"bytes_kept", stats.bytes_kept},
             {"manifest", manifest_path.generic_string()}});
}

struct SplitArgs {
  std::string input;
  std::uint64_t seed = 0;
  std::size_t min_class_size = corpus::kDefaultMinClassSize;
  std::vector<double> ratios = {0.7, 0.1, 0.2};
};

void RunSplit(const Globals& g, const SplitArgs& a) {
  if (a.ratios.size() != 3) Fail(ErrorKind::kUsage, "--ratios needs three values");
  const auto candidates = corpus::ReadCandidateTsv(a.input);
  const auto single = corpus::FilterMultilabel(candidates);
  const auto filtered = corpus::EnforceMinClassSize(single, a.min_class_size);
  const corpus::SplitRatios ratios{a.ratios[0], a.ratios[1], a.ratios[2]};
  const auto split = corpus::StratifiedSplit(filtered.examples, ratios, a.seed);
  const fs::path dir = g.out_dir;
  corpus::WriteLabeledTsv(dir / "train.tsv", split.train);
  corpus::WriteLabeledTsv(dir / "dev.tsv", split.dev);
  corpus::WriteLabeledTsv(dir / "test.tsv", split.test);

  ordered_json per_class = ordered_json::object();
  auto tally = [&](const std::vector<corpus::LabeledExample>& part, int slot) {
    for (const auto& e : part) {
      if (!per_class.contains(e.label)) per_class[e.label] = {0, 0, 0};
      per_class[e.label][slot] = per_class[e.label][slot].get<int>() + 1;
    }
  };
  tally(split.train, 0);
  tally(split.dev, 1);
  tally(split.test, 2);
  ordered_json summary{{"input_fingerprint", io::FingerprintFile(a.input)},
                       {"seed", a.seed},
                       {"ratios", a.ratios},
                       {"examples_in", candidates.size()},
                       {"dropped_multilabel", candidates.size() - single.size()},
                       {"dropped_classes", filtered.dropped_classes},
                       {"train", split.train.size()},
                       {"dev", split.dev.size()},
                       {"test", split.test.size()},
                       {"per_class_train_dev_test", per_class}};
  io::WriteFileAtomic(dir / "split_summary.json", summary.dump(2) + "\n");
  PrintJson(summary);
}

struct CountArgs {
  std::string manifest;
  std::string tokenizer;
  std::vector<std::string> groups;
  std::string unk_mode = "merge";
};

void RunCount(const Globals& g, const CountArgs& a) {
  const auto manifest = corpus::CorpusManifest::Load(a.manifest);
  const fs::path base = fs::path(a.manifest).parent_path();
  manifest.Validate(base);
  const auto model = tokenizer::UnigramModel::Load(a.tokenizer);
  std::vector<std::string> groups = a.groups;
  if (groups.empty()) {
    const auto all = manifest.Groups();
    groups.assign(all.begin(), all.end());
  }
  ordered_json out = ordered_json::object();
  for (const auto& group : groups) {
    const auto shards = manifest.ShardPaths(base, group);
    if (shards.empty()) {
      Fail(ErrorKind::kValidation, "corpus manifest has no shards for group '" + group + "'");
    }
    const auto table = vocab::CountFrequencies(shards, model, group, Threads(g),
                                               ParseUnkMode(a.unk_mode));
    const fs::path path = fs::path(g.out_dir) / ("freq." + group + ".tsv");
    table.Save(path, model);
    out[group] = {{"path", path.generic_string()},
                  {"total", table.total},
                  {"unk", table.counts[static_cast<std::size_t>(table.unk_id)]}};
  }
  PrintJson(out);
}

struct SelectArgs {
  std::string tokenizer;
  std::vector<std::string> freqs;
  std::string strategy = "per-group";
  std::vector<std::string> ks;
  std::size_t original_topn = 0;
  std::string topn_freq;
  std::string out;
};

void RunSelect(const Globals& g, const SelectArgs& a) {
  const auto model = tokenizer::UnigramModel::Load(a.tokenizer);
  std::map<std::string, vocab::FreqTable> tables;
  for (const auto& path : a.freqs) {
    auto table = vocab::FreqTable::Load(path);
    auto [it, inserted] = tables.emplace(table.group, table);
    if (!inserted) it->second.Merge(table);
  }
  vocab::Recipe recipe;
  recipe.strategy = vocab::ParseStrategy(a.strategy);
  recipe.original_topn = a.original_topn;
  for (const auto& k : a.ks) {
    const auto eq = k.find('=');
    try {
      if (eq == std::string::npos) {
        recipe.pooled_k = std::stoull(k);
      } else {
        recipe.k_per_group[k.substr(0, eq)] = std::stoull(k.substr(eq + 1));
      }
    } catch (const std::exception&) {
      Fail(ErrorKind::kUsage, "--k expects N or group=N, got '" + k + "'");
    }
  }
  if (recipe.strategy == vocab::Strategy::kPooled && recipe.pooled_k == 0) {
    Fail(ErrorKind::kUsage, "pooled strategy needs --k N");
  }
  std::optional<std::vector<tokenizer::PieceId>> topn;
  if (!a.topn_freq.empty()) {
    topn = vocab::OriginalTopN(vocab::FreqTable::Load(a.topn_freq), model, a.original_topn);
  }
  const auto selection = vocab::SelectStrategy(tables, recipe, model, topn);
  const fs::path out = OutPath(g, a.out, "selection.json");
  selection.Save(out);
  ordered_json summary = selection.ToJson();
  summary.erase("keep_ids");
  summary["path"] = out.generic_string();
  PrintJson(summary);
}

struct PruneTokenizerArgs {
  std::string tokenizer;
  std::string selection;
  std::string out;
  std::string remap;
};

void RunPruneTokenizer(const Globals& g, const PruneTokenizerArgs& a) {
  const auto model = tokenizer::UnigramModel::Load(a.tokenizer);
  const auto selection = vocab::VocabSelection::Load(a.selection);
  RequireSameTokenizer(selection, model);
  const auto pruned = tokenizer::Prune(model, selection.keep_ids);
  const fs::path out = OutPath(g, a.out, "tokenizer.pruned.json");
  const fs::path remap = OutPath(g, a.remap, "remap.tsv");
  pruned.model.Save(out);
  tokenizer::WriteRemapTsv(remap, pruned.remap);
  PrintJson({{"pieces_before", model.size()},
             {"pieces_after", pruned.model.size()},
             {"tokenizer", out.generic_string()},
             {"remap", remap.generic_string()}});
}

struct PruneModelArgs {
  std::string checkpoint;
  std::string selection;
  std::string tokenizer;
  std::string out;
};

void RunPruneModel(const Globals& g, const PruneModelArgs& a) {
  const auto selection = vocab::VocabSelection::Load(a.selection);
  if (!a.tokenizer.empty()) {
    RequireSameTokenizer(selection, tokenizer::UnigramModel::Load(a.tokenizer));
  }
  const auto before = container::ReadHeader(a.checkpoint);
  const auto layout = surgery::ReadLayout(before);
  if (layout.vocab_size != selection.vocab_size) {
    Fail(ErrorKind::kMismatch, "checkpoint has " + std::to_string(layout.vocab_size) +
                                   " embedding rows, selection expects " +
                                   std::to_string(selection.vocab_size));
  }
  const auto plan = surgery::MakePlan(layout, selection.keep_ids);
  const fs::path out = OutPath(g, a.out, "model.pruned.bin");
  surgery::PruneCheckpointFile(
      a.checkpoint, out, plan,
      {{"source_checkpoint_sha256", io::FingerprintFile(a.checkpoint)},
       {"selection_sha256", io::FingerprintFile(a.selection)},
       {"tokenizer_sha256", selection.tokenizer_fingerprint}});
  const auto size = surgery::MakeSizeReport(before, container::ReadHeader(out));
  ordered_json summary = size.ToJson();
  summary["checkpoint"] = out.generic_string();
  PrintJson(summary);
}

struct MaskArgs {
  std::string tokenizer;
  std::vector<std::string> inputs;
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::string preset = "maft";
  std::string adapt_config;
  int max_seq_len = 0;
  double mask_rate = -1.0;
  std::string out;
};

void RunMask(const Globals& g, const MaskArgs& a) {
  if (!a.seed) Fail(ErrorKind::kUsage, "mask is stochastic: --seed is required");
  mlm::AdaptConfig config = a.adapt_config.empty()
                                ? mlm::AdaptConfig::Preset(a.preset)
                                : mlm::AdaptConfig::FromJson(json::parse(io::ReadFile(a.adapt_config)));
  if (a.max_seq_len > 0) config.max_seq_len = a.max_seq_len;
  if (a.mask_rate >= 0.0) config.mask_rate = a.mask_rate;
  config.Validate();

  const auto model = tokenizer::UnigramModel::Load(a.tokenizer);
  std::vector<fs::path> shards(a.inputs.begin(), a.inputs.end());
  if (!a.manifest.empty()) {
    const auto manifest = corpus::CorpusManifest::Load(a.manifest);
    const fs::path base = fs::path(a.manifest).parent_path();
    manifest.Validate(base);
    for (const auto& s : manifest.shards) shards.push_back(base / s.path);
  }
  if (shards.empty()) Fail(ErrorKind::kUsage, "mask needs --input or --manifest");

  std::vector<std::vector<tokenizer::PieceId>> chunks;
  ordered_json inputs = ordered_json::array();
  for (const auto& shard : shards) {
    auto part = mlm::ChunkFile(shard, model, static_cast<std::size_t>(config.max_seq_len));
    chunks.insert(chunks.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
    inputs.push_back(io::FingerprintFile(shard));
  }
  const auto batch = mlm::MaskBatch(chunks, config, model, *a.seed, Threads(g));
  auto file = batch.ToTensors();
  file.metadata["seed"] = std::to_string(*a.seed);
  file.metadata["tokenizer_sha256"] = model.fingerprint();
  file.metadata["config"] = config.ToJson().dump();
  file.metadata["inputs_sha256"] = inputs.dump();
  const fs::path out = OutPath(g, a.out, "batches.bin");
  container::Save(out, file);
  PrintJson({{"sequences", batch.batch},
             {"seq_len", batch.seq},
             {"maskable", batch.stats.maskable},
             {"selected", batch.stats.selected},
             {"masked", batch.stats.masked},
             {"randomized", batch.stats.randomized},
             {"kept", batch.stats.kept},
             {"batches", out.generic_string()}});
}

struct ReportUnkArgs {
  std::vector<std::string> tokenizers;
  std::vector<std::string> datasets;
  std::string unk_mode = "merge";
  std::string out;
};

void RunReportUnk(const Globals& g, const ReportUnkArgs& a) {
  std::vector<std::unique_ptr<tokenizer::UnigramModel>> models;
  std::vector<report::NamedTokenizer> tokenizers;
  for (const auto& arg : a.tokenizers) {
    auto [name, path] = SplitAssignment(arg, "--tokenizer");
    models.push_back(std::make_unique<tokenizer::UnigramModel>(
        tokenizer::UnigramModel::Load(path)));
    tokenizers.push_back({name, models.back().get()});
  }
  std::vector<report::NamedDataset> datasets;
  for (const auto& arg : a.datasets) {
    auto [name, path] = SplitAssignment(arg, "--dataset");
    datasets.push_back({name, path});
  }
  const auto rep = report::MakeUnkReport(tokenizers, datasets,
                                         ParseUnkMode(a.unk_mode), Threads(g));
  const fs::path stem = OutPath(g, a.out, "unk_report");
  report::WriteReport(stem, rep.ToJson(), rep.RenderText());
  std::cout << rep.RenderText();
}

struct ReportCoverageArgs {
  std::string selection;
  std::vector<std::string> freqs;
  std::vector<double> targets = {0.998, 0.996};
  std::string out;
};

void RunReportCoverage(const Globals& g, const ReportCoverageArgs& a) {
  const auto selection = vocab::VocabSelection::Load(a.selection);
  std::map<std::string, vocab::FreqTable> tables;
  for (const auto& path : a.freqs) {
    auto table = vocab::FreqTable::Load(path);
    auto [it, inserted] = tables.emplace(table.group, table);
    if (!inserted) it->second.Merge(table);
  }
  const auto rep = report::MakeCoverageReport(selection, tables, a.targets);
  const fs::path stem = OutPath(g, a.out, "coverage_report");
  report::WriteReport(stem, rep.ToJson(), rep.RenderText());
  std::cout << rep.RenderText();
}

struct ReportSizeArgs {
  std::string before;
  std::string after;
  std::string out;
};

void RunReportSize(const Globals& g, const ReportSizeArgs& a) {
  const auto before = container::ReadHeader(a.before);
  const auto after = container::ReadHeader(a.after);
  surgery::ReadLayout(before);
  surgery::ReadLayout(after);
  const auto size = surgery::MakeSizeReport(before, after);
  const fs::path stem = OutPath(g, a.out, "size_report");
  report::WriteReport(stem, size.ToJson(), report::RenderSizeText(size));
  std::cout << report::RenderSizeText(size);
}

struct ManifestArgs {
  std::string corpus;
  std::string tokenizer;
  std::string checkpoint;
  std::string selection;
  std::vector<std::string> batches;
  std::string preset = "maft";
  std::string adapt_config;
  std::string mode = "maft";
  int max_seq_len = 0;
  double mask_rate = -1.0;
  std::string out;
};

void RunEmitManifest(const Globals& g, const ManifestArgs& a) {
  mlm::AdaptConfig config =
      a.adapt_config.empty()
          ? mlm::AdaptConfig::Preset(a.preset)
          : mlm::AdaptConfig::FromJson(json::parse(io::ReadFile(a.adapt_config)));
  if (a.max_seq_len > 0) config.max_seq_len = a.max_seq_len;
  if (a.mask_rate >= 0.0) config.mask_rate = a.mask_rate;
  config.Validate();
  for (const auto& batch : a.batches) {
    const auto header = container::ReadHeader(batch);
    const auto it = header.metadata.find("config");
    if (it == header.metadata.end() || it->second != config.ToJson().dump()) {
      Fail(ErrorKind::kMismatch, batch + " was masked under a different config");
    }
  }
  mlm::ManifestInputs inputs;
  inputs.corpus_manifest = a.corpus;
  inputs.tokenizer = a.tokenizer;
  inputs.checkpoint = a.checkpoint;
  inputs.selection = a.selection;
  inputs.batches.assign(a.batches.begin(), a.batches.end());
  inputs.mode = a.mode;
  const fs::path out = OutPath(g, a.out, "adapt_manifest.json");
  mlm::EmitManifest(config, inputs, out);
  std::cout << out.generic_string() << std::endl;
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kExitUsage;
    case ErrorKind::kValidation:
    case ErrorKind::kDecode: return kExitValidation;
    case ErrorKind::kIo: return kExitIo;
    case ErrorKind::kMismatch: return kExitMismatch;
  }
  return kExitValidation;
}

void Diagnose(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

}  // namespace

int Run(int argc, const char* const* argv) {
  CLI::App app{"maftprep: corpus cleaning, vocabulary reduction and embedding "
               "surgery for multilingual adaptive fine-tuning"};
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; flags override it");

  Globals globals;
  app.add_option("--out-dir", globals.out_dir, "Output directory")
      ->envname("MAFTPREP_OUT_DIR");
  app.add_option("--threads", globals.threads,
                 "Worker cap for cleaning, counting and masking (default: all cores)")
      ->envname("MAFTPREP_THREADS")
      ->check(CLI::PositiveNumber);

  std::function<void()> action;

  CleanArgs clean;
  auto* clean_cmd = app.add_subcommand("clean", "Drop letterless and short lines; write shards + manifest");
  clean_cmd->add_option("--input", clean.inputs, "lang=path, repeatable")->required();
  clean_cmd->add_option("--groups", clean.groups, "JSON map language -> script group")
      ->required()->check(CLI::ExistingFile);
  clean_cmd->add_option("--min-tokens", clean.min_tokens, "Minimum whitespace tokens per line")
      ->check(CLI::PositiveNumber);
  clean_cmd->add_option("--manifest", clean.manifest, "Manifest path (default: <out-dir>/corpus_manifest.json)");
  clean_cmd->callback([&] { action = [&] { RunClean(globals, clean); }; });

  SplitArgs split;
  std::optional<std::uint64_t> split_seed;
  auto* split_cmd = app.add_subcommand("split", "Filter a labeled TSV and split it 70:10:20 by class");
  split_cmd->add_option("--input", split.input, "label<TAB>text file")->required()->check(CLI::ExistingFile);
  split_cmd->add_option("--seed", split_seed, "Shuffle seed (required)");
  split_cmd->add_option("--min-class-size", split.min_class_size, "Drop classes smaller than this");
  split_cmd->add_option("--ratios", split.ratios, "train,dev,test")->delimiter(',')->expected(3);
  split_cmd->callback([&] {
    action = [&] {
      if (!split_seed) Fail(ErrorKind::kUsage, "split is stochastic: --seed is required");
      split.seed = *split_seed;
      RunSplit(globals, split);
    };
  });

  CountArgs count;
  auto* count_cmd = app.add_subcommand("count", "Exact subword frequencies per script group");
  count_cmd->add_option("--manifest", count.manifest, "Corpus manifest")->required()->check(CLI::ExistingFile);
  count_cmd->add_option("--tokenizer", count.tokenizer, "Tokenizer model JSON")->required()->check(CLI::ExistingFile);
  count_cmd->add_option("--group", count.groups, "Restrict to these groups");
  count_cmd->add_option("--unk-mode", count.unk_mode, "merge|per-char");
  count_cmd->callback([&] { action = [&] { RunCount(globals, count); }; });

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "Choose the reduced vocabulary");
  select_cmd->add_option("--tokenizer", select.tokenizer, "Tokenizer model JSON")->required()->check(CLI::ExistingFile);
  select_cmd->add_option("--freq", select.freqs, "Frequency table, repeatable")->required();
  select_cmd->add_option("--strategy", select.strategy, "pooled|per-group");
  select_cmd->add_option("--k", select.ks, "group=N (per-group) or N (pooled), repeatable")->required();
  select_cmd->add_option("--original-topn", select.original_topn, "Also keep the n first original pieces");
  select_cmd->add_option("--topn-freq", select.topn_freq, "Rank the original top-n by this frequency table instead of id order");
  select_cmd->add_option("--out", select.out, "Selection JSON (default: <out-dir>/selection.json)");
  select_cmd->callback([&] { action = [&] { RunSelect(globals, select); }; });

  PruneTokenizerArgs prune_tok;
  auto* prune_tok_cmd = app.add_subcommand("prune-tokenizer", "Restrict the tokenizer to a selection");
  prune_tok_cmd->add_option("--tokenizer", prune_tok.tokenizer, "Tokenizer model JSON")->required()->check(CLI::ExistingFile);
  prune_tok_cmd->add_option("--selection", prune_tok.selection, "Selection JSON")->required()->check(CLI::ExistingFile);
  prune_tok_cmd->add_option("--out", prune_tok.out, "Pruned tokenizer path");
  prune_tok_cmd->add_option("--remap", prune_tok.remap, "Remap TSV path");
  prune_tok_cmd->callback([&] { action = [&] { RunPruneTokenizer(globals, prune_tok); }; });

  PruneModelArgs prune_model;
  auto* prune_model_cmd = app.add_subcommand("prune-model", "Drop embedding rows outside a selection");
  prune_model_cmd->add_option("--checkpoint", prune_model.checkpoint, "Tensor container")->required()->check(CLI::ExistingFile);
  prune_model_cmd->add_option("--selection", prune_model.selection, "Selection JSON")->required()->check(CLI::ExistingFile);
  prune_model_cmd->add_option("--tokenizer", prune_model.tokenizer, "Check the selection against this tokenizer");
  prune_model_cmd->add_option("--out", prune_model.out, "Pruned checkpoint path");
  prune_model_cmd->callback([&] { action = [&] { RunPruneModel(globals, prune_model); }; });

  MaskArgs mask;
  auto* mask_cmd = app.add_subcommand("mask", "Pack and mask corpus text into MLM batches");
  mask_cmd->add_option("--tokenizer", mask.tokenizer, "Tokenizer model JSON")->required()->check(CLI::ExistingFile);
  mask_cmd->add_option("--input", mask.inputs, "Text shard, repeatable");
  mask_cmd->add_option("--manifest", mask.manifest, "Corpus manifest");
  mask_cmd->add_option("--seed", mask.seed, "Masking seed (required)");
  mask_cmd->add_option("--preset", mask.preset, "maft|maft-afriberta|ner|topic|sentiment|sentiment-xlmr");
  mask_cmd->add_option("--adapt-config", mask.adapt_config, "AdaptConfig JSON");
  mask_cmd->add_option("--max-seq-len", mask.max_seq_len, "Override max_seq_len");
  mask_cmd->add_option("--mask-rate", mask.mask_rate, "Override mask_rate");
  mask_cmd->add_option("--out", mask.out, "Batch container path");
  mask_cmd->callback([&] { action = [&] { RunMask(globals, mask); }; });

  ReportUnkArgs unk;
  auto* unk_cmd = app.add_subcommand("report-unk", "UNK counts per tokenizer and dataset");
  unk_cmd->add_option("--tokenizer", unk.tokenizers, "name=path, repeatable")->required();
  unk_cmd->add_option("--dataset", unk.datasets, "name=path, repeatable")->required();
  unk_cmd->add_option("--unk-mode", unk.unk_mode, "merge|per-char");
  unk_cmd->add_option("--out", unk.out, "Output stem");
  unk_cmd->callback([&] { action = [&] { RunReportUnk(globals, unk); }; });

  ReportCoverageArgs cov;
  auto* cov_cmd = app.add_subcommand("report-coverage", "Per-group coverage of a selection");
  cov_cmd->add_option("--selection", cov.selection, "Selection JSON")->required()->check(CLI::ExistingFile);
  cov_cmd->add_option("--freq", cov.freqs, "Frequency table, repeatable")->required();
  cov_cmd->add_option("--target", cov.targets, "Coverage target, repeatable");
  cov_cmd->add_option("--out", cov.out, "Output stem");
  cov_cmd->callback([&] { action = [&] { RunReportCoverage(globals, cov); }; });

  ReportSizeArgs size;
  auto* size_cmd = app.add_subcommand("report-size", "Parameter and byte counts before/after pruning");
  size_cmd->add_option("--before", size.before, "Original checkpoint")->required()->check(CLI::ExistingFile);
  size_cmd->add_option("--after", size.after, "Pruned checkpoint")->required()->check(CLI::ExistingFile);
  size_cmd->add_option("--out", size.out, "Output stem");
  size_cmd->callback([&] { action = [&] { RunReportSize(globals, size); }; });

  ManifestArgs manifest;
  auto* manifest_cmd = app.add_subcommand("emit-manifest", "Bind artifacts and hyper-parameters for adaptation");
  manifest_cmd->add_option("--corpus", manifest.corpus, "Corpus manifest")->required();
  manifest_cmd->add_option("--tokenizer", manifest.tokenizer, "Tokenizer model JSON")->required();
  manifest_cmd->add_option("--checkpoint", manifest.checkpoint, "Checkpoint")->required();
  manifest_cmd->add_option("--selection", manifest.selection, "Selection JSON");
  manifest_cmd->add_option("--batch", manifest.batches, "Batch container, repeatable");
  manifest_cmd->add_option("--preset", manifest.preset, "Hyper-parameter preset");
  manifest_cmd->add_option("--adapt-config", manifest.adapt_config, "AdaptConfig JSON");
  manifest_cmd->add_option("--mode", manifest.mode, "maft|laft");
  manifest_cmd->add_option("--max-seq-len", manifest.max_seq_len, "Override max_seq_len");
  manifest_cmd->add_option("--mask-rate", manifest.mask_rate, "Override mask_rate");
  manifest_cmd->add_option("--out", manifest.out, "Manifest path");
  manifest_cmd->callback([&] { action = [&] { RunEmitManifest(globals, manifest); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    Diagnose("usage", e.what());
    return kExitUsage;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const Error& e) {
    Diagnose(ErrorKindName(e.kind()), e.what());
    return ExitCodeFor(e.kind());
  } catch (const fs::filesystem_error& e) {
    Diagnose("io", e.what());
    return kExitIo;
  } catch (const json::exception& e) {
    Diagnose("validation", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    Diagnose("internal", e.what());
    return kExitValidation;
  }
}

}  // namespace maftprep::cli
