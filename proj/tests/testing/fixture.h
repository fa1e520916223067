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

#ifndef MAFTPREP_TESTS_TESTING_FIXTURE_H_
#define MAFTPREP_TESTS_TESTING_FIXTURE_H_

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "maftprep/container.h"
#include "maftprep/io.h"
#include "maftprep/random.h"
#include "maftprep/tokenizer.h"
#include "maftprep/utf8.h"
#include "testing/oracles.h"

namespace maftprep::testing {

inline const std::vector<std::string>& LatinWords() {
  static const std::vector<std::string> w = {
      "the", "market", "ilu", "omo", "wetin", "dey", "happen", "habari", "za",
      "asubuhi", "rafiki", "yangu", "sannu", "gida", "kwame", "led", "ghana",
      "ndewo", "nwanne", "kedu", "mere", "taa", "ile", "naa", "won", "gbe"};
  return w;
}

inline const std::vector<std::string>& GeezWords() {
  static const std::vector<std::string> w = {"ሰላም", "ለሁሉም", "ሰዎች", "በዚህ", "ዓለም",
                                             "ውስጥ", "ይሁን", "ቤት", "ልጅ", "ሀገር"};
  return w;
}

// Draws an index below n from a seeded counter stream; portable across
// standard libraries.
class Draws {
 public:
  explicit Draws(std::uint64_t seed) : seed_(seed) {}
  std::size_t Below(std::size_t n) {
    return static_cast<std::size_t>(random::ToBounded(random::CounterDraw(seed_, i_++, 0, 7), n));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t i_ = 0;
};

inline std::string SyntheticCorpus(const std::vector<std::string>& words, std::size_t lines,
                                   std::uint64_t seed) {
  Draws d(seed);
  std::string out;
  for (std::size_t l = 0; l < lines; ++l) {
    switch (d.Below(8)) {
      case 0:
        out += "12 345 6789 10 11 12 13\n";
        continue;
      case 1:
        out += "short line\n";
        continue;
      default:
        break;
    }
    const std::size_t n = 6 + d.Below(10);
    for (std::size_t i = 0; i < n; ++i) {
      // Skewed word choice so frequencies differ.
      const std::size_t a = d.Below(words.size());
      const std::size_t b = d.Below(words.size());
      out += words[std::min(a, b)];
      out += i + 1 < n ? " " : "\n";
    }
  }
  return out;
}

// Tokenizer covering both scripts: single characters, whole words and a few
// word fragments, with dyadic scores.
inline tokenizer::UnigramModel FixtureTokenizer() {
  auto pieces = SpecialPieces();
  std::set<std::string> seen;
  Draws d(77);
  auto add = [&](const std::string& p, double score) {
    if (seen.insert(p).second) pieces.push_back({p, score, tokenizer::PieceKind::kNormal});
  };
  add("▁", -4.0);
  for (const auto* words : {&LatinWords(), &GeezWords()}) {
    for (const auto& w : *words) {
      add("▁" + w, -6.0 - static_cast<double>(d.Below(32)) / 16.0);
      const auto cps = utf8::Decode(w);
      for (char32_t c : cps) add(utf8::Encode(std::u32string(1, c)), -9.0);
      if (cps.size() > 2) add(utf8::Encode(cps.substr(0, 2)), -8.0);
      if (cps.size() > 3) add(utf8::Encode(cps.substr(cps.size() - 2)), -8.5);
    }
  }
  return tokenizer::UnigramModel(std::move(pieces), tokenizer::SpecialIds{});
}

struct Fixture {
  std::filesystem::path dir;
  std::filesystem::path tokenizer;
  std::filesystem::path groups;
  std::filesystem::path checkpoint;
  std::filesystem::path latin;
  std::filesystem::path yoruba;
  std::filesystem::path geez;
};

inline Fixture WriteFixture(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Fixture f;
  f.dir = dir;
  f.tokenizer = dir / "tokenizer.json";
  f.groups = dir / "groups.json";
  f.checkpoint = dir / "model.bin";
  f.latin = dir / "hau.txt";
  f.yoruba = dir / "yor.txt";
  f.geez = dir / "amh.txt";
  const auto model = FixtureTokenizer();
  model.Save(f.tokenizer);
  io::WriteFileAtomic(f.groups, R"({"hau": "latin", "yor": "latin", "amh": "geez"})");
  io::WriteFileAtomic(f.latin, SyntheticCorpus(LatinWords(), 300, 1));
  io::WriteFileAtomic(f.yoruba, SyntheticCorpus(LatinWords(), 200, 2));
  io::WriteFileAtomic(f.geez, SyntheticCorpus(GeezWords(), 150, 3));
  container::Save(f.checkpoint,
                  SmallCheckpoint(static_cast<std::int64_t>(model.size()), 16, 2, true));
  return f;
}

inline std::string Quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

// Runs the CLI binary; stdout and stderr go to files under `log_dir`.
inline int RunCli(const std::string& args, const std::filesystem::path& log_dir,
                  const std::string& tag) {
  const std::string cmd = std::string("'") + MAFTPREP_CLI_PATH + "' " + args + " >" +
                          Quote(log_dir / (tag + ".out")) + " 2>" +
                          Quote(log_dir / (tag + ".err"));
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Full pipeline into `out`; returns the first non-zero exit status.
inline int RunPipeline(const Fixture& f, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  const std::string o = "--out-dir " + Quote(out) + " --threads 2 ";
  const std::vector<std::pair<std::string, std::string>> steps = {
      {"clean", o + "clean --input hau=" + Quote(f.latin) + " --input yor=" +
                    Quote(f.yoruba) + " --input amh=" + Quote(f.geez) +
                    " --groups " + Quote(f.groups)},
      {"count", o + "count --manifest " + Quote(out / "corpus_manifest.json") +
                    " --tokenizer " + Quote(f.tokenizer)},
      {"select", o + "select --tokenizer " + Quote(f.tokenizer) + " --freq " +
                     Quote(out / "freq.latin.tsv") + " --freq " +
                     Quote(out / "freq.geez.tsv") +
                     " --strategy per-group --k latin=30 --k geez=12 --original-topn 10"},
      {"prune_tokenizer", o + "prune-tokenizer --tokenizer " + Quote(f.tokenizer) +
                              " --selection " + Quote(out / "selection.json")},
      {"prune_model", o + "prune-model --checkpoint " + Quote(f.checkpoint) +
                          " --selection " + Quote(out / "selection.json") +
                          " --tokenizer " + Quote(f.tokenizer)},
      {"mask", o + "mask --tokenizer " + Quote(out / "tokenizer.pruned.json") +
                   " --manifest " + Quote(out / "corpus_manifest.json") +
                   " --seed 1234 --max-seq-len 32"},
      {"report_unk", o + "report-unk --tokenizer full=" + Quote(f.tokenizer) +
                         " --tokenizer pruned=" + Quote(out / "tokenizer.pruned.json") +
                         " --dataset hau=" + Quote(f.latin) + " --dataset amh=" +
                         Quote(f.geez)},
      {"report_coverage", o + "report-coverage --selection " + Quote(out / "selection.json") +
                              " --freq " + Quote(out / "freq.latin.tsv") + " --freq " +
                              Quote(out / "freq.geez.tsv")},
      {"report_size", o + "report-size --before " + Quote(f.checkpoint) + " --after " +
                          Quote(out / "model.pruned.bin")},
      {"emit_manifest", o + "emit-manifest --corpus " + Quote(out / "corpus_manifest.json") +
                            " --tokenizer " + Quote(out / "tokenizer.pruned.json") +
                            " --checkpoint " + Quote(out / "model.pruned.bin") +
                            " --selection " + Quote(out / "selection.json") + " --batch " +
                            Quote(out / "batches.bin") + " --max-seq-len 32"},
  };
  const auto logs = out.parent_path() / (out.filename().string() + "_logs");
  std::filesystem::create_directories(logs);
  for (const auto& [tag, args] : steps) {
    if (const int rc = RunCli(args, logs, tag); rc != 0) return rc;
  }
  return 0;
}

// File contents with timestamp fields removed from JSON documents.
inline std::string Comparable(const std::filesystem::path& p) {
  std::string bytes = io::ReadFile(p);
  if (p.extension() != ".json") return bytes;
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(bytes);
  j.erase("created_at");
  if (j.contains("header")) j["header"].erase("generated_at");
  return j.dump();
}

// Pipeline artifacts differ in absolute paths only through the output
// directory name, so callers should run both copies under the same path.
inline std::vector<std::string> DiffTrees(const std::filesystem::path& a,
                                          const std::filesystem::path& b) {
  std::vector<std::string> diffs;
  std::set<std::string> names;
  for (const auto& e : std::filesystem::directory_iterator(a)) names.insert(e.path().filename().string());
  for (const auto& e : std::filesystem::directory_iterator(b)) names.insert(e.path().filename().string());
  for (const auto& n : names) {
    if (!std::filesystem::exists(a / n) || !std::filesystem::exists(b / n)) {
      diffs.push_back(n + " (missing)");
    } else if (Comparable(a / n) != Comparable(b / n)) {
      diffs.push_back(n);
    }
  }
  return diffs;
}

}  // namespace maftprep::testing

#endif  // MAFTPREP_TESTS_TESTING_FIXTURE_H_
