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

#include "maftprep/report.h"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "maftprep/error.h"
#include "maftprep/io.h"

namespace maftprep::report {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string FormatFraction(double v, int digits) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

// Left-aligned first column, right-aligned others.
std::string RenderTable(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const auto& row = cells[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out << "  ";
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(width[c])) << row[c];
      } else {
        out << std::right << std::setw(static_cast<int>(width[c])) << row[c];
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c > 0 ? 2 : 0);
      out << std::string(total, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace

ordered_json UnkReport::ToJson() const {
  ordered_json j;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json row{{"tokenizer_name", r.tokenizer_name},
                     {"dataset_name", r.dataset_name},
                     {"unk_count", r.unk_count},
                     {"total_tokens", r.total_tokens},
                     {"unk_rate", r.unk_rate}};
    if (r.error) row["error"] = *r.error;
    j["rows"].push_back(std::move(row));
  }
  j["generated_from"] = ordered_json::object();
  for (const auto& [k, v] : generated_from) j["generated_from"][k] = v;
  return j;
}

std::string UnkReport::RenderText() const {
  std::vector<std::string> tokenizers;
  std::vector<std::string> datasets;
  for (const auto& r : rows) {
    if (std::find(tokenizers.begin(), tokenizers.end(), r.tokenizer_name) == tokenizers.end()) {
      tokenizers.push_back(r.tokenizer_name);
    }
    if (std::find(datasets.begin(), datasets.end(), r.dataset_name) == datasets.end()) {
      datasets.push_back(r.dataset_name);
    }
  }
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head = {"tokenizer"};
  for (const auto& d : datasets) head.push_back(d + " #UNK");
  cells.push_back(std::move(head));
  for (const auto& t : tokenizers) {
    std::vector<std::string> row = {t};
    for (const auto& d : datasets) {
      std::string cell = "-";
      for (const auto& r : rows) {
        if (r.tokenizer_name == t && r.dataset_name == d) {
          cell = r.error ? "error" : std::to_string(r.unk_count);
        }
      }
      row.push_back(std::move(cell));
    }
    cells.push_back(std::move(row));
  }
  return RenderTable(cells);
}

UnkReport MakeUnkReport(std::span<const NamedTokenizer> tokenizers,
                        std::span<const NamedDataset> datasets,
                        tokenizer::UnkMode mode, unsigned threads) {
  for (const auto& t : tokenizers) {
    if (t.model == nullptr) Fail(ErrorKind::kUsage, "tokenizer '" + t.name + "' not loaded");
    if (t.model->boundary() != tokenizers.front().model->boundary()) {
      Fail(ErrorKind::kMismatch, "tokenizers use different boundary markers");
    }
  }
  UnkReport report;
  report.rows.resize(tokenizers.size() * datasets.size());
  for (const auto& t : tokenizers) {
    report.generated_from["tokenizer:" + t.name] = t.model->fingerprint();
  }
  for (const auto& d : datasets) {
    try {
      report.generated_from["dataset:" + d.name] = io::FingerprintFile(d.path);
    } catch (const Error&) {
      report.generated_from["dataset:" + d.name] = "unreadable";
    }
  }
  // Rows are independent; each one counts single-threaded.
  io::ParallelFor(report.rows.size(), threads, [&](std::size_t i) {
    const auto& t = tokenizers[i / datasets.size()];
    const auto& d = datasets[i % datasets.size()];
    UnkRow& row = report.rows[i];
    row.tokenizer_name = t.name;
    row.dataset_name = d.name;
    try {
      const auto count = tokenizer::CountUnks(d.path, *t.model, mode, 1);
      row.unk_count = count.unk_tokens;
      row.total_tokens = count.total_tokens;
      row.unk_rate = count.total_tokens == 0
                         ? 0.0
                         : static_cast<double>(count.unk_tokens) /
                               static_cast<double>(count.total_tokens);
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  return report;
}

ordered_json CoverageReport::ToJson() const {
  ordered_json j;
  j["tokenizer_fingerprint"] = tokenizer_fingerprint;
  j["keep_count"] = keep_count;
  j["groups"] = ordered_json::array();
  for (const auto& g : groups) {
    ordered_json e{{"group", g.group}, {"total", g.total}, {"achieved_coverage", g.achieved}};
    e["targets"] = ordered_json::array();
    for (const auto& t : g.targets) {
      e["targets"].push_back({{"target", t.target}, {"k", t.k}, {"shortfall", t.shortfall}});
    }
    j["groups"].push_back(std::move(e));
  }
  return j;
}

std::string CoverageReport::RenderText() const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head = {"group", "occurrences", "coverage"};
  if (!groups.empty()) {
    for (const auto& t : groups.front().targets) {
      head.push_back("k@" + FormatFraction(t.target * 100.0, 1) + "%");
    }
  }
  cells.push_back(std::move(head));
  for (const auto& g : groups) {
    std::vector<std::string> row = {g.group, std::to_string(g.total),
                                    FormatFraction(g.achieved * 100.0, 2) + "%"};
    for (const auto& t : g.targets) {
      row.push_back(std::to_string(t.k) + (t.shortfall ? "*" : ""));
    }
    cells.push_back(std::move(row));
  }
  return RenderTable(cells);
}

CoverageReport MakeCoverageReport(const vocab::VocabSelection& selection,
                                  const std::map<std::string, vocab::FreqTable>& tables,
                                  std::span<const double> targets) {
  CoverageReport report;
  report.tokenizer_fingerprint = selection.tokenizer_fingerprint;
  report.keep_count = selection.keep_ids.size();
  for (const auto& [group, table] : tables) {
    if (table.tokenizer_fingerprint != selection.tokenizer_fingerprint) {
      Fail(ErrorKind::kMismatch, "frequency table for group '" + group +
                                     "' and the selection come from different tokenizers");
    }
    GroupCoverage g;
    g.group = group;
    g.total = table.total;
    g.achieved = vocab::Coverage(table, selection.keep_ids);
    for (double target : targets) {
      const auto sel = vocab::SelectForCoverage(table, target);
      g.targets.push_back({target, sel.k, sel.shortfall});
    }
    report.groups.push_back(std::move(g));
  }
  return report;
}

std::string RenderSizeText(const surgery::SizeReport& size) {
  return RenderTable({{"", "before", "after"},
                      {"parameters", std::to_string(size.params_before),
                       std::to_string(size.params_after)},
                      {"payload bytes", std::to_string(size.bytes_before),
                       std::to_string(size.bytes_after)},
                      {"reduction", "", FormatFraction(size.reduction_fraction * 100.0, 2) + "%"}});
}

void WriteReport(const fs::path& stem, const ordered_json& content,
                 const std::string& text) {
  ordered_json doc;
  doc["header"] = {{"tool", "maftprep"}, {"generated_at", io::Timestamp()}};
  doc["report"] = content;
  fs::path json_path = stem;
  json_path += ".json";
  fs::path text_path = stem;
  text_path += ".txt";
  io::WriteFileAtomic(json_path, doc.dump(2) + "\n");
  io::WriteFileAtomic(text_path, text);
}

}  // namespace maftprep::report
