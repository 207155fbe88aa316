//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cslme/estimate.hpp"
#include "cslme/model.hpp"

namespace cslme {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitInput = 1, kExitNotConverged = 2 };

struct InputSchema {
  std::string group_column;
  std::string response_column;
  std::vector<std::string> feature_columns;
  /// Subset of the features; "(Intercept)" (any case, parentheses optional)
  /// names the prepended intercept column.
  std::vector<std::string> random_effect_columns;
  bool intercept = true;
};

struct Ingested {
  Dataset data;
  ModelSpec spec;
};

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF, embedded
/// newlines. Every record carries the 1-based line on which it starts.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRecord> read_csv(std::istream& in);

/// Long-format CSV to grouped data. Groups are ordered by first appearance,
/// rows keep file order. ParseError names the offending line and column.
Ingested ingest(std::istream& in, const InputSchema& schema);
Ingested ingest_file(const std::string& path, const InputSchema& schema);

/// `key = value` lines, `#` starts a comment, blank lines ignored.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_kv(std::istream& in);
KeyValues parse_kv_file(const std::string& path);

/// FNV-1a 64-bit over bytes.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t h = 0xcbf29ce484222325ULL);
/// Hash of labels, shapes and the exact bit patterns of y and X.
std::uint64_t data_fingerprint(const Dataset& data);

struct RunConfig {
  Method method = Method::kPls;
  FitConfig fit;
  int pit_q = 2;
  bool constrained = true;
  std::string format = "json";  // json | csv
};

int cmd_fit(const std::string& data_path, const InputSchema& schema,
            const RunConfig& config, std::ostream& out, std::ostream& err);

int cmd_simulate(const std::string& config_path,
                 const std::optional<std::string>& format, int threads,
                 std::ostream& out, std::ostream& err);

/// `sidecar` receives the level-band cells when the request lists levels.
int cmd_contour(const std::string& request_path,
                const std::optional<std::string>& data_path,
                const InputSchema& schema, std::ostream& out,
                std::ostream* sidecar, std::ostream& err);

int cmd_ranef(const std::string& data_path, const InputSchema& schema,
              const std::string& fit_document_path, const std::string& format,
              std::ostream& out, std::ostream& err);

}  // namespace cslme
