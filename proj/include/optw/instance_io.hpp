#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optw/instance.hpp"

namespace optw {

enum class FileFormat { SolomonOPTW, CordeauOPTW, GavalasOPTW, CanonicalJSON };

// Best-effort format detection: canonical JSON by leading '{' or .json
// extension, Cordeau by its wider row layout, Solomon otherwise. Explicit
// flags win over detection in the CLI.
FileFormat deduce_format(const std::string& path);

// Parses one benchmark file into an Instance. The text layouts follow the
// publicly distributed OPTW sets: optional banner lines, an optional
// "k v N t" + "D Q" numeric header pair, then one node per row. Solomon and
// Gavalas rows are `id x y duration score open close`; Cordeau rows carry
// the extended `id x y duration score f a <a ids> open close` layout. The
// row with id 0 is the depot; it defines T_start/T_end and is duplicated
// into separate start and end nodes. Rounding is 1 decimal for Solomon and
// 2 for Cordeau/Gavalas.
Instance parse_benchmark(const std::string& path, FileFormat format);
Instance parse_benchmark(const std::string& path);

// Canonical on-disk format: UTF-8 JSON with fixed key order, schema_version
// 1, full-precision numbers. read(write(x)) == x field for field.
void write_canonical(const Instance& inst, const std::string& path);
Instance read_canonical(const std::string& path);

std::string canonical_to_string(const Instance& inst);
Instance canonical_from_string(const std::string& text);

struct Violation {
  std::string rule;
  int node = -1;  // -1 for instance-level rules
};

// Empty iff every Instance/Node invariant holds.
std::vector<Violation> validate_instance(const Instance& inst);

// Sidecar table of published scores keyed by instance name.
struct SidecarScores {
  std::optional<double> best_known;
  std::optional<double> ils;
};
std::map<std::string, SidecarScores> load_sidecar(const std::string& path);

}  // namespace optw
