#pragma once
// JSON input parsing and report serialization for the command-line tool.
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gausscouple/datum.hpp"

namespace gctool {

using json = nlohmann::json;

// Parse failure in an input file; the message names the file and the field or line.
class InputError : public gausscouple::Error {
 public:
  using Error::Error;
};

json read_json_file(const std::string& path);

struct DatumFile {
  gausscouple::Datum datum;
  gausscouple::ConstraintFunction nu;
};

// {"dims", "c", "d", "maps": [{"rows", "cols", "entries"}], "nu": [{"subset" (1-based), "bound"}]}
DatumFile parse_datum(const json& j, const std::string& source);
// {"marginals": [{"dim", "entries"}]}
std::vector<gausscouple::PdMatrix> parse_marginals(const json& j, const std::string& source);

// Reals may be given as numbers or as "inf".
double parse_real(const json& j, const std::string& field);

// Non-finite reals become the strings "inf" / "-inf" and NaN becomes null.
json real(double x);
json reals(const std::vector<double>& xs);
json matrix(const gausscouple::Matrix& m);
json subset_1based(const gausscouple::Subset& s);

// Deterministic serialization: keys sorted, every float printed with 17 significant digits.
std::string dump(const json& j, int indent = 2);

// FNV-1a 64 of the compact canonical dump, as 16 hex digits.
std::string digest(const json& j);

}  // namespace gctool
