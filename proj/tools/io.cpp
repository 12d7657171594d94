#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace gctool {

using gausscouple::Matrix;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

namespace {

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw InputError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where + "." + key + ": missing field");
  return *it;
}

int positive_int(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 1) throw InputError(where + ": expected a positive integer");
  return j.get<int>();
}

std::vector<double> real_array(const json& j, const std::string& where, std::size_t expected) {
  if (!j.is_array()) throw InputError(where + ": expected an array");
  if (j.size() != expected) {
    throw InputError(where + ": expected " + std::to_string(expected) + " entries, got " + std::to_string(j.size()));
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_real(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Matrix row_major(const std::vector<double>& v, int rows, int cols) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r) * cols + c];
  return m;
}

void emit(const json& j, std::string& out, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent) * d, ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        emit(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Scalars stay on one line; nested containers get one element per line.
      bool nested = false;
      for (const json& x : j) nested = nested || x.is_structured();
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += (indent < 0 || nested) ? "," : ", ";
        if (nested) newline(depth + 1);
        emit(j[i], out, indent, depth + 1);
      }
      if (nested) newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      if (std::isnan(x)) {
        out += "null";
      } else if (std::isinf(x)) {
        out += x > 0 ? "\"inf\"" : "\"-inf\"";
      } else {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out += buf;
      }
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

double parse_real(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
  }
  throw InputError(where + ": expected a real number or \"inf\"");
}

DatumFile parse_datum(const json& j, const std::string& source) {
  const json& dims_j = field(j, "dims", source);
  if (!dims_j.is_array() || dims_j.empty()) throw InputError(source + ".dims: expected a non-empty array");
  std::vector<int> dims;
  int total = 0;
  for (std::size_t i = 0; i < dims_j.size(); ++i) {
    dims.push_back(positive_int(dims_j[i], source + ".dims[" + std::to_string(i) + "]"));
    total += dims.back();
  }
  const std::vector<double> c = real_array(field(j, "c", source), source + ".c", dims.size());

  const json& maps_j = field(j, "maps", source);
  if (!maps_j.is_array() || maps_j.empty()) throw InputError(source + ".maps: expected a non-empty array");
  std::vector<Matrix> maps;
  for (std::size_t m = 0; m < maps_j.size(); ++m) {
    const std::string where = source + ".maps[" + std::to_string(m) + "]";
    const int rows = positive_int(field(maps_j[m], "rows", where), where + ".rows");
    const int cols = positive_int(field(maps_j[m], "cols", where), where + ".cols");
    if (cols != total) {
      throw InputError(where + ".cols: expected " + std::to_string(total) + " (sum of dims), got " +
                       std::to_string(cols));
    }
    const auto entries = real_array(field(maps_j[m], "entries", where), where + ".entries",
                                    static_cast<std::size_t>(rows) * cols);
    maps.push_back(row_major(entries, rows, cols));
  }
  const std::vector<double> d = real_array(field(j, "d", source), source + ".d", maps.size());

  DatumFile out;
  try {
    out.datum = gausscouple::Datum(gausscouple::Decomposition(dims), c, d, maps);
  } catch (const gausscouple::Error& e) {
    throw InputError(source + ": " + e.what());
  }
  if (j.contains("nu")) {
    const json& nu_j = j["nu"];
    if (!nu_j.is_array()) throw InputError(source + ".nu: expected an array");
    for (std::size_t s = 0; s < nu_j.size(); ++s) {
      const std::string where = source + ".nu[" + std::to_string(s) + "]";
      const json& subset_j = field(nu_j[s], "subset", where);
      if (!subset_j.is_array()) throw InputError(where + ".subset: expected an array");
      gausscouple::Subset subset;
      for (std::size_t a = 0; a < subset_j.size(); ++a) {
        const int index = positive_int(subset_j[a], where + ".subset[" + std::to_string(a) + "]");
        if (index > static_cast<int>(dims.size())) {
          throw InputError(where + ".subset[" + std::to_string(a) + "]: block index out of range");
        }
        subset.push_back(index - 1);
      }
      try {
        out.nu.set(subset, parse_real(field(nu_j[s], "bound", where), where + ".bound"));
      } catch (const gausscouple::SchemaError& e) {
        throw InputError(where + ": " + e.what());
      }
    }
  }
  return out;
}

std::vector<gausscouple::PdMatrix> parse_marginals(const json& j, const std::string& source) {
  const json& list = field(j, "marginals", source);
  if (!list.is_array()) throw InputError(source + ".marginals: expected an array");
  std::vector<gausscouple::PdMatrix> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = source + ".marginals[" + std::to_string(i) + "]";
    const int n = positive_int(field(list[i], "dim", where), where + ".dim");
    const auto entries = real_array(field(list[i], "entries", where), where + ".entries",
                                    static_cast<std::size_t>(n) * n);
    try {
      out.emplace_back(row_major(entries, n, n));
    } catch (const gausscouple::Error& e) {
      throw InputError(where + ": " + e.what());
    }
  }
  return out;
}

json real(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

json reals(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(real(x));
  return out;
}

json matrix(const Matrix& m) {
  json entries = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) entries.push_back(real(m(r, c)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

json subset_1based(const gausscouple::Subset& s) {
  json out = json::array();
  for (int i : s) out.push_back(i + 1);
  return out;
}

std::string dump(const json& j, int indent) {
  std::string out;
  emit(j, out, indent, 0);
  return out;
}

std::string digest(const json& j) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : dump(j, -1)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gctool
