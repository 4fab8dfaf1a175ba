#include "phasectl/grid.hpp"

#include "binio.hpp"
#include "fileio.hpp"
#include "phasectl/errors.hpp"

#include <charconv>
#include <cmath>
#include <string_view>
#include <vector>

namespace phasectl {

namespace {

constexpr std::string_view kFieldMagic = "PFLD";
constexpr std::uint8_t kFieldVersion = 1;

void require_finite(const Vector& v, const char* what) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) {
      throw ConfigError(std::string(what) + " has a non-finite entry at flat index " +
                        std::to_string(k));
    }
  }
}

}  // namespace

void GridSpec::validate() const {
  if (n < 2) throw ConfigError("grid n must be >= 2, got " + std::to_string(n));
  if (!(dx > 0.0) || !std::isfinite(dx)) {
    throw ConfigError("grid dx must be positive, got " + std::to_string(dx));
  }
}

PhaseField::PhaseField(GridSpec spec, Vector values) : spec_(spec), values_(std::move(values)) {
  spec_.validate();
  if (values_.size() != spec_.cells()) {
    throw ConfigError("phase field has " + std::to_string(values_.size()) +
                      " values, grid needs " + std::to_string(spec_.cells()));
  }
  require_finite(values_, "phase field");
}

PhaseField PhaseField::zeros(GridSpec spec) {
  spec.validate();
  return PhaseField(spec, Vector::Zero(spec.cells()));
}

PhaseField PhaseField::constant(GridSpec spec, double value) {
  spec.validate();
  return PhaseField(spec, Vector::Constant(spec.cells(), value));
}

bool PhaseField::overshoot() const { return values_.cwiseAbs().maxCoeff() > 2.0; }

ControlField::ControlField(GridSpec spec, Vector t_vals, Vector h_vals)
    : spec_(spec), t_(std::move(t_vals)), h_(std::move(h_vals)) {
  spec_.validate();
  if (t_.size() != spec_.cells() || h_.size() != spec_.cells()) {
    throw ConfigError("control field arrays must have " + std::to_string(spec_.cells()) +
                      " entries");
  }
  require_finite(t_, "control T");
  require_finite(h_, "control h");
}

ControlField ControlField::zeros(GridSpec spec) { return uniform(spec, 0.0, 0.0); }

ControlField ControlField::uniform(GridSpec spec, double t, double h) {
  spec.validate();
  return ControlField(spec, Vector::Constant(spec.cells(), t), Vector::Constant(spec.cells(), h));
}

ControlField ControlField::from_stacked(GridSpec spec, const Vector& stacked) {
  spec.validate();
  if (stacked.size() != spec.control_dim()) {
    throw ConfigError("stacked control has " + std::to_string(stacked.size()) +
                      " entries, grid needs " + std::to_string(spec.control_dim()));
  }
  Vector t(spec.cells());
  Vector h(spec.cells());
  for (int k = 0; k < spec.cells(); ++k) {
    t[k] = stacked[2 * k];
    h[k] = stacked[2 * k + 1];
  }
  return ControlField(spec, std::move(t), std::move(h));
}

Vector ControlField::stacked() const {
  Vector out(spec_.control_dim());
  for (int k = 0; k < spec_.cells(); ++k) {
    out[2 * k] = t_[k];
    out[2 * k + 1] = h_[k];
  }
  return out;
}

GoalKind parse_goal_kind(const std::string& name) {
  if (name == "banded") return GoalKind::banded;
  if (name == "checkerboard") return GoalKind::checkerboard;
  if (name == "custom" || name == "file") return GoalKind::custom;
  throw ConfigError("unknown goal kind '" + name + "' (banded, checkerboard, file)");
}

std::string to_string(GoalKind kind) {
  switch (kind) {
    case GoalKind::banded: return "banded";
    case GoalKind::checkerboard: return "checkerboard";
    case GoalKind::custom: return "file";
  }
  return "?";
}

GoalPattern make_goal(const GridSpec& spec, GoalKind kind, int partitions) {
  spec.validate();
  if (kind == GoalKind::custom) {
    throw ConfigError("custom goals are loaded from a field file, not generated");
  }
  if (partitions < 1 || spec.n % partitions != 0) {
    throw ConfigError("partition count " + std::to_string(partitions) +
                      " does not divide grid size " + std::to_string(spec.n));
  }
  const int width = spec.n / partitions;
  Vector v(spec.cells());
  for (int i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.n; ++j) {
      int parity = (i / width) % 2;
      if (kind == GoalKind::checkerboard) parity = (i / width + j / width) % 2;
      v[flat_index(i, j, spec.n)] = parity == 0 ? 1.0 : -1.0;
    }
  }
  return {kind, PhaseField(spec, std::move(v))};
}

GoalPattern load_goal(const std::filesystem::path& path, double dx) {
  return {GoalKind::custom, read_field(path, dx)};
}

std::string encode_field_binary(const PhaseField& field) {
  std::string out(kFieldMagic);
  out.push_back(static_cast<char>(kFieldVersion));
  binio::put_u32(out, static_cast<std::uint32_t>(field.spec().n));
  for (Eigen::Index k = 0; k < field.values().size(); ++k) binio::put_f64(out, field.values()[k]);
  return out;
}

std::string encode_field_text(const PhaseField& field) {
  std::string out;
  const int n = field.spec().n;
  char buf[32];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j > 0) out.push_back(',');
      auto res = std::to_chars(buf, buf + sizeof buf, field(i, j));
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

namespace {

PhaseField decode_binary(const std::string& bytes, double dx) {
  binio::Reader r(bytes, "field");
  r.expect_magic(kFieldMagic, kFieldVersion);
  const std::uint32_t n = r.u32("grid size");
  if (n < 2 || n > 100000) r.fail("implausible grid size " + std::to_string(n));
  const std::size_t count = static_cast<std::size_t>(n) * n;
  if ((bytes.size() - r.pos()) < count * 8) {
    r.fail("payload holds " + std::to_string((bytes.size() - r.pos()) / 8) + " of " +
           std::to_string(count) + " declared values");
  }
  Vector v(static_cast<Eigen::Index>(count));
  for (std::size_t k = 0; k < count; ++k) v[static_cast<Eigen::Index>(k)] = r.f64("value");
  r.expect_end();
  return PhaseField(GridSpec{static_cast<int>(n), dx}, std::move(v));
}

PhaseField decode_text(const std::string& text, double dx) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  int line = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    ++line;
    std::string_view row(text.data() + pos, eol - pos);
    pos = eol + 1;
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    if (row.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::vector<double> values;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = row.find(',', start);
      std::string_view tok = row.substr(start, comma == std::string_view::npos ? row.npos : comma - start);
      while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
      while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.remove_suffix(1);
      double value = 0.0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
      const std::string where =
          "field: line " + std::to_string(line) + ", column " + std::to_string(start + 1);
      if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        throw ParseError(where + ": cannot parse '" + std::string(tok) + "' as a number");
      }
      if (!std::isfinite(value)) throw ParseError(where + ": non-finite value");
      values.push_back(value);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(values));
  }
  const std::size_t n = rows.size();
  if (n < 2) throw ParseError("field: need at least 2 rows, found " + std::to_string(n));
  Vector v(static_cast<Eigen::Index>(n * n));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) {
      throw ParseError("field: row " + std::to_string(i + 1) + " has " +
                       std::to_string(rows[i].size()) + " values, expected " + std::to_string(n));
    }
    for (std::size_t j = 0; j < n; ++j) v[static_cast<Eigen::Index>(i * n + j)] = rows[i][j];
  }
  return PhaseField(GridSpec{static_cast<int>(n), dx}, std::move(v));
}

}  // namespace

PhaseField decode_field(const std::string& bytes, double dx) {
  if (bytes.compare(0, kFieldMagic.size(), kFieldMagic) == 0) return decode_binary(bytes, dx);
  return decode_text(bytes, dx);
}

void write_field(const PhaseField& field, const std::filesystem::path& path, FieldFormat format) {
  fileio::dump(path, format == FieldFormat::binary ? encode_field_binary(field)
                                                   : encode_field_text(field));
}

PhaseField read_field(const std::filesystem::path& path, double dx) {
  try {
    return decode_field(fileio::slurp(path), dx);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace phasectl
