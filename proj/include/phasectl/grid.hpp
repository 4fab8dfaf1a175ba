#pragma once

#include "phasectl/types.hpp"

#include <filesystem>
#include <string>
#include <utility>

namespace phasectl {

// Square periodic grid. There is no non-periodic mode.
struct GridSpec {
  int n = 10;
  double dx = 1.0;

  void validate() const;
  int cells() const { return n * n; }
  int control_dim() const { return 2 * n * n; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

inline int flat_index(int i, int j, int n) { return i * n + j; }
inline std::pair<int, int> unflatten(int k, int n) { return {k / n, k % n}; }
inline int wrap(int i, int n) { return ((i % n) + n) % n; }

// Order parameter on the grid, stored row-major. Values are not clamped.
class PhaseField {
 public:
  PhaseField(GridSpec spec, Vector values);

  static PhaseField zeros(GridSpec spec);
  static PhaseField constant(GridSpec spec, double value);

  const GridSpec& spec() const { return spec_; }
  const Vector& values() const { return values_; }
  double operator()(int i, int j) const { return values_[flat_index(i, j, spec_.n)]; }

  double sum() const { return values_.sum(); }
  double mean() const { return values_.mean(); }
  // True when |phi| > 2 somewhere; a sign the explicit scheme is misbehaving.
  bool overshoot() const;

 private:
  GridSpec spec_;
  Vector values_;
};

// Per-cell actuation (T, h). The stacked vector interleaves [T_k, h_k] with k = i*n + j.
class ControlField {
 public:
  ControlField(GridSpec spec, Vector t_vals, Vector h_vals);

  static ControlField zeros(GridSpec spec);
  static ControlField uniform(GridSpec spec, double t, double h);
  static ControlField from_stacked(GridSpec spec, const Vector& stacked);

  const GridSpec& spec() const { return spec_; }
  const Vector& t_vals() const { return t_; }
  const Vector& h_vals() const { return h_; }
  Vector stacked() const;

 private:
  GridSpec spec_;
  Vector t_;
  Vector h_;
};

enum class GoalKind { banded, checkerboard, custom };

GoalKind parse_goal_kind(const std::string& name);
std::string to_string(GoalKind kind);

struct GoalPattern {
  GoalKind kind;
  PhaseField field;
};

// Banded: horizontal stripes of height n / partitions, starting with +1 at row 0.
// Checkerboard: square blocks of side n / partitions, +1 at the origin block.
GoalPattern make_goal(const GridSpec& spec, GoalKind kind, int partitions);
GoalPattern load_goal(const std::filesystem::path& path, double dx = 1.0);

enum class FieldFormat { binary, text };

// Binary layout: "PFLD", version 0x01, u32 LE n, n*n little-endian f64 row-major.
// Text layout: n lines of n comma-separated decimals.
void write_field(const PhaseField& field, const std::filesystem::path& path,
                 FieldFormat format = FieldFormat::binary);
// Format is detected from the magic bytes.
PhaseField read_field(const std::filesystem::path& path, double dx = 1.0);

std::string encode_field_binary(const PhaseField& field);
std::string encode_field_text(const PhaseField& field);
PhaseField decode_field(const std::string& bytes, double dx = 1.0);

}  // namespace phasectl
