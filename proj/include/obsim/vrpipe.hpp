#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "obsim/dynamics.hpp"

namespace obsim {

/// Row-major 1-indexed flat index: (r - 1) * C + c.
std::int64_t flat_index(int r, int c, int R, int C);

struct CellIndex {
  int r = 0;
  int c = 0;
  bool operator==(const CellIndex&) const = default;
};

/// Inverse of flat_index for 1 <= i <= R * C.
CellIndex cell_of(std::int64_t i, int R, int C);

/// N x M grid of unsigned cells, each limited to `bits` bits.
class RegisterMatrix {
 public:
  RegisterMatrix(int N, int M, int bits = 8);

  int rows() const { return N_; }
  int cols() const { return M_; }
  int bits() const { return bits_; }
  std::uint32_t max_value() const { return max_value_; }

  /// 1-indexed access.
  std::uint32_t get(int r, int c) const;
  void set(int r, int c, std::uint32_t value);

 private:
  std::size_t offset(int r, int c) const;

  int N_;
  int M_;
  int bits_;
  std::uint32_t max_value_;
  std::vector<std::uint32_t> cells_;
};

/// Immutable snapshot of the screen. Values are stored row-major.
struct PixelFrame {
  int R = 0;
  int C = 0;
  double t = 0.0;
  std::vector<std::uint32_t> values;

  /// 1-indexed access.
  std::uint32_t at(int r, int c) const;
  bool operator==(const PixelFrame&) const = default;
};

/// World rectangle [xmin, xmax) x [ymin, ymax) projected on the xy plane and
/// mapped onto R x C pixels; row 1 is the top (largest y).
struct RenderGrid {
  double xmin = -1.2;
  double xmax = 1.2;
  double ymin = -1.2;
  double ymax = 1.2;
  int R = 64;
  int C = 64;
  /// Mark intensity per body label; unlisted bodies fall back to default_intensity.
  std::map<std::string, std::uint32_t> intensity;
};

/// Sun 255, Earth 170, Moon 85, any other body 255.
std::uint32_t default_intensity(std::string_view body);

/// Pixel containing the world point (x, y), if any.
std::optional<CellIndex> pixel_of(const RenderGrid& grid, double x, double y);

/// Rasterizes the bodies into the R x C block of `registers` (other cells are
/// left untouched), then publishes that block as a frame.
PixelFrame render(const PhysicalSystem& system, const VectorXd& q, double t,
                  const RenderGrid& grid, RegisterMatrix& registers);

/// FNV-1a over the little-endian cell values of a frame.
std::uint64_t checksum(const PixelFrame& frame);
/// Same digest over the R x C block of the registers.
std::uint64_t checksum(const RegisterMatrix& registers, int R, int C);

/// Controller pose: position and ZYX Euler angles (roll, pitch, yaw) in radians.
struct ControllerState {
  Vector3d position = Vector3d::Zero();
  Vector3d orientation = Vector3d::Zero();
  std::vector<bool> buttons;
  double trigger = 0.0;
};

/// Unit vector of the controller's +x axis in world coordinates.
Vector3d controller_forward(const ControllerState& ctrl);

/// Impulse of trigger * F_max along the controller forward axis, applied to
/// the aimed body at time t.
ExternalForce controller_to_force(const ControllerState& ctrl, double F_max,
                                  const std::optional<std::string>& aimed, double t);

/// Binary greymap: "P5\n<C> <R>\n255\n" followed by R * C bytes.
std::string encode_pgm(const PixelFrame& frame);
PixelFrame decode_pgm(std::string_view bytes);

}  // namespace obsim
