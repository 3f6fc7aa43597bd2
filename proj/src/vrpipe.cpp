#include "obsim/vrpipe.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Geometry>

namespace obsim {

std::int64_t flat_index(int r, int c, int R, int C) {
  if (R < 1 || C < 1) throw DomainError("grid must be at least 1 x 1");
  if (r < 1 || r > R || c < 1 || c > C) {
    throw DomainError("cell (" + std::to_string(r) + ", " + std::to_string(c) +
                      ") outside " + std::to_string(R) + " x " + std::to_string(C));
  }
  return static_cast<std::int64_t>(r - 1) * C + c;
}

CellIndex cell_of(std::int64_t i, int R, int C) {
  if (R < 1 || C < 1) throw DomainError("grid must be at least 1 x 1");
  if (i < 1 || i > static_cast<std::int64_t>(R) * C) {
    throw DomainError("flat index " + std::to_string(i) + " out of range");
  }
  return {static_cast<int>((i - 1) / C) + 1, static_cast<int>((i - 1) % C) + 1};
}

RegisterMatrix::RegisterMatrix(int N, int M, int bits) : N_(N), M_(M), bits_(bits) {
  if (N < 1 || M < 1) throw ConfigError("registers", "dimensions must be positive");
  if (bits < 1 || bits > 32) throw ConfigError("registers.bits", "bit width must be in [1, 32]");
  max_value_ = bits == 32 ? 0xFFFFFFFFu : (1u << bits) - 1u;
  cells_.assign(static_cast<std::size_t>(N) * static_cast<std::size_t>(M), 0u);
}

std::size_t RegisterMatrix::offset(int r, int c) const {
  return static_cast<std::size_t>(flat_index(r, c, N_, M_) - 1);
}

std::uint32_t RegisterMatrix::get(int r, int c) const { return cells_[offset(r, c)]; }

void RegisterMatrix::set(int r, int c, std::uint32_t value) {
  if (value > max_value_) {
    throw DomainError("value " + std::to_string(value) + " exceeds " + std::to_string(bits_) +
                      "-bit register");
  }
  cells_[offset(r, c)] = value;
}

std::uint32_t PixelFrame::at(int r, int c) const {
  return values[static_cast<std::size_t>(flat_index(r, c, R, C) - 1)];
}

std::uint32_t default_intensity(std::string_view body) {
  if (body == "Earth") return 170;
  if (body == "Moon") return 85;
  return 255;
}

std::optional<CellIndex> pixel_of(const RenderGrid& grid, double x, double y) {
  if (!(x >= grid.xmin && x < grid.xmax && y > grid.ymin && y <= grid.ymax)) return std::nullopt;
  const double u = (x - grid.xmin) / (grid.xmax - grid.xmin) * grid.C;
  const double v = (grid.ymax - y) / (grid.ymax - grid.ymin) * grid.R;
  const int c = static_cast<int>(std::floor(u)) + 1;
  const int r = static_cast<int>(std::floor(v)) + 1;
  if (r < 1 || r > grid.R || c < 1 || c > grid.C) return std::nullopt;
  return CellIndex{r, c};
}

PixelFrame render(const PhysicalSystem& system, const VectorXd& q, double t,
                  const RenderGrid& grid, RegisterMatrix& registers) {
  if (grid.R < 1 || grid.C < 1) throw ConfigError("render", "R and C must be positive");
  if (!(grid.xmin < grid.xmax) || !(grid.ymin < grid.ymax)) {
    throw ConfigError("render.window", "empty world window");
  }
  if (grid.R > registers.rows() || grid.C > registers.cols()) {
    throw ConfigError("render", "frame larger than the register matrix");
  }
  if (q.size() != system.n()) throw ConfigError("render", "state does not match system");

  for (int r = 1; r <= grid.R; ++r) {
    for (int c = 1; c <= grid.C; ++c) registers.set(r, c, 0u);
  }
  for (const auto& body : system.bodies()) {
    const Vector3d p = detail::body_position<double>(body, q);
    const auto cell = pixel_of(grid, p.x(), p.y());
    if (!cell) continue;
    const auto found = grid.intensity.find(body.spec.name);
    const std::uint32_t level =
        found != grid.intensity.end() ? found->second : default_intensity(body.spec.name);
    if (level > registers.get(cell->r, cell->c)) registers.set(cell->r, cell->c, level);
  }

  PixelFrame frame;
  frame.R = grid.R;
  frame.C = grid.C;
  frame.t = t;
  frame.values.resize(static_cast<std::size_t>(grid.R) * static_cast<std::size_t>(grid.C));
  for (int r = 1; r <= grid.R; ++r) {
    for (int c = 1; c <= grid.C; ++c) {
      frame.values[static_cast<std::size_t>(flat_index(r, c, grid.R, grid.C) - 1)] =
          registers.get(r, c);
    }
  }
  return frame;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void fnv_mix(std::uint64_t& h, std::uint32_t value) {
  for (int b = 0; b < 4; ++b) {
    h ^= (value >> (8 * b)) & 0xFFu;
    h *= kFnvPrime;
  }
}

}  // namespace

std::uint64_t checksum(const PixelFrame& frame) {
  std::uint64_t h = kFnvOffset;
  for (auto v : frame.values) fnv_mix(h, v);
  return h;
}

std::uint64_t checksum(const RegisterMatrix& registers, int R, int C) {
  std::uint64_t h = kFnvOffset;
  for (int r = 1; r <= R; ++r) {
    for (int c = 1; c <= C; ++c) fnv_mix(h, registers.get(r, c));
  }
  return h;
}

Vector3d controller_forward(const ControllerState& ctrl) {
  const Eigen::Matrix3d rot =
      (Eigen::AngleAxisd(ctrl.orientation.z(), Vector3d::UnitZ()) *
       Eigen::AngleAxisd(ctrl.orientation.y(), Vector3d::UnitY()) *
       Eigen::AngleAxisd(ctrl.orientation.x(), Vector3d::UnitX()))
          .toRotationMatrix();
  return rot * Vector3d::UnitX();
}

ExternalForce controller_to_force(const ControllerState& ctrl, double F_max,
                                  const std::optional<std::string>& aimed, double t) {
  if (!aimed || aimed->empty()) throw ConfigError("aim", "no body is aimed at");
  if (!std::isfinite(ctrl.trigger) || ctrl.trigger < 0.0 || ctrl.trigger > 1.0) {
    throw ConfigError("trigger", "must lie in [0, 1]");
  }
  if (!std::isfinite(F_max) || F_max < 0.0) throw ConfigError("F_max", "must be finite and >= 0");
  if (!ctrl.orientation.allFinite()) throw ConfigError("orientation", "must be finite");
  ExternalForce force;
  force.target = *aimed;
  force.kind = Impulse{ctrl.trigger * F_max * controller_forward(ctrl), t};
  return force;
}

std::string encode_pgm(const PixelFrame& frame) {
  if (frame.values.size() != static_cast<std::size_t>(frame.R) * static_cast<std::size_t>(frame.C)) {
    throw DomainError("frame value count does not match R x C");
  }
  std::string out = "P5\n" + std::to_string(frame.C) + " " + std::to_string(frame.R) + "\n255\n";
  out.reserve(out.size() + frame.values.size());
  for (auto v : frame.values) {
    if (v > 255u) throw DomainError("pixel value " + std::to_string(v) + " exceeds maxval 255");
    out.push_back(static_cast<char>(v));
  }
  return out;
}

PixelFrame decode_pgm(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (!in || magic != "P5" || width < 1 || height < 1 || maxval != 255) {
    throw DomainError("not an 8-bit binary PGM");
  }
  in.get();
  PixelFrame frame;
  frame.R = height;
  frame.C = width;
  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  const auto pos = in.tellg();
  if (pos < 0) throw DomainError("truncated PGM header");
  const auto start = static_cast<std::size_t>(pos);
  if (start > bytes.size() || bytes.size() - start != count) {
    throw DomainError("PGM payload has the wrong length");
  }
  frame.values.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    frame.values.push_back(static_cast<unsigned char>(bytes[start + k]));
  }
  return frame;
}

}  // namespace obsim
