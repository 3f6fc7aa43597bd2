#include "obsim/trajectory_io.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace obsim {

namespace {

using nlohmann::json;

constexpr const char* kAxes[] = {"x", "y", "z", "vx", "vy", "vz"};

void put_number(std::string& line, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  line += buf;
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from(const json& rows, const std::string& field) {
  if (!rows.is_array() || rows.empty() || !rows[0].is_array()) {
    throw ConfigError(field, "expected a non-empty matrix");
  }
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != rows[0].size()) {
      throw ConfigError(field, "ragged matrix");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c].get<double>();
    }
  }
  return m;
}

json hermite_json(const CubicHermite<double>& h) {
  return {{"knots", std::vector<double>(h.knots().data(), h.knots().data() + h.knots().size())},
          {"values", matrix_json(h.values())},
          {"slopes", matrix_json(h.slopes())}};
}

CubicHermite<double> hermite_from(const json& j, const std::string& field) {
  const auto knots = j.at("knots").get<std::vector<double>>();
  VectorXd x = Eigen::Map<const VectorXd>(knots.data(), static_cast<Eigen::Index>(knots.size()));
  return CubicHermite<double>(std::move(x), matrix_from(j.at("values"), field + ".values"),
                              matrix_from(j.at("slopes"), field + ".slopes"));
}

}  // namespace

void write_csv(std::ostream& out, const Trajectory& traj) {
  std::string line = "t";
  for (const auto& body : traj.meta.bodies) {
    for (const char* axis : kAxes) line += "," + body + "_" + axis;
  }
  out << line << '\n';
  const std::size_t bodies = traj.meta.bodies.size();
  for (const auto& s : traj.samples) {
    if (s.q.size() != static_cast<Eigen::Index>(3 * bodies)) {
      throw ConfigError("trajectory", "sample width does not match the body list");
    }
    line.clear();
    put_number(line, s.t);
    for (std::size_t b = 0; b < bodies; ++b) {
      const auto slot = static_cast<Eigen::Index>(3 * b);
      for (int i = 0; i < 3; ++i) {
        line += ',';
        put_number(line, s.q[slot + i]);
      }
      for (int i = 0; i < 3; ++i) {
        line += ',';
        put_number(line, s.qdot[slot + i]);
      }
    }
    out << line << '\n';
  }
}

std::string to_csv(const Trajectory& traj) {
  std::ostringstream out;
  write_csv(out, traj);
  return out.str();
}

Trajectory parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv", "missing header");
  const auto header = split(line, ',');
  if (header.empty() || header[0] != "t" || (header.size() - 1) % 6 != 0) {
    throw ConfigError("csv", "header must be t followed by six columns per body");
  }
  Trajectory traj;
  const std::size_t bodies = (header.size() - 1) / 6;
  for (std::size_t b = 0; b < bodies; ++b) {
    const std::string& first = header[1 + 6 * b];
    if (first.size() < 3 || first.substr(first.size() - 2) != "_x") {
      throw ConfigError("csv", "unexpected column '" + first + "'");
    }
    const std::string name = first.substr(0, first.size() - 2);
    for (int i = 0; i < 6; ++i) {
      if (header[1 + 6 * b + static_cast<std::size_t>(i)] != name + "_" + kAxes[i]) {
        throw ConfigError("csv", "unexpected column '" + header[1 + 6 * b + i] + "'");
      }
    }
    traj.meta.bodies.push_back(name);
  }
  const auto n = static_cast<Eigen::Index>(3 * bodies);
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ConfigError("csv", "row " + std::to_string(row) + " has the wrong column count");
    }
    Sample s;
    s.q.resize(n);
    s.qdot.resize(n);
    try {
      s.t = std::stod(cells[0]);
      for (std::size_t b = 0; b < bodies; ++b) {
        for (int i = 0; i < 3; ++i) {
          s.q[static_cast<Eigen::Index>(3 * b) + i] = std::stod(cells[1 + 6 * b + i]);
          s.qdot[static_cast<Eigen::Index>(3 * b) + i] = std::stod(cells[4 + 6 * b + i]);
        }
      }
    } catch (const std::logic_error&) {
      throw ConfigError("csv", "row " + std::to_string(row) + " holds a non-numeric value");
    }
    traj.samples.push_back(std::move(s));
  }
  if (traj.size() >= 2) traj.meta.dt = traj.samples[1].t - traj.samples[0].t;
  return traj;
}

Trajectory read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

std::string model_to_json(const ReducedModel& model) {
  const auto& d = model.drive();
  json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  doc["drive"] = {{"chart", d.chart == ChartKind::cylindrical ? "cylindrical" : "cartesian"},
                  {"index", d.index},
                  {"body", d.body},
                  {"direction", d.direction},
                  {"margin", d.margin},
                  {"label", d.label()},
                  {"unwrap_offsets", d.unwrap_offsets}};
  doc["n"] = model.n();
  doc["bodies"] = model.bodies();
  doc["slave_slots"] = model.slave_slots();
  doc["slaves"] = hermite_json(model.slaves());
  doc["drive_law"] = hermite_json(model.drive_law());
  if (model.slot_masses()) {
    const auto& m = *model.slot_masses();
    doc["slot_masses"] = std::vector<double>(m.data(), m.data() + m.size());
  } else {
    doc["slot_masses"] = nullptr;
  }
  return doc.dump(1) + "\n";
}

ReducedModel model_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("model", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != kModelFormat) {
    throw ConfigError("model.format", "not a reduced-model artifact");
  }
  if (doc.value("version", 0) != kModelVersion) {
    throw ConfigError("model.version", "unsupported version");
  }
  try {
    const auto& jd = doc.at("drive");
    DriveCoordinate drive;
    drive.chart = jd.at("chart").get<std::string>() == "cylindrical" ? ChartKind::cylindrical
                                                                    : ChartKind::cartesian;
    drive.index = jd.at("index").get<int>();
    drive.body = jd.at("body").get<std::string>();
    drive.direction = jd.at("direction").get<int>();
    drive.margin = jd.at("margin").get<double>();
    drive.unwrap_offsets = jd.at("unwrap_offsets").get<std::vector<long>>();
    std::optional<VectorXd> masses;
    if (!doc.at("slot_masses").is_null()) {
      const auto m = doc.at("slot_masses").get<std::vector<double>>();
      masses = Eigen::Map<const VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
    }
    return ReducedModel(std::move(drive), doc.at("n").get<int>(),
                        doc.at("bodies").get<std::vector<std::string>>(),
                        doc.at("slave_slots").get<std::vector<int>>(),
                        hermite_from(doc.at("slaves"), "model.slaves"),
                        hermite_from(doc.at("drive_law"), "model.drive_law"), std::move(masses));
  } catch (const json::exception& e) {
    throw ConfigError("model", std::string("malformed artifact: ") + e.what());
  }
}

std::string report_to_json(const DistinguisherReport& report, int indent) {
  json doc;
  doc["candidate"] = to_string(report.candidate);
  doc["p"] = report.p;
  doc["n"] = report.n;
  doc["dof_criterion"] = dof_criterion(report.p, report.n);
  doc["pre_equal"] = report.pre_equal;
  doc["pre_phase_failed"] = report.pre_phase_failed;
  doc["t_apply"] = report.t_apply;
  doc["eps_q"] = report.resolution.eps_q;
  doc["eps_t"] = report.resolution.eps_t;
  doc["pass_mult"] = report.pass_mult;
  doc["fail_mult"] = report.fail_mult;
  doc["d_max"] = report.d_max;
  doc["verdict"] = to_string(report.verdict);
  doc["times"] = report.times;
  doc["deviation"] = report.deviation;
  return doc.dump(indent);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::ios_base::failure("write failed for '" + path.string() + "'");
}

}  // namespace obsim
