#include "l1ac/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace l1ac::sim {

std::size_t Trace::col(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::out_of_range("Trace: no column named " + name);
}

double Trace::max_abs(const std::string& name, double t0, double t1) const {
  const std::size_t c = col(name);
  double best = 0.0;
  for (const auto& r : rows)
    if (r[0] >= t0 && r[0] <= t1) best = std::max(best, std::abs(r[c]));
  return best;
}

double Trace::rms(const std::string& name, double t0, double t1) const {
  const std::size_t c = col(name);
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& r : rows)
    if (r[0] >= t0 && r[0] <= t1) {
      acc += r[c] * r[c];
      ++count;
    }
  return count ? std::sqrt(acc / static_cast<double>(count)) : 0.0;
}

double Trace::max_abs_diff(const std::string& a, const std::string& b, double t0,
                           double t1) const {
  const std::size_t ca = col(a), cb = col(b);
  double best = 0.0;
  for (const auto& r : rows)
    if (r[0] >= t0 && r[0] <= t1)
      best = std::max(best, std::abs(r[ca] - r[cb]));
  return best;
}

std::string Trace::csv_string() const {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << " version=" << tool_version;
  if (aborted) os << " aborted_at=" << abort_time;
  os << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    os << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  char buf[32];
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", r[i]);
      os << buf << (i + 1 < r.size() ? "," : "\n");
    }
  }
  return os.str();
}

void Trace::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << csv_string();
}

void Schedule::validate() {
  if (h <= 0.0 || Ts <= 0.0 || horizon < 0.0)
    throw std::invalid_argument("schedule: h and Ts must be positive, horizon nonnegative");
  auto as_steps = [this](double period, const char* what) {
    const double ratio = period / h;
    const long long k = std::llround(ratio);
    if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-6)
      throw std::invalid_argument(std::string("schedule: ") + what +
                                  " is not an integer multiple of h");
    return k;
  };
  steps_per_sample = as_steps(Ts, "Ts");
  steps_per_control = as_steps(1.0 / control_rate_hz, "control period");
  steps_per_model = as_steps(1.0 / model_rate_hz, "model period");
  steps_total = std::llround(horizon / h);
  if (std::abs(horizon / h - static_cast<double>(steps_total)) > 1e-6)
    throw std::invalid_argument("schedule: horizon is not an integer multiple of h");
  if (record_stride < 1) record_stride = 1;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace l1ac::sim
