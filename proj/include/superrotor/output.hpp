#pragma once

// File output: rate and trajectory CSV, raw state dumps, SVG line plots.
// Every file is written to a temporary sibling and renamed into place.

#include <algorithm>
#include <cmath>
#include <bit>
#include <cstdint>
#include <cstring>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "superrotor/lindblad.hpp"
#include "superrotor/rates.hpp"

namespace superrotor {

/// 12 significant digits, '.' decimal point regardless of locale.
inline std::string format_number(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& content, bool binary = false)
{
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string rates_csv(const std::vector<RateRow>& rows)
{
  std::string s = "j,j_prime,gamma,Gamma_signal,a_coeff,method\n";
  for (const auto& r : rows) {
    s += std::to_string(r.j) + ',' + std::to_string(r.j_prime) + ',' + format_number(r.gamma) + ',' +
         (r.j_prime == r.j - 2 ? format_number(r.gamma_signal) : std::string()) + ',' +
         format_number(r.a_coefficient) + ',' + to_string(r.method) + '\n';
  }
  return s;
}

inline RateRow to_row(const RateResult& r)
{
  return {r.j, r.j_prime, r.gamma, 2.0 * r.gamma, r.a_coefficient, r.method, r.converged};
}

/// Columns t,trace,purity,min_eig,signal_<j>...; min_eig is the latest diagnostic value.
inline std::string trajectory_csv(const Trajectory& traj, const std::vector<int>& signal_j)
{
  std::string s = "t,trace,purity,min_eig";
  for (int j : signal_j) s += ",signal_" + std::to_string(j);
  s += '\n';
  std::size_t e = 0;
  for (const auto& st : traj.states) {
    while (e + 1 < traj.min_eigenvalues.size() && traj.min_eigenvalues[e + 1].first <= st.time + 1e-15) ++e;
    s += format_number(st.time) + ',' + format_number(st.trace()) + ',' + format_number(st.purity()) + ',' +
         format_number(traj.min_eigenvalues[e].second);
    for (int j : signal_j) s += ',' + format_number(alignment_signal(st, j));
    s += '\n';
  }
  return s;
}

/// Little-endian: int64 D, then D*D (re, im) double pairs, row-major.
inline std::string state_dump(const RotorState& st)
{
  static_assert(std::endian::native == std::endian::little, "state dump assumes a little-endian host");
  const auto d = static_cast<std::int64_t>(st.layout.dim);
  std::string s(sizeof d, '\0');
  std::memcpy(s.data(), &d, sizeof d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      const double v[2] = {st.matrix(i, k).real(), st.matrix(i, k).imag()};
      s.append(reinterpret_cast<const char*>(v), sizeof v);
    }
  }
  return s;
}

inline RotorState read_state_dump(const std::string& bytes, const BasisLayout& layout)
{
  std::int64_t d = 0;
  if (bytes.size() < sizeof d) throw std::runtime_error("state dump truncated");
  std::memcpy(&d, bytes.data(), sizeof d);
  if (d != layout.dim || bytes.size() != sizeof d + static_cast<std::size_t>(d * d) * 16) {
    throw std::runtime_error("state dump does not match layout");
  }
  RotorState st{layout, MatrixXcd(d, d), 0.0};
  const char* p = bytes.data() + sizeof d;
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index k = 0; k < d; ++k, p += 16) {
      double v[2];
      std::memcpy(v, p, sizeof v);
      st.matrix(i, k) = cplx(v[0], v[1]);
    }
  }
  return st;
}

/// Self-contained SVG with one polyline on log-log axes.
inline std::string svg_loglog(const std::vector<std::pair<double, double>>& pts, const std::string& xlabel,
                              const std::string& ylabel)
{
  std::vector<std::pair<double, double>> p;
  for (const auto& [x, y] : pts)
    if (x > 0.0 && y > 0.0) p.emplace_back(std::log10(x), std::log10(y));
  if (p.empty()) throw std::invalid_argument("svg_loglog: no positive points");
  auto [xmin_it, xmax_it] = std::minmax_element(p.begin(), p.end(), [](auto& a, auto& b) { return a.first < b.first; });
  auto [ymin_it, ymax_it] = std::minmax_element(p.begin(), p.end(), [](auto& a, auto& b) { return a.second < b.second; });
  const double x0 = std::floor(xmin_it->first), x1 = std::max(std::ceil(xmax_it->first), x0 + 1.0);
  const double y0 = std::floor(ymin_it->second), y1 = std::max(std::ceil(ymax_it->second), y0 + 1.0);
  const double W = 640, H = 480, L = 80, R = 20, T = 20, B = 60;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
    << W << ' ' << H << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<g stroke=\"black\" fill=\"none\"><line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R
    << "\" y2=\"" << H - B << "\"/><line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
    << "\"/></g>\n<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (int d = static_cast<int>(x0); d <= static_cast<int>(x1); ++d) {
    o << "<text x=\"" << sx(d) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\">1e" << d << "</text>\n";
  }
  for (int d = static_cast<int>(y0); d <= static_cast<int>(y1); ++d) {
    o << "<text x=\"" << L - 8 << "\" y=\"" << sy(d) + 4 << "\" text-anchor=\"end\">1e" << d << "</text>\n";
  }
  o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << xlabel
    << "</text>\n"
    << "<text x=\"20\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
    << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n</g>\n"
    << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
  o.precision(6);
  for (std::size_t i = 0; i < p.size(); ++i) o << (i ? " " : "") << sx(p[i].first) << ',' << sy(p[i].second);
  o << "\"/>\n</svg>\n";
  return o.str();
}

}  // namespace superrotor
