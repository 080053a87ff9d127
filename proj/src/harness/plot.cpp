#include "rtsac/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rtsac/core/error.hpp"

namespace rtsac::harness {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 180.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                                    "#7f7f7f"};

const char* colour(std::size_t i) { return kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))]; }

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

struct Range {
  double lo;
  double hi;
};

// Widens a degenerate range so flat data still gets an axis.
Range padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(1.0, std::abs(lo) * 0.1);
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * 0.05;
  return {lo - pad, hi + pad};
}

std::vector<double> ticks(Range r, int count) {
  std::vector<double> out;
  const double raw = (r.hi - r.lo) / count;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  }
  for (double t = std::ceil(r.lo / step) * step; t <= r.hi + step * 1e-9; t += step) out.push_back(t);
  return out;
}

class Canvas {
 public:
  Canvas(Range x, Range y, const std::string& title) : x_(x), y_(y) {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth << "\" height=\""
         << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
         << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         << "font-size=\"16\">" << escape(title) << "</text>\n";
  }

  double px(double x) const { return kLeft + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight); }
  double py(double y) const { return kHeight - kBottom - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom); }

  void axes(const std::string& x_label, const std::string& y_label, bool x_ticks) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out_ << "<g stroke=\"black\" stroke-width=\"1\">\n"
         << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\"/>\n"
         << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\"/>\n"
         << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (double t : ticks(y_, 5)) {
      out_ << "<line x1=\"" << x0 - 4 << "\" y1=\"" << num(py(t)) << "\" x2=\"" << x0 << "\" y2=\"" << num(py(t))
           << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << x0 - 6 << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << num(t)
           << "</text>\n";
    }
    if (x_ticks) {
      for (double t : ticks(x_, 6)) {
        out_ << "<line x1=\"" << num(px(t)) << "\" y1=\"" << y0 << "\" x2=\"" << num(px(t)) << "\" y2=\"" << y0 + 4
             << "\" stroke=\"black\"/>\n"
             << "<text x=\"" << num(px(t)) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << num(t)
             << "</text>\n";
      }
    }
    out_ << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
         << escape(x_label) << "</text>\n"
         << "<text x=\"16\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
         << (y0 + y1) / 2 << ")\">" << escape(y_label) << "</text>\n</g>\n";
  }

  void legend(std::size_t index, const std::string& label, const char* fill) {
    const double x = kWidth - kRight + 16;
    const double y = kTop + 20.0 * static_cast<double>(index);
    out_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"14\" height=\"10\" fill=\"" << fill << "\"/>\n"
         << "<text x=\"" << x + 20 << "\" y=\"" << y + 9 << "\" font-family=\"sans-serif\" font-size=\"12\">"
         << escape(label) << "</text>\n";
  }

  std::ostringstream& raw() { return out_; }

  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  Range x_;
  Range y_;
  std::ostringstream out_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace

std::string render_curves_svg(std::span<const CurveTable> tables, const std::string& title) {
  if (tables.empty()) throw Error(ErrorKind::Usage, "nothing to plot");
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& t : tables) {
    for (const auto& r : t.rows) {
      xlo = std::min(xlo, static_cast<double>(r.episode));
      xhi = std::max(xhi, static_cast<double>(r.episode));
      ylo = std::min({ylo, r.ci_low, r.mean});
      yhi = std::max({yhi, r.ci_high, r.mean});
    }
  }
  if (!std::isfinite(xlo)) throw Error(ErrorKind::Usage, "tables have no rows");
  Canvas canvas(xhi > xlo ? Range{xlo, xhi} : padded(xlo, xhi), padded(ylo, yhi), title);
  canvas.axes("episode", "return", true);
  auto& out = canvas.raw();
  for (std::size_t i = 0; i < tables.size(); ++i) {
    const auto& rows = tables[i].rows;
    if (rows.empty()) continue;
    out << "<g>\n<polygon fill=\"" << colour(i) << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (const auto& r : rows) out << num(canvas.px(static_cast<double>(r.episode))) << ',' << num(canvas.py(r.ci_high)) << ' ';
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
      out << num(canvas.px(static_cast<double>(it->episode))) << ',' << num(canvas.py(it->ci_low)) << ' ';
    }
    out << "\"/>\n<polyline fill=\"none\" stroke=\"" << colour(i) << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : rows) out << num(canvas.px(static_cast<double>(r.episode))) << ',' << num(canvas.py(r.mean)) << ' ';
    out << "\"/>\n</g>\n";
    canvas.legend(i, tables[i].label, colour(i));
  }
  return canvas.finish();
}

std::string render_bars_svg(std::span<const BarGroup> groups, const std::string& title, const std::string& y_label) {
  if (groups.empty()) throw Error(ErrorKind::Usage, "nothing to plot");
  std::vector<std::string> labels;
  double yhi = 0.0;
  for (const auto& g : groups) {
    for (const auto& b : g.bars) {
      if (std::find(labels.begin(), labels.end(), b.label) == labels.end()) labels.push_back(b.label);
      yhi = std::max(yhi, b.value);
    }
  }
  if (labels.empty()) throw Error(ErrorKind::Usage, "bar groups are empty");
  const double n = static_cast<double>(groups.size());
  Canvas canvas({0.0, n}, {0.0, yhi > 0.0 ? yhi * 1.1 : 1.0}, title);
  canvas.axes("", y_label, false);
  auto& out = canvas.raw();
  const double slot = 1.0 / static_cast<double>(labels.size() + 1);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const double base = static_cast<double>(gi);
    for (const auto& b : groups[gi].bars) {
      const auto li = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), b.label) - labels.begin());
      const double x0 = canvas.px(base + slot * (static_cast<double>(li) + 0.5));
      const double x1 = canvas.px(base + slot * (static_cast<double>(li) + 1.5));
      const double y = canvas.py(b.value);
      out << "<rect x=\"" << num(x0) << "\" y=\"" << num(y) << "\" width=\"" << num(x1 - x0) << "\" height=\""
          << num(canvas.py(0.0) - y) << "\" fill=\"" << colour(li) << "\"/>\n";
    }
    out << "<text x=\"" << num(canvas.px(base + 0.5)) << "\" y=\"" << kHeight - kBottom + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << escape(groups[gi].label)
        << "</text>\n";
  }
  for (std::size_t i = 0; i < labels.size(); ++i) canvas.legend(i, labels[i], colour(i));
  return canvas.finish();
}

void emit_plot(std::span<const CurveTable> tables, const std::filesystem::path& path, const std::string& title) {
  write_text(path, render_curves_svg(tables, title));
}

void emit_bars(std::span<const BarGroup> groups, const std::filesystem::path& path, const std::string& title,
               const std::string& y_label) {
  write_text(path, render_bars_svg(groups, title, y_label));
}

}  // namespace rtsac::harness
