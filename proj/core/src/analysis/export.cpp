#include "abdoshape/analysis/export.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "abdoshape/detail/text.hpp"
#include "abdoshape/error.hpp"

namespace abdoshape::analysis {

namespace {

constexpr double kMargin = 60.0;
constexpr const char* kClassColors[2] = {"#1f77b4", "#d62728"};

void check_sizes(const FeatureDump& dump) {
  const auto m = dump.ids.size();
  if (dump.true_labels.size() != m || dump.predicted_labels.size() != m ||
      static_cast<std::size_t>(dump.features.rows()) != m) {
    throw InvalidArgument("feature dump columns have inconsistent lengths");
  }
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_open(const std::string& title) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgWidth << "\" height=\"" << kSvgHeight
      << "\" viewBox=\"0 0 " << kSvgWidth << ' ' << kSvgHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kSvgWidth / 2 << "\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"18\">"
      << escape_xml(title) << "</text>\n"
      << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSvgWidth - 2 * kMargin
      << "\" height=\"" << kSvgHeight - 2 * kMargin << "\" fill=\"none\" stroke=\"#444\"/>\n";
  return out.str();
}

}  // namespace

std::string feature_dump_csv(const FeatureDump& dump) {
  check_sizes(dump);
  std::ostringstream out;
  out << "id,true_label,predicted_label";
  for (Eigen::Index j = 0; j < dump.features.cols(); ++j) out << ",f" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < dump.ids.size(); ++i) {
    out << dump.ids[i] << ',' << dump.true_labels[i] << ',' << dump.predicted_labels[i];
    for (Eigen::Index j = 0; j < dump.features.cols(); ++j) {
      out << ',' << detail::format_double(dump.features(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
  return out.str();
}

FeatureDump parse_feature_dump_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("id,true_label,predicted_label", 0) != 0) {
    throw DataError("feature dump: missing header");
  }
  const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') - 2);
  FeatureDump dump;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (static_cast<Eigen::Index>(cells.size()) != cols + 3) {
      throw DataError("feature dump: row " + std::to_string(rows.size() + 1) + " has the wrong column count");
    }
    try {
      dump.ids.push_back(cells[0]);
      dump.true_labels.push_back(std::stoi(cells[1]));
      dump.predicted_labels.push_back(std::stoi(cells[2]));
      std::vector<double> row;
      for (std::size_t j = 3; j < cells.size(); ++j) row.push_back(std::stod(cells[j]));
      rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw DataError("feature dump: unparsable value in row " + std::to_string(rows.size() + 1));
    }
  }
  dump.features.resize(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      dump.features(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  return dump;
}

std::string embedding_csv(const FeatureDump& dump, const Eigen::MatrixX2d& coordinates) {
  check_sizes(dump);
  if (static_cast<std::size_t>(coordinates.rows()) != dump.ids.size()) {
    throw InvalidArgument("embedding rows do not match the feature dump");
  }
  std::ostringstream out;
  out << "id,x,y,true_label,predicted_label\n";
  for (std::size_t i = 0; i < dump.ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << dump.ids[i] << ',' << detail::format_double(coordinates(r, 0)) << ','
        << detail::format_double(coordinates(r, 1)) << ',' << dump.true_labels[i] << ',' << dump.predicted_labels[i]
        << '\n';
  }
  return out.str();
}

std::string scatter_svg(const Eigen::MatrixX2d& coordinates, std::span<const int> labels, const std::string& title) {
  if (static_cast<std::size_t>(coordinates.rows()) != labels.size()) {
    throw InvalidArgument("scatter: coordinate and label counts differ");
  }
  std::ostringstream out;
  out << svg_open(title);
  if (coordinates.rows() > 0) {
    const Eigen::RowVector2d lo = coordinates.colwise().minCoeff();
    const Eigen::RowVector2d hi = coordinates.colwise().maxCoeff();
    const double w = kSvgWidth - 2 * kMargin;
    const double h = kSvgHeight - 2 * kMargin;
    const double sx = hi[0] > lo[0] ? w / (hi[0] - lo[0]) : 0.0;
    const double sy = hi[1] > lo[1] ? h / (hi[1] - lo[1]) : 0.0;
    for (Eigen::Index i = 0; i < coordinates.rows(); ++i) {
      const double x = kMargin + (sx > 0 ? (coordinates(i, 0) - lo[0]) * sx : w / 2);
      const double y = kSvgHeight - kMargin - (sy > 0 ? (coordinates(i, 1) - lo[1]) * sy : h / 2);
      const int label = labels[static_cast<std::size_t>(i)] == 1 ? 1 : 0;
      out << "<circle cx=\"" << fixed(x) << "\" cy=\"" << fixed(y) << "\" r=\"4\" fill=\"" << kClassColors[label]
          << "\" fill-opacity=\"0.8\"/>\n";
    }
  }
  for (int c = 0; c < 2; ++c) {
    out << "<circle cx=\"" << kSvgWidth - 150 << "\" cy=\"" << 45 + 16 * c << "\" r=\"5\" fill=\"" << kClassColors[c]
        << "\"/><text x=\"" << kSvgWidth - 140 << "\" y=\"" << 50 + 16 * c
        << "\" font-family=\"sans-serif\" font-size=\"12\">class " << c << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string roc_svg(const RocResult& roc, const std::string& title) {
  std::ostringstream out;
  out << svg_open(title + " (AUC " + fixed(roc.auc).substr(0, 4) + ")");
  const double w = kSvgWidth - 2 * kMargin;
  const double h = kSvgHeight - 2 * kMargin;
  auto px = [&](double fpr) { return fixed(kMargin + fpr * w); };
  auto py = [&](double tpr) { return fixed(kSvgHeight - kMargin - tpr * h); };
  out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
      << "\" stroke=\"#999\" stroke-dasharray=\"6,4\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"" << kClassColors[1] << "\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < roc.fpr.size(); ++k) out << (k ? " " : "") << px(roc.fpr[k]) << ',' << py(roc.tpr[k]);
  out << "\"/>\n";
  out << "<text x=\"" << kSvgWidth / 2 << "\" y=\"" << kSvgHeight - 20
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">false positive rate</text>\n"
      << "<text x=\"20\" y=\"" << kSvgHeight / 2 << "\" transform=\"rotate(-90 20 " << kSvgHeight / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">true positive rate</text>\n"
      << "</svg>\n";
  return out.str();
}

}  // namespace abdoshape::analysis
