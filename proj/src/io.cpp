#include <nysadmm/io.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace nysadmm::io {

ParseError::ParseError(const std::string& source, std::size_t line, std::size_t column,
                       const std::string& msg)
    : Error(source + (line ? ":" + std::to_string(line) : std::string()) +
            (column ? ":" + std::to_string(column) : std::string()) + ": " + msg),
      line_(line), column_(column) {}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size() && std::isfinite(out);
}

bool parse_index(std::string_view tok, long long& out) {
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Token {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Token> split_ws(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back({line.substr(start, i - start), start + 1});
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Dataset read_libsvm(const std::filesystem::path& path, std::optional<Index> n_features) {
  const std::string src = path.string();
  std::ifstream in = open_input(path);

  struct Row {
    double label;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<Row> rows;
  Index max_index = 0;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;

    Row row;
    if (!parse_double(tokens[0].text, row.label))
      throw ParseError(src, line_no, tokens[0].column, "non-numeric label '" + std::string(tokens[0].text) + "'");

    Index prev = 0;
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const auto& tok = tokens[t];
      const auto colon = tok.text.find(':');
      if (colon == std::string_view::npos)
        throw ParseError(src, line_no, tok.column, "expected idx:val, got '" + std::string(tok.text) + "'");
      const auto key = tok.text.substr(0, colon);
      if (key == "qid") continue;
      long long idx = 0;
      if (!parse_index(key, idx) || idx < 1)
        throw ParseError(src, line_no, tok.column, "invalid feature index '" + std::string(key) + "'");
      double val = 0.0;
      if (!parse_double(tok.text.substr(colon + 1), val))
        throw ParseError(src, line_no, tok.column + colon + 1,
                         "non-numeric value '" + std::string(tok.text.substr(colon + 1)) + "'");
      if (idx <= prev)
        throw ParseError(src, line_no, tok.column, "feature indices must be strictly increasing");
      if (n_features && idx > *n_features)
        throw ParseError(src, line_no, tok.column,
                         "feature index " + std::to_string(idx) + " exceeds declared count " +
                             std::to_string(*n_features));
      prev = static_cast<Index>(idx);
      max_index = std::max(max_index, prev);
      row.entries.emplace_back(prev - 1, val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(src, 0, 0, "no data rows");

  const Index n = static_cast<Index>(rows.size());
  const Index d = n_features ? *n_features : max_index;
  Dataset out;
  out.source_format = SourceFormat::libsvm;
  out.features = MatrixXd::Zero(n, d);
  out.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    out.labels(i) = rows[static_cast<std::size_t>(i)].label;
    for (const auto& [j, v] : rows[static_cast<std::size_t>(i)].entries) out.features(i, j) = v;
  }
  return out;
}

void write_libsvm(const std::filesystem::path& path, const Dataset& data) {
  detail::check_dim("label count (rows of features)", data.features.rows(), data.labels.size());
  std::ofstream out = open_output(path);
  for (Index i = 0; i < data.features.rows(); ++i) {
    out << format_double(data.labels(i));
    for (Index j = 0; j < data.features.cols(); ++j)
      if (data.features(i, j) != 0.0) out << ' ' << (j + 1) << ':' << format_double(data.features(i, j));
    out << '\n';
  }
}

Dataset read_csv(const std::filesystem::path& path, Index label_column) {
  const std::string src = path.string();
  std::ifstream in = open_input(path);

  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::string raw;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split_commas(line);

    std::vector<double> values(cells.size());
    std::size_t bad = 0;
    for (std::size_t c = 0; c < cells.size() && !bad; ++c)
      if (!parse_double(cells[c], values[c])) bad = c + 1;

    if (bad) {
      if (first_content) {
        first_content = false;
        width = cells.size();
        continue;  // header
      }
      throw ParseError(src, line_no, bad, "non-numeric cell '" + std::string(cells[bad - 1]) + "'");
    }
    first_content = false;
    if (width == 0) width = cells.size();
    if (cells.size() != width)
      throw ParseError(src, line_no, std::min(cells.size(), width) + 1,
                       "expected " + std::to_string(width) + " cells, got " + std::to_string(cells.size()));
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(src, 0, 0, "no data rows");
  if (label_column < 0 || label_column >= static_cast<Index>(width))
    throw ValidationError("label column " + std::to_string(label_column) + " out of range for " +
                          std::to_string(width) + " columns");

  const Index n = static_cast<Index>(rows.size());
  const Index d = static_cast<Index>(width) - 1;
  Dataset out;
  out.source_format = SourceFormat::csv;
  out.features.resize(n, d);
  out.labels.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    Index j = 0;
    for (Index c = 0; c < static_cast<Index>(width); ++c) {
      if (c == label_column)
        out.labels(i) = r[static_cast<std::size_t>(c)];
      else
        out.features(i, j++) = r[static_cast<std::size_t>(c)];
    }
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data, Index label_column) {
  detail::check_dim("label count (rows of features)", data.features.rows(), data.labels.size());
  const Index width = data.features.cols() + 1;
  if (label_column < 0 || label_column >= width) throw ValidationError("label column out of range");
  std::ofstream out = open_output(path);
  for (Index i = 0; i < data.features.rows(); ++i) {
    Index j = 0;
    for (Index c = 0; c < width; ++c) {
      if (c) out << ',';
      out << format_double(c == label_column ? data.labels(i) : data.features(i, j++));
    }
    out << '\n';
  }
}

}  // namespace nysadmm::io
