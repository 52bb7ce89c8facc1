#pragma once

#include <nysadmm/types.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace nysadmm::io {

enum class SourceFormat { libsvm, csv };

struct Dataset {
  MatrixXd features;  ///< n x d, dense
  VectorXd labels;    ///< n
  SourceFormat source_format = SourceFormat::libsvm;
};

/// Malformed input. Line and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& msg);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

private:
  std::size_t line_;
  std::size_t column_;
};

/// LIBSVM text format, "label idx:val idx:val ...", 1-based indices, densified.
/// The feature count is the largest index seen unless `n_features` is given.
Dataset read_libsvm(const std::filesystem::path& path, std::optional<Index> n_features = std::nullopt);
void write_libsvm(const std::filesystem::path& path, const Dataset& data);

/// Rectangular numeric CSV. A first line that does not parse as numbers is
/// taken as a header and skipped. Column `label_column` (0-based) holds the
/// labels; the remaining columns become features in file order.
Dataset read_csv(const std::filesystem::path& path, Index label_column = 0);
void write_csv(const std::filesystem::path& path, const Dataset& data, Index label_column = 0);

}  // namespace nysadmm::io
