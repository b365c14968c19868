#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

#include "salman/common.hpp"

namespace salman {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One row per sample. Rows are kept in 64-bit precision regardless of the
/// precision the producer emitted.
struct EmbeddingMatrix {
  RowMatrix values;
  std::vector<std::string> sample_ids;

  Index n_samples() const { return values.rows(); }
  Index dim() const { return values.cols(); }

  /// Throws FormatError if any invariant is broken: n >= 2, dim >= 1,
  /// finite values, unique ids, id count matching rows.
  void validate() const;
};

enum class EmbeddingFormat { text, binary, detect };

/// "SLMN" magic followed by version 1.
inline constexpr char kBinaryMagic[4] = {'S', 'L', 'M', 'N'};
inline constexpr std::uint32_t kBinaryVersion = 1;

EmbeddingMatrix read_embeddings(const std::filesystem::path& path,
                                EmbeddingFormat format = EmbeddingFormat::detect);

void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path,
                      EmbeddingFormat format = EmbeddingFormat::text);

// In-memory variants used by the file functions.
EmbeddingMatrix parse_text_embeddings(std::string_view text);
std::string format_text_embeddings(const EmbeddingMatrix& m);
EmbeddingMatrix parse_binary_embeddings(std::string_view bytes);
std::string format_binary_embeddings(const EmbeddingMatrix& m);

/// Checks that x and y describe the same samples in the same order.
/// Dimensions may differ. Throws Error naming the first differing index.
void pair_check(const EmbeddingMatrix& x, const EmbeddingMatrix& y);

}  // namespace salman
