#pragma once

#include "ssreid/types.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace ssreid {

enum class FeatureFormat { csv, binary };

// Picks binary for ".bin"/".ssfs", csv otherwise.
FeatureFormat guess_format(const std::filesystem::path& path);

FeatureSet load_feature_set(const std::filesystem::path& path, FeatureFormat format);
FeatureSet load_feature_set(const std::filesystem::path& path);
void save_feature_set(const FeatureSet& fs, const std::filesystem::path& path, FeatureFormat format);

FeatureSet read_csv(std::istream& in);
void write_csv(const FeatureSet& fs, std::ostream& out);
FeatureSet read_binary(std::istream& in);
void write_binary(const FeatureSet& fs, std::ostream& out);

void save_projection(const Projection& p, const std::filesystem::path& path);
Projection load_projection(const std::filesystem::path& path);
void write_projection(const Projection& p, std::ostream& out);
Projection read_projection(std::istream& in);

// Plain matrix blob used by the kernel cache.
void save_matrix(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix(const std::filesystem::path& path);

// FNV-1a over features and metadata.
std::uint64_t dataset_hash(const FeatureSet& fs);
std::uint64_t matrix_hash(const Matrix& m);
std::string hex64(std::uint64_t v);

}  // namespace ssreid
