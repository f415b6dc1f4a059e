#pragma once

// Dataset ingestion and preparation: CSV loading, the 25-item personality
// inventory preprocessing (sign flips + centering), sample moments, and
// synthetic factor-model data with known ground truth.

#include <cstdint>
#include <string>
#include <vector>

#include "cuspvb/matrix.hpp"

namespace cuspvb {

struct Dataset {
    Matrix y;                                     // n-by-p observations
    std::vector<std::string> column_names;        // empty when the file had no header
    std::vector<std::string> preprocessing_log;   // applied transforms, in order

    std::size_t n() const { return y.rows(); }
    std::size_t p() const { return y.cols(); }
};

// Plain numeric CSV, comma-separated, optional double-quoted fields. Missing
// or non-numeric entries are rejected with the row/column location.
Dataset load_csv(const std::string& path, bool has_header);

// Heuristic for the CLI: a first line with any non-numeric field is a header.
bool csv_has_header(const std::string& path);

void write_csv(const std::string& path, const Matrix& m,
               const std::vector<std::string>& column_names = {});

// 1-indexed questionnaire items whose answers are reverse-keyed before
// centering. Requires p = 25; refuses to run twice on the same dataset.
inline constexpr int kBfiSignFlipColumns[] = {1, 9, 10, 11, 12, 22, 25};
inline constexpr char kBfiLogEntry[] = "bfi:sign_flip{1,9,10,11,12,22,25}+center";
Dataset preprocess_bfi(Dataset data);

// Column-centering only; appends to the preprocessing log.
Dataset center_columns(Dataset data);

Matrix sample_covariance(const Dataset& data);   // n-1 denominator
Matrix sample_correlation(const Dataset& data);  // unit diagonal; errors on zero-variance columns

struct SyntheticTruth {
    Matrix Lambda_true;                // p-by-k loadings
    std::vector<double> sigma2_true;   // p noise variances
    int active_factors = 0;            // columns of Lambda_true above the norm threshold
};

inline constexpr double kActiveColumnNormThreshold = 1e-3;
int active_columns(const Matrix& lambda, double threshold = kActiveColumnNormThreshold);

// Loadings with entries +-loading_scale (random signs), equal noise variances.
SyntheticTruth make_sign_truth(int p, int k, double loading_scale, double noise_var,
                               std::uint64_t seed);

// y_i = Lambda_true eta_i + eps_i with eta_i ~ N(0, I), eps ~ N(0, diag(sigma2)).
Dataset simulate_factor_data(const SyntheticTruth& truth, int n, std::uint64_t seed);

}  // namespace cuspvb
