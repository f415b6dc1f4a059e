#include "cuspvb/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cuspvb/kernels.hpp"
#include "cuspvb/rng.hpp"

namespace cuspvb {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& field, double& out) {
    std::string t = trim(field);
    if (t.empty()) return false;
    const char* begin = t.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end != begin + t.size()) return false;
    return std::isfinite(out);
}

[[noreturn]] void parse_error(const std::string& path, std::size_t row, std::size_t col,
                              const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(row) + ": column " +
                             std::to_string(col) + ": " + what);
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 0;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = split_csv_line(line);
        if (lineno == 1 && has_header) {
            for (auto& f : fields) names.push_back(trim(f));
            width = fields.size();
            continue;
        }
        if (width == 0) width = fields.size();
        if (fields.size() != width)
            parse_error(path, lineno, fields.size(),
                        "expected " + std::to_string(width) + " fields, got " +
                            std::to_string(fields.size()));
        std::vector<double> row(width);
        for (std::size_t c = 0; c < width; ++c) {
            if (!parse_number(fields[c], row[c]))
                parse_error(path, lineno, c + 1,
                            "missing or non-numeric value '" + trim(fields[c]) + "'");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");

    Dataset d;
    d.y = Matrix(rows.size(), width);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), d.y.row(i));
    d.column_names = std::move(names);
    return d;
}

bool csv_has_header(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) return false;
    double v;
    for (const auto& f : split_csv_line(line))
        if (!parse_number(f, v)) return true;
    return false;
}

void write_csv(const std::string& path, const Matrix& m,
               const std::vector<std::string>& column_names) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    if (!column_names.empty()) {
        for (std::size_t j = 0; j < column_names.size(); ++j)
            out << (j ? "," : "") << column_names[j];
        out << '\n';
    }
    char buf[32];
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset center_columns(Dataset data) {
    const std::size_t n = data.n(), p = data.p();
    if (n == 0) return data;
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += data.y(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) data.y(i, j) -= mean;
    }
    data.preprocessing_log.push_back("center");
    return data;
}

Dataset preprocess_bfi(Dataset data) {
    if (data.p() != 25)
        throw std::invalid_argument("preprocess_bfi: expected 25 columns, got " +
                                    std::to_string(data.p()));
    for (const auto& entry : data.preprocessing_log)
        if (entry == kBfiLogEntry)
            throw std::invalid_argument(
                "preprocess_bfi: dataset already preprocessed (sign flips would toggle back)");
    for (int col : kBfiSignFlipColumns) {
        std::size_t j = static_cast<std::size_t>(col - 1);
        for (std::size_t i = 0; i < data.n(); ++i) data.y(i, j) = -data.y(i, j);
    }
    data = center_columns(std::move(data));
    data.preprocessing_log.pop_back();  // fold both steps into the one guarded entry
    data.preprocessing_log.push_back(kBfiLogEntry);
    return data;
}

Matrix sample_covariance(const Dataset& data) {
    const std::size_t n = data.n(), p = data.p();
    if (n < 2) throw std::invalid_argument("sample_covariance: need n >= 2");
    std::vector<double> mean(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) mean[j] += data.y(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);

    Matrix centered(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) centered(i, j) = data.y(i, j) - mean[j];

    Matrix cov = matmul_tn(centered, centered);
    const double scale = 1.0 / static_cast<double>(n - 1);
    for (std::size_t k = 0; k < cov.size(); ++k) cov.data()[k] *= scale;
    return cov;
}

Matrix sample_correlation(const Dataset& data) {
    Matrix cov = sample_covariance(data);
    const std::size_t p = cov.rows();
    std::vector<double> inv_sd(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (!(cov(j, j) > 0.0))
            throw std::invalid_argument("sample_correlation: column " + std::to_string(j + 1) +
                                        " has zero variance");
        inv_sd[j] = 1.0 / std::sqrt(cov(j, j));
    }
    Matrix corr(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        corr(i, i) = 1.0;
        for (std::size_t j = 0; j < i; ++j) {
            double r = cov(i, j) * inv_sd[i] * inv_sd[j];
            r = std::clamp(r, -1.0, 1.0);
            corr(i, j) = corr(j, i) = r;
        }
    }
    return corr;
}

int active_columns(const Matrix& lambda, double threshold) {
    int count = 0;
    for (std::size_t h = 0; h < lambda.cols(); ++h) {
        double ss = 0.0;
        for (std::size_t j = 0; j < lambda.rows(); ++j) ss += lambda(j, h) * lambda(j, h);
        if (std::sqrt(ss) > threshold) ++count;
    }
    return count;
}

SyntheticTruth make_sign_truth(int p, int k, double loading_scale, double noise_var,
                               std::uint64_t seed) {
    if (p < 1 || k < 0 || k > p)
        throw std::invalid_argument("make_sign_truth: need 0 <= k <= p, p >= 1");
    if (!(loading_scale >= 0.0) || !(noise_var > 0.0))
        throw std::invalid_argument("make_sign_truth: bad scale or noise variance");
    RngStream rng(seed, stream_tag::sim_truth);
    SyntheticTruth t;
    t.Lambda_true = Matrix(p, k);
    for (int j = 0; j < p; ++j)
        for (int h = 0; h < k; ++h)
            t.Lambda_true(j, h) = (rng.uniform() < 0.5 ? -1.0 : 1.0) * loading_scale;
    t.sigma2_true.assign(p, noise_var);
    t.active_factors = active_columns(t.Lambda_true);
    return t;
}

Dataset simulate_factor_data(const SyntheticTruth& truth, int n, std::uint64_t seed) {
    const std::size_t p = truth.Lambda_true.rows();
    const std::size_t k = truth.Lambda_true.cols();
    if (n < 1) throw std::invalid_argument("simulate_factor_data: n must be positive");
    if (truth.sigma2_true.size() != p)
        throw std::invalid_argument("simulate_factor_data: sigma2 length mismatch");
    for (double s2 : truth.sigma2_true)
        if (!(s2 > 0.0)) throw std::invalid_argument("simulate_factor_data: noise variance <= 0");

    RngStream rng(seed, stream_tag::sim_data);
    Dataset d;
    d.y = Matrix(n, p);
    std::vector<double> eta(k), sd(p);
    for (std::size_t j = 0; j < p; ++j) sd[j] = std::sqrt(truth.sigma2_true[j]);
    for (int i = 0; i < n; ++i) {
        for (std::size_t h = 0; h < k; ++h) eta[h] = rng.normal();
        double* yi = d.y.row(i);
        for (std::size_t j = 0; j < p; ++j)
            yi[j] = kernels::dot(truth.Lambda_true.row(j), eta.data(), k) + sd[j] * rng.normal();
    }
    d.preprocessing_log.push_back("simulated");
    return d;
}

}  // namespace cuspvb
