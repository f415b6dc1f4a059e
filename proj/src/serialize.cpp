#include "cuspvb/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cuspvb {

namespace {

constexpr char kFitHeader[] = "cuspvb-fit v1";
constexpr char kTruthHeader[] = "cuspvb-truth v1";
constexpr char kManifestPrefix[] = "cuspvb-manifest ";

[[noreturn]] void bad_file(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

void write_kv(std::ofstream& out, const std::string& key, const std::string& value) {
    out << key << " = " << value << '\n';
}

void write_matrix_block(std::ofstream& out, const std::string& name, const Matrix& m) {
    out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j)
            out << (j ? "," : "") << format_double(m(i, j));
        out << '\n';
    }
}

void write_vector_block(std::ofstream& out, const std::string& name,
                        const std::vector<double>& v) {
    out << "vector " << name << ' ' << v.size() << '\n';
    for (std::size_t i = 0; i < v.size(); ++i)
        out << (i ? "," : "") << format_double(v[i]);
    out << '\n';
}

class BlockReader {
public:
    BlockReader(const std::string& path, const std::string& expected_header)
        : path_(path), in_(path) {
        if (!in_) bad_file(path, "cannot open");
        std::string header;
        if (!std::getline(in_, header) || header != expected_header)
            bad_file(path, "unrecognized header '" + header + "'");
    }

    bool next_line(std::string& line) {
        while (std::getline(in_, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }

    std::vector<double> parse_row(const std::string& line, std::size_t expected) {
        std::vector<double> out;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(field, &pos));
            } catch (const std::exception&) {
                bad_file(path_, "bad numeric field '" + field + "'");
            }
        }
        if (out.size() != expected)
            bad_file(path_, "expected " + std::to_string(expected) + " fields, got " +
                                std::to_string(out.size()));
        return out;
    }

    Matrix read_matrix_body(std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        std::string line;
        for (std::size_t i = 0; i < rows; ++i) {
            if (!next_line(line)) bad_file(path_, "truncated matrix block");
            auto row = parse_row(line, cols);
            std::copy(row.begin(), row.end(), m.row(i));
        }
        return m;
    }

    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ifstream in_;
};

// splits "key = value"; returns false for block introducers
bool parse_kv(const std::string& line, std::string& key, std::string& value) {
    auto pos = line.find(" = ");
    if (pos == std::string::npos) return false;
    key = line.substr(0, pos);
    value = line.substr(pos + 3);
    return true;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_manifest(const std::string& path, const std::string& kind,
                    const ManifestEntries& entries) {
    std::ofstream out(path);
    if (!out) bad_file(path, "cannot open for writing");
    out << kManifestPrefix << kind << '\n';
    for (const auto& [k, v] : entries) write_kv(out, k, v);
    if (!out) bad_file(path, "write failed");
}

const std::string& Manifest::at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
        throw std::runtime_error("manifest: missing key '" + key + "'");
    return it->second;
}

double Manifest::number(const std::string& key) const { return std::stod(at(key)); }

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad_file(path, "cannot open");
    std::string line;
    if (!std::getline(in, line)) bad_file(path, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(kManifestPrefix, 0) != 0) bad_file(path, "not a manifest");
    Manifest m;
    m.kind = line.substr(sizeof(kManifestPrefix) - 1);
    std::string key, value;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!parse_kv(line, key, value)) bad_file(path, "bad manifest line '" + line + "'");
        m.values[key] = value;
    }
    return m;
}

void write_fit_params(const std::string& path, const VariationalState& state,
                      const Hyperparams& hyper, const ManifestEntries& meta) {
    std::ofstream out(path);
    if (!out) bad_file(path, "cannot open for writing");
    out << kFitHeader << '\n';
    write_kv(out, "p", std::to_string(hyper.p));
    write_kv(out, "H", std::to_string(hyper.H));
    write_kv(out, "n", std::to_string(state.n()));
    write_kv(out, "a_sigma", format_double(hyper.a_sigma));
    write_kv(out, "b_sigma", format_double(hyper.b_sigma));
    write_kv(out, "alpha", format_double(hyper.alpha));
    write_kv(out, "theta0", format_double(hyper.theta0));
    write_kv(out, "theta_inf", format_double(hyper.theta_inf));
    write_kv(out, "A_sigma", format_double(state.A_sigma));
    for (const auto& [k, v] : meta) write_kv(out, "meta." + k, v);
    write_matrix_block(out, "mu_lambda", state.mu_lambda);
    for (int j = 0; j < state.p(); ++j)
        write_matrix_block(out, "V_lambda." + std::to_string(j),
                           state.V_lambda[j].matrix());
    write_matrix_block(out, "mu_eta", state.mu_eta);
    write_matrix_block(out, "V_eta", state.V_eta.matrix());
    write_matrix_block(out, "kappa", state.kappa);
    write_vector_block(out, "B_sigma", state.B_sigma);
    write_vector_block(out, "A_v", state.A_v);
    write_vector_block(out, "B_v", state.B_v);
    if (!out) bad_file(path, "write failed");
}

LoadedFit read_fit_params(const std::string& path) {
    BlockReader reader(path, kFitHeader);
    LoadedFit fit;
    std::map<std::string, std::string> scalars;
    std::map<std::string, Matrix> matrices;
    std::map<std::string, std::vector<double>> vectors;

    std::string line;
    while (reader.next_line(line)) {
        std::stringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "matrix") {
            std::string name;
            std::size_t rows, cols;
            if (!(ss >> name >> rows >> cols)) bad_file(path, "bad matrix header");
            matrices[name] = reader.read_matrix_body(rows, cols);
        } else if (word == "vector") {
            std::string name;
            std::size_t len;
            if (!(ss >> name >> len)) bad_file(path, "bad vector header");
            std::string body;
            if (!reader.next_line(body)) bad_file(path, "truncated vector block");
            vectors[name] = reader.parse_row(body, len);
        } else {
            std::string key, value;
            if (!parse_kv(line, key, value)) bad_file(path, "bad line '" + line + "'");
            scalars[key] = value;
        }
    }

    auto scalar = [&](const std::string& k) -> const std::string& {
        auto it = scalars.find(k);
        if (it == scalars.end()) bad_file(path, "missing field '" + k + "'");
        return it->second;
    };
    auto matrix = [&](const std::string& k) -> Matrix& {
        auto it = matrices.find(k);
        if (it == matrices.end()) bad_file(path, "missing matrix '" + k + "'");
        return it->second;
    };
    auto vec = [&](const std::string& k) -> std::vector<double>& {
        auto it = vectors.find(k);
        if (it == vectors.end()) bad_file(path, "missing vector '" + k + "'");
        return it->second;
    };

    fit.hyper.p = std::stoi(scalar("p"));
    fit.hyper.H = std::stoi(scalar("H"));
    fit.hyper.a_sigma = std::stod(scalar("a_sigma"));
    fit.hyper.b_sigma = std::stod(scalar("b_sigma"));
    fit.hyper.alpha = std::stod(scalar("alpha"));
    fit.hyper.theta0 = std::stod(scalar("theta0"));
    fit.hyper.theta_inf = std::stod(scalar("theta_inf"));
    fit.hyper.validate();
    for (const auto& [k, v] : scalars)
        if (k.rfind("meta.", 0) == 0) fit.meta[k.substr(5)] = v;

    VariationalState& s = fit.state;
    s.mu_lambda = std::move(matrix("mu_lambda"));
    if (static_cast<int>(s.mu_lambda.rows()) != fit.hyper.p ||
        static_cast<int>(s.mu_lambda.cols()) != fit.hyper.H)
        bad_file(path, "mu_lambda shape mismatch");
    s.V_lambda.reserve(fit.hyper.p);
    for (int j = 0; j < fit.hyper.p; ++j)
        s.V_lambda.emplace_back(std::move(matrix("V_lambda." + std::to_string(j))));
    s.mu_eta = std::move(matrix("mu_eta"));
    s.V_eta = SpdMatrix(std::move(matrix("V_eta")));
    s.kappa = std::move(matrix("kappa"));
    s.A_sigma = std::stod(scalar("A_sigma"));
    s.B_sigma = std::move(vec("B_sigma"));
    s.A_v = std::move(vec("A_v"));
    s.B_v = std::move(vec("B_v"));
    if (static_cast<int>(s.B_sigma.size()) != fit.hyper.p ||
        static_cast<int>(s.A_v.size()) != fit.hyper.H - 1 ||
        static_cast<int>(s.B_v.size()) != fit.hyper.H - 1)
        bad_file(path, "parameter vector length mismatch");
    return fit;
}

void write_truth(const std::string& path, const SyntheticTruth& truth,
                 const ManifestEntries& meta) {
    std::ofstream out(path);
    if (!out) bad_file(path, "cannot open for writing");
    out << kTruthHeader << '\n';
    write_kv(out, "active_factors", std::to_string(truth.active_factors));
    for (const auto& [k, v] : meta) write_kv(out, "meta." + k, v);
    write_matrix_block(out, "Lambda_true", truth.Lambda_true);
    write_vector_block(out, "sigma2_true", truth.sigma2_true);
    if (!out) bad_file(path, "write failed");
}

LoadedTruth read_truth(const std::string& path) {
    BlockReader reader(path, kTruthHeader);
    LoadedTruth result;
    bool have_lambda = false, have_sigma = false;
    std::string line;
    while (reader.next_line(line)) {
        std::stringstream ss(line);
        std::string word;
        ss >> word;
        if (word == "matrix") {
            std::string name;
            std::size_t rows, cols;
            if (!(ss >> name >> rows >> cols) || name != "Lambda_true")
                bad_file(path, "unexpected matrix block");
            result.truth.Lambda_true = reader.read_matrix_body(rows, cols);
            have_lambda = true;
        } else if (word == "vector") {
            std::string name;
            std::size_t len;
            if (!(ss >> name >> len) || name != "sigma2_true")
                bad_file(path, "unexpected vector block");
            std::string body;
            if (!reader.next_line(body)) bad_file(path, "truncated vector block");
            result.truth.sigma2_true = reader.parse_row(body, len);
            have_sigma = true;
        } else {
            std::string key, value;
            if (!parse_kv(line, key, value)) bad_file(path, "bad line '" + line + "'");
            if (key == "active_factors")
                result.truth.active_factors = std::stoi(value);
            else if (key.rfind("meta.", 0) == 0)
                result.meta[key.substr(5)] = value;
        }
    }
    if (!have_lambda || !have_sigma) bad_file(path, "incomplete truth file");
    return result;
}

}  // namespace cuspvb
