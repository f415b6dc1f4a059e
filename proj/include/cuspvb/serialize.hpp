#pragma once

// Plain-text artifact formats: key = value manifests, the fitted-parameters
// file, and the synthetic-truth file. Doubles are written with %.17g so
// every file round-trips exactly and repeated runs are byte-identical.

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cuspvb/cavi.hpp"
#include "cuspvb/data_io.hpp"

namespace cuspvb {

std::string format_double(double v);

using ManifestEntries = std::vector<std::pair<std::string, std::string>>;

void write_manifest(const std::string& path, const std::string& kind,
                    const ManifestEntries& entries);

struct Manifest {
    std::string kind;
    std::map<std::string, std::string> values;

    const std::string& at(const std::string& key) const;
    double number(const std::string& key) const;
};

Manifest read_manifest(const std::string& path);

void write_fit_params(const std::string& path, const VariationalState& state,
                      const Hyperparams& hyper, const ManifestEntries& meta);

struct LoadedFit {
    VariationalState state;
    Hyperparams hyper;
    std::map<std::string, std::string> meta;
};

LoadedFit read_fit_params(const std::string& path);

void write_truth(const std::string& path, const SyntheticTruth& truth,
                 const ManifestEntries& meta);

struct LoadedTruth {
    SyntheticTruth truth;
    std::map<std::string, std::string> meta;
};

LoadedTruth read_truth(const std::string& path);

}  // namespace cuspvb
