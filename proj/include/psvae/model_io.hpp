#pragma once

#include "psvae/vae.hpp"

#include <iosfwd>
#include <string>

namespace psvae {

// Everything `sample` and `eval` need from a training run, in one versioned
// binary container: schema, cross-entropy weights, the real-data marginals
// for post-selection, the trained layers, the final beta, and the config.
struct ModelFile {
    TableSchema schema;
    CategoryWeights weights;
    MarginalSet real_marginals;
    VaeParams params;
    TrainConfig config;
};

void save_model(std::ostream& out, const ModelFile& model);
void save_model_file(const std::string& path, const ModelFile& model);

ModelFile load_model(std::istream& in);
ModelFile load_model_file(const std::string& path);

} // namespace psvae
