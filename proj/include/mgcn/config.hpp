#pragma once

#include "mgcn/pipeline.hpp"
#include "mgcn/train.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace mgcn {

///
/// Reproducibility manifest for a pipeline run. Text form is line-oriented
/// `key = value` with `[section]` headers; `#` starts a comment. Unknown
/// sections or keys are rejected.
///
struct PipelineConfig {
    // [data]
    std::vector<std::string> meshes;
    std::vector<std::string> labels; ///< one index file per mesh (template vertex per vertex)
    std::string output = "mgcn_out";
    std::string checkpoint; ///< defaults to <output>/model.ckpt

    // [descriptor]
    DescriptorOptions descriptor;

    // [model]
    std::string architecture = kDefaultArchitecture;
    std::string operators = "wavelet";
    int input_dim = kDefaultInputDim;

    // [train]
    TrainConfig train;

    std::string to_text() const;
    static PipelineConfig parse(const std::string& text);
    static PipelineConfig load(const std::filesystem::path& path);

    bool operator==(const PipelineConfig& other) const { return to_text() == other.to_text(); }
};

} // namespace mgcn
