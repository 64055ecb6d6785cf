#pragma once

#include <filesystem>
#include <memory>

#include "caan/training.hpp"

namespace caan {

struct LoadedModel {
    TrainingConfig config;  // model-dimension fields echoed from the file
    std::unique_ptr<Generator> generator;
    std::unique_ptr<Discriminator> discriminator;
};

// Versioned binary blob: config echo plus every named parameter tensor
// with a shape header. Loading rebuilds the models and validates each
// tensor name and shape against the echoed config.
void save_checkpoint(const std::filesystem::path& path, const TrainingConfig& cfg,
                     const Generator& g, const Discriminator& d);
LoadedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace caan
