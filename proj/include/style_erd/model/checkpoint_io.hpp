#pragma once

#include "style_erd/model/classifier.hpp"
#include "style_erd/model/discriminator.hpp"
#include "style_erd/model/generator.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <ostream>

namespace style_erd::model {

// Model checkpoints carry the architecture in the header ("model") next to
// caller-supplied fields, generator tensors under "gen." and discriminator
// tensors under "dis.".
void write_model(std::ostream& out, const Generator& gen, const Discriminator& dis,
                 const nlohmann::json& extra = nlohmann::json::object());
void save_model(const std::filesystem::path& path, const Generator& gen, const Discriminator& dis,
                const nlohmann::json& extra = nlohmann::json::object());
Generator load_generator(const std::filesystem::path& path);
Discriminator load_discriminator(const std::filesystem::path& path);

void save_classifier(const std::filesystem::path& path, const ContentClassifier& cls);
// Returned frozen.
ContentClassifier load_classifier(const std::filesystem::path& path);

}  // namespace style_erd::model
